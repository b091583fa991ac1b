"""Seeded end-to-end experiments: frame budgets, PRR sweeps, goodput, artifacts.

Every sweep point synthesises its attack pixels once, radiates them through the
noiseless cable model once, and then runs the trials on the receiver side
only (gain, delay, AWGN, demodulation).  Trial ``t`` of point ``p`` draws its
noise from ``SeedSequence([seed, p, t])`` so results do not depend on the
order or parallelism in which points are evaluated.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import codec, phy
from .channel import VGA, CableProfile, ChannelConfig, apply_channel, radiate
from .iq import IQBuffer, write_iq
from .phy import LoRaParams
from .stepping import SteppingWindow, demodulate_stepping_packet, synth_stepping_packet
from .synth import (SteppingParams, chirp_pixel_count, frames_to_stream, packet_pixel_layout,
                    stream_to_frames, synth_packet_stream)
from .timing import DisplayTiming, frame_gap_duration, get_timing

log = logging.getLogger(__name__)

DEFAULT_NOISY_TRIALS = 200
TAIL_CHIRPS = 2


@dataclass
class ExperimentConfig:
    timing: DisplayTiming = field(default_factory=lambda: get_timing("1080p60"))
    cable: CableProfile = VGA
    variant: str = "lora"
    lora: LoRaParams = field(default_factory=lambda: LoRaParams(sf=6, bw=500e3, center_freq=433e6))
    stepping: SteppingParams = field(default_factory=SteppingParams)
    channel: ChannelConfig = field(default_factory=lambda: ChannelConfig(center_freq=433e6))
    payload_text: str | None = "Hello, TEMPEST-LoRa"
    payload_bits: tuple[int, ...] | None = None
    trials: int = DEFAULT_NOISY_TRIALS
    seed: int = 0
    sf_list: list[int] | None = None
    bw_list: list[float] | None = None
    payload_lengths: list[int] | None = None
    snr_list: list[float | None] | None = None
    # raster pixel at which the packet starts
    packet_offset: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.variant not in ("lora", "stepping"):
            raise ValueError(f"variant must be 'lora' or 'stepping', got {self.variant!r}")
        for name in ("sf_list", "bw_list", "payload_lengths", "snr_list"):
            axis = getattr(self, name)
            if axis is not None and len(axis) == 0:
                raise ValueError(f"sweep axis {name} is empty")
        if self.payload_lengths is None and self.payload_text is None and self.payload_bits is None:
            raise ValueError("no payload: give payload_text, payload_bits or payload_lengths")

    @property
    def template(self):
        return self.lora if self.variant == "lora" else self.stepping

    def axes(self) -> dict:
        t = self.template
        return {
            "sf": list(self.sf_list) if self.sf_list else [t.sf],
            "bw": list(self.bw_list) if self.bw_list else [t.bw],
            "payload": list(self.payload_lengths) if self.payload_lengths else [None],
            "snr": list(self.snr_list) if self.snr_list else [self.channel.snr_db],
        }

    def points(self) -> list[dict]:
        ax = self.axes()
        return [dict(zip(ax, combo)) for combo in itertools.product(*ax.values())]

    def payload_for(self, length: int | None) -> np.ndarray:
        if length is not None:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0xB175, length]))
            return rng.integers(0, 2, length, dtype=np.uint8)
        if self.payload_bits is not None:
            return np.asarray(self.payload_bits, dtype=np.uint8)
        return codec.text_to_bits(self.payload_text)

    def describe(self) -> dict:
        return {
            "timing": self.timing.describe(),
            "cable": asdict(self.cable),
            "variant": self.variant,
            "lora": _params_dict(self.lora),
            "stepping": _params_dict(self.stepping),
            "channel": asdict(self.channel),
            "payload_text": self.payload_text,
            "trials": self.trials,
            "seed": self.seed,
            "axes": self.axes(),
            "packet_offset": self.packet_offset,
        }


def _params_dict(p) -> dict:
    d = asdict(p)
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(v)
    return d


@dataclass
class FrameBudget:
    frames: int
    gap_to_chirp_ratio: float
    payload_bits: int
    coded_bits: int
    payload_symbols: int
    packet_chirps: float
    chirp_pixels: int
    packet_pixels: int
    frame_pixels: int
    chirp_duration: float
    packet_duration: float

    def __iter__(self):
        # unpacks as (frames, gap_to_chirp_ratio)
        return iter((self.frames, self.gap_to_chirp_ratio))


def compute_frame_budget(params: LoRaParams, payload_bits: int, timing: DisplayTiming,
                         packet_offset: int = 0) -> FrameBudget:
    """Frames spanned by a packet and the frame gap measured in chirp durations."""
    n_sym = codec.symbol_count(payload_bits, params.sf, params.coding) if payload_bits else 0
    n_pix = chirp_pixel_count(params.sf, params.bw, timing)
    total = packet_pixel_layout(params, n_sym, timing)["total"]
    frames = max(1, -(-(total + packet_offset) // timing.pixels_per_frame))
    return FrameBudget(
        frames=frames,
        gap_to_chirp_ratio=frame_gap_duration(timing) / params.chirp_duration,
        payload_bits=payload_bits,
        coded_bits=codec.coded_length(payload_bits, params.coding),
        payload_symbols=n_sym,
        packet_chirps=params.framing_chirps + n_sym,
        chirp_pixels=n_pix,
        packet_pixels=total,
        frame_pixels=timing.pixels_per_frame,
        chirp_duration=params.chirp_duration,
        packet_duration=total / (timing.pixels_per_frame * timing.refresh_rate),
    )


def stepping_frame_budget(sp: SteppingParams, payload_bits: int, timing: DisplayTiming) -> FrameBudget:
    n_sym = codec.symbol_count(payload_bits, sp.sf, sp.coding) if payload_bits else 0
    window = SteppingWindow.from_timing(timing, sp)
    frames = sp.preamble_len + n_sym
    return FrameBudget(
        frames=frames,
        gap_to_chirp_ratio=frame_gap_duration(timing) / window.chirp_duration,
        payload_bits=payload_bits,
        coded_bits=codec.coded_length(payload_bits, sp.coding),
        payload_symbols=n_sym,
        packet_chirps=float(frames),
        chirp_pixels=sp.lines_per_chirp * timing.total_width,
        packet_pixels=frames * timing.pixels_per_frame,
        frame_pixels=timing.pixels_per_frame,
        chirp_duration=window.chirp_duration,
        packet_duration=frames / timing.refresh_rate,
    )


def goodput_report(params, payload_bits: int, timing: DisplayTiming, prr: float = 1.0,
                   variant: str = "lora") -> dict:
    """Payload bits per second of attack video, with the overhead model spelled out."""
    if variant == "lora":
        budget = compute_frame_budget(params, payload_bits, timing)
        symbol_rate = params.bw / params.n_symbols
        framing = params.framing_chirps
    else:
        budget = stepping_frame_budget(params, payload_bits, timing)
        symbol_rate = float(timing.refresh_rate)
        framing = float(params.preamble_len)
    period = budget.frames / timing.refresh_rate
    goodput = payload_bits * prr / period if payload_bits else 0.0
    return {
        "variant": variant,
        "sf": params.sf,
        "bw": params.bw,
        "coding": params.coding,
        "payload_bits": payload_bits,
        "coded_bits": budget.coded_bits,
        "payload_symbols": budget.payload_symbols,
        "framing_chirps": framing,
        "packet_chirps": budget.packet_chirps,
        "packet_duration_s": budget.packet_duration,
        "frames": budget.frames,
        "video_duration_s": period,
        "prr": prr,
        "channel_bit_ceiling_bps": symbol_rate * params.sf,
        "goodput_bps": goodput,
    }


# --- one sweep point -------------------------------------------------------

@dataclass
class PointSetup:
    params: object
    bits: np.ndarray
    symbols: np.ndarray
    iq: IQBuffer
    budget: FrameBudget
    start: int


def _point_params(cfg: ExperimentConfig, point: dict):
    t = cfg.template
    return replace(t, sf=point["sf"], bw=point["bw"])


def _lora_stream(cfg: ExperimentConfig, params: LoRaParams, symbols):
    stream = synth_packet_stream(params, symbols, cfg.timing)
    if cfg.packet_offset:
        stream = stream.with_prefix(cfg.packet_offset)
    return stream


def setup_point(cfg: ExperimentConfig, point: dict) -> PointSetup:
    """Synthesise and radiate one sweep point's packet (noiseless)."""
    params = _point_params(cfg, point)
    bits = cfg.payload_for(point["payload"])
    symbols = codec.encode_payload(bits, params)
    chan = replace(cfg.channel, center_freq=params.center_freq, snr_db=None)
    if cfg.variant == "lora":
        stream = _lora_stream(cfg, params, symbols)
        lay = packet_pixel_layout(params, len(symbols), cfg.timing)
        tail = TAIL_CHIRPS * lay["chirp_pixels"]
        support = (cfg.packet_offset, cfg.packet_offset + lay["total"])
        iq = radiate(stream, cfg.timing, cfg.cable, chan, n_pixels=len(stream) + tail,
                     support_pixels=support)
        budget = compute_frame_budget(params, len(bits), cfg.timing, cfg.packet_offset)
    else:
        video = synth_stepping_packet(params, symbols, cfg.timing)
        stream = frames_to_stream(video)
        # the receiver integrates the active chirp lines only
        iq = radiate(stream, cfg.timing, cfg.cable, chan, support_pixels=(0, len(stream)))
        budget = stepping_frame_budget(params, len(bits), cfg.timing)
    return PointSetup(params, bits, symbols, iq, budget, 0)


def _demodulate(cfg: ExperimentConfig, setup: PointSetup, iq: IQBuffer, offset: int):
    if cfg.variant == "lora":
        return phy.demodulate_packet(iq, setup.params, len(setup.symbols), len(setup.bits))
    # the simulation knows where the packet starts; noisy envelopes make blind search fragile
    return demodulate_stepping_packet(iq, setup.params, cfg.timing, len(setup.symbols),
                                      len(setup.bits), start=offset / iq.sample_rate)


def trial_seed(seed: int, point_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, point_index, trial]).generate_state(1)[0])


def run_point(cfg: ExperimentConfig, index: int, point: dict, setup: PointSetup | None = None) -> dict:
    setup = setup or setup_point(cfg, point)
    snr = point["snr"]
    trials = cfg.trials if snr is not None else 1
    ok = 0
    dnr_sum, dnr_n = 0.0, 0
    hist: dict[int, int] = {}
    for t in range(trials):
        chan = replace(cfg.channel, center_freq=setup.params.center_freq, snr_db=snr,
                       rng_seed=trial_seed(cfg.seed, index, t))
        rx = apply_channel(setup.iq, chan)
        res = _demodulate(cfg, setup, rx, chan.timing_offset % len(rx))
        if res.found:
            if res.symbol_confidences:
                dnr_sum += float(np.mean(res.symbol_confidences))
                dnr_n += 1
            for i in res.corrupted_symbol_indices:
                hist[i] = hist.get(i, 0) + 1
            if len(res.payload_bits) == len(setup.bits) and np.array_equal(res.payload_bits, setup.bits):
                ok += 1
    prr = ok / trials
    variant = cfg.variant
    good = goodput_report(setup.params, len(setup.bits), cfg.timing, prr, variant)
    return {
        "index": index,
        "variant": variant,
        "sf": setup.params.sf,
        "bw": setup.params.bw,
        "center_freq": setup.params.center_freq,
        "coding": setup.params.coding,
        "payload_bits": int(len(setup.bits)),
        "payload_symbols": int(len(setup.symbols)),
        "snr_db": snr,
        "trials": trials,
        "successes": ok,
        "prr": prr,
        "mean_dnr_db": round(dnr_sum / dnr_n, 4) if dnr_n else None,
        "frames": setup.budget.frames,
        "gap_to_chirp_ratio": round(setup.budget.gap_to_chirp_ratio, 6),
        "goodput_bps": round(good["goodput_bps"], 4),
        "corrupted_histogram": {str(k): v for k, v in sorted(hist.items())},
    }


def _run_group(args):
    cfg, group = args
    rows = []
    setup = None
    for index, point in group:
        if setup is None:
            setup = setup_point(cfg, point)
        rows.append(run_point(cfg, index, point, setup))
    return rows


@dataclass
class ExperimentReport:
    rows: list[dict]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if not 0.0 <= r["prr"] <= 1.0:
                raise ValueError("PRR outside [0, 1]")

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows)

    def table(self) -> str:
        cols = ["variant", "sf", "bw", "coding", "payload_bits", "snr_db", "frames",
                "prr", "mean_dnr_db", "goodput_bps"]
        lines = ["  ".join(f"{c:>12}" for c in cols)]
        for r in self.rows:
            lines.append("  ".join(f"{_fmt(r[c]):>12}" for c in cols))
        return "\n".join(lines)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_jsonl())
        return path


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def run_prr_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """PRR for every point of the sweep grid (sf x bw x payload x snr)."""
    points = list(enumerate(cfg.points()))
    # consecutive SNR points share one synthesised packet
    groups = [list(g) for _, g in itertools.groupby(
        points, key=lambda ip: (ip[1]["sf"], ip[1]["bw"], ip[1]["payload"]))]
    if workers > 1 and len(groups) > 1:
        with ProcessPoolExecutor(workers) as ex:
            nested = list(ex.map(_run_group, [(cfg, g) for g in groups]))
    else:
        nested = [_run_group((cfg, g)) for g in groups]
    rows = sorted((r for rows in nested for r in rows), key=lambda r: r["index"])
    return ExperimentReport(rows, cfg.describe())


def frame_png_bytes(frame: np.ndarray) -> bytes:
    from io import BytesIO

    from PIL import Image

    if frame.dtype == np.uint8:
        img = frame * 255
    else:
        img = np.round(np.clip(frame, 0, 1) * 255).astype(np.uint8)
    buf = BytesIO()
    Image.fromarray(img, mode="L").save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def write_video(video, out_dir, manifest: dict) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    names = []
    for i, frame in enumerate(video.frames):
        p = out / f"frame_{i:04d}.png"
        p.write_bytes(frame_png_bytes(frame))
        paths.append(p)
        names.append(p.name)
    man = dict(manifest, frames=names, frame_count=len(names), timing=video.timing.describe())
    mp = out / "manifest.json"
    mp.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return paths + [mp]


def build_video(cfg: ExperimentConfig, point: dict | None = None):
    point = point or cfg.points()[0]
    params = _point_params(cfg, point)
    bits = cfg.payload_for(point["payload"])
    symbols = codec.encode_payload(bits, params)
    if cfg.variant == "lora":
        video = stream_to_frames(_lora_stream(cfg, params, symbols))
    else:
        video = synth_stepping_packet(params, symbols, cfg.timing)
    manifest = {
        "variant": cfg.variant,
        "params": _params_dict(params),
        "payload_bits_hex": codec.bits_to_hex(bits),
        "payload_n_bits": int(len(bits)),
        "payload_text": cfg.payload_text if point["payload"] is None and cfg.payload_bits is None else None,
        "symbols": [int(s) for s in symbols],
        "packet_offset": cfg.packet_offset,
    }
    return video, manifest


def export_artifacts(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Attack frames + manifest, the IQ capture and the report for the first sweep point."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    point = cfg.points()[0]
    video, manifest = build_video(cfg, point)
    paths = write_video(video, out / "frames", manifest)
    setup = setup_point(cfg, point)
    chan = replace(cfg.channel, center_freq=setup.params.center_freq, snr_db=point["snr"],
                   rng_seed=trial_seed(cfg.seed, 0, 0))
    rx = apply_channel(setup.iq, chan)
    paths += list(write_iq(out / "capture.cf32", rx, provenance={
        "variant": cfg.variant, "params": _params_dict(setup.params), "snr_db": point["snr"],
        "seed": cfg.seed, "cable": cfg.cable.kind}))
    res = _demodulate(cfg, setup, rx, chan.timing_offset % len(rx))
    report = ExperimentReport([run_point(cfg, 0, point, setup)], cfg.describe())
    paths.append(report.write(out / "report.jsonl"))
    dec = out / "decode.jsonl"
    dec.write_text(json.dumps(res.to_record(setup.params), sort_keys=True) + "\n")
    paths.append(dec)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(cfg.describe(), indent=2, sort_keys=True) + "\n")
    paths.append(cfg_path)
    return paths


def predicted_gap_window(params: LoRaParams, n_payload: int, timing: DisplayTiming,
                         packet_offset: int = 0) -> list[int]:
    """Payload symbols whose midpoint falls inside a hidden-row block."""
    lay = packet_pixel_layout(params, n_payload, timing)
    half = lay["chirp_pixels"] / 2
    per = timing.pixels_per_frame
    out = []
    for j, s in enumerate(lay["payload_starts"]):
        mid = packet_offset + s + half
        if (mid % per) >= timing.active_span:
            out.append(j)
    return out


def isclose_frames(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9)
