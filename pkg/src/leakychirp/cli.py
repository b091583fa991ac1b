"""Command-line front end: ``leakychirp <command> [options]``.

Global options (accepted before or after the command): ``--config``,
``--seed``, ``--timing``, ``--cable``, ``--out``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import codec
from .channel import apply_channel, get_cable
from .config import load_config, parse_timing
from .experiment import (ExperimentConfig, build_video, compute_frame_budget, export_artifacts,
                         goodput_report, run_prr_experiment, setup_point, stepping_frame_budget,
                         trial_seed, write_video)
from .iq import read_iq, write_iq
from .phy import demodulate_packet
from .stepping import demodulate_stepping_packet
from .synth import PixelStream, ToneSchedule, stream_to_frames, synth_chirp_stream, synth_tone_stream

log = logging.getLogger("leakychirp")


def _global_options(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="INI experiment file")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--timing", default=S, help="preset (1080p60, 720p60, ...) or WxH/TWxTH@R")
    p.add_argument("--cable", default=S, choices=["vga", "hdmi"])
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=S)


def _radio_options(p: argparse.ArgumentParser):
    p.add_argument("--variant", choices=["lora", "stepping"])
    p.add_argument("--sf", type=int)
    p.add_argument("--bw", type=float)
    p.add_argument("--freq", type=float, help="center frequency in Hz")
    p.add_argument("--coding", choices=list(codec.CODING_RATES))
    p.add_argument("--payload", help="payload text")
    p.add_argument("--payload-bits", type=int, help="random payload of this many bits")
    p.add_argument("--snr", type=float, help="per-sample SNR in dB (omit for noiseless)")
    p.add_argument("--no-gaps", action="store_true", help="disable line and frame gap gating")
    p.add_argument("--offset", type=int, help="packet start pixel on the raster")


def build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    kw: dict = {}
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "timing", None):
        kw["timing"] = parse_timing(args.timing)
    if getattr(args, "cable", None):
        kw["cable"] = get_cable(args.cable)
    if getattr(args, "variant", None):
        kw["variant"] = args.variant
    variant = kw.get("variant", cfg.variant)
    radio = {}
    for name, key in (("sf", "sf"), ("bw", "bw"), ("freq", "center_freq"), ("coding", "coding")):
        v = getattr(args, name, None)
        if v is not None:
            radio[key] = v
    if radio:
        target = "lora" if variant == "lora" else "stepping"
        kw[target] = replace(getattr(cfg, target), **radio)
        if "sf" in radio:
            kw["sf_list"] = None
        if "bw" in radio:
            kw["bw_list"] = None
    chan = {}
    if getattr(args, "snr", None) is not None:
        chan["snr_db"] = args.snr
        kw["snr_list"] = None
    if getattr(args, "no_gaps", False):
        chan.update(gate_line_gaps=False, gate_frame_gaps=False)
    if chan:
        kw["channel"] = replace(cfg.channel, **chan)
    if getattr(args, "payload", None) is not None:
        kw.update(payload_text=args.payload, payload_bits=None, payload_lengths=None)
    if getattr(args, "payload_bits", None) is not None:
        kw["payload_lengths"] = [args.payload_bits]
    if getattr(args, "offset", None) is not None:
        kw["packet_offset"] = args.offset
    if getattr(args, "trials", None) is not None:
        kw["trials"] = args.trials
    return replace(cfg, **kw)


def _out(args, default: str) -> Path:
    out = Path(getattr(args, "out", None) or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


# --- commands --------------------------------------------------------------

def cmd_gen_image(args) -> int:
    cfg = build_config(args)
    timing = cfg.timing
    if args.tone:
        pairs = []
        for spec in args.tone:
            f, _, n = spec.partition(":")
            pairs.append((float(f), int(n) if n else timing.pixels_per_frame))
        stream = synth_tone_stream(ToneSchedule.of(*pairs), timing, binary=not args.gray)
        what = {"tones": pairs}
    else:
        params = cfg.lora
        stream = synth_chirp_stream(params, args.symbol, timing, binary=not args.gray)
        reps = -(-timing.pixels_per_frame // len(stream))
        stream = PixelStream(np.tile(stream.values, reps), timing)
        what = {"symbol": args.symbol, "params": {"sf": params.sf, "bw": params.bw,
                                                  "center_freq": params.center_freq}}
    video = stream_to_frames(stream)
    video.frames = video.frames[:1]
    paths = write_video(video, _out(args, "attack_image"), {"kind": "image", **what})
    print(paths[0])
    return 0


def cmd_gen_video(args) -> int:
    cfg = build_config(args)
    video, manifest = build_video(cfg)
    paths = write_video(video, _out(args, "attack_video"), manifest)
    print(f"{len(video)} frames -> {paths[-1].parent}")
    return 0


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    point = cfg.points()[0]
    setup = setup_point(cfg, point)
    chan = replace(cfg.channel, center_freq=setup.params.center_freq, snr_db=point["snr"],
                   rng_seed=trial_seed(cfg.seed, 0, 0))
    rx = apply_channel(setup.iq, chan)
    if cfg.variant == "lora":
        res = demodulate_packet(rx, setup.params, len(setup.symbols), len(setup.bits))
    else:
        res = demodulate_stepping_packet(rx, setup.params, cfg.timing, len(setup.symbols),
                                         len(setup.bits),
                                         start=chan.timing_offset % len(rx) / rx.sample_rate)
    rec = res.to_record(setup.params)
    rec["success"] = bool(res.found and np.array_equal(res.payload_bits, setup.bits))
    if point["payload"] is None and cfg.payload_bits is None:
        rec["text"] = codec.bits_to_text(res.payload_bits)
    if getattr(args, "out", None):
        out = _out(args, "")
        write_iq(out / "capture.cf32", rx, {"variant": cfg.variant, "seed": cfg.seed,
                                            "snr_db": point["snr"], "cable": cfg.cable.kind})
        (out / "decode.jsonl").write_text(json.dumps(rec, sort_keys=True) + "\n")
    _emit(rec)
    return 0 if rec["success"] else 1


def cmd_decode(args) -> int:
    cfg = build_config(args)
    iq = read_iq(args.iq)
    if cfg.variant == "lora":
        params = replace(cfg.lora, center_freq=iq.center_freq or cfg.lora.center_freq)
        res = demodulate_packet(iq, params, args.symbols, args.bits)
    else:
        params = cfg.stepping
        res = demodulate_stepping_packet(iq, params, cfg.timing, args.symbols, args.bits)
    rec = res.to_record(params)
    if args.text and res.found:
        rec["text"] = codec.bits_to_text(res.payload_bits)
    _emit(rec)
    return 0 if res.found else 1


def cmd_prr_sweep(args) -> int:
    cfg = build_config(args)
    axes = {"sf_list": args.sfs, "bw_list": args.bws, "payload_lengths": args.lengths,
            "snr_list": args.snrs}
    cfg = replace(cfg, **{k: v for k, v in axes.items() if v})
    report = run_prr_experiment(cfg, workers=args.workers)
    print(report.table())
    if getattr(args, "out", None):
        path = report.write(_out(args, "") / "report.jsonl")
        print(f"report -> {path}")
    return 0


def cmd_frame_budget(args) -> int:
    cfg = build_config(args)
    n_bits = len(cfg.payload_for(cfg.points()[0]["payload"]))
    if cfg.variant == "lora":
        budget = compute_frame_budget(cfg.lora, n_bits, cfg.timing, cfg.packet_offset)
    else:
        budget = stepping_frame_budget(cfg.stepping, n_bits, cfg.timing)
    _emit(vars(budget))
    return 0


def cmd_goodput(args) -> int:
    cfg = build_config(args)
    n_bits = len(cfg.payload_for(cfg.points()[0]["payload"]))
    _emit(goodput_report(cfg.template, n_bits, cfg.timing, args.prr, cfg.variant))
    return 0


def cmd_export_iq(args) -> int:
    cfg = build_config(args)
    out = _out(args, "artifacts")
    if args.all:
        paths = export_artifacts(cfg, out)
    else:
        point = cfg.points()[0]
        setup = setup_point(cfg, point)
        chan = replace(cfg.channel, center_freq=setup.params.center_freq, snr_db=point["snr"],
                       rng_seed=trial_seed(cfg.seed, 0, 0))
        rx = apply_channel(setup.iq, chan)
        paths = write_iq(out / "capture.cf32", rx, {"variant": cfg.variant, "seed": cfg.seed,
                                                   "snr_db": point["snr"], "cable": cfg.cable.kind})
    for p in paths:
        print(p)
    return 0


def cmd_plot(args) -> int:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("plotting needs matplotlib (pip install 'artifact[plot]')", file=sys.stderr)
        return 2
    src = Path(args.input)
    fig, ax = plt.subplots(figsize=(7, 4))
    if src.suffix == ".jsonl":
        rows = [json.loads(line) for line in src.read_text().splitlines() if line.strip()]
        groups: dict = {}
        for r in rows:
            key = tuple(r[k] for k in ("variant", "sf", "bw", "coding") if k != args.x)
            groups.setdefault(key, []).append(r)
        for key, rs in groups.items():
            rs = [r for r in rs if r[args.x] is not None]
            rs.sort(key=lambda r: r[args.x])
            ax.plot([r[args.x] for r in rs], [r[args.y] for r in rs], marker="o",
                    label=" ".join(str(k) for k in key))
        ax.set_xlabel(args.x)
        ax.set_ylabel(args.y)
        ax.legend(fontsize=7)
    else:
        iq = read_iq(src)
        ax.specgram(iq.samples, NFFT=256, Fs=iq.sample_rate, noverlap=128)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("offset frequency (Hz)")
    ax.grid(alpha=0.3)
    dest = Path(args.output) if args.output else _out(args, ".") / (src.stem + ".png")
    fig.tight_layout()
    fig.savefig(dest, dpi=120)
    print(dest)
    return 0


def _floats(text: str):
    return [None if x.strip().lower() == "none" else float(x) for x in text.split(",")]


def _ints(text: str):
    return [int(x) for x in text.split(",")]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leakychirp", description=__doc__.splitlines()[0])
    _global_options(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_options(p)
        p.set_defaults(func=func)
        return p

    p = add("gen-image", cmd_gen_image, "one attack frame for tones or a single chirp symbol")
    _radio_options(p)
    p.add_argument("--tone", action="append", metavar="HZ[:PIXELS]")
    p.add_argument("--symbol", type=int, default=0)
    p.add_argument("--gray", action="store_true", help="grayscale instead of binary pixels")

    p = add("gen-video", cmd_gen_video, "attack frames for a whole packet")
    _radio_options(p)

    p = add("simulate", cmd_simulate, "synthesise, radiate, add noise and decode one packet")
    _radio_options(p)

    p = add("decode", cmd_decode, "demodulate an IQ capture")
    _radio_options(p)
    p.add_argument("iq", help=".cf32 file with JSON sidecar")
    p.add_argument("--symbols", type=int, help="payload symbols (default: until signal fades)")
    p.add_argument("--bits", type=int, help="payload bits to keep")
    p.add_argument("--text", action="store_true", help="also print the payload as text")

    p = add("prr-sweep", cmd_prr_sweep, "packet reception rate over a parameter grid")
    _radio_options(p)
    p.add_argument("--sfs", type=_ints)
    p.add_argument("--bws", type=_floats)
    p.add_argument("--lengths", type=_ints, help="payload lengths in bits")
    p.add_argument("--snrs", type=_floats, help="comma list; 'none' is noiseless")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)

    p = add("frame-budget", cmd_frame_budget, "frames spanned by a packet")
    _radio_options(p)

    p = add("goodput", cmd_goodput, "payload throughput with the overhead model itemised")
    _radio_options(p)
    p.add_argument("--prr", type=float, default=1.0)

    p = add("export-iq", cmd_export_iq, "write the received IQ capture (and with --all, every artifact)")
    _radio_options(p)
    p.add_argument("--all", action="store_true")

    p = add("plot", cmd_plot, "render a report (.jsonl) or IQ capture (.cf32) to PNG")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--x", default="snr_db")
    p.add_argument("--y", default="prr")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    level = logging.DEBUG if getattr(args, "verbose", 0) else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
