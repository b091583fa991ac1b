"""INI experiment files: one section per stage, flat ``key = value`` pairs.

Example::

    [display]
    timing = 1080p60

    [cable]
    kind = vga

    [lora]
    sf = 6
    bw = 500e3
    center_freq = 433e6
    coding = 4/8

    [channel]
    snr_db = none
    gate_frame_gaps = true

    [experiment]
    variant = lora
    trials = 200
    seed = 7
    payload_text = Hello, TEMPEST-LoRa
    snr_list = 0, -5, -10
"""
from __future__ import annotations

import configparser
import re
from dataclasses import fields, replace
from pathlib import Path

from .channel import CableProfile, ChannelConfig, get_cable
from .experiment import ExperimentConfig
from .phy import LoRaParams
from .synth import SteppingParams
from .timing import DisplayTiming, get_timing

_CUSTOM = re.compile(r"^(\d+)x(\d+)/(\d+)x(\d+)@(\d+(?:\.\d+)?)$")


def parse_timing(text: str) -> DisplayTiming:
    """A preset name or ``WxH/TWxTH@R`` (active and total geometry, refresh)."""
    text = text.strip()
    m = _CUSTOM.match(text)
    if m:
        aw, ah, tw, th = (int(g) for g in m.groups()[:4])
        rate = float(m.group(5))
        return DisplayTiming(aw, ah, tw, th, int(rate) if rate.is_integer() else rate)
    return get_timing(text)


def _none(v: str):
    return None if v.strip().lower() in ("", "none", "null", "off") else v


def _float_or_none(v: str):
    v = _none(v)
    return None if v is None else float(v)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _list(conv):
    def parse(v: str):
        v = _none(v)
        if v is None:
            return None
        return [conv(x) for x in v.replace(";", ",").split(",") if x.strip()]
    return parse


def _int_pair(v: str) -> tuple[int, int]:
    a, b = (int(x) for x in v.replace(";", ",").split(","))
    return a, b


def _number(v: str):
    f = float(v)
    return int(f) if f.is_integer() and "e" not in v.lower() and "." not in v else f


_LORA = {"sf": int, "bw": float, "center_freq": float, "preamble_len": int,
         "sync_symbols": _int_pair, "coding": str}
_STEPPING = {"sf": int, "bw": float, "center_freq": float, "guard_lines": int,
             "preamble_len": int, "coding": str}
_CHANNEL = {"center_freq": float, "rx_sample_rate": float, "rx_bandwidth": float,
            "snr_db": _float_or_none, "gain": float, "gate_line_gaps": _bool,
            "gate_frame_gaps": _bool, "timing_offset": int, "rng_seed": int}
_CABLE = {"black_level": float, "white_level": float, "harmonic_rolloff": _bool,
          "sync_spur": float}
_EXPERIMENT = {"variant": str, "trials": int, "seed": int, "payload_text": _none,
               "payload_bits": lambda v: None if _none(v) is None else tuple(int(c) for c in v.strip()),
               "sf_list": _list(int), "bw_list": _list(float),
               "payload_lengths": _list(int),
               "snr_list": _list(lambda x: None if _none(x) is None else float(x)),
               "packet_offset": int}


def _section(cp, name: str, schema: dict) -> dict:
    return _parse_items(dict(cp.items(name)) if cp.has_section(name) else {}, name, schema)


def _parse_items(items: dict, name: str, schema: dict) -> dict:
    out = {}
    for key, raw in items.items():
        if key not in schema:
            raise ValueError(f"unknown key [{name}] {key}")
        try:
            out[key] = schema[key](raw)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"[{name}] {key} = {raw!r}: {exc}") from None
    return out


def load_config(path=None, text: str | None = None, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an INI file (or string) on top of ``base`` (defaults when omitted)."""
    cp = configparser.ConfigParser(interpolation=None)
    if path is not None:
        cp.read_string(Path(path).read_text())
    if text is not None:
        cp.read_string(text)
    known = {"display", "cable", "lora", "stepping", "channel", "experiment"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    cfg = base or ExperimentConfig()
    kw: dict = {}
    if cp.has_section("display"):
        disp = dict(cp.items("display"))
        if "timing" in disp:
            kw["timing"] = parse_timing(disp.pop("timing"))
        if disp:
            geo = {k: _number(v) for k, v in disp.items()}
            base_t = kw.get("timing", cfg.timing)
            kw["timing"] = replace(base_t, **geo)
    if cp.has_section("cable"):
        c = dict(cp.items("cable"))
        cable = get_cable(c.pop("kind")) if "kind" in c else cfg.cable
        extra = _parse_items(c, "cable", _CABLE)
        kw["cable"] = replace(cable, **extra) if extra else cable
    lora = _section(cp, "lora", _LORA)
    if lora:
        kw["lora"] = replace(cfg.lora, **lora)
    stepping = _section(cp, "stepping", _STEPPING)
    if stepping:
        kw["stepping"] = replace(cfg.stepping, **stepping)
    chan = _section(cp, "channel", _CHANNEL)
    if chan:
        kw["channel"] = replace(cfg.channel, **chan)
    kw.update(_section(cp, "experiment", _EXPERIMENT))
    if "payload_bits" in kw and kw["payload_bits"] is not None and "payload_text" not in kw:
        kw["payload_text"] = None
    return replace(cfg, **kw)


def dump_config(cfg: ExperimentConfig) -> str:
    """INI text that ``load_config`` reads back into an equal config."""
    cp = configparser.ConfigParser(interpolation=None)
    t = cfg.timing
    cp["display"] = {"active_width": t.active_width, "active_height": t.active_height,
                     "total_width": t.total_width, "total_height": t.total_height,
                     "refresh_rate": t.refresh_rate}
    cp["cable"] = {"kind": _cable_key(cfg.cable),
                   **{f.name: _fmt(getattr(cfg.cable, f.name)) for f in fields(CableProfile)
                      if f.name != "kind"}}
    cp["lora"] = {k: _fmt(getattr(cfg.lora, k)) for k in _LORA}
    cp["stepping"] = {k: _fmt(getattr(cfg.stepping, k)) for k in _STEPPING}
    cp["channel"] = {k: _fmt(getattr(cfg.channel, k)) for k in _CHANNEL}
    exp = {}
    for k in _EXPERIMENT:
        v = getattr(cfg, k)
        if k == "payload_bits" and v is not None:
            exp[k] = "".join(str(int(b)) for b in v)
        else:
            exp[k] = _fmt(v)
    cp["experiment"] = exp
    from io import StringIO
    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


def _cable_key(c: CableProfile) -> str:
    return "hdmi" if c.kind.startswith("hdmi") else c.kind


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


__all__ = ["load_config", "dump_config", "parse_timing", "ChannelConfig", "LoRaParams",
           "SteppingParams"]
