"""Complex baseband sample container and its on-disk format.

Samples are stored as interleaved little-endian float32 (I, Q) pairs, the
``cf32`` layout most SDR tools read directly.  A JSON sidecar next to the raw
file carries the sample rate, the tuned frequency and free-form provenance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class IQBuffer:
    samples: np.ndarray
    sample_rate: float
    center_freq: float = 0.0
    # [start, stop) sample range occupied by the packet, when known
    support: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex64)
        if self.samples.ndim != 1 or len(self.samples) == 0:
            raise ValueError("IQBuffer needs a non-empty 1-D sample array")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def power(self) -> float:
        x = self.samples
        if self.support is not None:
            x = x[self.support[0]:self.support[1]]
        return float(np.mean(np.abs(x.astype(np.complex128)) ** 2)) if len(x) else 0.0


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_iq(path, iq: IQBuffer, provenance: dict | None = None) -> tuple[Path, Path]:
    path = Path(path)
    path.write_bytes(iq.samples.astype("<c8").tobytes())
    meta = {
        "format": "cf32_le",
        "sample_rate": iq.sample_rate,
        "center_freq": iq.center_freq,
        "num_samples": len(iq),
        "support": list(iq.support) if iq.support is not None else None,
        "provenance": provenance if provenance is not None else iq.meta,
    }
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def read_iq(path) -> IQBuffer:
    path = Path(path)
    samples = np.fromfile(path, dtype="<c8")
    side = sidecar_path(path)
    if not side.exists():
        raise FileNotFoundError(f"missing sidecar {side}")
    meta = json.loads(side.read_text())
    support = tuple(meta["support"]) if meta.get("support") else None
    return IQBuffer(samples, meta["sample_rate"], meta.get("center_freq", 0.0),
                    support=support, meta=meta.get("provenance") or {})
