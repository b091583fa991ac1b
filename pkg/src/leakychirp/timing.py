"""Raster geometry of a display link and the timing quantities derived from it.

The active area is placed first in every line and every frame; the hidden
porch/sync pixels trail it.  All pixel counts are integers and durations are
computed on demand.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class DisplayTiming:
    active_width: int
    active_height: int
    total_width: int
    total_height: int
    refresh_rate: int | float

    def __post_init__(self):
        if not (self.active_width > 0 and self.active_height > 0):
            raise ValueError("active area must be non-empty")
        if self.total_width < self.active_width or self.total_height < self.active_height:
            raise ValueError("total raster must contain the active area")
        if not self.refresh_rate > 0:
            raise ValueError("refresh_rate must be positive")

    @property
    def pixels_per_frame(self) -> int:
        return self.total_width * self.total_height

    @property
    def hidden_columns(self) -> int:
        return self.total_width - self.active_width

    @property
    def hidden_rows(self) -> int:
        return self.total_height - self.active_height

    @property
    def active_span(self) -> int:
        """Pixels from a frame's first active pixel to the end of its last active one."""
        return (self.active_height - 1) * self.total_width + self.active_width

    @property
    def frame_period(self) -> float:
        return 1.0 / self.refresh_rate

    def describe(self) -> dict:
        return {
            "active_width": self.active_width,
            "active_height": self.active_height,
            "total_width": self.total_width,
            "total_height": self.total_height,
            "refresh_rate": self.refresh_rate,
        }


PRESETS: dict[str, DisplayTiming] = {
    "1080p60": DisplayTiming(1920, 1080, 2200, 1125, 60),
    "1080p50": DisplayTiming(1920, 1080, 2640, 1125, 50),
    "1080p30": DisplayTiming(1920, 1080, 2200, 1125, 30),
    "720p60": DisplayTiming(1280, 720, 1650, 750, 60),
    "480p60": DisplayTiming(640, 480, 800, 525, 60),
}


def get_timing(name: str) -> DisplayTiming:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown timing preset {name!r}; known: {', '.join(PRESETS)}") from None


def pixel_clock(timing: DisplayTiming) -> int | float:
    """Pixels per second on the link.  Exact integer for integer inputs."""
    pc = timing.total_width * timing.total_height * timing.refresh_rate
    if isinstance(pc, float) and pc.is_integer():
        return int(pc)
    return pc


def pixel_clock_fraction(timing: DisplayTiming) -> Fraction:
    return Fraction(timing.total_width * timing.total_height) * Fraction(timing.refresh_rate)


def pixel_duration(timing: DisplayTiming) -> float:
    return 1.0 / pixel_clock(timing)


def line_gap_duration(timing: DisplayTiming) -> float:
    return timing.hidden_columns * pixel_duration(timing)


def frame_gap_duration(timing: DisplayTiming) -> float:
    # contiguous block of hidden scanlines; the last active line's own
    # trailing porch is accounted as a line gap
    return timing.hidden_rows * timing.total_width * pixel_duration(timing)


def mask_slice(timing: DisplayTiming, start: int, stop: int,
               line_gaps: bool = True, frame_gaps: bool = True) -> np.ndarray:
    """Emission mask for global pixel indices ``start <= n < stop``."""
    n = np.arange(start, stop, dtype=np.int64)
    mask = np.ones(n.shape, dtype=bool)
    if line_gaps:
        mask &= (n % timing.total_width) < timing.active_width
    if frame_gaps:
        mask &= ((n // timing.total_width) % timing.total_height) < timing.active_height
    return mask


def emission_mask(timing: DisplayTiming, frame_count: int,
                  line_gaps: bool = True, frame_gaps: bool = True) -> np.ndarray:
    """True where the pixel lies inside the active area of its frame."""
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    return mask_slice(timing, 0, frame_count * timing.pixels_per_frame, line_gaps, frame_gaps)
