"""Attack pixel streams: tones, chirps, whole packets and stepping chirps.

A pixel stream is laid onto the full raster (active and hidden positions) in
scan order, starting at the top-left pixel of the first frame.  Pixel ``n`` of
the stream is pixel ``Timer = n + 1`` of the attack video; the timer runs
through hidden positions too, so the phase of every waveform is tied to the
absolute raster clock.

Chirps are drawn by accumulating the instantaneous frequency pixel by pixel.
Evaluating ``sin(2*pi*f(Timer)*Timer)`` literally, as the textbook kernel
does for fixed tones, would sweep at twice the intended rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._sweep import sweep_phase
from .phy import LoRaParams, packet_segments
from .timing import DisplayTiming, pixel_clock, pixel_clock_fraction


@dataclass
class PixelStream:
    values: np.ndarray
    timing: DisplayTiming
    # raster timer of values[0]; 1 means the top-left pixel of frame 0
    start_timer: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 1 or len(self.values) == 0:
            raise ValueError("PixelStream must be a non-empty 1-D array")
        if self.values.dtype == bool:
            self.values = self.values.astype(np.uint8)
        vmin, vmax = self.values.min(), self.values.max()
        if vmin < 0 or vmax > 1:
            raise ValueError("pixel values must lie in [0, 1]")

    def __len__(self):
        return len(self.values)

    @property
    def binary(self) -> bool:
        return self.values.dtype == np.uint8

    def with_prefix(self, n_black: int) -> "PixelStream":
        """The same stream pushed ``n_black`` pixels later on the raster."""
        pad = np.zeros(n_black, dtype=self.values.dtype)
        return PixelStream(np.concatenate([pad, self.values]), self.timing, self.start_timer)


@dataclass
class AttackVideo:
    frames: list[np.ndarray]
    timing: DisplayTiming
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.timing.active_height, self.timing.active_width)
        for f in self.frames:
            if f.shape != shape:
                raise ValueError(f"frame shape {f.shape} does not match active area {shape}")

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class ToneSchedule:
    tones: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.tones:
            raise ValueError("empty tone schedule")
        for f, n in self.tones:
            if f < 0:
                raise ValueError(f"negative frequency {f}")
            if n < 1:
                raise ValueError(f"tone duration must be >= 1 pixel, got {n}")

    @classmethod
    def of(cls, *pairs):
        return cls(tuple((float(f), int(n)) for f, n in pairs))

    @property
    def total_pixels(self) -> int:
        return sum(n for _, n in self.tones)


@dataclass(frozen=True)
class SteppingParams:
    sf: int = 10
    bw: float = 500e3
    center_freq: float = 201e6
    guard_lines: int = 56
    preamble_len: int = 4
    coding: str = "raw"

    def __post_init__(self):
        if not 6 <= self.sf <= 12:
            raise ValueError(f"sf must be in [6, 12], got {self.sf}")
        if not self.bw > 0:
            raise ValueError("bw must be positive")
        if self.guard_lines < 0:
            raise ValueError("guard_lines must be >= 0")

    @property
    def lines_per_chirp(self) -> int:
        return 2 ** self.sf

    @property
    def n_symbols(self) -> int:
        return 2 ** self.sf

    @property
    def step(self) -> float:
        return self.bw / 2 ** self.sf

    def check(self, timing: DisplayTiming):
        if self.lines_per_chirp + self.guard_lines > timing.active_height:
            raise ValueError(f"{self.lines_per_chirp} chirp lines + {self.guard_lines} guard lines "
                             f"exceed {timing.active_height} active lines")

    @classmethod
    def for_timing(cls, timing: DisplayTiming, sf: int = 10, **kw) -> "SteppingParams":
        """Guard lines fill whatever the chirp leaves of the active height."""
        return cls(sf=sf, guard_lines=timing.active_height - 2 ** sf, **kw)


def downsample_rate(freq: float, pc) -> float:
    """Digital frequency (cycles/pixel) whose raster image lands on ``freq``."""
    return float(Fraction(freq) % Fraction(pc) / Fraction(pc))


def _wrap(x):
    return np.mod(x, 1.0)


def _to_pixels(cycles: np.ndarray, binary: bool) -> np.ndarray:
    val = np.sin(2 * np.pi * cycles)
    if binary:
        # strict: sin == 0 is a black pixel
        return (val > 0).astype(np.uint8)
    return ((val + 1) / 2).astype(np.float32)


def synth_tone_stream(schedule: ToneSchedule, timing: DisplayTiming, binary: bool = True,
                      start_timer: int = 1) -> PixelStream:
    """Pixel stream emitting each (frequency, pixel count) of the schedule in turn."""
    pc = pixel_clock(timing)
    parts = []
    timer = start_timer
    for f, n in schedule.tones:
        r = downsample_rate(f, pc)
        t = np.arange(timer, timer + n, dtype=np.int64)
        # reduce r * Timer modulo 1 before the sine to keep precision at large timers
        parts.append(_to_pixels(_wrap(r * t), binary))
        timer += n
    return PixelStream(np.concatenate(parts), timing, start_timer)


def chirp_pixel_count(sf: int, bw: float, timing: DisplayTiming) -> int:
    """Pixels needed for one chirp: chirp duration times pixel clock, rounded."""
    return round(Fraction(2 ** sf) / Fraction(bw) * pixel_clock_fraction(timing))


def _check_band(params, timing):
    pc = pixel_clock(timing)
    lo = params.center_freq - params.bw / 2
    if lo < 0:
        raise ValueError("chirp band extends below 0 Hz")
    if downsample_rate(lo, pc) + params.bw / pc > 1.0:
        raise ValueError("chirp band straddles a multiple of the pixel clock")
    return pc


def synth_chirp_stream(params: LoRaParams, symbol: int, timing: DisplayTiming,
                       direction: str = "up", binary: bool = True, start_timer: int = 1,
                       phase0: float = 0.0) -> PixelStream:
    if params.bw <= 0:
        raise ValueError("bw must be positive")
    if not 0 <= symbol < params.n_symbols:
        raise ValueError(f"symbol {symbol} out of range [0, {params.n_symbols})")
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    pc = _check_band(params, timing)
    n_pix = chirp_pixel_count(params.sf, params.bw, timing)
    if n_pix < 1:
        raise ValueError("chirp shorter than one pixel")
    f_low = downsample_rate(params.center_freq - params.bw / 2, pc)
    shift = round(n_pix * symbol / params.n_symbols)
    cyc, _ = sweep_phase(n_pix, shift, f_low, params.bw / pc, down=direction == "down",
                         phase0=phase0)
    return PixelStream(_to_pixels(cyc, binary), timing, start_timer)


def packet_pixel_layout(params: LoRaParams, n_payload: int, timing: DisplayTiming) -> dict:
    """Pixel offsets of the packet parts, relative to the packet's first pixel."""
    n_pix = chirp_pixel_count(params.sf, params.bw, timing)
    payload_start = (params.preamble_len + 4) * n_pix + int(round(0.25 * n_pix))
    return {
        "chirp_pixels": n_pix,
        "sfd_start": (params.preamble_len + 2) * n_pix,
        "payload_start": payload_start,
        "payload_starts": [payload_start + j * n_pix for j in range(n_payload)],
        "total": payload_start + n_payload * n_pix,
    }


def synth_packet_stream(params: LoRaParams, payload_symbols, timing: DisplayTiming,
                        binary: bool = True, start_timer: int = 1) -> PixelStream:
    """One contiguous pixel stream carrying a complete packet."""
    payload_symbols = [int(k) for k in payload_symbols]
    for k in payload_symbols:
        if not 0 <= k < params.n_symbols:
            raise ValueError(f"payload symbol {k} out of range [0, {params.n_symbols})")
    pc = _check_band(params, timing)
    n_pix = chirp_pixel_count(params.sf, params.bw, timing)
    f_low = downsample_rate(params.center_freq - params.bw / 2, pc)
    shift_unit = Fraction(n_pix, params.n_symbols)
    parts = []
    phase = 0.0
    for direction, k, frac in packet_segments(params, payload_symbols):
        count = n_pix if frac == 1.0 else int(round(frac * n_pix))
        cyc, phase = sweep_phase(n_pix, round(shift_unit * k), f_low, params.bw / pc,
                                 down=direction == "down", phase0=phase, count=count)
        parts.append(_to_pixels(cyc, binary))
    return PixelStream(np.concatenate(parts), timing, start_timer)


def stream_to_frames(stream: PixelStream, timing: DisplayTiming | None = None) -> AttackVideo:
    """Lay the stream on whole raster frames and crop each to its active area.

    Pixels that land on hidden positions are dropped; the link sends black
    there regardless of the image.
    """
    timing = timing or stream.timing
    per = timing.pixels_per_frame
    lead = (stream.start_timer - 1) % per
    n = lead + len(stream)
    n_frames = max(1, -(-n // per))
    grid = np.zeros(n_frames * per, dtype=stream.values.dtype)
    grid[lead:n] = stream.values
    grid = grid.reshape(n_frames, timing.total_height, timing.total_width)
    frames = [grid[i, :timing.active_height, :timing.active_width].copy() for i in range(n_frames)]
    return AttackVideo(frames, timing)


def frames_to_stream(video: AttackVideo, timing: DisplayTiming | None = None) -> PixelStream:
    """Full-raster stream (hidden positions black) for the given frames."""
    timing = timing or video.timing
    shape = (timing.active_height, timing.active_width)
    if not video.frames:
        raise ValueError("video has no frames")
    dtype = video.frames[0].dtype
    grid = np.zeros((len(video.frames), timing.total_height, timing.total_width), dtype=dtype)
    for i, f in enumerate(video.frames):
        if f.shape != shape:
            raise ValueError(f"frame {i} has shape {f.shape}, expected {shape}")
        grid[i, :timing.active_height, :timing.active_width] = f
    return PixelStream(grid.reshape(-1), timing)


def stepping_line_freqs(sp: SteppingParams, symbol: int) -> np.ndarray:
    """RF frequency of every chirp line for one stepping symbol."""
    i = np.arange(sp.lines_per_chirp)
    return sp.center_freq - sp.bw / 2 + ((i + symbol) % sp.n_symbols) * sp.step


def synth_stepping_frame(sp: SteppingParams, symbol: int, timing: DisplayTiming,
                         frame_index: int = 0, binary: bool = True) -> np.ndarray:
    """One active-area frame carrying a single stepping chirp."""
    if not 0 <= symbol < sp.n_symbols:
        raise ValueError(f"symbol {symbol} out of range [0, {sp.n_symbols})")
    sp.check(timing)
    pc = pixel_clock(timing)
    n_lines = sp.lines_per_chirp
    rates = np.array([downsample_rate(f, pc) for f in stepping_line_freqs(sp, symbol)])
    base = frame_index * timing.pixels_per_frame + 1
    rows = np.arange(n_lines, dtype=np.int64)[:, None] * timing.total_width
    timer = base + rows + np.arange(timing.active_width, dtype=np.int64)[None, :]
    # Timer reaches ~1e9 for long videos: reduce modulo 1 in two steps
    cyc = _wrap(_wrap(rates[:, None] * (timer - base)) + _wrap(rates * base)[:, None])
    dtype = np.uint8 if binary else np.float32
    frame = np.zeros((timing.active_height, timing.active_width), dtype=dtype)
    frame[:n_lines] = _to_pixels(cyc, binary)
    return frame


def synth_stepping_frames(sp: SteppingParams, symbols, timing: DisplayTiming,
                          binary: bool = True, first_frame: int = 0) -> AttackVideo:
    """One frame per symbol; guard lines stay black."""
    frames = [synth_stepping_frame(sp, int(k), timing, first_frame + i, binary)
              for i, k in enumerate(symbols)]
    return AttackVideo(frames, timing)
