"""Stepping chirps: one constant tone per scanline, one chirp per frame.

Line ``i`` of a frame carrying symbol ``K`` emits
``f_c - BW/2 + ((i + K) mod 2**sf) * BW / 2**sf`` during the visible part of
the line and nothing during its porch, so line and frame blanking always fall
between steps.

Every tone keeps the phase of the absolute raster clock.  Multiplying by the
conjugate symbol-0 staircase therefore leaves one tone at ``K * step`` (and its
wrapped twin at ``K * step - BW``) that stays coherent across all lines and
frames, provided the receiver measures time from the packet's first pixel.
Evaluating that product on the symbol grid is one FFT of the product folded
modulo ``rx_rate / step`` samples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec
from .iq import IQBuffer
from .phy import DecodeResult, corrupted_indices, dnr_db
from .synth import AttackVideo, SteppingParams, synth_stepping_frames
from .timing import DisplayTiming, get_timing, pixel_duration


@dataclass(frozen=True)
class SteppingWindow:
    t_line: float
    t_invalid: float
    t_total: float
    lines_per_chirp: int

    def __post_init__(self):
        if abs(self.t_total - (self.t_line + self.t_invalid)) > 1e-15:
            raise ValueError("t_total must equal t_line + t_invalid")

    @classmethod
    def from_timing(cls, timing: DisplayTiming, sp: SteppingParams) -> "SteppingWindow":
        tp = pixel_duration(timing)
        t_line = timing.active_width * tp
        t_inv = timing.hidden_columns * tp
        return cls(t_line, t_inv, t_line + t_inv, sp.lines_per_chirp)

    @property
    def chirp_duration(self) -> float:
        return self.lines_per_chirp * self.t_total


def _fold_length(sp: SteppingParams, fs: float) -> int:
    L = fs / sp.step
    if abs(L - round(L)) > 1e-6 or round(L) < sp.n_symbols:
        raise ValueError(f"rx rate {fs} must be an integer multiple (>= 1) of bw {sp.bw}")
    return int(round(L))


def _line_grid(n0: int, n1: int, fs: float, t0: float, window: SteppingWindow):
    """Line index and gate for samples n0..n1-1 of a chirp starting at time t0."""
    t = np.arange(n0, n1) / fs - t0
    line = np.floor(t / window.t_total).astype(np.int64)
    on = (t - line * window.t_total < window.t_line) & (line >= 0) & (line < window.lines_per_chirp)
    return line, on


def stepping_reference(sp: SteppingParams, symbol: int, rx_sample_rate: float,
                       timing: DisplayTiming | None = None) -> IQBuffer:
    """Ideal gated staircase for one symbol at complex baseband around ``center_freq``."""
    if not 0 <= symbol < sp.n_symbols:
        raise ValueError(f"symbol {symbol} out of range [0, {sp.n_symbols})")
    timing = timing or get_timing("1080p60")
    window = SteppingWindow.from_timing(timing, sp)
    n = int(np.ceil(window.chirp_duration * rx_sample_rate))
    line, on = _line_grid(0, n, rx_sample_rate, 0.0, window)
    idx = np.clip(line, 0, sp.n_symbols - 1)
    f = -sp.bw / 2 + ((idx + symbol) % sp.n_symbols) * sp.step
    t = np.arange(n) / rx_sample_rate
    x = np.where(on, np.exp(2j * np.pi * f * t), 0)
    return IQBuffer(x, rx_sample_rate, sp.center_freq, support=(0, n))


def stepping_spectrum(iq: IQBuffer, sp: SteppingParams, window: SteppingWindow,
                      start: float = 0.0, origin: float | None = None) -> np.ndarray:
    """Complex symbol-grid spectrum (unfolded, ``rx_rate / step`` bins) of one chirp.

    ``start`` is the chirp's first instant in buffer time; ``origin`` is the
    packet's first instant, the phase reference of the raster clock.
    """
    fs = iq.sample_rate
    origin = start if origin is None else origin
    L = _fold_length(sp, fs)
    n0 = max(0, int(np.ceil(start * fs - 1e-9)))
    n1 = int(np.ceil((start + window.chirp_duration) * fs - 1e-9))
    line, on = _line_grid(n0, n1, fs, start, window)
    x = np.zeros(n1 - n0, dtype=np.complex128)
    avail = min(n1, len(iq.samples)) - n0
    if avail > 0:
        x[:avail] = iq.samples[n0:n0 + avail]
    t = np.arange(n0, n1) / fs - origin
    f_ref = -sp.bw / 2 + np.clip(line, 0, sp.n_symbols - 1) * sp.step
    prod = np.where(on, x * np.exp(-2j * np.pi * f_ref * t), 0)
    # the product's tone has period L samples in absolute sample index
    slot = np.arange(n0, n1) % L
    acc = np.bincount(slot, weights=prod.real, minlength=L) + 1j * np.bincount(slot, weights=prod.imag, minlength=L)
    return np.fft.fft(acc)


def fold(spectrum: np.ndarray, n_symbols: int) -> np.ndarray:
    mag = np.abs(spectrum)
    L = len(mag)
    if L == n_symbols:
        return mag
    return mag[:n_symbols] + mag[L - n_symbols:]


def stepping_dechirp(iq: IQBuffer, sp: SteppingParams, window: SteppingWindow,
                     start: float = 0.0, origin: float | None = None) -> tuple[int, float]:
    """(symbol, DNR in dB) of the stepping chirp beginning at ``start`` seconds."""
    mag = fold(stepping_spectrum(iq, sp, window, start, origin), sp.n_symbols)
    k = int(np.argmax(mag))
    return k, dnr_db(mag, k)


def synth_stepping_packet(sp: SteppingParams, payload_symbols, timing: DisplayTiming,
                          binary: bool = True) -> AttackVideo:
    """Preamble of symbol-0 frames followed by one frame per payload symbol."""
    symbols = [0] * sp.preamble_len + [int(k) for k in payload_symbols]
    video = synth_stepping_frames(sp, symbols, timing, binary)
    video.meta.update(variant="stepping", preamble_len=sp.preamble_len,
                      n_payload=len(symbols) - sp.preamble_len)
    return video


def detect_stepping(iq: IQBuffer, sp: SteppingParams, timing: DisplayTiming,
                    search: int = 8) -> float | None:
    """Start time (s) of the first stepping preamble, or None.

    The guard lines plus vertical blanking leave a silent stretch before each
    chirp; the first rising edge of the smoothed envelope gives the coarse
    start and a sample-by-sample coherent search around it refines it.
    """
    fs = iq.sample_rate
    window = SteppingWindow.from_timing(timing, sp)
    x = iq.samples
    env = np.abs(x) ** 2
    k = max(1, int(round(2 * window.t_total * fs)))
    smooth = np.convolve(env, np.ones(k) / k, mode="same")
    level = np.percentile(smooth, 90)
    if level <= 0:
        return None
    above = np.flatnonzero(smooth > 0.5 * level)
    if not len(above):
        return None
    coarse = int(above[0])
    span = max(search, k)
    best, best_val = None, -1.0
    for n in range(max(0, coarse - span), coarse + span + 1):
        t0 = n / fs
        mag = fold(stepping_spectrum(iq, sp, window, t0, t0), sp.n_symbols)
        if mag[0] > best_val:
            best, best_val = t0, float(mag[0])
    sym, dnr = stepping_dechirp(iq, sp, window, best, best)
    if sym != 0 or dnr < 10.0:
        return None
    return best


def demodulate_stepping_packet(iq: IQBuffer, sp: SteppingParams, timing: DisplayTiming,
                               n_symbols: int | None = None, n_bits: int | None = None,
                               start: float | None = None, threshold_db: float = 10.0) -> DecodeResult:
    """Demodulate a stepping packet whose frames follow the display's refresh rate."""
    window = SteppingWindow.from_timing(timing, sp)
    if start is None:
        start = detect_stepping(iq, sp, timing)
        if start is None:
            return DecodeResult(found=False)
    period = 1.0 / timing.refresh_rate
    symbols, dnrs = [], []
    m = 0
    weak = 0
    while True:
        if n_symbols is not None and m >= n_symbols:
            break
        t0 = start + (sp.preamble_len + m) * period
        if n_symbols is None and (t0 + window.chirp_duration) * iq.sample_rate > len(iq.samples):
            break
        k, dnr = stepping_dechirp(iq, sp, window, t0, start)
        symbols.append(k)
        dnrs.append(dnr)
        if n_symbols is None:
            weak = weak + 1 if dnr < threshold_db else 0
            if weak >= 2:
                break
        m += 1
    if n_symbols is None:
        while dnrs and dnrs[-1] < threshold_db:
            symbols.pop()
            dnrs.pop()
    bits = codec.decode_payload(symbols, sp, n_bits)
    return DecodeResult(found=True, payload_bits=bits, symbols=symbols, symbol_confidences=dnrs,
                        start_offset=int(round(start * iq.sample_rate)),
                        corrupted_symbol_indices=corrupted_indices(dnrs))
