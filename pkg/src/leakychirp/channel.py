"""The video cable as a zero-order-hold DAC, seen through a narrowband receiver.

Pixel voltages are held for one pixel period, so the cable radiates the
pixel-rate baseband plus its images around every multiple of the pixel clock,
weighted by a sinc envelope.  A receiver tuned to ``f`` therefore sees the
pixel sequence mixed down by the digital frequency ``(f mod PC) / PC``.  This
module does exactly that mixing, then low-pass filters and decimates to the
receiver rate with a linear-phase polyphase FIR.

Long streams are processed in blocks; the block decomposition does not change
a single output bit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy import signal

from .iq import IQBuffer
from .timing import DisplayTiming, mask_slice, pixel_clock

log = logging.getLogger(__name__)

STOPBAND_DB = 60.0
BLOCK_OUT = 8192


@dataclass(frozen=True)
class CableProfile:
    kind: str
    black_level: float
    white_level: float
    harmonic_rolloff: bool = True
    # amplitude of the clock-bus spur at pixel-clock harmonics; 0 disables it
    sync_spur: float = 0.0

    def __post_init__(self):
        if not self.white_level > self.black_level:
            raise ValueError("white_level must exceed black_level")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.black_level + self.white_level)


VGA = CableProfile("vga", 0.0, 0.7)
# bipolar swing without TMDS coding
HDMI = CableProfile("hdmi_simplified", -0.2, 0.2)
CABLES = {"vga": VGA, "hdmi": HDMI, "hdmi_simplified": HDMI}


def get_cable(name: str) -> CableProfile:
    try:
        return CABLES[name]
    except KeyError:
        raise KeyError(f"unknown cable {name!r}; known: vga, hdmi") from None


@dataclass(frozen=True)
class ChannelConfig:
    center_freq: float
    rx_sample_rate: float = 1e6
    rx_bandwidth: float = 800e3
    snr_db: float | None = None
    gain: float = 1.0
    gate_line_gaps: bool = True
    gate_frame_gaps: bool = True
    timing_offset: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.center_freq > 0:
            raise ValueError("center_freq must be positive")
        if not self.rx_sample_rate >= self.rx_bandwidth > 0:
            raise ValueError("need rx_sample_rate >= rx_bandwidth > 0")

    def with_(self, **kw) -> "ChannelConfig":
        return replace(self, **kw)


def stream_to_voltage(stream, profile: CableProfile, mask) -> np.ndarray:
    """Bus voltage per pixel; masked-out (hidden) pixels sit at the black level."""
    values = getattr(stream, "values", stream)
    values = np.asarray(values)
    mask = np.asarray(mask, dtype=bool)
    if len(values) != len(mask):
        raise ValueError(f"stream has {len(values)} pixels but mask has {len(mask)}")
    swing = profile.white_level - profile.black_level
    v = profile.black_level + values.astype(np.float64) * swing
    v[~mask] = profile.black_level
    return v


class _Decimator:
    """Mixer + polyphase low-pass decimator from the pixel clock to the receiver rate."""

    def __init__(self, pc, cfg: ChannelConfig):
        ratio = Fraction(cfg.rx_sample_rate) / Fraction(pc)
        ratio = ratio.limit_denominator(100000)
        if abs(float(ratio) - cfg.rx_sample_rate / pc) > 1e-12 * max(1.0, cfg.rx_sample_rate / pc):
            raise ValueError("receiver rate is not a usable rational fraction of the pixel clock")
        if ratio >= 1:
            raise ValueError("receiver must decimate: rx_sample_rate must be below the pixel clock")
        self.up, self.down = ratio.numerator, ratio.denominator
        fs_up = float(pc) * self.up
        f_pass = cfg.rx_bandwidth / 2
        width = max(cfg.rx_sample_rate - cfg.rx_bandwidth, 0.1 * cfg.rx_sample_rate)
        ntaps, beta = signal.kaiserord(STOPBAND_DB, width / (fs_up / 2))
        half = -(-(ntaps - 1) // (2 * self.down)) * self.down
        self.ntaps = 2 * half + 1
        # zero-phase alignment: the group delay is a whole number of output samples
        self.delay = half
        self.taps = signal.firwin(self.ntaps, f_pass + width / 2, window=("kaiser", beta),
                                  fs=fs_up) * self.up
        pc_frac = Fraction(pc)
        cf = Fraction(cfg.center_freq)
        r = (cf % pc_frac) / pc_frac
        if r == 0:
            raise ValueError(f"{cfg.center_freq} Hz aliases onto DC (a pixel-clock harmonic)")
        self.mix = r
        self.exact_mix = r.denominator < 2 ** 31

    def mixer(self, n: np.ndarray) -> np.ndarray:
        if self.exact_mix:
            p, q = self.mix.numerator, self.mix.denominator
            ph = ((n % q) * p % q).astype(np.float64) / q
        else:
            ph = np.mod(n * float(self.mix), 1.0)
        return np.exp(-2j * np.pi * ph)

    def n_out(self, n_in: int) -> int:
        return (n_in - 1) * self.up // self.down + 1

    def run(self, n_in: int, source, block: int = BLOCK_OUT) -> np.ndarray:
        """Decimate ``n_in`` mixed pixels; ``source(a, b)`` returns pixels a..b-1 (AC part)."""
        up, down, L, D = self.up, self.down, self.ntaps, self.delay
        m_total = self.n_out(n_in)
        out = np.empty(m_total, dtype=np.complex128)
        for m0 in range(0, m_total, block):
            m1 = min(m_total, m0 + block)
            a0 = max(0, -(-(m0 * down + D - L + 1) // up))
            a1 = min(n_in, ((m1 - 1) * down + D) // up + 1)
            a = (a0 // down) * down
            seg = source(a, a1) * self.mixer(np.arange(a, a1, dtype=np.int64))
            z = signal.upfirdn(self.taps, seg, up, down)
            j0 = m0 + (D - a * up) // down
            out[m0:m1] = z[j0:j0 + (m1 - m0)]
        return out


def _envelope(cfg: ChannelConfig, pc, profile: CableProfile | None) -> float:
    if profile is not None and not profile.harmonic_rolloff:
        return 1.0
    return float(abs(np.sinc(cfg.center_freq / float(pc))))


def _add_spur(y: np.ndarray, cfg: ChannelConfig, pc, profile: CableProfile | None):
    if profile is None or not profile.sync_spur:
        return y
    pc = float(pc)
    k = round(cfg.center_freq / pc)
    off = k * pc - cfg.center_freq
    if abs(off) >= cfg.rx_sample_rate / 2:
        return y
    m = np.arange(len(y))
    return y + profile.sync_spur * np.exp(2j * np.pi * off * m / cfg.rx_sample_rate)


def emission_extract(v, cfg: ChannelConfig, timing: DisplayTiming,
                     profile: CableProfile | None = None, block: int = BLOCK_OUT) -> IQBuffer:
    """Receiver baseband for a per-pixel voltage sequence starting at raster pixel 0."""
    v = np.asarray(v, dtype=np.float64)
    pc = pixel_clock(timing)
    dec = _Decimator(pc, cfg)
    mid = profile.midpoint if profile is not None else 0.5 * (v.min() + v.max())
    y = dec.run(len(v), lambda a, b: v[a:b] - mid, block)
    y *= _envelope(cfg, pc, profile)
    y = _add_spur(y, cfg, pc, profile)
    return IQBuffer(y, cfg.rx_sample_rate, cfg.center_freq,
                    meta={"decimation": [dec.up, dec.down], "taps": dec.ntaps})


def radiate(stream, timing: DisplayTiming, profile: CableProfile, cfg: ChannelConfig,
            n_pixels: int | None = None, support_pixels: tuple[int, int] | None = None,
            block: int = BLOCK_OUT) -> IQBuffer:
    """Stream -> masked voltage -> receiver baseband, without materialising the voltage.

    ``n_pixels`` extends the capture past the end of the stream (black level).
    ``support_pixels`` marks the packet extent in stream pixels; it is carried
    to the IQ buffer for SNR calibration.
    """
    values = stream.values
    offset = stream.start_timer - 1
    n_in = max(len(values), n_pixels or 0) + offset
    swing = profile.white_level - profile.black_level
    black_ac = profile.black_level - profile.midpoint

    def source(a, b):
        out = np.full(b - a, black_ac, dtype=np.float64)
        lo, hi = max(a, offset), min(b, offset + len(values))
        if hi > lo:
            ac = values[lo - offset:hi - offset].astype(np.float64) * swing + black_ac
            m = mask_slice(timing, lo, hi, cfg.gate_line_gaps, cfg.gate_frame_gaps)
            out[lo - a:hi - a] = np.where(m, ac, black_ac)
        return out

    pc = pixel_clock(timing)
    dec = _Decimator(pc, cfg)
    y = dec.run(n_in, source, block)
    y *= _envelope(cfg, pc, profile)
    y = _add_spur(y, cfg, pc, profile)
    support = None
    if support_pixels is not None:
        s0 = (support_pixels[0] + offset) * dec.up // dec.down
        s1 = -(-(support_pixels[1] + offset) * dec.up // dec.down)
        support = (s0, min(s1, len(y)))
    return IQBuffer(y, cfg.rx_sample_rate, cfg.center_freq, support=support,
                    meta={"decimation": [dec.up, dec.down], "taps": dec.ntaps})


def apply_channel(iq: IQBuffer, cfg: ChannelConfig) -> IQBuffer:
    """Gain, circular delay and complex AWGN.

    The noise power is referenced to the input's power over its packet support
    (the whole buffer when unknown) at unit gain, so ``gain=0`` yields pure
    noise and ``snr_db=None`` adds none.
    """
    x = iq.samples.astype(np.complex128)
    y = cfg.gain * x
    if cfg.timing_offset:
        y = np.roll(y, cfg.timing_offset)
    if cfg.snr_db is not None:
        p_sig = iq.power()
        sigma2 = p_sig / 10 ** (cfg.snr_db / 10)
        rng = np.random.default_rng(cfg.rng_seed)
        noise = rng.standard_normal((2, len(y)))
        y = y + np.sqrt(sigma2 / 2) * (noise[0] + 1j * noise[1])
    support = iq.support
    if support is not None and cfg.timing_offset:
        n = len(y)
        support = ((support[0] + cfg.timing_offset) % n, (support[0] + cfg.timing_offset) % n
                   + support[1] - support[0])
    if cfg.gain == 1.0 and cfg.snr_db is None and not cfg.timing_offset:
        return IQBuffer(iq.samples.copy(), iq.sample_rate, iq.center_freq, iq.support, dict(iq.meta))
    return IQBuffer(y, iq.sample_rate, iq.center_freq, support, dict(iq.meta))
