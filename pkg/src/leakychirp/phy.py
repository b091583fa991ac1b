"""Chirp-spread-spectrum soft modem.

Packet layout (shared with the pixel synthesiser)::

    preamble_len up-chirps (symbol 0) | 2 sync up-chirps | 2.25 down-chirps | payload

Demodulation is the textbook dechirp + FFT.  When the buffer is sampled at an
integer multiple ``os`` of the bandwidth, the FFT has ``os * 2**sf`` bins and
the two images of each symbol (before and after the frequency wrap) are
folded together.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import codec
from ._sweep import sweep_phase
from .iq import IQBuffer

log = logging.getLogger(__name__)

COTS_BANDWIDTHS = (125e3, 250e3, 500e3)
SFD_CHIRPS = 2.25


@dataclass(frozen=True)
class LoRaParams:
    sf: int = 7
    bw: float = 125e3
    center_freq: float = 433e6
    preamble_len: int = 4
    sync_symbols: tuple[int, int] = (8, 16)
    coding: str = "raw"

    def __post_init__(self):
        if not 6 <= self.sf <= 12:
            raise ValueError(f"sf must be in [6, 12], got {self.sf}")
        if not self.bw > 0:
            raise ValueError("bw must be positive")
        if self.preamble_len < 2:
            raise ValueError("preamble_len must be >= 2")
        if any(not 0 <= s < 2 ** self.sf for s in self.sync_symbols) or len(self.sync_symbols) != 2:
            raise ValueError("sync_symbols must be two symbols in [0, 2**sf)")
        codec.parity_bits(self.coding)

    @property
    def n_symbols(self) -> int:
        return 2 ** self.sf

    @property
    def chirp_duration(self) -> float:
        return self.n_symbols / self.bw

    @property
    def framing_chirps(self) -> float:
        return self.preamble_len + 2 + SFD_CHIRPS

    def oversampling(self, sample_rate: float) -> int:
        os_ = sample_rate / self.bw
        if os_ < 1 or abs(os_ - round(os_)) > 1e-9:
            raise ValueError(f"sample rate {sample_rate} is not an integer multiple of bw {self.bw}")
        return int(round(os_))

    def chirp_samples(self, sample_rate: float) -> int:
        return self.n_symbols * self.oversampling(sample_rate)


@dataclass
class DecodeResult:
    found: bool
    payload_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))
    symbols: list[int] = field(default_factory=list)
    symbol_confidences: list[float] = field(default_factory=list)
    start_offset: int | None = None
    corrupted_symbol_indices: list[int] = field(default_factory=list)

    def to_record(self, params=None) -> dict:
        rec = {
            "found": self.found,
            "start_offset": self.start_offset,
            "symbols": [int(s) for s in self.symbols],
            "bits_hex": codec.bits_to_hex(self.payload_bits),
            "n_bits": int(len(self.payload_bits)),
            "dnr_db": [round(float(d), 3) for d in self.symbol_confidences],
            "corrupted": [int(i) for i in self.corrupted_symbol_indices],
        }
        if params is not None:
            rec["params"] = {"sf": params.sf, "bw": params.bw, "coding": params.coding,
                             "center_freq": params.center_freq}
        return rec


def _check_symbols(symbols, n: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64).reshape(-1)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= n):
        raise ValueError(f"symbols must lie in [0, {n})")
    return symbols


def base_chirp(params: LoRaParams, sample_rate: float, down: bool = False) -> np.ndarray:
    n = params.chirp_samples(sample_rate)
    cyc, _ = sweep_phase(n, 0, -0.5 * params.bw / sample_rate, params.bw / sample_rate, down=down)
    return np.exp(2j * np.pi * cyc)


def packet_segments(params: LoRaParams, payload_symbols) -> list[tuple[str, int, float]]:
    """(direction, symbol, fraction-of-chirp) for every chirp of a packet."""
    segs = [("up", 0, 1.0)] * params.preamble_len
    segs += [("up", int(s), 1.0) for s in params.sync_symbols]
    segs += [("down", 0, 1.0), ("down", 0, 1.0), ("down", 0, SFD_CHIRPS - 2)]
    segs += [("up", int(k), 1.0) for k in payload_symbols]
    return segs


def render_packet(segments, chirp_len: int, shift_unit: int, f_start: float,
                  span: float, phase0: float = 0.0) -> tuple[np.ndarray, float]:
    """Phase (cycles) of a packet drawn on any sample grid, phase continuous."""
    parts = []
    phase = phase0
    for direction, k, frac in segments:
        count = chirp_len if frac == 1.0 else int(round(frac * chirp_len))
        cyc, phase = sweep_phase(chirp_len, k * shift_unit, f_start, span,
                                 down=(direction == "down"), phase0=phase, count=count)
        parts.append(cyc)
    if not parts:
        return np.zeros(0), phase
    return np.concatenate(parts), phase


def payload_start_sample(params: LoRaParams, chirp_len: int) -> int:
    sfd_tail = int(round((SFD_CHIRPS - 2) * chirp_len))
    return (params.preamble_len + 4) * chirp_len + sfd_tail


def reference_modulate(params: LoRaParams, symbols, sample_rate: float | None = None) -> IQBuffer:
    """Ideal complex baseband packet at ``sample_rate`` (default: one sample per chip)."""
    fs = params.bw if sample_rate is None else sample_rate
    os_ = params.oversampling(fs)
    symbols = _check_symbols(symbols, params.n_symbols)
    n = params.n_symbols * os_
    cyc, _ = render_packet(packet_segments(params, symbols), n, os_,
                           -0.5 * params.bw / fs, params.bw / fs)
    iq = IQBuffer(np.exp(2j * np.pi * cyc), fs, params.center_freq, support=(0, len(cyc)))
    return iq


def dechirp(window, params: LoRaParams, sample_rate: float | None = None, down: bool = False):
    """Demodulate one chirp-long window.

    Returns ``(symbol, dnr_db, spectrum)`` where ``spectrum`` holds the folded
    magnitudes of the ``2**sf`` symbol bins.  ``down=True`` dechirps a
    down-chirp (used for the frame delimiter).  DNR is peak over the median of
    the non-peak bins, in dB.
    """
    if isinstance(window, IQBuffer):
        sample_rate = window.sample_rate if sample_rate is None else sample_rate
        window = window.samples
    fs = params.bw if sample_rate is None else sample_rate
    os_ = params.oversampling(fs)
    n = params.n_symbols * os_
    window = np.asarray(window)
    if len(window) < n:
        raise ValueError(f"window has {len(window)} samples, need {n}")
    ref = _base_chirp_cached(params.sf, params.bw, fs, not down)
    spec = np.abs(np.fft.fft(window[:n] * ref))
    m = params.n_symbols
    if os_ > 1:
        folded = spec[:m] + spec[n - m:]
    else:
        folded = spec
    k = int(np.argmax(folded))
    return k, dnr_db(folded, k), folded


_REF_CACHE: dict = {}


def _base_chirp_cached(sf, bw, fs, conj_up):
    key = (sf, bw, fs, conj_up)
    ref = _REF_CACHE.get(key)
    if ref is None:
        p = LoRaParams(sf=sf, bw=bw)
        # up-chirps are dechirped by the conjugate up-chirp, down-chirps by the up-chirp
        ref = np.conj(base_chirp(p, fs)) if conj_up else base_chirp(p, fs)
        _REF_CACHE[key] = ref
    return ref


def dnr_db(spectrum: np.ndarray, peak: int | None = None) -> float:
    if peak is None:
        peak = int(np.argmax(spectrum))
    top = float(spectrum[peak])
    if top <= 0:
        return 0.0
    rest = np.delete(spectrum, peak)
    noise = float(np.median(rest)) if len(rest) else 0.0
    return 20 * np.log10(top / max(noise, top * 1e-15))


@dataclass
class _Sync:
    start_offset: int
    payload_start: int


DETECT_DNR_DB = 10.0


def _synchronize(iq: IQBuffer, params: LoRaParams, threshold_db: float = DETECT_DNR_DB,
                 search_from: int = 0) -> _Sync | None:
    fs = iq.sample_rate
    os_ = params.oversampling(fs)
    L = params.n_symbols * os_
    x = iq.samples
    need = params.preamble_len - 1
    # coarse: chirp-spaced windows until preamble_len - 1 agree
    hits: list[int] = []
    prev = None
    pos = search_from
    found_at = None
    while pos + L <= len(x):
        k, dnr, _ = dechirp(x[pos:pos + L], params, fs)
        if dnr >= threshold_db and (prev is None or k == prev):
            hits.append(pos)
            prev = k
        elif dnr >= threshold_db:
            hits, prev = [pos], k
        else:
            hits, prev = [], None
        if len(hits) >= need:
            found_at = hits[0]
            break
        pos += L
    if found_at is None:
        return None
    # a window starting d chips late reads symbol d, so chirp boundaries sit
    # at found_at - d (mod L); take the first one inside the detected run
    boundary = found_at + (-prev * os_) % L
    boundary = _refine(x, params, fs, boundary, os_)
    # walk forward to the frame delimiter
    pos = boundary
    limit = boundary + (params.preamble_len + 8) * L
    while pos + L <= min(len(x), limit):
        _, up_dnr, up_spec = dechirp(x[pos:pos + L], params, fs)
        kd, dn_dnr, dn_spec = dechirp(x[pos:pos + L], params, fs, down=True)
        if dn_dnr >= threshold_db and dn_spec[kd] > up_spec.max():
            sfd = pos
            if pos + 2 * L <= len(x):
                # the delimiter is two full down-chirps; require the second too
                kd2, dn2, _ = dechirp(x[pos + L:pos + 2 * L], params, fs, down=True)
                if dn2 < threshold_db:
                    pos += L
                    continue
            start = sfd - (params.preamble_len + 2) * L
            return _Sync(start, sfd + int(round((params.framing_chirps - params.preamble_len - 2) * L)))
        pos += L
    return None


def _refine(x, params, fs, boundary, os_):
    """Sample-accurate alignment around a chip-accurate boundary."""
    L = params.n_symbols * os_
    best, best_val = boundary, -1.0
    for delta in range(-os_, os_ + 1):
        b = boundary + delta
        while b < 0:
            b += L
        if b + L > len(x):
            continue
        k, _, spec = dechirp(x[b:b + L], params, fs)
        # prefer the candidate concentrating energy in symbol 0
        val = spec[0]
        if val > best_val:
            best, best_val = b, val
    return best


def detect_packet(iq: IQBuffer, params: LoRaParams, threshold_db: float = DETECT_DNR_DB,
                  search_from: int = 0) -> int | None:
    """Sample index where the first detected packet's preamble starts, or None."""
    sync = _synchronize(iq, params, threshold_db, search_from)
    return None if sync is None else sync.start_offset


def corrupted_indices(dnrs, floor_db: float = 6.0, drop_db: float = 10.0) -> list[int]:
    dnrs = np.asarray(dnrs, dtype=float)
    if not len(dnrs):
        return []
    thr = max(float(np.median(dnrs)) - drop_db, floor_db)
    return [int(i) for i in np.flatnonzero(dnrs < thr)]


def demodulate_packet(iq: IQBuffer, params: LoRaParams, expected_payload_symbols: int | None = None,
                      n_bits: int | None = None, threshold_db: float = DETECT_DNR_DB,
                      search_from: int = 0) -> DecodeResult:
    """Detect, synchronise and demodulate one packet.

    With ``expected_payload_symbols=None`` the payload is read until the DNR
    stays below the detection threshold for two consecutive symbols.
    """
    sync = _synchronize(iq, params, threshold_db, search_from)
    if sync is None:
        return DecodeResult(found=False)
    fs = iq.sample_rate
    L = params.chirp_samples(fs)
    x = iq.samples
    symbols, dnrs = [], []
    pos = sync.payload_start
    weak = 0
    j = 0
    while True:
        if expected_payload_symbols is not None and j >= expected_payload_symbols:
            break
        if pos + L > len(x):
            if expected_payload_symbols is None:
                break
            win = np.zeros(L, dtype=x.dtype)
            avail = max(0, len(x) - pos)
            win[:avail] = x[pos:pos + avail]
        else:
            win = x[pos:pos + L]
        k, dnr, _ = dechirp(win, params, fs)
        symbols.append(k)
        dnrs.append(dnr)
        if expected_payload_symbols is None:
            weak = weak + 1 if dnr < threshold_db else 0
            if weak >= 2:
                break
        pos += L
        j += 1
    if expected_payload_symbols is None:
        while dnrs and dnrs[-1] < threshold_db:
            symbols.pop()
            dnrs.pop()
    bits = codec.decode_payload(symbols, params, n_bits)
    return DecodeResult(found=True, payload_bits=bits, symbols=symbols,
                        symbol_confidences=dnrs, start_offset=sync.start_offset,
                        corrupted_symbol_indices=corrupted_indices(dnrs))


def encode_payload(bits, params: LoRaParams) -> np.ndarray:
    return codec.encode_payload(bits, params)


def decode_payload(symbols, params: LoRaParams, n_bits: int | None = None) -> np.ndarray:
    return codec.decode_payload(symbols, params, n_bits)
