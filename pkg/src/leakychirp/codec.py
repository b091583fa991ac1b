"""Bit <-> symbol packing with optional Hamming-style nibble coding.

Coding rates follow the 4/(4+n) family: 4/5 adds one parity bit, 4/6 two,
4/7 is Hamming(7,4) and 4/8 the extended Hamming(8,4) code.  Decoding picks
the nearest codeword, so 4/7 and 4/8 correct any single flipped bit.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

CODING_RATES = {"raw": 0, "4/5": 1, "4/6": 2, "4/7": 3, "4/8": 4}


def parity_bits(coding: str) -> int:
    try:
        return CODING_RATES[coding]
    except KeyError:
        raise ValueError(f"unknown coding {coding!r}; expected one of {list(CODING_RATES)}") from None


def _nibble_codeword(d: int, n_parity: int) -> list[int]:
    d0, d1, d2, d3 = (d >> 3) & 1, (d >> 2) & 1, (d >> 1) & 1, d & 1
    if n_parity == 1:
        return [d0, d1, d2, d3, d0 ^ d1 ^ d2 ^ d3]
    p1 = d0 ^ d1 ^ d3
    p2 = d0 ^ d2 ^ d3
    p3 = d1 ^ d2 ^ d3
    word = [d0, d1, d2, d3, p1, p2, p3][: 4 + n_parity]
    if n_parity == 4:
        word.append(sum(word) & 1)
    return word


@lru_cache(maxsize=None)
def _tables(n_parity: int) -> tuple[np.ndarray, np.ndarray]:
    """Encoder table (16 x width) and nearest-codeword decoder (2**width)."""
    width = 4 + n_parity
    enc = np.array([_nibble_codeword(d, n_parity) for d in range(16)], dtype=np.uint8)
    words = np.arange(2 ** width)
    rx = ((words[:, None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8)
    dist = (rx[:, None, :] != enc[None, :, :]).sum(axis=2)
    # ties resolve to the lowest nibble value
    dec = np.argmin(dist, axis=1).astype(np.uint8)
    return enc, dec


def hamming_encode(bits, n_parity: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % 4
    bits = np.concatenate([bits, np.zeros(pad, np.uint8)])
    nibbles = bits.reshape(-1, 4) @ np.array([8, 4, 2, 1])
    enc, _ = _tables(n_parity)
    return enc[nibbles].reshape(-1)


def hamming_decode(coded, n_parity: int) -> np.ndarray:
    width = 4 + n_parity
    coded = np.asarray(coded, dtype=np.uint8)
    coded = coded[: len(coded) - len(coded) % width]
    words = coded.reshape(-1, width) @ (1 << np.arange(width - 1, -1, -1))
    _, dec = _tables(n_parity)
    nib = dec[words]
    return ((nib[:, None] >> np.array([3, 2, 1, 0])) & 1).astype(np.uint8).reshape(-1)


def pack_symbols(bits, sf: int) -> np.ndarray:
    """Consecutive sf-bit groups, MSB first, zero padded at the tail."""
    bits = np.asarray(bits, dtype=np.int64)
    pad = (-len(bits)) % sf
    bits = np.concatenate([bits, np.zeros(pad, np.int64)])
    if len(bits) == 0:
        return np.zeros(0, dtype=np.int64)
    return bits.reshape(-1, sf) @ (1 << np.arange(sf - 1, -1, -1, dtype=np.int64))


def unpack_symbols(symbols, sf: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64)
    return ((symbols[:, None] >> np.arange(sf - 1, -1, -1)) & 1).astype(np.uint8).reshape(-1)


def coded_length(n_bits: int, coding: str) -> int:
    n_parity = parity_bits(coding)
    if n_parity == 0:
        return n_bits
    return -(-n_bits // 4) * (4 + n_parity)


def symbol_count(n_bits: int, sf: int, coding: str = "raw") -> int:
    return -(-coded_length(n_bits, coding) // sf)


def encode_payload(bits, params) -> np.ndarray:
    n_parity = parity_bits(params.coding)
    bits = np.asarray(bits, dtype=np.uint8)
    coded = hamming_encode(bits, n_parity) if n_parity else bits
    return pack_symbols(coded, params.sf)


def decode_payload(symbols, params, n_bits: int | None = None) -> np.ndarray:
    """Inverse of :func:`encode_payload`; ``n_bits`` trims tail padding."""
    n_parity = parity_bits(params.coding)
    raw = unpack_symbols(symbols, params.sf)
    bits = hamming_decode(raw, n_parity) if n_parity else raw
    if n_bits is not None:
        bits = bits[:n_bits]
    return bits


def text_to_bits(text: str) -> np.ndarray:
    data = np.frombuffer(text.encode("utf-8"), dtype=np.uint8)
    return np.unpackbits(data)


def bits_to_text(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    bits = bits[: len(bits) - len(bits) % 8]
    return np.packbits(bits).tobytes().decode("utf-8", errors="replace")


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % 8
    return np.packbits(np.concatenate([bits, np.zeros(pad, np.uint8)])).tobytes().hex()
