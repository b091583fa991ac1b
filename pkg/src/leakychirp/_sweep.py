"""Closed-form phase of a cyclically shifted linear frequency sweep.

Shared by the pixel-domain chirp synthesiser and the ideal baseband modulator.
Frequencies are in cycles per sample.  Phase is accumulated inclusively, so a
constant frequency ``f`` gives phase ``f * (j + 1)`` at sample ``j``; this is
the same convention as a pixel timer that starts at 1.
"""
from __future__ import annotations

import numpy as np


def sweep_phase(n_total: int, shift: int, f_start: float, span: float,
                down: bool = False, phase0: float = 0.0,
                count: int | None = None) -> tuple[np.ndarray, float]:
    """Per-sample phase in cycles (wrapped to [0, 1)) and the carry-out phase.

    The instantaneous frequency of sample ``j`` is
    ``f_start + span * u / n_total`` (up) or ``f_start + span - span * u / n_total``
    (down) with ``u = (j + shift) % n_total``.  Only the first ``count`` samples
    are produced (default: the whole sweep).
    """
    if count is None:
        count = n_total
    shift %= n_total
    j = np.arange(count, dtype=np.int64)
    # running sum of u, split at the wrap point
    s = np.int64(shift)
    head = n_total - shift
    usum = (j + 1) * s + j * (j + 1) // 2
    wrapped = j >= head
    if np.any(wrapped):
        m = j[wrapped] - head
        usum[wrapped] = (head * (s + n_total - 1)) // 2 + m * (m + 1) // 2
    slope = span / n_total
    if down:
        cyc = (j + 1) * (f_start + span) - slope * usum.astype(np.float64)
    else:
        cyc = (j + 1) * f_start + slope * usum.astype(np.float64)
    # drop whole cycles before adding the carried phase to keep precision
    cyc = np.mod(cyc, 1.0)
    cyc += phase0
    cyc = np.mod(cyc, 1.0)
    carry = float(cyc[-1]) if count else phase0
    return cyc, carry
