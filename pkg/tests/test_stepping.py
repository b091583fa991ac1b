import numpy as np
import pytest

from leakychirp.channel import VGA, ChannelConfig, apply_channel, radiate
from leakychirp.iq import IQBuffer
from leakychirp.stepping import (SteppingWindow, _line_grid, demodulate_stepping_packet,
                                 detect_stepping, stepping_dechirp, stepping_reference,
                                 stepping_spectrum, synth_stepping_packet)
from leakychirp.synth import (PixelStream, SteppingParams, downsample_rate, frames_to_stream,
                              stepping_line_freqs, synth_stepping_frames)
from leakychirp.timing import pixel_clock

SP = SteppingParams()
FS = 1e6


@pytest.fixture(scope="module")
def window(t1080):
    return SteppingWindow.from_timing(t1080, SP)


def test_window_geometry(t1080, window):
    assert window.t_total == pytest.approx(window.t_line + window.t_invalid)
    assert window.t_line == pytest.approx(1920 / 148.5e6)
    assert window.t_invalid == pytest.approx(280 / 148.5e6)
    assert window.chirp_duration == pytest.approx(15.17e-3, rel=1e-3)
    with pytest.raises(ValueError):
        SteppingWindow(1.0, 1.0, 3.0, 4)


def test_reference_tones_and_gating(t1080, window):
    iq = stepping_reference(SP, 0, FS, t1080)
    x = iq.samples.astype(complex)
    n = np.arange(len(x))
    line, on = _line_grid(0, len(x), FS, 0.0, window)
    assert (x[~on] == 0).all()
    # line 0 is the band edge, -BW/2 from the carrier
    first = np.flatnonzero(on & (line == 0))
    np.testing.assert_allclose(x[first], np.exp(2j * np.pi * -250e3 * n[first] / FS), atol=1e-6)
    mid = np.flatnonzero(on & (line == 300))
    f = -250e3 + 300 * SP.step
    np.testing.assert_allclose(x[mid], np.exp(2j * np.pi * f * n[mid] / FS), atol=1e-5)
    with pytest.raises(ValueError):
        stepping_reference(SP, 1024, FS, t1080)


@pytest.mark.parametrize("k", [0, 1, 511, 1023])
def test_reference_roundtrip_and_gated_energy(t1080, window, k):
    iq = stepping_reference(SP, k, FS, t1080)
    sym, dnr = stepping_dechirp(iq, SP, window, 0.0)
    assert sym == k
    assert dnr > 40
    spec = stepping_spectrum(iq, SP, window, 0.0)
    n_on = int(np.count_nonzero(iq.samples))
    if k == 0:
        # no line wraps: every gated sample adds coherently into bin 0
        assert abs(spec[0]) == pytest.approx(n_on, rel=1e-8)
    else:
        # lines past the band edge move to the wrapped twin bin; the two groups
        # leak slightly into each other's bins, so the split sum is approximate
        twin = len(spec) - SP.n_symbols + k
        assert abs(spec[k]) + abs(spec[twin]) == pytest.approx(n_on, rel=1e-3)


def test_gaps_carry_no_weight(t1080, window, rng):
    iq = stepping_reference(SP, 77, FS, t1080)
    _, on = _line_grid(0, len(iq), FS, 0.0, window)
    junk = iq.samples.copy()
    junk[~on] = rng.standard_normal((~on).sum()) * 10
    a = stepping_spectrum(iq, SP, window, 0.0)
    b = stepping_spectrum(IQBuffer(junk, FS), SP, window, 0.0)
    np.testing.assert_allclose(a, b, atol=1e-6)


def _radiated_packet(t1080, symbols, gaps=True):
    video = synth_stepping_packet(SP, symbols, t1080)
    cfg = ChannelConfig(center_freq=SP.center_freq, gate_frame_gaps=gaps, gate_line_gaps=gaps)
    return video, radiate(frames_to_stream(video), t1080, VGA, cfg)


def test_packet_roundtrip_and_blind_detection(t1080):
    syms = [5, 900, 333]
    video, iq = _radiated_packet(t1080, syms)
    assert len(video) == SP.preamble_len + 3
    res = demodulate_stepping_packet(iq, SP, t1080, 3, start=0.0)
    assert res.symbols == syms
    assert min(res.symbol_confidences) > 40
    lead = 3333
    shifted = IQBuffer(np.concatenate([np.zeros(lead, np.complex64), iq.samples]), FS, SP.center_freq)
    start = detect_stepping(shifted, SP, t1080)
    assert start is not None and round(start * FS) == lead
    blind = demodulate_stepping_packet(shifted, SP, t1080)
    assert blind.symbols == syms


def test_guard_lines_absorb_frame_gap(t1080, window):
    """With and without frame/line gating the decoded symbol is the same."""
    syms = [123, 1000]
    _, gated = _radiated_packet(t1080, syms, gaps=True)
    _, free = _radiated_packet(t1080, syms, gaps=False)
    a = demodulate_stepping_packet(gated, SP, t1080, 2, start=0.0)
    b = demodulate_stepping_packet(free, SP, t1080, 2, start=0.0)
    assert a.symbols == b.symbols == syms


def _misaligned_stream(t1080, k, first_row):
    """One stepping chirp painted from ``first_row`` on, continuing on the next frame's rows."""
    pc = pixel_clock(t1080)
    rows, r = [], first_row
    for _ in range(SP.lines_per_chirp):
        if r % t1080.total_height >= t1080.active_height:
            r += t1080.total_height - r % t1080.total_height
        rows.append(r)
        r += 1
    n_frames = rows[-1] // t1080.total_height + 1
    grid = np.zeros(n_frames * t1080.pixels_per_frame, np.uint8)
    for f, row in zip(stepping_line_freqs(SP, k), rows):
        timer = row * t1080.total_width + np.arange(t1080.active_width) + 1
        rate = downsample_rate(f, pc)
        grid[timer - 1] = np.sin(2 * np.pi * np.mod(rate * timer, 1.0)) > 0
    return PixelStream(grid, t1080)


@pytest.mark.parametrize("k", [0, 300, 777])
def test_mid_chirp_frame_gap_costs_over_6db(t1080, window, k):
    cfg = ChannelConfig(center_freq=SP.center_freq)
    out = {}
    for label, first in (("aligned", 0), ("split", t1080.active_height - 512)):
        iq = radiate(_misaligned_stream(t1080, k, first), t1080, VGA, cfg)
        t0 = first * t1080.total_width / pixel_clock(t1080)
        out[label] = stepping_dechirp(iq, SP, window, t0, 0.0)
    assert out["aligned"][0] == k
    assert out["aligned"][1] - out["split"][1] > 6.0


def test_noisy_packet_with_known_start(t1080):
    _, iq = _radiated_packet(t1080, [42])
    iq.support = (0, len(iq))
    noisy = apply_channel(iq, ChannelConfig(center_freq=SP.center_freq, snr_db=-20, rng_seed=4))
    res = demodulate_stepping_packet(noisy, SP, t1080, 1, start=0.0)
    assert res.symbols == [42]


def test_fold_length_requires_integer_ratio(t1080, window):
    iq = stepping_reference(SP, 0, FS, t1080)
    bad = IQBuffer(iq.samples, 1.1e6)
    with pytest.raises(ValueError):
        stepping_dechirp(bad, SP, window, 0.0)


def _pixel_roundtrip(t1080, window, ks):
    got = []
    for a in range(0, len(ks), 16):
        chunk = [int(k) for k in ks[a:a + 16]]
        video = synth_stepping_frames(SP, chunk, t1080)
        iq = radiate(frames_to_stream(video), t1080, VGA, ChannelConfig(center_freq=SP.center_freq))
        for i in range(len(chunk)):
            got.append(stepping_dechirp(iq, SP, window, i / 60, 0.0)[0])
    return got


def test_pixel_roundtrip_sampled(t1080, window):
    ks = np.r_[0, 1, 2, 1021, 1022, 1023, np.random.default_rng(8).integers(0, 1024, 10)]
    assert _pixel_roundtrip(t1080, window, ks) == ks.tolist()


@pytest.mark.slow
def test_pixel_roundtrip_exhaustive(t1080, window):
    ks = np.arange(SP.n_symbols)
    got = np.array(_pixel_roundtrip(t1080, window, ks))
    assert (got == ks).all(), np.flatnonzero(got != ks)
