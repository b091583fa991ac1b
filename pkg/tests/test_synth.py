import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leakychirp.phy import LoRaParams, packet_segments
from leakychirp.synth import (AttackVideo, PixelStream, SteppingParams, ToneSchedule,
                              chirp_pixel_count, downsample_rate, frames_to_stream,
                              packet_pixel_layout, stepping_line_freqs, stream_to_frames,
                              synth_chirp_stream, synth_packet_stream, synth_stepping_frame,
                              synth_tone_stream)
from leakychirp.timing import DisplayTiming, emission_mask, pixel_clock


def test_downsample_rate_second_harmonic():
    assert downsample_rate(150e6, 148.5e6) == pytest.approx(1.5e6 / 148.5e6, rel=1e-15)
    assert downsample_rate(150e6, 148.5e6) == pytest.approx(0.0101010101, rel=1e-9)


def test_tone_zero_is_black(t1080):
    s = synth_tone_stream(ToneSchedule.of((0, 500)), t1080)
    assert not s.values.any()


def test_tone_half_pixel_clock_direct_evaluation(t1080):
    pc = pixel_clock(t1080)
    s = synth_tone_stream(ToneSchedule.of((pc / 2, 8)), t1080)
    timer = np.arange(1, 9)
    oracle = (np.sin(np.pi * timer) > 0).astype(np.uint8)
    assert s.values.tolist() == oracle.tolist() == [1, 0, 1, 0, 1, 0, 1, 0]


def test_tone_kernel_matches_direct_formula(t1080):
    f = 433.92e6
    s = synth_tone_stream(ToneSchedule.of((f, 5000)), t1080)
    r = (f % 148.5e6) / 148.5e6
    timer = np.arange(1, 5001)
    direct = (np.sin(2 * np.pi * r * timer) > 0).astype(np.uint8)
    # float rounding of r*Timer can only disagree where the sine is ~0
    diff = s.values != direct
    assert diff.sum() <= 2


@pytest.mark.parametrize("bad", [((-1.0, 10),), ((1e6, 0),), ()])
def test_tone_schedule_validation(bad):
    with pytest.raises(ValueError):
        ToneSchedule(tuple(bad))


@given(st.lists(st.tuples(st.floats(0, 1e9), st.integers(1, 300)), min_size=2, max_size=4))
@settings(max_examples=30)
def test_tone_phase_continuity(pairs):
    t = DisplayTiming(64, 48, 80, 50, 60)
    whole = synth_tone_stream(ToneSchedule.of(*pairs), t, binary=False)
    first = synth_tone_stream(ToneSchedule.of(*pairs[:1]), t, binary=False)
    rest = synth_tone_stream(ToneSchedule.of(*pairs[1:]), t, binary=False,
                             start_timer=1 + len(first))
    np.testing.assert_allclose(np.concatenate([first.values, rest.values]), whole.values, atol=1e-6)


def test_binary_and_gray_ranges(t1080):
    sched = ToneSchedule.of((433e6, 3000))
    b = synth_tone_stream(sched, t1080)
    g = synth_tone_stream(sched, t1080, binary=False)
    assert set(np.unique(b.values)) <= {0, 1}
    assert g.values.min() >= 0 and g.values.max() <= 1
    assert len(np.unique(g.values)) > 2


def test_chirp_pixel_counts(t1080):
    assert chirp_pixel_count(8, 500e3, t1080) == 76_032
    assert chirp_pixel_count(6, 500e3, t1080) == 19_008
    p = LoRaParams(sf=6, bw=500e3)
    assert p.chirp_duration == pytest.approx(128e-6)
    assert len(synth_chirp_stream(p, 5, t1080)) == 19_008


@pytest.mark.parametrize("sf", range(6, 12))
@pytest.mark.parametrize("bw", [125e3, 250e3])
def test_chirp_pixel_monotonicity(t1080, sf, bw):
    assert chirp_pixel_count(sf + 1, bw, t1080) == 2 * chirp_pixel_count(sf, bw, t1080)
    assert chirp_pixel_count(sf, 2 * bw, t1080) * 2 == chirp_pixel_count(sf, bw, t1080)


def test_chirp_validation(t1080):
    p = LoRaParams(sf=6, bw=500e3)
    with pytest.raises(ValueError):
        synth_chirp_stream(p, 64, t1080)
    with pytest.raises(ValueError):
        synth_chirp_stream(p, -1, t1080)
    with pytest.raises(ValueError):
        LoRaParams(sf=6, bw=0)


def test_chirp_instantaneous_frequency(t1080):
    """Gray-scale up-chirp: the local pixel-rate frequency sweeps by BW/PC."""
    # 915 MHz aliases below half the pixel clock, where a real stream is unambiguous
    p = LoRaParams(sf=8, bw=500e3, center_freq=915e6)
    s = synth_chirp_stream(p, 0, t1080, binary=False)
    x = s.values.astype(float) * 2 - 1
    pc = pixel_clock(t1080)
    n = len(x)
    seg = 4096
    freqs = []
    for a in (0, n - seg):
        spec = np.abs(np.fft.rfft(x[a:a + seg] * np.hanning(seg), 1 << 20))
        freqs.append(np.argmax(spec) / (1 << 20))
    lo = ((915e6 - 250e3) % pc) / pc
    assert freqs[0] == pytest.approx(lo + 0.5 * seg / n * 500e3 / pc, abs=2e-5)
    assert freqs[1] - freqs[0] == pytest.approx((n - seg) / n * 500e3 / pc, abs=4e-5)


def test_packet_length(t1080):
    p = LoRaParams(sf=6, bw=500e3)
    s = synth_packet_stream(p, [1, 2, 3, 4], t1080)
    assert len(s) == round(12.25 * 19_008) == 232_848
    empty = synth_packet_stream(p, [], t1080)
    assert len(empty) == round(8.25 * 19_008)
    assert len(packet_segments(p, [])) == 4 + 2 + 3
    lay = packet_pixel_layout(p, 4, t1080)
    assert lay["total"] == 232_848


def test_packet_rejects_bad_symbols(t1080):
    with pytest.raises(ValueError):
        synth_packet_stream(LoRaParams(sf=6, bw=500e3), [64], t1080)


def test_frames_boundaries(t1080):
    short = PixelStream(np.ones(10, np.uint8), t1080)
    assert len(stream_to_frames(short)) == 1
    s = PixelStream(np.ones(1125 * 2200 + 1, np.uint8), t1080)
    v = stream_to_frames(s)
    assert len(v) == 2
    assert v.frames[0].shape == (1080, 1920)
    assert v.frames[1][0, 0] == 1 and v.frames[1].sum() == 1


def test_frames_roundtrip_forces_hidden_black(rng):
    t = DisplayTiming(7, 5, 9, 6, 60)
    values = rng.integers(0, 2, 3 * t.pixels_per_frame - 11).astype(np.uint8)
    s = PixelStream(values, t)
    back = frames_to_stream(stream_to_frames(s))
    mask = emission_mask(t, 3)
    expect = np.zeros(3 * t.pixels_per_frame, np.uint8)
    expect[:len(values)] = values
    expect[~mask] = 0
    assert (back.values == expect).all()


def test_attack_video_shape_check(t1080):
    with pytest.raises(ValueError):
        AttackVideo([np.zeros((10, 10))], t1080)


def test_pixel_stream_validation(t1080):
    with pytest.raises(ValueError):
        PixelStream(np.array([0.5, 1.5]), t1080)
    with pytest.raises(ValueError):
        PixelStream(np.array([]), t1080)


def test_stepping_constants(t1080):
    sp = SteppingParams()
    assert sp.step == 488.28125
    assert sp.lines_per_chirp + sp.guard_lines == 1080
    assert SteppingParams.for_timing(t1080).guard_lines == 56
    assert stepping_line_freqs(sp, 0)[0] == sp.center_freq - 250e3
    assert stepping_line_freqs(sp, 1023)[1] == sp.center_freq - 250e3
    sp.check(t1080)
    with pytest.raises(ValueError):
        SteppingParams(guard_lines=100).check(t1080)
    with pytest.raises(ValueError):
        SteppingParams(sf=13)


def test_stepping_frame_lines(t1080):
    sp = SteppingParams()
    f = synth_stepping_frame(sp, 7, t1080, frame_index=3, binary=False)
    assert f.shape == (1080, 1920)
    assert not f[1024:].any()
    # row i is a constant tone: its pixels match the kernel at the absolute raster timer
    pc = pixel_clock(t1080)
    for row in (0, 500, 1023):
        r = downsample_rate(stepping_line_freqs(sp, 7)[row], pc)
        timer = 3 * t1080.pixels_per_frame + row * 2200 + np.arange(1920) + 1
        direct = (np.sin(2 * np.pi * np.mod(r * timer, 1.0)) + 1) / 2
        np.testing.assert_allclose(f[row], direct, atol=1e-5)
