"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per criterion is
printed in the terminal summary.
"""
from dataclasses import replace

import numpy as np
import pytest

from leakychirp import codec
from leakychirp.channel import HDMI, VGA, ChannelConfig, radiate
from leakychirp.experiment import (ExperimentConfig, compute_frame_budget, export_artifacts,
                                   goodput_report, predicted_gap_window, run_prr_experiment)
from leakychirp.phy import LoRaParams, dechirp, demodulate_packet, payload_start_sample, reference_modulate
from leakychirp.synth import SteppingParams, chirp_pixel_count, synth_packet_stream
from leakychirp.timing import get_timing, pixel_clock

T = get_timing("1080p60")
HELLO = "Hello, TEMPEST-LoRa"


def test_c1_pixel_clock_math(criterion):
    with criterion(1, "pixel clock and N_pixel arithmetic", 5) as c:
        assert pixel_clock(T) == 148_500_000
        assert chirp_pixel_count(8, 500e3, T) == 76_032
        c.note("PC = 148500000 Hz, N_pixel(SF8, 500 kHz) = 76032")


def _symbol_windows(params, symbols):
    iq = reference_modulate(params, symbols)
    L = params.n_symbols
    a = payload_start_sample(params, L)
    return iq.samples[a:a + L * len(symbols)].reshape(len(symbols), L)


def test_c2_exhaustive_modem(criterion):
    with criterion(2, "exhaustive reference modulate/dechirp", 120) as c:
        rng = np.random.default_rng(2)
        checked = 0
        for sf in range(6, 13):
            p = LoRaParams(sf=sf, bw=125e3)
            ks = np.arange(2 ** sf) if sf <= 10 else rng.choice(2 ** sf, 256, replace=False)
            got = [dechirp(w, p)[0] for w in _symbol_windows(p, ks)]
            wrong = int(np.count_nonzero(np.array(got) != ks))
            assert wrong == 0, f"SF{sf}: {wrong} symbol errors"
            checked += len(ks)
        c.note(f"{checked} symbols, 0 errors")


@pytest.mark.parametrize("sf,bw", [(6, 500e3), (9, 125e3)])
@pytest.mark.parametrize("freq,cable", [(433e6, VGA), (915e6, HDMI)], ids=["433-vga", "915-hdmi"])
def test_c3_cross_technology_roundtrip(criterion, sf, bw, freq, cable):
    with criterion(3, f"pixel-to-LoRa round trip SF{sf}/{bw / 1e3:g}k @ {freq / 1e6:g} MHz {cable.kind}",
                   60) as c:
        p = LoRaParams(sf=sf, bw=bw, center_freq=freq)
        bits = codec.text_to_bits(HELLO)
        symbols = codec.encode_payload(bits, p)
        stream = synth_packet_stream(p, symbols, T)
        tail = 2 * chirp_pixel_count(sf, bw, T)
        iq = radiate(stream, T, cable, ChannelConfig(center_freq=freq), n_pixels=len(stream) + tail)
        res = demodulate_packet(iq, p, len(symbols), len(bits))
        assert res.found
        assert codec.bits_to_text(res.payload_bits) == HELLO
        c.note(f"decoded {HELLO!r}, min DNR {min(res.symbol_confidences):.1f} dB")


def test_c4_frame_gap_corruption(criterion):
    with criterion(4, "frame gap destroys 5-6 consecutive symbols in the predicted window", 60) as c:
        p = LoRaParams(sf=6, bw=500e3, center_freq=433e6)
        n = 140
        truth = np.random.default_rng(4).integers(0, 64, n)
        stream = synth_packet_stream(p, truth, T)
        iq = radiate(stream, T, VGA, ChannelConfig(center_freq=433e6),
                     n_pixels=len(stream) + 2 * chirp_pixel_count(6, 500e3, T))
        res = demodulate_packet(iq, p, n)
        wrong = np.flatnonzero(np.array(res.symbols) != truth).tolist()
        flagged = res.corrupted_symbol_indices
        predicted = predicted_gap_window(p, n, T)
        c.note(f"predicted {predicted}, flagged {flagged}, wrong {wrong}")
        assert len(wrong) in (5, 6) and wrong == list(range(wrong[0], wrong[0] + len(wrong)))
        assert flagged == list(range(flagged[0], flagged[-1] + 1))
        assert abs(flagged[0] - predicted[0]) <= 1 and abs(flagged[-1] - predicted[-1]) <= 1
        assert len(flagged) in (5, 6)


def test_c5_payload_cliff(criterion):
    with criterion(5, "Hamming 4/8 payload cliff at SF6/500k", 300) as c:
        p = LoRaParams(sf=6, bw=500e3, center_freq=433e6, coding="4/8")
        below = [8, 120, 240, 360]
        above = [400, 480]
        for n in range(8, 361, 8):
            assert compute_frame_budget(p, n, T).frames == 1, n
        assert compute_frame_budget(p, 400, T).frames >= 2
        for n in (360, 400):
            g = goodput_report(p, n, T)
            print(f"overhead model {n} bits: coded {g['coded_bits']} bits, "
                  f"{g['payload_symbols']} payload + {g['framing_chirps']} framing chirps, "
                  f"{g['frames']} frame(s), packet {g['packet_duration_s'] * 1e3:.3f} ms")
        cfg = ExperimentConfig(lora=p, payload_lengths=below + above, seed=5)
        rows = {r["payload_bits"]: r for r in run_prr_experiment(cfg).rows}
        prr = {n: rows[n]["prr"] for n in below + above}
        end = compute_frame_budget(p, 360, T).packet_pixels
        c.note(f"PRR {prr}")
        print("PRR by payload length:", prr)
        print(f"360-bit packet ends at raster pixel {end}; the last active pixel of a frame is "
              f"{T.active_span}; the frame holds {T.pixels_per_frame} pixels")
        assert all(prr[n] == 0.0 for n in above), f"PRR {prr}"
        assert all(prr[n] == 1.0 for n in below), (
            f"PRR {prr}; 360-bit packet ends at pixel {end} > last active pixel {T.active_span}")


def test_c6_stepping_gap_immunity(criterion):
    with criterion(6, "stepping chirp survives every frame gap", 300) as c:
        sp = SteppingParams()
        assert sp.step == 488.28125
        lengths = [8, 24, 56, 120, 240, 360, 480]
        cfg = ExperimentConfig(variant="stepping", stepping=sp, payload_lengths=lengths, seed=6)
        rows = run_prr_experiment(cfg).rows
        prr = {r["payload_bits"]: r["prr"] for r in rows}
        c.note(f"step {sp.step} Hz, PRR {prr}")
        assert all(v == 1.0 for v in prr.values()), prr
        assert all(r["frames"] == sp.preamble_len + codec.symbol_count(r["payload_bits"], 10)
                   for r in rows)


def _non_increasing(seq):
    return all(b <= a for a, b in zip(seq, seq[1:]))


def test_c7_prr_monotonicity(criterion):
    with criterion(7, "PRR non-increasing in noise and in frame count", 900) as c:
        snrs = [3.0, 0.0, -3.0, -6.0]
        cfg = ExperimentConfig(lora=LoRaParams(sf=6, bw=500e3, center_freq=433e6),
                               snr_list=snrs, trials=200, seed=7)
        curve = [r["prr"] for r in run_prr_experiment(cfg).rows]
        c.note(f"SF6/500k PRR vs SNR {dict(zip(snrs, curve))}")
        assert _non_increasing(curve), curve
        assert curve[0] > curve[-1]

        lengths = [20, 100, 200]
        cfg = ExperimentConfig(lora=LoRaParams(sf=10, bw=125e3, center_freq=433e6),
                               payload_lengths=lengths, snr_list=[-20.0, -22.0], trials=200, seed=7)
        rows = run_prr_experiment(cfg).rows
        for snr in (-20.0, -22.0):
            sel = sorted((r for r in rows if r["snr_db"] == snr), key=lambda r: r["frames"])
            frames = [r["frames"] for r in sel]
            prr = [r["prr"] for r in sel]
            c.note(f"SF10/125k @ {snr} dB frames {frames} PRR {prr}")
            assert frames == sorted(set(frames)), frames
            assert _non_increasing(prr), (snr, prr)
        for n in lengths:
            sel = [r["prr"] for r in rows if r["payload_bits"] == n]
            assert _non_increasing(sel), (n, sel)


def test_c8_determinism(criterion, tmp_path):
    with criterion(8, "byte-identical reports and IQ for equal (config, seed)", 120) as c:
        cfg = ExperimentConfig(lora=LoRaParams(sf=7, bw=250e3, center_freq=433e6),
                               snr_list=[-2.0], trials=20, seed=8)
        a = export_artifacts(cfg, tmp_path / "a")
        b = export_artifacts(cfg, tmp_path / "b")
        for pa, pb in zip(sorted(a), sorted(b)):
            assert pa.name == pb.name
            assert pa.read_bytes() == pb.read_bytes(), pa.name
        assert run_prr_experiment(cfg).to_jsonl() == run_prr_experiment(cfg).to_jsonl()
        other = export_artifacts(replace(cfg, seed=9), tmp_path / "c")
        iq_other = [p for p in other if p.name == "capture.cf32"][0].read_bytes()
        assert iq_other != (tmp_path / "a" / "capture.cf32").read_bytes()
        c.note(f"{len(a)} files identical")
