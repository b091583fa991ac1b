"""
The payload cliff
=================

With Hamming 4/8 coding every payload bit costs two channel bits, and an
SF6/500 kHz packet soon outgrows one frame.  Once the packet touches the
hidden rows it loses a run of whole symbols, far more than a 4/8 code can
repair, and the reception rate drops straight from 1 to 0.

Two budgets matter.  The full raster holds 2,475,000 pixels per frame, but
the last active pixel is number 2,375,720; everything after it is hidden.
"""
from leakychirp import LoRaParams, get_timing
from leakychirp.experiment import ExperimentConfig, compute_frame_budget, goodput_report, run_prr_experiment

timing = get_timing("1080p60")
params = LoRaParams(sf=6, bw=500e3, center_freq=433e6, coding="4/8")

print(f"{'bits':>5} {'symbols':>8} {'pixels':>9} {'frames':>7} {'fits active':>12}")
for n in (240, 336, 348, 352, 356, 360, 400):
    b = compute_frame_budget(params, n, timing)
    fits = b.packet_pixels <= timing.active_span
    print(f"{n:5d} {b.payload_symbols:8d} {b.packet_pixels:9d} {b.frames:7d} {str(fits):>12}")

g = goodput_report(params, 360, timing)
print("\noverhead model at 360 bits:")
for key in ("coded_bits", "payload_symbols", "framing_chirps", "packet_chirps", "packet_duration_s",
            "frames", "channel_bit_ceiling_bps", "goodput_bps"):
    print(f"  {key:24s} {g[key]}")

# %%
# Noiseless, gaps on: one trial per length is enough because nothing is random.
cfg = ExperimentConfig(lora=params, payload_lengths=[240, 336, 348, 352, 356, 360, 400, 480])
report = run_prr_experiment(cfg)
print()
print(report.table())
