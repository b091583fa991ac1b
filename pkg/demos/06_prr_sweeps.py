"""
Seeded PRR sweeps
=================

Packet reception rate against per-sample SNR, and against packet length at a
fixed SNR.  Every trial draws its noise from ``(seed, sweep point, trial)``,
so the numbers below are reproducible to the last digit.  Raise ``TRIALS``
for smoother curves.
"""
from pathlib import Path

from leakychirp import LoRaParams
from leakychirp.experiment import ExperimentConfig, run_prr_experiment

TRIALS = 40
out = Path("demo_output")
out.mkdir(exist_ok=True)

cfg = ExperimentConfig(lora=LoRaParams(sf=6, bw=500e3, center_freq=433e6),
                       snr_list=[6.0, 3.0, 0.0, -3.0, -6.0], trials=TRIALS, seed=1)
snr_report = run_prr_experiment(cfg)
print(snr_report.table())
snr_report.write(out / "prr_vs_snr.jsonl")

# %%
# Longer packets span more frames and give the noise more symbols to break.
cfg = ExperimentConfig(lora=LoRaParams(sf=10, bw=125e3, center_freq=433e6),
                       payload_lengths=[20, 100, 200], snr_list=[-22.0], trials=TRIALS, seed=1)
print()
print(run_prr_experiment(cfg).table())
print(f"\nreport written to {out / 'prr_vs_snr.jsonl'}; "
      f"plot it with: leakychirp plot {out / 'prr_vs_snr.jsonl'}")
