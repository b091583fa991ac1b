"""
Stepping chirps: one tone per scanline
======================================

An SDR receiver does not need real LoRa timing, so the attacker can shape the
chirp around the raster instead.  Scanline ``i`` carries a constant tone one
step of ``BW / 2**SF`` above line ``i - 1``.  With SF10 the 1024 chirp lines
fit in the 1080 active rows; the remaining 56 guard lines and the 45 hidden
rows form the silence between chirps, so frame gaps never cut a symbol.
"""
import time

from leakychirp import SteppingParams, codec, get_timing
from leakychirp.experiment import ExperimentConfig, run_prr_experiment, stepping_frame_budget
from leakychirp.stepping import SteppingWindow

timing = get_timing("1080p60")
sp = SteppingParams()
window = SteppingWindow.from_timing(timing, sp)
print(f"step {sp.step} Hz, {sp.lines_per_chirp} chirp lines + {sp.guard_lines} guard lines")
print(f"chirp lasts {window.chirp_duration * 1e3:.2f} ms of a {1e3 / timing.refresh_rate:.2f} ms frame")

for n in (8, 80, 480):
    b = stepping_frame_budget(sp, n, timing)
    print(f"{n:4d} bits -> {b.payload_symbols} symbols, {b.frames} frames "
          f"({b.packet_duration:.2f} s of video)")

# %%
# A short packet, decoded from the simulated capture, with and without noise.
t0 = time.perf_counter()
cfg = ExperimentConfig(variant="stepping", stepping=sp, payload_text="TEMPEST", snr_list=[None, -25.0],
                       trials=5)
print(run_prr_experiment(cfg).table())
print(f"({time.perf_counter() - t0:.1f} s)")
print("payload bits:", len(codec.text_to_bits("TEMPEST")))
