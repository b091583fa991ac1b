"""
Pixel clock, hidden pixels and the tone kernel
===============================================

A 1080p60 link moves 2200 x 1125 pixels per frame, 60 times a second.  Each
pixel is a held voltage, so the cable radiates the pixel sequence around every
multiple of the pixel clock.  Painting a tone at ``(f mod PC) / PC`` cycles
per pixel therefore puts energy at ``f``, even when ``f`` is far above the
pixel clock itself.
"""
import numpy as np

from leakychirp import (VGA, ChannelConfig, ToneSchedule, frame_gap_duration, get_timing,
                        line_gap_duration, pixel_clock, pixel_duration, radiate, synth_tone_stream)
from leakychirp.synth import downsample_rate

timing = get_timing("1080p60")
pc = pixel_clock(timing)
print(f"pixel clock       {pc / 1e6:.1f} MHz")
print(f"pixel duration    {pixel_duration(timing) * 1e9:.4f} ns")
print(f"line gap          {line_gap_duration(timing) * 1e6:.4f} us")
print(f"frame gap         {frame_gap_duration(timing) * 1e3:.4f} ms")

# %%
# 433 MHz sits between the 2nd and 3rd harmonics of 148.5 MHz.  The pixel
# pattern only has to oscillate at the alias.
for f in (150e6, 433e6, 915e6):
    r = downsample_rate(f, pc)
    print(f"{f / 1e6:7.1f} MHz -> {r:.6f} cycles/pixel ({r * pc / 1e6:.2f} MHz alias)")

# %%
# Paint a 433.5 MHz tone across one frame and listen at 433 MHz: the receiver
# sees a single line 500 kHz above its tuning.
stream = synth_tone_stream(ToneSchedule.of((433.5e6, timing.pixels_per_frame)), timing)
iq = radiate(stream, timing, VGA, ChannelConfig(center_freq=433e6))
seg = iq.samples[1000:9192]
spec = np.abs(np.fft.fftshift(np.fft.fft(seg * np.hanning(len(seg)))))
freqs = np.fft.fftshift(np.fft.fftfreq(len(seg), 1 / iq.sample_rate))
print(f"strongest baseband line: {freqs[np.argmax(spec)] / 1e3:+.1f} kHz")

# %%
# Hidden rows emit the black level, so the tone switches off for the frame gap.
on = np.abs(iq.samples[1000:9000]).mean()
gap_start = int(timing.active_height * timing.total_width / pc * iq.sample_rate)
off = np.abs(iq.samples[gap_start + 30:gap_start + 600]).mean()
print(f"mean |IQ| while drawing {on:.4f}, during the frame gap {off:.2e}")
