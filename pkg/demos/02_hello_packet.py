"""
"Hello, TEMPEST-LoRa" through a monitor cable
=============================================

The whole cross-technology path: text -> LoRa symbols -> attack frames ->
cable voltage -> narrowband receiver -> demodulated text.  The first attack
frame is saved as a PNG next to this script's output.
"""
from pathlib import Path

from leakychirp import (HDMI, VGA, ChannelConfig, LoRaParams, demodulate_packet, get_timing, radiate,
                        stream_to_frames, synth_packet_stream)
from leakychirp import codec
from leakychirp.experiment import frame_png_bytes
from leakychirp.synth import chirp_pixel_count

timing = get_timing("1080p60")
out = Path("demo_output")
out.mkdir(exist_ok=True)
text = "Hello, TEMPEST-LoRa"
bits = codec.text_to_bits(text)

for sf, bw, freq, cable in [(6, 500e3, 433e6, VGA), (9, 125e3, 915e6, HDMI)]:
    params = LoRaParams(sf=sf, bw=bw, center_freq=freq)
    symbols = codec.encode_payload(bits, params)
    stream = synth_packet_stream(params, symbols, timing)
    video = stream_to_frames(stream)
    name = out / f"hello_sf{sf}_frame0.png"
    name.write_bytes(frame_png_bytes(video.frames[0]))

    # the capture runs two chirps past the packet so the receiver sees it end
    tail = 2 * chirp_pixel_count(sf, bw, timing)
    iq = radiate(stream, timing, cable, ChannelConfig(center_freq=freq), n_pixels=len(stream) + tail)
    result = demodulate_packet(iq, params)
    decoded = codec.bits_to_text(result.payload_bits[:len(bits)])
    print(f"SF{sf}/{bw / 1e3:g} kHz at {freq / 1e6:g} MHz over {cable.kind}: "
          f"{len(video)} frame(s), {len(result.symbols)} symbols, "
          f"DNR {min(result.symbol_confidences):.1f}-{max(result.symbol_confidences):.1f} dB "
          f"-> {decoded!r}")
    print(f"  first frame written to {name}")
