"""Simulated covert LoRa links through video-cable emanation.

Attack pixel streams are synthesised at the pixel clock, radiated through a
zero-order-hold cable model into a narrowband receiver, and decoded with a
chirp spread spectrum soft demodulator.
"""
from .channel import HDMI, VGA, CableProfile, ChannelConfig, apply_channel, emission_extract, radiate, stream_to_voltage
from .codec import decode_payload, encode_payload, text_to_bits, bits_to_text
from .experiment import (ExperimentConfig, ExperimentReport, compute_frame_budget, export_artifacts,
                         goodput_report, run_prr_experiment)
from .iq import IQBuffer, read_iq, write_iq
from .phy import DecodeResult, LoRaParams, dechirp, demodulate_packet, detect_packet, reference_modulate
from .stepping import (SteppingWindow, demodulate_stepping_packet, stepping_dechirp, stepping_reference,
                       synth_stepping_packet)
from .synth import (AttackVideo, PixelStream, SteppingParams, ToneSchedule, frames_to_stream,
                    stream_to_frames, synth_chirp_stream, synth_packet_stream, synth_tone_stream)
from .timing import (DisplayTiming, emission_mask, frame_gap_duration, get_timing, line_gap_duration,
                     pixel_clock, pixel_duration)

__version__ = "0.1.0"
