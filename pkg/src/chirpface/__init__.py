"""Acoustic facial-expression sensing with near-ultrasound FMCW chirps.

Transmit chirps, simulate their echoes off moving reflectors, recover
per-bin amplitude/phase features, classify expressions with a voting
ensemble and turn label streams into engagement and usability scores.
"""

from chirpface.chirp import ChirpConfig, SampleBuffer, synthesize_chirp, synthesize_frame
from chirpface.labels import ExpressionLabel

__all__ = [
    "ChirpConfig",
    "ExpressionLabel",
    "SampleBuffer",
    "synthesize_chirp",
    "synthesize_frame",
]

__version__ = "0.1.0"
