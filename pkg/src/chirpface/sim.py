"""Synthetic rooms and expression sessions for experiments.

All magnitudes here are made up: a phone ~30 cm from a face in a room
with a few fixed echoes.  Expressions differ in where the face echo sits
(tiny delay offsets, i.e. a fraction of a millimetre of surface motion)
and in how strongly it reflects, plus the modulation pattern from
:func:`chirpface.channel.au_trajectory`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chirpface.chirp import ChirpConfig, SampleBuffer, synthesize_frames
from chirpface.channel import (
    AuTrajectoryParams,
    NoiseSpec,
    Scene,
    au_trajectory,
    distance_to_delay,
    propagate,
    pulse_reflector,
    static_reflector,
    timeline_reflector,
)
from chirpface.labels import ExpressionLabel

FACE_DISTANCE_M = 0.30


@dataclass(frozen=True)
class ExpressionPreset:
    """Offset of the face echo from its resting delay plus modulation recipe."""

    delay_offset: float
    attenuation: float
    delay_swing: float
    attenuation_swing: float
    tempo: float


# big deliberate movements for the bin-selection warm-up
CALIBRATION_PRESET = ExpressionPreset(0.0, 0.12, 15e-6, 0.02, 1.0)

PRESETS = {
    ExpressionLabel.HAPPY: ExpressionPreset(0.0, 0.14, 3e-6, 0.03, 1.5),
    ExpressionLabel.SURPRISE: ExpressionPreset(4e-6, 0.10, 5e-6, 0.01, 0.8),
    ExpressionLabel.ANGRY: ExpressionPreset(-22e-6, 0.08, 4e-6, 0.015, 2.0),
    ExpressionLabel.SAD_NEUTRAL: ExpressionPreset(-8e-6, 0.05, 2e-6, 0.005, 0.5),
}


def default_room() -> list:
    """Direct speaker-to-mic path plus four fixed echoes (walls, desk)."""
    return [
        static_reflector(distance_to_delay(0.05), 0.6),
        static_reflector(distance_to_delay(0.11), 0.3),
        static_reflector(distance_to_delay(0.17), 0.25),
        static_reflector(distance_to_delay(0.62), 0.35),
        static_reflector(distance_to_delay(0.78), 0.2),
    ]


def face_reflector(expression, rest_delay: float, seed: int = 0, jitter: float = 0.0,
                   preset: ExpressionPreset | None = None):
    """Face echo for one session; ``jitter`` scales a random repositioning offset."""
    rng = np.random.default_rng(seed)
    return au_trajectory(_params(ExpressionLabel.parse(expression), rest_delay, rng, jitter,
                                 preset))


def _params(expression, rest_delay, rng, jitter, preset=None) -> AuTrajectoryParams:
    p = preset or PRESETS[expression]
    base = rest_delay + p.delay_offset + jitter * rng.uniform(-2e-6, 2e-6)
    att = p.attenuation * (1 + jitter * rng.uniform(-0.05, 0.05))
    return AuTrajectoryParams(expression, base, p.delay_swing, att, p.attenuation_swing,
                              p.tempo, phase0=float(rng.uniform(0, 2 * np.pi)))


def face_timeline(timeline, rest_delay: float, seed: int = 0, jitter: float = 0.0):
    """Face echo following ``timeline``: a list of ``(expression, seconds)``."""
    rng = np.random.default_rng(seed)
    segs = [(_params(ExpressionLabel.parse(e), rest_delay, rng, jitter), float(d))
            for e, d in timeline]
    return timeline_reflector(segs)


def blink_reflector(rest_delay: float, attenuation: float, at: float, width: float = 0.07,
                    depth: float = 15e-6):
    return pulse_reflector(rest_delay, attenuation, at, width, depth)


def record(scene: Scene, cfg: ChirpConfig, n_frames: int) -> SampleBuffer:
    """Play ``n_frames`` chirp frames (plus one spare for sync slack) into ``scene``."""
    return propagate(scene, synthesize_frames(cfg, n_frames + 1))


def in_band_noise(snr_db: float, cfg: ChirpConfig) -> NoiseSpec:
    return NoiseSpec(snr_db, (cfg.f_min, cfg.f_max))


def ambient_noise(snr_db: float) -> NoiseSpec:
    return NoiseSpec(snr_db, (100.0, 15000.0))
