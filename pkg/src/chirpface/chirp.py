"""FMCW chirp synthesis and PCM16 framing.

A chirp sweeps linearly from ``f_min`` to ``f_max`` over ``duration_T``
seconds and is followed by ``silence_T_sil`` seconds of silence.  Samples
are taken at ``t = n / fs`` and the phase restarts at ``phi_min`` in every
frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PCM16_MAX = 32767


@dataclass(frozen=True)
class ChirpConfig:
    """Transmit chirp parameters (defaults: 16-19 kHz, 40 ms chirp, 30 ms gap)."""

    f_min: float = 16000.0
    f_max: float = 19000.0
    duration_T: float = 0.040
    silence_T_sil: float = 0.030
    sample_rate: float = 44100.0
    phi_min: float = 0.0
    gain: float = 1.0

    def __post_init__(self):
        vals = (self.f_min, self.f_max, self.duration_T, self.silence_T_sil,
                self.sample_rate, self.phi_min, self.gain)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("chirp parameters must be finite")
        if not 0 < self.f_min < self.f_max <= self.sample_rate / 2:
            raise ValueError(
                f"need 0 < f_min < f_max <= fs/2, got f_min={self.f_min}, "
                f"f_max={self.f_max}, fs={self.sample_rate}")
        if self.duration_T <= 0:
            raise ValueError("duration_T must be positive")
        if self.silence_T_sil < 0:
            raise ValueError("silence_T_sil must be non-negative")
        if not 0 < self.gain <= 1:
            raise ValueError("gain must lie in (0, 1]")

    @property
    def chirp_rate(self) -> float:
        """Sweep slope c in Hz/s."""
        return (self.f_max - self.f_min) / self.duration_T

    @property
    def bandwidth(self) -> float:
        return self.f_max - self.f_min

    @property
    def chirp_samples(self) -> int:
        return int(round(self.duration_T * self.sample_rate))

    @property
    def silence_samples(self) -> int:
        return int(round(self.silence_T_sil * self.sample_rate))

    @property
    def frame_samples(self) -> int:
        return self.chirp_samples + self.silence_samples

    @property
    def frame_period(self) -> float:
        """Seconds between consecutive chirp starts."""
        return self.frame_samples / self.sample_rate

    def to_dict(self) -> dict:
        return {
            "f_min": self.f_min, "f_max": self.f_max,
            "duration_T": self.duration_T, "silence_T_sil": self.silence_T_sil,
            "sample_rate": self.sample_rate, "phi_min": self.phi_min,
            "gain": self.gain,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChirpConfig":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class SampleBuffer:
    """Real-valued mono samples at a given rate."""

    samples: np.ndarray
    sample_rate: float = 44100.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1:
            raise ValueError("SampleBuffer holds a 1-D signal")
        if not np.all(np.isfinite(arr)):
            raise ValueError("SampleBuffer samples must be finite")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))


@dataclass(frozen=True)
class PCM16Buffer:
    codes: np.ndarray
    sample_rate: float = 44100.0
    clipped: int = 0

    def to_bytes(self) -> bytes:
        """Little-endian signed 16-bit payload."""
        return np.asarray(self.codes, dtype="<i2").tobytes()


def _check_t(cfg: ChirpConfig, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > cfg.duration_T) or not np.all(np.isfinite(t)):
        raise ValueError(f"t must lie in [0, {cfg.duration_T}] s")
    return t


def instantaneous_frequency(cfg: ChirpConfig, t):
    """Frequency ``f_min + c t`` in Hz; ``t`` may be scalar or array."""
    t = _check_t(cfg, t)
    f = cfg.f_min + cfg.chirp_rate * t
    return float(f) if f.ndim == 0 else f


def instantaneous_phase(cfg: ChirpConfig, t):
    """Phase ``phi_min + 2 pi (c t^2 / 2 + f_min t)`` in radians."""
    t = _check_t(cfg, t)
    ph = cfg.phi_min + 2 * np.pi * (0.5 * cfg.chirp_rate * t * t + cfg.f_min * t)
    return float(ph) if ph.ndim == 0 else ph


def synthesize_chirp(cfg: ChirpConfig) -> SampleBuffer:
    """One chirp of ``round(T fs)`` samples, ``gain * sin(phase(n / fs))``."""
    n = np.arange(cfg.chirp_samples)
    t = n / cfg.sample_rate
    # the last sample index may sit a hair past T after rounding
    t = np.minimum(t, cfg.duration_T)
    return SampleBuffer(cfg.gain * np.sin(instantaneous_phase(cfg, t)), cfg.sample_rate)


def synthesize_frame(cfg: ChirpConfig) -> SampleBuffer:
    """Chirp followed by ``round(T_sil fs)`` zeros."""
    chirp = synthesize_chirp(cfg).samples
    frame = np.concatenate([chirp, np.zeros(cfg.silence_samples)])
    return SampleBuffer(frame, cfg.sample_rate)


def synthesize_frames(cfg: ChirpConfig, n_frames: int) -> SampleBuffer:
    """``n_frames`` back-to-back frames; phase restarts each frame."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    return SampleBuffer(np.tile(synthesize_frame(cfg).samples, n_frames), cfg.sample_rate)


def quantize_pcm16(buf: SampleBuffer) -> PCM16Buffer:
    """Map [-1, 1] onto symmetric codes [-32767, 32767].

    Out-of-range samples are clipped; the count is kept in ``clipped``.
    """
    x = np.asarray(buf, dtype=float)
    over = np.abs(x) > 1.0
    codes = np.round(np.clip(x, -1.0, 1.0) * PCM16_MAX).astype(np.int16)
    return PCM16Buffer(codes, getattr(buf, "sample_rate", 44100.0), int(over.sum()))


def dequantize_pcm16(pcm: PCM16Buffer) -> SampleBuffer:
    codes = np.asarray(pcm.codes, dtype=float)
    # -32768 only arrives from foreign files; clamp it onto the symmetric range
    return SampleBuffer(np.clip(codes / PCM16_MAX, -1.0, 1.0), pcm.sample_rate)
