"""Multipath acoustic channel.

The received signal is a sum of attenuated, delayed copies of the
transmitted signal::

    rx[n] = sum_p alpha_p(t_n) * tx(t_n - tau_p(t_n)) + noise

Delays and attenuations are evaluated once per output sample; fractional
delays use linear interpolation between neighbouring samples and the
signal is taken as zero outside the transmitted buffer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from chirpface.chirp import SampleBuffer
from chirpface.labels import ExpressionLabel

SPEED_OF_SOUND = 343.0

Trajectory = Callable[[np.ndarray], np.ndarray]


class SceneError(ValueError):
    pass


def distance_to_delay(distance_m: float, speed_of_sound: float = SPEED_OF_SOUND) -> float:
    """Round-trip delay for a reflector ``distance_m`` away from the phone."""
    return 2.0 * distance_m / speed_of_sound


@dataclass(frozen=True)
class Reflector:
    """One propagation path.

    ``delay_fn`` and ``attenuation_fn`` map an array of times (s) to delays
    (s) and attenuations in [0, 1].  ``description`` is the JSON-able recipe
    the reflector was built from, if any.
    """

    delay_fn: Trajectory
    attenuation_fn: Trajectory
    is_static: bool = False
    description: Optional[dict] = None

    def delay(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.delay_fn(t), dtype=float), t.shape)

    def attenuation(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.attenuation_fn(t), dtype=float), t.shape)


def static_reflector(delay: float, attenuation: float) -> Reflector:
    if not (math.isfinite(delay) and delay >= 0):
        raise SceneError(f"static delay must be finite and >= 0, got {delay}")
    if not 0 <= attenuation <= 1:
        raise SceneError(f"attenuation must lie in [0, 1], got {attenuation}")
    return Reflector(
        delay_fn=lambda t: np.full_like(t, delay),
        attenuation_fn=lambda t: np.full_like(t, attenuation),
        is_static=True,
        description={"type": "static", "delay": float(delay), "attenuation": float(attenuation)},
    )


@dataclass(frozen=True)
class AuTrajectoryParams:
    """Synthetic facial-motion recipe for one expression.

    The expression decides which of delay and attenuation is modulated:
    Happy mostly attenuation, Surprise mostly delay, Angry both, SadNeutral
    barely either.  ``tempo`` is the modulation rate in Hz and ``phase0``
    its starting phase in radians.
    """

    expression: ExpressionLabel
    base_delay: float
    delay_swing: float = 0.0
    attenuation_base: float = 0.2
    attenuation_swing: float = 0.0
    tempo: float = 1.0
    phase0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "expression", ExpressionLabel.parse(self.expression))
        vals = (self.base_delay, self.delay_swing, self.attenuation_base,
                self.attenuation_swing, self.tempo, self.phase0)
        if not all(math.isfinite(v) for v in vals):
            raise SceneError("trajectory parameters must be finite")
        if self.delay_swing < 0 or self.attenuation_swing < 0 or self.tempo < 0:
            raise SceneError("swings and tempo must be non-negative")
        if self.base_delay - self.delay_swing < 0:
            raise SceneError("delay swing would drive the delay below zero")
        if not (0 <= self.attenuation_base - self.attenuation_swing
                and self.attenuation_base + self.attenuation_swing <= 1):
            raise SceneError("attenuation swing leaves [0, 1]")

    def to_dict(self) -> dict:
        return {
            "expression": self.expression.display,
            "base_delay": self.base_delay,
            "delay_swing": self.delay_swing,
            "attenuation_base": self.attenuation_base,
            "attenuation_swing": self.attenuation_swing,
            "tempo": self.tempo,
            "phase0": self.phase0,
        }


# (delay share, attenuation share) of the full swings per expression
_AU_MIX = {
    ExpressionLabel.HAPPY: (0.1, 1.0),
    ExpressionLabel.SURPRISE: (1.0, 0.1),
    ExpressionLabel.ANGRY: (0.7, 0.7),
    ExpressionLabel.SAD_NEUTRAL: (0.05, 0.05),
}


def au_trajectory(params: AuTrajectoryParams) -> Reflector:
    """Reflector whose motion follows the expression's modulation pattern."""
    d_share, a_share = _AU_MIX[params.expression]
    d_amp = d_share * params.delay_swing
    a_amp = a_share * params.attenuation_swing
    w = 2 * np.pi * params.tempo
    p0 = params.phase0
    base_d, base_a = params.base_delay, params.attenuation_base
    if params.expression is ExpressionLabel.ANGRY:
        # attenuation leads delay by a quarter cycle
        def att(t):
            return base_a + a_amp * np.cos(w * t + p0)
    else:
        def att(t):
            return base_a + a_amp * np.sin(w * t + p0)

    def delay(t):
        return base_d + d_amp * np.sin(w * t + p0)

    static = d_amp == 0 and a_amp == 0
    return Reflector(delay, att, is_static=static,
                     description={"type": "au", **params.to_dict()})


def timeline_reflector(segments) -> Reflector:
    """Face that switches expression over time.

    ``segments`` is a list of ``(AuTrajectoryParams, duration_s)``; the last
    segment extends indefinitely.
    """
    segments = [(p if isinstance(p, AuTrajectoryParams) else AuTrajectoryParams(**p), float(d))
                for p, d in segments]
    if not segments:
        raise SceneError("timeline needs at least one segment")
    parts = [au_trajectory(p) for p, _ in segments]
    edges = np.cumsum([d for _, d in segments])[:-1]

    def pick(t, attr):
        seg = np.searchsorted(edges, t, side="right")
        out = np.empty_like(t)
        for i, r in enumerate(parts):
            m = seg == i
            if m.any():
                out[m] = getattr(r, attr)(t[m])
        return out

    return Reflector(
        lambda t: pick(t, "delay"), lambda t: pick(t, "attenuation"), is_static=False,
        description={"type": "timeline",
                     "segments": [{"duration": d, **p.to_dict()} for p, d in segments]})


def expression_at(reflector: Reflector, t) -> list:
    """Expression name per time for ``au``/``timeline`` reflectors, else None."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    desc = reflector.description or {}
    if desc.get("type") == "au":
        return [desc["expression"]] * t.shape[0]
    if desc.get("type") == "timeline":
        segs = desc["segments"]
        edges = np.cumsum([s["duration"] for s in segs])[:-1]
        return [segs[i]["expression"] for i in np.searchsorted(edges, t, side="right")]
    return [None] * t.shape[0]


def pulse_reflector(base_delay: float, attenuation: float, pulse_start: float,
                    pulse_width: float, pulse_depth: float) -> Reflector:
    """Fixed-attenuation reflector whose delay jumps by ``pulse_depth`` for one window.

    Mimics a blink: the eyelid briefly moves the reflecting surface.
    """
    if base_delay < 0 or base_delay + min(pulse_depth, 0) < 0:
        raise SceneError("pulse would drive the delay below zero")
    if not 0 <= attenuation <= 1:
        raise SceneError("attenuation must lie in [0, 1]")
    end = pulse_start + pulse_width

    def delay(t):
        return base_delay + np.where((t >= pulse_start) & (t < end), pulse_depth, 0.0)

    return Reflector(
        delay, lambda t: np.full_like(t, attenuation), is_static=False,
        description={"type": "pulse", "base_delay": base_delay, "attenuation": attenuation,
                     "pulse_start": pulse_start, "pulse_width": pulse_width,
                     "pulse_depth": pulse_depth})


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited Gaussian noise at ``snr_db`` over ``band`` (Hz)."""

    snr_db: float
    band: tuple = (100.0, 15000.0)

    def to_dict(self) -> dict:
        return {"snr_db": _dump_float(self.snr_db), "band": [float(b) for b in self.band]}


@dataclass(frozen=True)
class Scene:
    """Reflectors plus optional ambient (audible) and out-of-band noise.

    ``ambient_noise`` must stay below 16 kHz; ``out_of_band_noise``
    defaults to the chirp band.  ``seed`` fixes every random draw.
    """

    reflectors: Sequence[Reflector] = field(default_factory=tuple)
    ambient_noise: Optional[NoiseSpec] = None
    out_of_band_noise: Optional[NoiseSpec] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        if self.ambient_noise is not None and max(self.ambient_noise.band) > 16000:
            raise SceneError("ambient noise must be confined below 16 kHz")

    def with_reflectors(self, reflectors) -> "Scene":
        return Scene(tuple(reflectors), self.ambient_noise, self.out_of_band_noise, self.seed)

    def without_noise(self) -> "Scene":
        return Scene(self.reflectors, None, None, self.seed)

    def static_only(self) -> "Scene":
        """Same scene with every moving reflector removed (the subject-free room)."""
        return self.with_reflectors([r for r in self.reflectors if r.is_static])

    def to_dict(self) -> dict:
        refl = []
        for r in self.reflectors:
            if r.description is None:
                raise SceneError("reflector built from bare callables cannot be serialized")
            refl.append(dict(r.description))
        return {
            "version": 1,
            "seed": int(self.seed),
            "reflectors": refl,
            "ambient_noise": None if self.ambient_noise is None else self.ambient_noise.to_dict(),
            "out_of_band_noise": (None if self.out_of_band_noise is None
                                  else self.out_of_band_noise.to_dict()),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        try:
            refl = [reflector_from_dict(r) for r in d.get("reflectors", [])]
            amb = d.get("ambient_noise")
            oob = d.get("out_of_band_noise")
            return cls(
                refl,
                None if amb is None else NoiseSpec(_load_float(amb["snr_db"]),
                                                   tuple(amb.get("band", (100.0, 15000.0)))),
                None if oob is None else NoiseSpec(_load_float(oob["snr_db"]),
                                                   tuple(oob.get("band", (16000.0, 19000.0)))),
                int(d.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise SceneError(f"malformed scene description: {exc}") from exc


def reflector_from_dict(d: dict) -> Reflector:
    kind = d.get("type", "static")
    if "distance_m" in d and "delay" not in d and "base_delay" not in d:
        d = {**d, ("base_delay" if kind != "static" else "delay"): distance_to_delay(d["distance_m"])}
    if kind == "static":
        return static_reflector(float(d["delay"]), float(d["attenuation"]))
    if kind == "au":
        keys = ("base_delay", "delay_swing", "attenuation_base", "attenuation_swing",
                "tempo", "phase0")
        return au_trajectory(AuTrajectoryParams(d["expression"], **{k: float(d[k]) for k in keys
                                                                     if k in d}))
    if kind == "timeline":
        segs = []
        for seg in d["segments"]:
            seg = dict(seg)
            dur = float(seg.pop("duration"))
            segs.append((AuTrajectoryParams(seg.pop("expression"),
                                            **{k: float(v) for k, v in seg.items()}), dur))
        return timeline_reflector(segs)
    if kind == "pulse":
        return pulse_reflector(float(d["base_delay"]), float(d["attenuation"]),
                               float(d["pulse_start"]), float(d["pulse_width"]),
                               float(d["pulse_depth"]))
    raise SceneError(f"unknown reflector type {kind!r}")


def _dump_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _load_float(x) -> float:
    return float(x)


def _delay_line(x: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Sample ``x`` at fractional positions ``pos`` with zeros outside."""
    near = np.round(pos)
    pos = np.where(np.abs(pos - near) < 1e-9, near, pos)
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    return (1.0 - frac) * _take(x, i0) + frac * _take(x, i0 + 1)


def _take(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    out = np.zeros(idx.shape)
    ok = (idx >= 0) & (idx < x.shape[0])
    out[ok] = x[idx[ok]]
    return out


def propagate_path(reflector: Reflector, tx: np.ndarray, sample_rate: float) -> np.ndarray:
    t = np.arange(tx.shape[0]) / sample_rate
    tau = reflector.delay(t)
    if not np.all(np.isfinite(tau)) or np.any(tau < 0):
        raise SceneError("reflector trajectory produced a negative or non-finite delay")
    alpha = reflector.attenuation(t)
    if not np.all(np.isfinite(alpha)) or np.any(alpha < 0) or np.any(alpha > 1):
        raise SceneError("reflector attenuation left [0, 1]")
    return alpha * _delay_line(tx, np.arange(tx.shape[0]) - tau * sample_rate)


def propagate(scene: Scene, tx: SampleBuffer) -> SampleBuffer:
    """Received signal for ``tx`` played into ``scene`` (same length as ``tx``).

    Noise SNRs are measured against the noiseless received power, or the
    transmit power when the scene has no reflectors.
    """
    x = np.asarray(tx, dtype=float)
    if x.size == 0:
        raise SceneError("empty transmit buffer")
    fs = tx.sample_rate
    rx = np.zeros_like(x)
    for refl in scene.reflectors:
        rx += propagate_path(refl, x, fs)

    ref_power = float(np.mean(rx * rx))
    if ref_power == 0.0:
        ref_power = float(np.mean(x * x))
    streams = np.random.SeedSequence(scene.seed).spawn(2)
    for spec, ss in zip((scene.ambient_noise, scene.out_of_band_noise), streams):
        if spec is None or spec.snr_db == math.inf:
            continue
        rx = rx + band_noise(rx.shape[0], fs, spec.snr_db, spec.band, np.random.default_rng(ss),
                             ref_power)
    return SampleBuffer(rx, fs)


def band_noise(n: int, sample_rate: float, snr_db: float, band, rng: np.random.Generator,
               reference_power: float) -> np.ndarray:
    """Gaussian noise confined to ``band`` with power ``reference_power / 10**(snr/10)``."""
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    lo, hi = float(band[0]), float(band[1])
    if not 0 <= lo < hi <= sample_rate / 2:
        raise ValueError(f"band {band} must lie within [0, fs/2]")
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    noise = np.fft.irfft(spec, n)
    p = float(np.mean(noise * noise))
    if p == 0.0 or reference_power == 0.0:
        return np.zeros(n)
    return noise * math.sqrt(reference_power / 10 ** (snr_db / 10) / p)


def add_noise(buf: SampleBuffer, snr_db: float, band=(100.0, 15000.0), seed: int = 0) -> SampleBuffer:
    """Add band-limited noise at ``snr_db`` relative to the power of ``buf``.

    ``snr_db = inf`` returns the input unchanged.
    """
    if snr_db == math.inf:
        return buf
    x = np.asarray(buf, dtype=float)
    noise = band_noise(x.shape[0], buf.sample_rate, snr_db, band, np.random.default_rng(seed),
                       float(np.mean(x * x)))
    return SampleBuffer(x + noise, buf.sample_rate)
