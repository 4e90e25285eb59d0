"""Receiver chain.

high-pass -> sync by normalized cross-correlation -> analytic signal ->
dechirp against the transmitted chirp -> per-frame spectrum -> static
template subtraction -> bin selection -> amplitude/phase features.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import signal as sps

from chirpface.chirp import ChirpConfig, SampleBuffer, synthesize_frame, synthesize_frames
from chirpface.channel import SPEED_OF_SOUND, Scene, propagate

HIGHPASS_CUTOFF = 15900.0
# static noisy scenes measured up to 3.9 over 200 seeds
LOW_CONFIDENCE_RATIO = 5.0


class CorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class FrameSpectrum:
    """One-sided spectrum of one dechirped frame."""

    bins: np.ndarray
    bin_resolution: float
    frame_index: int = 0

    def __len__(self) -> int:
        return self.bins.shape[0]


@dataclass(frozen=True)
class Template:
    """Per-bin complex mean spectrum of a subject-free recording."""

    mean_spectrum: np.ndarray
    frames_averaged: int
    bin_resolution: float = 0.0

    def __post_init__(self):
        if self.frames_averaged < 1:
            raise ValueError("a template averages at least one frame")

    def to_json(self) -> str:
        return json.dumps({
            "version": 1,
            "frames_averaged": self.frames_averaged,
            "bin_resolution": self.bin_resolution,
            "bins": [[float(z.real), float(z.imag)] for z in self.mean_spectrum],
        })

    @classmethod
    def from_json(cls, text: str) -> "Template":
        d = json.loads(text)
        arr = np.asarray(d["bins"], dtype=float)
        return cls(arr[:, 0] + 1j * arr[:, 1], int(d["frames_averaged"]),
                   float(d.get("bin_resolution", 0.0)))


def _samples(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _rate(x, default: float = 44100.0) -> float:
    return getattr(x, "sample_rate", default)


def highpass_taps(sample_rate: float = 44100.0, cutoff: float = HIGHPASS_CUTOFF,
                  transition: float = 900.0, atten_db: float = 60.0) -> np.ndarray:
    """Linear-phase Kaiser FIR passing everything above ``cutoff``.

    The stop band ends ``transition`` Hz below the cutoff.  The tap count
    is forced odd so the filter can be applied with zero delay.
    """
    nyq = sample_rate / 2
    if not 0 < cutoff < nyq:
        raise ValueError(f"cutoff must lie in (0, fs/2), got {cutoff}")
    numtaps, beta = sps.kaiserord(atten_db, transition / nyq)
    numtaps |= 1
    return sps.firwin(numtaps, cutoff - transition / 2, window=("kaiser", beta),
                      pass_zero=False, fs=sample_rate)


def highpass(rx, cutoff: float = HIGHPASS_CUTOFF) -> SampleBuffer:
    """Remove audible content below ``cutoff`` (zero-phase FIR)."""
    fs = _rate(rx)
    h = highpass_taps(fs, cutoff)
    y = np.convolve(_samples(rx), h, mode="same")
    return SampleBuffer(y, fs)


def xcorr(tx, rx, n: int) -> float:
    """Normalized cross-correlation of ``rx`` against ``tx`` shifted by ``n``.

    Both signals are centred on their full-length means; the sums run over
    the samples where ``tx[t - n]`` overlaps ``rx[t]``.
    """
    x, r = _samples(tx), _samples(rx)
    N = x.shape[0]
    if r.shape[0] != N or N < 2:
        raise CorrelationError("xcorr needs two buffers of equal length >= 2")
    if abs(n) >= N:
        raise CorrelationError(f"shift {n} outside (-{N}, {N})")
    xc, rc = x - x.mean(), r - r.mean()
    t = np.arange(max(0, n), min(N, N + n))
    a, b = rc[t], xc[t - n]
    den = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if den == 0.0:
        raise CorrelationError("correlation undefined for zero-variance input")
    return float(np.dot(a, b)) / den


def xcorr_lags(tx, rx, max_lag: Optional[int] = None):
    """``xcorr`` at every lag in ``[-max_lag, max_lag]`` via one correlation.

    Returns ``(lags, values)``.
    """
    x, r = _samples(tx), _samples(rx)
    N = x.shape[0]
    if r.shape[0] != N or N < 2:
        raise CorrelationError("xcorr needs two buffers of equal length >= 2")
    if max_lag is None:
        max_lag = N // 2
    max_lag = min(int(max_lag), N - 1)
    xc, rc = x - x.mean(), r - r.mean()
    full = sps.correlate(rc, xc, mode="full", method="auto")
    all_lags = sps.correlation_lags(N, N, mode="full")
    keep = np.abs(all_lags) <= max_lag
    lags, num = all_lags[keep], full[keep]
    cr = np.concatenate([[0.0], np.cumsum(rc * rc)])
    cx = np.concatenate([[0.0], np.cumsum(xc * xc)])
    lo = np.maximum(0, lags)
    hi = np.minimum(N, N + lags)
    er = cr[hi] - cr[lo]
    ex = cx[hi - lags] - cx[lo - lags]
    den = np.sqrt(er * ex)
    if np.any(den == 0.0):
        raise CorrelationError("correlation undefined for zero-variance input")
    return lags, num / den


def sync_delay(tx, rx, max_lag: Optional[int] = None) -> int:
    """Lag (samples) maximizing ``xcorr``; ties go to the smallest lag >= 0.

    ``rx`` longer than ``tx`` is cut to ``len(tx)``.
    """
    x, r = _samples(tx), _samples(rx)
    if r.shape[0] > x.shape[0]:
        r = r[: x.shape[0]]
    lags, vals = xcorr_lags(x, r, max_lag)
    best = vals.max()
    tied = lags[vals == best]
    nonneg = tied[tied >= 0]
    return int(nonneg.min() if nonneg.size else tied.max())


def analytic(rx, axis: int = -1) -> np.ndarray:
    """Analytic signal ``x + j H{x}`` (FFT-based Hilbert transform along ``axis``)."""
    x = _samples(rx)
    if x.size == 0:
        raise ValueError("analytic signal of an empty buffer")
    return sps.hilbert(x, axis=axis)


def dechirp(tx_analytic, rx_analytic) -> np.ndarray:
    """Mixed signal ``Re[rx * conj(tx)]``.

    A path delayed by ``tau`` turns into a tone at ``c * tau`` Hz.
    """
    a, b = np.asarray(tx_analytic), np.asarray(rx_analytic)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: tx {a.shape} vs rx {b.shape}")
    return np.real(b * np.conj(a))


def default_n_fft(cfg: ChirpConfig) -> int:
    return 1 << (cfg.frame_samples - 1).bit_length()


def spectrum(r_m, n_fft: int, sample_rate: float = 44100.0, active: Optional[int] = None,
             window: str = "rect", frame_index: int = 0) -> FrameSpectrum:
    """Zero-padded one-sided transform of the first ``active`` samples of ``r_m``.

    ``window`` is ``"rect"`` or ``"hann"``.
    """
    x = _samples(r_m)
    if n_fft < x.shape[0]:
        raise ValueError(f"n_fft={n_fft} shorter than the frame ({x.shape[0]} samples)")
    if active is not None:
        x = x[:active]
    if window == "hann":
        x = x * np.hanning(x.shape[0])
    elif window != "rect":
        raise ValueError(f"unknown window {window!r}")
    return FrameSpectrum(np.fft.rfft(x, n_fft), sample_rate / n_fft, frame_index)


def _stack(frames) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        return np.atleast_2d(frames)
    return np.vstack([f.bins for f in frames])


@dataclass
class FrameChain:
    """Front half of the receiver: from a recording to per-frame spectra.

    Uses a Hann taper by default: with a rectangular window the phase
    sensitivity of bins above the beat tone is larger, which pulls
    phase-variance selection one bin up.
    """

    cfg: ChirpConfig = field(default_factory=ChirpConfig)
    n_fft: Optional[int] = None
    window: str = "hann"
    use_highpass: bool = True
    max_sync_lag: Optional[int] = None

    def __post_init__(self):
        if self.n_fft is None:
            self.n_fft = default_n_fft(self.cfg)
        if self.n_fft < self.cfg.frame_samples:
            raise ValueError(f"n_fft={self.n_fft} shorter than a frame ({self.cfg.frame_samples})")
        self._tx_frame = synthesize_frame(self.cfg).samples
        self._tx_analytic = analytic(self._tx_frame)

    @property
    def bin_resolution(self) -> float:
        return self.cfg.sample_rate / self.n_fft

    @property
    def max_beat_bin(self) -> int:
        """Highest bin a path delayed by at most one chirp can reach."""
        return int(math.ceil(self.cfg.bandwidth / self.bin_resolution))

    def beat_bin(self, delay: float) -> int:
        """Bin where a path delayed by ``delay`` (after sync) should land."""
        return int(round(self.cfg.chirp_rate * delay / self.bin_resolution))

    def sync(self, rx) -> int:
        r = _samples(rx)
        L = self.cfg.frame_samples
        return sync_delay(self._tx_frame, r[:L], self.max_sync_lag)

    def spectra(self, rx, delay: Optional[int] = None) -> np.ndarray:
        """Complex spectra, one row per complete frame after alignment."""
        r = _samples(rx)
        if self.use_highpass:
            r = highpass(SampleBuffer(r, self.cfg.sample_rate)).samples
        if delay is None:
            delay = self.sync(r)
        L = self.cfg.frame_samples
        n_frames = (r.shape[0] - delay) // L
        if n_frames < 1:
            raise ValueError("recording shorter than one frame after alignment")
        r = r[delay: delay + n_frames * L]
        # per-frame transform: exact for a periodic frame train, and the
        # slowly decaying Hilbert kernel cannot couple distant frames
        z = analytic(r.reshape(n_frames, L), axis=1)
        Lc = self.cfg.chirp_samples
        mixed = dechirp(np.broadcast_to(self._tx_analytic[:Lc], (n_frames, Lc)), z[:, :Lc])
        if self.window == "hann":
            mixed = mixed * np.hanning(Lc)
        elif self.window != "rect":
            raise ValueError(f"unknown window {self.window!r}")
        return np.fft.rfft(mixed, self.n_fft, axis=1)

    def frames(self, rx, delay: Optional[int] = None) -> list:
        res = self.bin_resolution
        return [FrameSpectrum(row, res, i) for i, row in enumerate(self.spectra(rx, delay))]


def capture_template(scene_without_subject: Scene, cfg: ChirpConfig, n_frames: int,
                     chain: Optional[FrameChain] = None, delay: Optional[int] = None) -> Template:
    """Average ``n_frames`` spectra recorded in the subject-free scene."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    chain = chain or FrameChain(cfg)
    # one spare frame so the sync offset never eats into the requested count
    tx = synthesize_frames(cfg, n_frames + 1)
    rx = propagate(scene_without_subject, tx)
    spec = chain.spectra(rx, delay)[:n_frames]
    return Template(spec.mean(axis=0), spec.shape[0], chain.bin_resolution)


def cancel_static(frame, template: Template):
    """Subtract the template from one FrameSpectrum (or a stack of spectra)."""
    tmpl = np.asarray(template.mean_spectrum)
    if isinstance(frame, FrameSpectrum):
        if frame.bins.shape != tmpl.shape:
            raise ValueError(f"bin count mismatch: {frame.bins.shape} vs {tmpl.shape}")
        return FrameSpectrum(frame.bins - tmpl, frame.bin_resolution, frame.frame_index)
    stack = np.asarray(frame)
    if stack.shape[-1] != tmpl.shape[0]:
        raise ValueError(f"bin count mismatch: {stack.shape[-1]} vs {tmpl.shape[0]}")
    return stack - tmpl


@dataclass(frozen=True)
class BinSelection:
    bin: int
    scores: np.ndarray
    phase_variance: np.ndarray
    confidence_ratio: float

    @property
    def low_confidence(self) -> bool:
        return self.confidence_ratio < LOW_CONFIDENCE_RATIO


def unwrapped_phase(frames) -> np.ndarray:
    """Phase per bin, unwrapped along the frame axis."""
    return np.unwrap(np.angle(_stack(frames)), axis=0)


def centred_phase(frames) -> np.ndarray:
    """Per-bin phase deviation from the bin's circular mean, in (-pi, pi].

    Unlike plain unwrapping this does not random-walk when a bin's
    magnitude passes near zero between frames.
    """
    stack = _stack(frames)
    unit = np.where(stack == 0, 0, stack / np.where(stack == 0, 1, np.abs(stack)))
    mean_dir = unit.mean(axis=0)
    ref = np.where(mean_dir == 0, 1, mean_dir)
    return np.angle(stack * np.conj(ref))


def bin_selection(frames, weighting: str = "power", max_bin: Optional[int] = None) -> BinSelection:
    """Score every bin by the variance of its phase across frames.

    Phase is measured about each bin's circular mean (:func:`centred_phase`).

    With ``weighting="power"`` (default) each bin's phase variance is
    scaled by its mean power, so bins whose phase is undefined (near-zero
    magnitude after template subtraction, or pure noise) cannot win.
    ``weighting=None`` uses the bare phase variance.  Ties go to the lower
    bin.  ``confidence_ratio`` is the winning score over the median score.
    """
    stack = _stack(frames)
    if stack.shape[0] < 2:
        raise ValueError("bin selection needs at least two frames")
    if max_bin is not None:
        stack = stack[:, : max_bin + 1]
    pvar = np.var(centred_phase(stack), axis=0)
    if weighting == "power":
        scores = pvar * np.mean(np.abs(stack) ** 2, axis=0)
    elif weighting == "complex":
        scores = np.var(stack, axis=0)
    elif weighting is None:
        scores = pvar
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    best = int(np.argmax(scores))
    med = float(np.median(scores))
    ratio = math.inf if med == 0 else float(scores[best]) / med
    if scores[best] == 0:
        ratio = 0.0
    return BinSelection(best, scores, pvar, ratio)


def select_bin(frames, weighting: str = "power", max_bin: Optional[int] = None) -> int:
    return bin_selection(frames, weighting, max_bin).bin


@dataclass(frozen=True)
class Features:
    """Amplitude/phase of one bin across frames, with consecutive differences.

    ``d_amplitude[i] = |amplitude[i] - amplitude[i-1]|`` and likewise for
    phase; the first entry of each is 0.
    """

    bin_index: int
    amplitude: np.ndarray
    phase: np.ndarray
    frame_period: float = 0.070

    @property
    def d_amplitude(self) -> np.ndarray:
        return np.concatenate([[0.0], np.abs(np.diff(self.amplitude))])

    @property
    def d_phase(self) -> np.ndarray:
        return np.concatenate([[0.0], np.abs(np.diff(self.phase))])

    @property
    def frame_index(self) -> np.ndarray:
        return np.arange(self.amplitude.shape[0])

    @property
    def time_s(self) -> np.ndarray:
        return self.frame_index * self.frame_period

    def matrix(self) -> np.ndarray:
        """``(n_frames, 2)`` array of (amplitude, phase)."""
        return np.column_stack([self.amplitude, self.phase])

    def __len__(self) -> int:
        return self.amplitude.shape[0]


def extract_features(frames, bin_index: int, frame_period: float = 0.070) -> Features:
    stack = _stack(frames)
    if not 0 <= bin_index < stack.shape[1]:
        raise IndexError(f"bin {bin_index} outside [0, {stack.shape[1]})")
    col = stack[:, bin_index]
    return Features(int(bin_index), np.abs(col), np.unwrap(np.angle(col)), frame_period)


def prominent_peaks(values, factor: float = 5.0) -> list:
    """Runs of consecutive entries exceeding ``factor`` times the median.

    Returns ``(start, stop)`` index pairs; adjacent spikes count as one peak.
    The median is floored at ``1e-9`` of the largest entry so rounding
    residue in a noiseless trace does not count as peaks.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return []
    hot = v > factor * max(float(np.median(v)), 1e-9 * float(np.max(np.abs(v))))
    peaks, start = [], None
    for i, h in enumerate(hot):
        if h and start is None:
            start = i
        elif not h and start is not None:
            peaks.append((start, i))
            start = None
    if start is not None:
        peaks.append((start, len(hot)))
    return peaks


def range_resolution(bandwidth: float, speed_of_sound: float = SPEED_OF_SOUND) -> float:
    """Smallest separable reflector spacing ``v / (2 B)`` in metres."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return speed_of_sound / (2.0 * bandwidth)
