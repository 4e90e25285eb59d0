"""End-to-end receiver run over one recording, with per-stage timing."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from chirpface.chirp import ChirpConfig, SampleBuffer
from chirpface import dsp

log = logging.getLogger(__name__)


@dataclass
class PipelineOptions:
    n_fft: Optional[int] = None
    calib_sec: float = 4.0
    window: str = "hann"
    cancel: bool = True
    weighting: str = "power"

    def calib_frames(self, cfg: ChirpConfig) -> int:
        return max(2, int(round(self.calib_sec / cfg.frame_period)))


@dataclass
class PipelineResult:
    features: dsp.Features
    selection: Optional[dsp.BinSelection]
    sync_delay: int
    spectra: np.ndarray
    timings: dict = field(default_factory=dict)

    def report(self) -> dict:
        sel = self.selection
        out = {
            "bin_index": self.features.bin_index,
            "n_frames": len(self.features),
            "sync_delay_samples": self.sync_delay,
        }
        if sel is not None:
            out.update({
                "confidence_ratio": sel.confidence_ratio,
                "low_confidence": sel.low_confidence,
            })
        return out


def run_pipeline(rx, cfg: ChirpConfig, template: Optional[dsp.Template] = None,
                 options: Optional[PipelineOptions] = None,
                 bin_index: Optional[int] = None) -> PipelineResult:
    """high-pass, sync, dechirp, transform, cancel, select, extract.

    ``bin_index`` skips selection and reads features from a bin chosen
    earlier (e.g. on a calibration recording).  Selection otherwise uses the
    first ``calib_sec`` seconds of frames.
    """
    opts = options or PipelineOptions()
    if opts.cancel and template is None:
        raise ValueError("static cancellation is enabled but no template was given")
    chain = dsp.FrameChain(cfg, opts.n_fft, opts.window, use_highpass=False)
    timings = {}

    def lap(name, t0):
        timings[name] = time.perf_counter() - t0
        return time.perf_counter()

    t = time.perf_counter()
    filtered = dsp.highpass(SampleBuffer(np.asarray(rx, dtype=float), cfg.sample_rate))
    t = lap("highpass", t)
    delay = chain.sync(filtered)
    t = lap("sync", t)
    spec = chain.spectra(filtered, delay)
    t = lap("analytic_dechirp_fft", t)
    if opts.cancel:
        spec = dsp.cancel_static(spec, template)
    t = lap("cancel", t)
    selection = None
    if bin_index is None:
        n_cal = min(spec.shape[0], opts.calib_frames(cfg))
        selection = dsp.bin_selection(spec[:n_cal], opts.weighting, chain.max_beat_bin)
        bin_index = selection.bin
    t = lap("select_bin", t)
    feats = dsp.extract_features(spec, bin_index, cfg.frame_period)
    lap("extract", t)
    for stage, secs in timings.items():
        log.info("stage %-20s %8.2f ms", stage, 1e3 * secs)
    return PipelineResult(feats, selection, delay, spec, timings)
