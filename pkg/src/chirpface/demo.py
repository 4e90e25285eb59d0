"""Desk-scale end-to-end run: simulate, sense, classify, score engagement.

Everything written to the report directory is a deterministic function of
the seed; wall-clock timings only go to the log.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from chirpface import dsp, engagement, io
from chirpface.channel import Scene, distance_to_delay
from chirpface.chirp import ChirpConfig
from chirpface.labels import ExpressionLabel
from chirpface.ml import Dataset, TrainConfig, evaluate, splits, train
from chirpface.pipeline import PipelineOptions, run_pipeline
from chirpface import sim

log = logging.getLogger(__name__)

DEMO_SEED = 7
MIN_ACCURACY = 0.90


@dataclass
class DemoConfig:
    seed: int = DEMO_SEED
    sessions: int = 3
    session_sec: float = 20.0
    template_frames: int = 64
    in_band_snr_db: float = 20.0
    ambient_snr_db: float = 0.0
    n_trees: int = 100
    pipeline: PipelineOptions = None

    def __post_init__(self):
        if self.pipeline is None:
            self.pipeline = PipelineOptions()


def _scene(reflectors, cfg: ChirpConfig, dc: DemoConfig, seed: int) -> Scene:
    return Scene(reflectors, ambient_noise=sim.ambient_noise(dc.ambient_snr_db),
                 out_of_band_noise=sim.in_band_noise(dc.in_band_snr_db, cfg), seed=seed)


def run_demo(out_dir, dc: DemoConfig | None = None, cfg: ChirpConfig | None = None) -> dict:
    """Run the whole experiment and write its artifacts to ``out_dir``.

    Returns the summary dict (also written as ``summary.json``); its
    ``"passed"`` entry says whether every built-in check held.
    """
    dc = dc or DemoConfig()
    cfg = cfg or ChirpConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    opts = dc.pipeline
    seeds = np.random.SeedSequence(dc.seed).generate_state(8)
    room = sim.default_room()
    rest = distance_to_delay(sim.FACE_DISTANCE_M)
    chain = dsp.FrameChain(cfg, opts.n_fft, opts.window)
    t0 = time.perf_counter()

    room_scene = _scene(room, cfg, dc, int(seeds[0]))
    io.dump_json(out / "room_scene.json", room_scene.to_dict())
    template = dsp.capture_template(room_scene, cfg, dc.template_frames, chain)
    (out / "template.json").write_text(template.to_json() + "\n")

    # warm-up with large movements picks the face bin once for all sessions
    calib_face = sim.face_reflector(ExpressionLabel.SURPRISE, rest, seed=int(seeds[1]),
                                    preset=sim.CALIBRATION_PRESET)
    calib_scene = _scene(room + [calib_face], cfg, dc, int(seeds[1]))
    calib = run_pipeline(sim.record(calib_scene, cfg, opts.calib_frames(cfg)), cfg, template,
                         opts)
    face_bin = calib.selection.bin
    oracle_bin = chain.beat_bin(rest - calib.sync_delay / cfg.sample_rate)
    log.info("calibration: bin %d (oracle %d), confidence %.1f", face_bin, oracle_bin,
             calib.selection.confidence_ratio)

    # blink trace: consecutive-difference plot data
    blink_scene = Scene(room + [sim.blink_reflector(rest, 0.12, at=2.0)], seed=int(seeds[2]))
    blink = run_pipeline(sim.record(blink_scene, cfg, 57), cfg, template, opts, bin_index=face_bin)
    io.write_features_csv(out / "blink_trace.csv", blink.features)

    n_frames = int(round(dc.session_sec / cfg.frame_period))
    parts, rows = [], []
    session_seeds = np.random.SeedSequence(int(seeds[3])).generate_state(4 * dc.sessions)
    for e in ExpressionLabel:
        for s in range(dc.sessions):
            seed = int(session_seeds[int(e) * dc.sessions + s])
            face = sim.face_reflector(e, rest, seed=seed, jitter=1.0)
            res = run_pipeline(sim.record(_scene(room + [face], cfg, dc, seed), cfg, n_frames),
                               cfg, template, opts, bin_index=face_bin)
            X = res.features.matrix()
            parts.append(Dataset(X, np.full(len(X), int(e)), np.full(len(X), f"s{s + 1}")))
            rows.append((res.features, e.display, f"s{s + 1}"))
    data = Dataset.concat(parts)
    _write_dataset(out / "features.csv", rows)

    tc = TrainConfig(n_trees=dc.n_trees, seed=int(seeds[4]))
    train_idx, test_idx = splits(data, "overall", seed=int(seeds[5]))[0]
    model = train(data.subset(train_idx), tc)
    (out / "model.json").write_text(model.to_json() + "\n")
    metrics = evaluate(model, data.subset(test_idx))
    metrics["train_accuracy"] = evaluate(model, data.subset(train_idx))["accuracy"]
    metrics["n_train"] = int(train_idx.shape[0])
    metrics["n_test"] = int(test_idx.shape[0])
    io.dump_json(out / "metrics.json", metrics)
    io.dump_json(out / "confusion.json",
                 {"labels": metrics["labels"], "confusion": metrics["confusion"]})

    session_modes = {}
    for mode in ("inter_session", "intra_session"):
        accs = []
        for tr, te in splits(data, mode, seed=int(seeds[5])):
            m = train(data.subset(tr), tc)
            accs.append(evaluate(m, data.subset(te))["accuracy"])
        session_modes[mode] = {"fold_accuracy": accs, "mean_accuracy": float(np.mean(accs))}
    io.dump_json(out / "session_metrics.json", session_modes)

    viewings = _viewings(cfg, dc, room, rest, template, face_bin, model, int(seeds[6]))
    io.dump_json(out / "engagement.json", viewings)

    cm = np.asarray(metrics["confusion"])
    checks = {
        "confusion_4x4": cm.shape == (4, 4),
        "confusion_sums_to_test_size": int(cm.sum()) == metrics["n_test"],
        "accuracy_at_least_0.90": metrics["accuracy"] >= MIN_ACCURACY,
        "calibration_bin_matches_oracle": face_bin == oracle_bin,
        "mixed_genre_indicator_null": viewings["mixed"]["indicator"] is None,
    }
    summary = {
        "seed": dc.seed,
        "chirp": cfg.to_dict(),
        "face_bin": face_bin,
        "oracle_bin": oracle_bin,
        "bin_resolution_hz": chain.bin_resolution,
        "accuracy": metrics["accuracy"],
        "member_accuracy": metrics["members"],
        "checks": checks,
        "passed": all(checks.values()),
    }
    io.dump_json(out / "summary.json", summary)
    log.info("demo finished in %.1f s", time.perf_counter() - t0)
    return summary


def _write_dataset(path, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(io.FEATURE_COLUMNS) + ["label", "session"])
        for feats, label, session in rows:
            for fi, t, a, p, da, dp in zip(feats.frame_index, feats.time_s, feats.amplitude,
                                           feats.phase, feats.d_amplitude, feats.d_phase):
                w.writerow([int(fi), repr(float(t)), feats.bin_index, repr(float(a)),
                            repr(float(p)), repr(float(da)), repr(float(dp)), label, session])


VIEWING_PLANS = {
    "comedy": [("Happy", 6), ("SadNeutral", 8), ("Happy", 8), ("SadNeutral", 4), ("Happy", 4)],
    "horror": [("SadNeutral", 10), ("Surprise", 4), ("SadNeutral", 10), ("Surprise", 3),
               ("SadNeutral", 3)],
    "mixed": [("Happy", 8), ("Angry", 8), ("Surprise", 7), ("SadNeutral", 7)],
}


def _viewings(cfg, dc, room, rest, template, face_bin, model, seed) -> dict:
    """Engagement reports for simulated clip viewings, one per genre."""
    out = {}
    seeds = np.random.SeedSequence(seed).generate_state(len(VIEWING_PLANS))
    for (genre, plan), s in zip(VIEWING_PLANS.items(), seeds):
        duration = sum(d for _, d in plan)
        face = sim.face_timeline(plan, rest, seed=int(s), jitter=1.0)
        n_frames = int(round(duration / cfg.frame_period))
        res = run_pipeline(sim.record(_scene(room + [face], cfg, dc, int(s)), cfg, n_frames),
                           cfg, template, dc.pipeline, bin_index=face_bin)
        pred = model.predict(res.features.matrix())
        stats = engagement.SessionStats.from_labels(pred, duration / 60.0)
        rep = engagement.report(stats, genre).to_dict()
        rep.update({"genre": genre, "E": list(stats.E), "R": stats.R,
                    "length_min": stats.length_min, "plan": plan})
        out[genre] = rep
    return out
