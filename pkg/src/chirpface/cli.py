"""Command-line entry point: ``chirpface <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 demo checks failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from chirpface import dsp, engagement, io, sus
from chirpface.channel import Scene, SceneError, expression_at
from chirpface.chirp import ChirpConfig, synthesize_frames
from chirpface.labels import ExpressionLabel
from chirpface.ml import Dataset, EnsembleModel, TrainConfig, evaluate, read_feature_csv, splits, train
from chirpface.pipeline import PipelineOptions, run_pipeline

log = logging.getLogger("chirpface")

EXIT_OK, EXIT_INVALID, EXIT_CHECKS = 0, 1, 2
SPLITS = {"overall": "overall", "inter": "inter_session", "intra": "intra_session"}


class CliError(Exception):
    pass


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        try:
            return io.load_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
    return {}


def _setting(args, conf: dict, name: str, section: str | None = None, default=None):
    """CLI flag, else config entry (optionally under ``section``), else default."""
    val = getattr(args, name, None)
    if val is not None:
        return val
    src = conf.get(section, {}) if section else conf
    return src.get(name, default)


def _chirp(conf: dict) -> ChirpConfig:
    return ChirpConfig.from_dict(conf["chirp"]) if "chirp" in conf else ChirpConfig()


def _pipeline_options(args, conf: dict) -> PipelineOptions:
    sect = conf.get("pipeline", {})
    cancel = not args.no_cancel and sect.get("cancel", True)
    return PipelineOptions(
        n_fft=_setting(args, conf, "n_fft", "pipeline"),
        calib_sec=_setting(args, conf, "calib_sec", "pipeline", 4.0),
        window=sect.get("window", "rect"),
        cancel=cancel,
    )


def _out(args, conf: dict) -> Path:
    out = _setting(args, conf, "out", default=None)
    if out is None:
        raise CliError("--out is required")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_scene(path) -> Scene:
    if path is None:
        raise CliError("--scene is required")
    try:
        return Scene.from_dict(io.load_json(path))
    except (OSError, json.JSONDecodeError, SceneError, ValueError) as exc:
        raise CliError(f"bad scene file {path}: {exc}") from exc


def cmd_synth(args) -> int:
    conf = _load_config(args)
    cfg = _chirp(conf)
    frames = _setting(args, conf, "frames", default=1)
    if frames < 1:
        raise CliError("--frames must be >= 1")
    buf = synthesize_frames(cfg, frames)
    out = _out(args, conf) / "tx.wav"
    io.write_wav(out, buf)
    print(f"frames={frames} samples={len(buf)} chirp_rate_hz_per_s={cfg.chirp_rate:g} -> {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    conf = _load_config(args)
    cfg = _chirp(conf)
    scene = _load_scene(_setting(args, conf, "scene"))
    if args.seed is not None:
        scene = Scene(scene.reflectors, scene.ambient_noise, scene.out_of_band_noise, args.seed)
    frames = _setting(args, conf, "frames", default=57)
    if frames < 1:
        raise CliError("--frames must be >= 1")
    out = _out(args, conf)
    from chirpface.channel import propagate

    tx = synthesize_frames(cfg, frames)
    rx = propagate(scene, tx)
    peak = float(np.max(np.abs(rx.samples))) if len(rx) else 0.0
    scale = 1.0 / peak if peak > 1.0 else 1.0
    io.write_wav(out / "tx.wav", tx)
    io.write_wav(out / "rx.wav", type(rx)(rx.samples * scale, rx.sample_rate))
    t = np.arange(frames) * cfg.frame_period
    truth = {
        "version": 1,
        "frames": frames,
        "frame_period_s": cfg.frame_period,
        "rx_scale": scale,
        "expression": _frame_expressions(scene, t),
        "reflectors": [
            {"description": r.description, "delay_s": r.delay(t).tolist(),
             "attenuation": r.attenuation(t).tolist()}
            for r in scene.reflectors
        ],
        "scene": scene.to_dict(),
    }
    io.dump_json(out / "ground_truth.json", truth)
    print(f"rx: {len(rx)} samples, {len(scene.reflectors)} paths -> {out}")
    return EXIT_OK


def _frame_expressions(scene: Scene, t) -> list:
    labels = [None] * len(t)
    for r in scene.reflectors:
        for i, e in enumerate(expression_at(r, t)):
            if e is not None:
                labels[i] = e
    return labels


def cmd_pipeline(args) -> int:
    conf = _load_config(args)
    cfg = _chirp(conf)
    opts = _pipeline_options(args, conf)
    rx = io.read_wav(args.rx)
    template = None
    if opts.cancel:
        if args.template:
            template = dsp.Template.from_json(Path(args.template).read_text())
        elif _setting(args, conf, "scene"):
            scene = _load_scene(_setting(args, conf, "scene")).static_only()
            template = dsp.capture_template(scene, cfg, args.template_frames,
                                            dsp.FrameChain(cfg, opts.n_fft, opts.window))
        else:
            raise CliError("static cancellation needs --template or --scene (or pass --no-cancel)")
    res = run_pipeline(rx, cfg, template, opts, bin_index=args.bin)
    out = _out(args, conf)
    io.write_features_csv(out / "features.csv", res.features)
    if template is not None:
        (out / "template.json").write_text(template.to_json() + "\n")
    io.dump_json(out / "selection.json", {"version": 1, **res.report()})
    for stage, secs in res.timings.items():
        log.info("%s: %.2f ms", stage, 1e3 * secs)
    print(f"bin={res.features.bin_index} frames={len(res.features)} -> {out}")
    return EXIT_OK


def _dataset(path) -> Dataset:
    try:
        return read_feature_csv(path)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot load dataset {path}: {exc}") from exc


def cmd_train(args) -> int:
    conf = _load_config(args)
    data = _dataset(args.features)
    seed = _setting(args, conf, "seed", default=0)
    mode = SPLITS[_setting(args, conf, "split", default="overall")]
    tc = TrainConfig(n_trees=args.n_trees, seed=seed)
    out = _out(args, conf)
    folds = []
    for tr, te in splits(data, mode, seed):
        m = train(data.subset(tr), tc)
        folds.append(evaluate(m, data.subset(te)))
    model = train(data.subset(splits(data, "overall", seed)[0][0]) if mode == "overall" else data, tc)
    (out / "model.json").write_text(model.to_json() + "\n")
    io.dump_json(out / "train_metrics.json", {
        "split": mode, "seed": seed, "folds": folds,
        "mean_accuracy": float(np.mean([f["accuracy"] for f in folds])),
    })
    print(f"{mode}: mean held-out accuracy {np.mean([f['accuracy'] for f in folds]):.4f} -> {out}")
    return EXIT_OK


def _load_model(path) -> EnsembleModel:
    try:
        return EnsembleModel.from_json(Path(path).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load model {path}: {exc}") from exc


def cmd_predict(args) -> int:
    conf = _load_config(args)
    model = _load_model(args.model)
    cols = io.read_features_csv(args.features)
    X = np.column_stack([cols["amplitude"], cols["phase"]])
    pred = model.predict(X)
    out = _out(args, conf) / "predictions.csv"
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame_index", "timestamp", "label"])
        for fi, t, p in zip(cols["frame_index"], cols["time_s"], pred):
            w.writerow([int(fi), repr(float(t)), ExpressionLabel(int(p)).display])
    print(f"{len(pred)} predictions -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    conf = _load_config(args)
    model = _load_model(args.model)
    data = _dataset(args.features)
    if data.X.shape[1] != model.n_features:
        raise CliError("feature columns do not match the model")
    metrics = evaluate(model, data)
    io.dump_json(_out(args, conf) / "metrics.json", metrics)
    print(f"accuracy {metrics['accuracy']:.4f} on {metrics['n']} samples")
    return EXIT_OK


def cmd_engage(args) -> int:
    conf = _load_config(args)
    genre = _setting(args, conf, "genre")
    length = _setting(args, conf, "length_min")
    if genre is None or length is None:
        raise CliError("--genre and --length-min are required")
    with open(args.predictions, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "label" not in rows[0]:
        raise CliError(f"{args.predictions}: needs a 'label' column")
    if "timestamp" in rows[0]:
        rows.sort(key=lambda r: float(r["timestamp"]))
    stats = engagement.SessionStats.from_labels([r["label"] for r in rows], float(length))
    rep = engagement.report(stats, genre).to_dict()
    rep.update({"genre": str(genre), "E": list(stats.E), "R": stats.R,
                "length_min": stats.length_min})
    text = json.dumps(rep, indent=2, sort_keys=True)
    if _setting(args, conf, "out"):
        io.dump_json(_out(args, conf) / "engagement.json", rep)
    print(text)
    return EXIT_OK


def cmd_sus(args) -> int:
    conf = _load_config(args)
    responses = sus.read_responses(args.responses)
    summary = sus.aggregate(responses, args.group_by)
    summary["scores"] = [sus.sus_score(r) for r in responses]
    if _setting(args, conf, "out"):
        io.dump_json(_out(args, conf) / "sus_summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_demo(args) -> int:
    from chirpface.demo import DEMO_SEED, DemoConfig, run_demo

    conf = _load_config(args)
    seed = _setting(args, conf, "seed", default=DEMO_SEED)
    opts = _pipeline_options(args, conf)
    if not opts.cancel:
        raise CliError("the demo always cancels static echoes")
    summary = run_demo(_out(args, conf), DemoConfig(seed=seed, pipeline=opts), _chirp(conf))
    for name, ok in summary["checks"].items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    print(f"accuracy {summary['accuracy']:.4f}")
    return EXIT_OK if summary["passed"] else EXIT_CHECKS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chirpface", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log stage timings")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help="output directory")
        if seed:
            sp.add_argument("--seed", type=int)
        return sp

    def pipe_flags(sp):
        sp.add_argument("--n-fft", dest="n_fft", type=int)
        sp.add_argument("--calib-sec", dest="calib_sec", type=float)
        sp.add_argument("--no-cancel", dest="no_cancel", action="store_true")

    sp = common(sub.add_parser("synth", help="write chirp frames as WAV"), seed=False)
    sp.add_argument("--frames", type=int)
    sp.set_defaults(func=cmd_synth)

    sp = common(sub.add_parser("simulate", help="play chirps into a scene"))
    sp.add_argument("--scene")
    sp.add_argument("--frames", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("pipeline", help="features from a recording"), seed=False)
    sp.add_argument("--rx", required=True)
    sp.add_argument("--scene", help="scene whose static part builds the template")
    sp.add_argument("--template", help="template JSON")
    sp.add_argument("--template-frames", dest="template_frames", type=int, default=64)
    sp.add_argument("--bin", type=int, help="use this bin instead of selecting one")
    pipe_flags(sp)
    sp.set_defaults(func=cmd_pipeline)

    sp = common(sub.add_parser("train", help="fit the ensemble"))
    sp.add_argument("--features", required=True, help="feature CSV with label column")
    sp.add_argument("--split", choices=sorted(SPLITS))
    sp.add_argument("--n-trees", dest="n_trees", type=int, default=100)
    sp.set_defaults(func=cmd_train)

    sp = common(sub.add_parser("predict", help="label frames"), seed=False)
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = common(sub.add_parser("eval", help="metrics on a labelled feature CSV"), seed=False)
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = common(sub.add_parser("engage", help="engagement report"), seed=False)
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--genre", choices=["comedy", "tragedy", "anger", "horror", "mixed"])
    sp.add_argument("--length-min", dest="length_min", type=float)
    sp.set_defaults(func=cmd_engage)

    sp = common(sub.add_parser("sus", help="SUS summary"), seed=False)
    sp.add_argument("--responses", required=True)
    sp.add_argument("--group-by", dest="group_by", choices=list(sus.GROUP_KEYS))
    sp.set_defaults(func=cmd_sus)

    sp = common(sub.add_parser("demo", help="end-to-end synthetic experiment"))
    pipe_flags(sp)
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (CliError, ValueError, SceneError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
