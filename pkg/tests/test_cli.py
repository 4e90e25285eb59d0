import csv
import json

import numpy as np
import pytest

from chirpface import io
from chirpface.channel import NoiseSpec, Scene, static_reflector
from chirpface.cli import main
from chirpface.dsp import FrameChain
from chirpface.chirp import ChirpConfig
from chirpface.labels import ExpressionLabel

from conftest import moving_scene, separable_benchmark


def _write_scene(path, scene):
    path.write_text(json.dumps(scene.to_dict()))
    return str(path)


def test_synth(tmp_path, capsys):
    assert main(["synth", "--frames", "3", "--out", str(tmp_path / "a")]) == 0
    assert "chirp_rate_hz_per_s=75000" in capsys.readouterr().out
    assert len(io.read_wav(tmp_path / "a" / "tx.wav")) == 3 * 3087
    assert main(["synth", "--frames", "3", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "tx.wav").read_bytes() == (tmp_path / "b" / "tx.wav").read_bytes()


def test_synth_rejects_zero_frames(tmp_path):
    assert main(["synth", "--frames", "0", "--out", str(tmp_path)]) == 1


def test_synth_config_file(tmp_path):
    conf = tmp_path / "exp.json"
    conf.write_text(json.dumps({"chirp": {"f_min": 17000, "f_max": 20000, "duration_T": 0.02,
                                          "silence_T_sil": 0.01, "sample_rate": 44100},
                                "frames": 2, "out": str(tmp_path / "o")}))
    assert main(["synth", "--config", str(conf)]) == 0
    assert len(io.read_wav(tmp_path / "o" / "tx.wav")) == 2 * (882 + 441)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_simulate_reproducible_with_ground_truth(tmp_path):
    scene_path = _write_scene(tmp_path / "s.json", moving_scene(0)[0])
    for d in ("a", "b"):
        assert main(["simulate", "--scene", scene_path, "--frames", "5", "--seed", "3",
                     "--out", str(tmp_path / d)]) == 0
    for name in ("rx.wav", "tx.wav", "ground_truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    truth = io.load_json(tmp_path / "a" / "ground_truth.json")
    assert truth["frames"] == 5 and truth["expression"] == ["Surprise"] * 5
    assert len(truth["reflectors"][-1]["delay_s"]) == 5


def test_simulate_linearity(tmp_path):
    a = [static_reflector(1e-3, 0.3)]
    b = [static_reflector(2.5e-3, 0.2)]
    rx = {}
    for name, refl in (("a", a), ("b", b), ("ab", a + b)):
        p = _write_scene(tmp_path / f"{name}.json", Scene(refl))
        assert main(["simulate", "--scene", p, "--frames", "2", "--out", str(tmp_path / name)]) == 0
        rx[name] = io.read_wav(tmp_path / name / "rx.wav").samples
    assert np.max(np.abs(rx["ab"] - rx["a"] - rx["b"])) <= 1.5 / 32767


def test_simulate_empty_scene_is_noise_only(tmp_path):
    p = _write_scene(tmp_path / "e.json", Scene())
    assert main(["simulate", "--scene", p, "--frames", "2", "--out", str(tmp_path / "q")]) == 0
    assert np.all(io.read_wav(tmp_path / "q" / "rx.wav").samples == 0)
    p = _write_scene(tmp_path / "n.json", Scene(ambient_noise=NoiseSpec(0.0), seed=2))
    assert main(["simulate", "--scene", p, "--frames", "2", "--out", str(tmp_path / "n")]) == 0
    assert np.std(io.read_wav(tmp_path / "n" / "rx.wav").samples) > 0


def test_simulate_bad_scene(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"reflectors": [{"type": "static", "delay": -1, "attenuation": 0.5}]}')
    assert main(["simulate", "--scene", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--scene", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path)]) == 1


def test_pipeline_selects_oracle_bin_and_is_deterministic(tmp_path):
    scene, face_delay = moving_scene(1)
    sp = _write_scene(tmp_path / "s.json", scene)
    assert main(["simulate", "--scene", sp, "--frames", "60", "--out", str(tmp_path / "sim")]) == 0
    rx = str(tmp_path / "sim" / "rx.wav")
    for d in ("p1", "p2"):
        assert main(["pipeline", "--rx", rx, "--scene", sp, "--out", str(tmp_path / d)]) == 0
    sel = io.load_json(tmp_path / "p1" / "selection.json")
    assert sel["bin_index"] == FrameChain(ChirpConfig()).beat_bin(face_delay)
    assert not sel["low_confidence"]
    for name in ("features.csv", "selection.json", "template.json"):
        assert (tmp_path / "p1" / name).read_bytes() == (tmp_path / "p2" / name).read_bytes()
    # a stored template gives the same result
    assert main(["pipeline", "--rx", rx, "--template", str(tmp_path / "p1" / "template.json"),
                 "--out", str(tmp_path / "p3")]) == 0
    assert ((tmp_path / "p3" / "features.csv").read_bytes()
            == (tmp_path / "p1" / "features.csv").read_bytes())


def test_pipeline_static_scene_low_confidence(tmp_path):
    scene = Scene([static_reflector(0.0, 0.8), static_reflector(2e-3, 0.3)],
                  out_of_band_noise=NoiseSpec(20.0, (16000, 19000)), seed=4)
    sp = _write_scene(tmp_path / "s.json", scene)
    assert main(["simulate", "--scene", sp, "--frames", "60", "--out", str(tmp_path / "sim")]) == 0
    assert main(["pipeline", "--rx", str(tmp_path / "sim" / "rx.wav"), "--scene", sp,
                 "--out", str(tmp_path / "p")]) == 0
    assert io.load_json(tmp_path / "p" / "selection.json")["low_confidence"]


def test_pipeline_needs_template(tmp_path):
    sp = _write_scene(tmp_path / "s.json", Scene([static_reflector(1e-3, 0.5)]))
    assert main(["simulate", "--scene", sp, "--frames", "3", "--out", str(tmp_path / "sim")]) == 0
    rx = str(tmp_path / "sim" / "rx.wav")
    assert main(["pipeline", "--rx", rx, "--out", str(tmp_path / "p")]) == 1
    assert main(["pipeline", "--rx", rx, "--no-cancel", "--out", str(tmp_path / "p")]) == 0


def _benchmark_csv(path, seed=0, sessions=True):
    d = separable_benchmark(seed=seed, n_per_class=60, spread=0.6)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index", "time_s", "amplitude", "phase", "label", "session"])
        for i, (x, y) in enumerate(zip(d.X, d.y)):
            w.writerow([i, 0.07 * i, x[0], x[1], ExpressionLabel(int(y)).display, f"s{i % 3}"])
    return str(path)


@pytest.mark.parametrize("split", ["overall", "inter", "intra"])
def test_train_predict_eval(tmp_path, split):
    data = _benchmark_csv(tmp_path / "train.csv")
    out = tmp_path / "m"
    assert main(["train", "--features", data, "--split", split, "--n-trees", "10",
                 "--out", str(out)]) == 0
    tm = io.load_json(out / "train_metrics.json")
    assert tm["mean_accuracy"] >= 0.95
    model = str(out / "model.json")
    assert main(["eval", "--model", model, "--features", data, "--out", str(tmp_path / "e")]) == 0
    metrics = io.load_json(tmp_path / "e" / "metrics.json")
    assert np.asarray(metrics["confusion"]).shape == (4, 4)
    assert np.sum(metrics["confusion"]) == metrics["n"] == 240
    held_out = _benchmark_csv(tmp_path / "test.csv", seed=99)
    assert main(["eval", "--model", model, "--features", held_out,
                 "--out", str(tmp_path / "h")]) == 0
    assert metrics["accuracy"] >= io.load_json(tmp_path / "h" / "metrics.json")["accuracy"]
    assert main(["predict", "--model", model, "--features", held_out,
                 "--out", str(tmp_path / "p")]) == 0
    with open(tmp_path / "p" / "predictions.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 240 and set(rows[0]) == {"frame_index", "timestamp", "label"}


def test_eval_feature_mismatch(tmp_path):
    data = _benchmark_csv(tmp_path / "train.csv")
    assert main(["train", "--features", data, "--n-trees", "3", "--out", str(tmp_path)]) == 0
    assert main(["eval", "--model", str(tmp_path / "model.json"),
                 "--features", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 1
    assert main(["eval", "--model", str(tmp_path / "nope.json"),
                 "--features", data, "--out", str(tmp_path)]) == 1


def _predictions(path, counts):
    names = [e.display for e in ExpressionLabel]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "label"])
        t = 0
        for idx, n in enumerate(counts):
            for _ in range(n):
                w.writerow([t * 0.07, names[idx]])
                t += 1
    return str(path)


@pytest.mark.parametrize("counts,genre,length,want", [
    ((10, 2, 1, 0), "comedy", 1.0, (True, 1)),
    ((3, 20, 1, 1), "comedy", 30.0, (True, 2)),
    ((5, 30, 0, 0), "anger", 30.0, (False, 4)),
    ((5, 30, 0, 0), "mixed", 30.0, (None, 5)),
])
def test_engage(tmp_path, capsys, counts, genre, length, want):
    p = _predictions(tmp_path / "p.csv", counts)
    assert main(["engage", "--predictions", p, "--genre", genre, "--length-min", str(length),
                 "--out", str(tmp_path / "o")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert (rep["indicator"], rep["rule_fired"]) == want
    assert rep["E"] == list(counts)
    assert io.load_json(tmp_path / "o" / "engagement.json") == rep


def test_engage_validation(tmp_path):
    p = _predictions(tmp_path / "p.csv", (1, 1, 1, 1))
    assert main(["engage", "--predictions", p, "--genre", "comedy"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,label\n0,Bored\n")
    assert main(["engage", "--predictions", str(bad), "--genre", "comedy",
                 "--length-min", "1"]) == 1


def test_sus(tmp_path, capsys):
    p = tmp_path / "r.csv"
    p.write_text("q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,age\n5,1,5,1,5,1,5,1,5,1,20s\n"
                 "3,3,3,3,3,3,3,3,3,3,20s\n1,5,1,5,1,5,1,5,1,5,30s\n")
    assert main(["sus", "--responses", str(p), "--group-by", "age"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["scores"] == [100.0, 50.0, 0.0]
    assert out["groups"] == {"20s": 75.0, "30s": 0.0}
    bad = tmp_path / "bad.csv"
    bad.write_text("q1,q2,q3,q4,q5,q6,q7,q8,q9,q10\n9,1,5,1,5,1,5,1,5,1\n")
    assert main(["sus", "--responses", str(bad)]) == 1


def test_demo_refuses_no_cancel(tmp_path):
    assert main(["demo", "--no-cancel", "--out", str(tmp_path)]) == 1


def test_demo_failed_checks_exit_2(tmp_path, monkeypatch):
    import chirpface.demo as demo

    monkeypatch.setattr(demo, "run_demo", lambda *a, **k: {
        "checks": {"accuracy_at_least_0.90": False}, "accuracy": 0.5, "passed": False})
    assert main(["demo", "--out", str(tmp_path)]) == 2


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
