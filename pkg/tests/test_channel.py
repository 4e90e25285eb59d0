import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chirpface.channel import (
    AuTrajectoryParams,
    NoiseSpec,
    Reflector,
    Scene,
    SceneError,
    add_noise,
    au_trajectory,
    distance_to_delay,
    expression_at,
    propagate,
    pulse_reflector,
    static_reflector,
    timeline_reflector,
)
from chirpface.chirp import SampleBuffer, synthesize_frames
from chirpface.labels import ExpressionLabel


@pytest.fixture
def tx(cfg):
    return synthesize_frames(cfg, 2)


def test_identity_channel(tx):
    rx = propagate(Scene([static_reflector(0.0, 1.0)]), tx)
    assert np.array_equal(rx.samples, tx.samples)


def test_integer_delay_line(cfg, tx):
    k = 37
    rx = propagate(Scene([static_reflector(k / cfg.sample_rate, 0.5)]), tx).samples
    assert np.all(rx[:k] == 0.0)
    assert np.allclose(rx[k:], 0.5 * tx.samples[:-k], atol=0, rtol=0)


def test_fractional_delay_interpolates(cfg):
    x = SampleBuffer(np.array([0.0, 1.0, 0.0, 0.0]), cfg.sample_rate)
    rx = propagate(Scene([static_reflector(0.5 / cfg.sample_rate, 1.0)]), x).samples
    assert np.allclose(rx, [0.0, 0.5, 0.5, 0.0])


def test_linearity(tx):
    a = [static_reflector(3.1e-4, 0.4), static_reflector(1.7e-3, 0.2)]
    b = [au_trajectory(AuTrajectoryParams(ExpressionLabel.ANGRY, 2e-3, 1e-5, 0.2, 0.05, 1.0))]
    whole = propagate(Scene(a + b), tx).samples
    parts = propagate(Scene(a), tx).samples + propagate(Scene(b), tx).samples
    assert np.max(np.abs(whole - parts)) < 1e-12


def test_two_static_paths_sum(tx):
    r1, r2 = static_reflector(1e-3, 0.5), static_reflector(3e-3, 0.25)
    both = propagate(Scene([r1, r2]), tx).samples
    sep = propagate(Scene([r1]), tx).samples + propagate(Scene([r2]), tx).samples
    assert np.max(np.abs(both - sep)) < 1e-12


def test_seeded_noise_deterministic(tx):
    sc = Scene([static_reflector(1e-3, 0.5)], ambient_noise=NoiseSpec(10.0), seed=4)
    assert np.array_equal(propagate(sc, tx).samples, propagate(sc, tx).samples)
    other = Scene(sc.reflectors, sc.ambient_noise, seed=5)
    assert not np.array_equal(propagate(sc, tx).samples, propagate(other, tx).samples)


def test_empty_scene_is_noise_only(tx):
    assert np.all(propagate(Scene(), tx).samples == 0.0)
    noisy = propagate(Scene(ambient_noise=NoiseSpec(0.0), seed=1), tx).samples
    power = np.mean(noisy ** 2)
    assert power == pytest.approx(np.mean(tx.samples ** 2), rel=1e-9)


def test_negative_delay_rejected(tx):
    bad = Reflector(lambda t: np.full_like(t, -1e-4), lambda t: np.full_like(t, 0.5), False)
    with pytest.raises(SceneError):
        propagate(Scene([bad]), tx)
    with pytest.raises(SceneError):
        static_reflector(-1.0, 0.5)


def test_ambient_noise_must_be_audible_band():
    with pytest.raises(SceneError):
        Scene(ambient_noise=NoiseSpec(0.0, (100.0, 18000.0)))


def test_sad_neutral_without_swing_is_constant():
    r = au_trajectory(AuTrajectoryParams(ExpressionLabel.SAD_NEUTRAL, 1e-3, 0.0, 0.3, 0.0))
    t = np.linspace(0, 30, 1000)
    assert np.ptp(r.delay(t)) == 0.0 and np.ptp(r.attenuation(t)) == 0.0
    assert r.is_static


def _normalized_stds(expr):
    p = AuTrajectoryParams(expr, 2e-3, 1e-5, 0.2, 0.05, 1.0)
    r = au_trajectory(p)
    t = np.linspace(0, 20, 20001)
    return np.std(r.delay(t)) / p.delay_swing, np.std(r.attenuation(t)) / p.attenuation_swing


def test_expression_modulation_patterns():
    d, a = _normalized_stds(ExpressionLabel.HAPPY)
    assert a > d
    d, a = _normalized_stds(ExpressionLabel.SURPRISE)
    assert d > a
    d, a = _normalized_stds(ExpressionLabel.ANGRY)
    assert d == pytest.approx(a, rel=0.05)
    d, a = _normalized_stds(ExpressionLabel.SAD_NEUTRAL)
    assert max(d, a) < 0.1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(ExpressionLabel)), st.floats(1e-5, 5e-3), st.floats(0.0, 1.0),
       st.floats(0.0, 1.0), st.floats(0.05, 5.0), st.floats(0.0, 6.3))
def test_trajectory_bounds(expr, base, swing_frac, att, tempo, phase0):
    swing = swing_frac * base
    p = AuTrajectoryParams(expr, base, swing, 0.5, 0.5 * att, tempo, phase0)
    r = au_trajectory(p)
    t = np.random.default_rng(0).uniform(0, 100, 100_000)
    assert np.all(r.delay(t) >= 0)
    a = r.attenuation(t)
    assert np.all((a >= 0) & (a <= 1))


def test_invalid_trajectory_params():
    with pytest.raises(SceneError):
        AuTrajectoryParams(ExpressionLabel.HAPPY, 1e-4, 2e-4, 0.2, 0.0)
    with pytest.raises(SceneError):
        AuTrajectoryParams(ExpressionLabel.HAPPY, 1e-3, 0.0, 0.9, 0.2)


def test_timeline_switches_expression():
    segs = [(AuTrajectoryParams(ExpressionLabel.HAPPY, 2e-3, 1e-6, 0.2, 0.01), 1.0),
            (AuTrajectoryParams(ExpressionLabel.SURPRISE, 2.1e-3, 1e-6, 0.1, 0.01), 1.0)]
    r = timeline_reflector(segs)
    assert expression_at(r, [0.5, 1.5, 9.0]) == ["Happy", "Surprise", "Surprise"]
    assert r.delay(np.array([0.5]))[0] < 2.05e-3 < r.delay(np.array([1.5]))[0]
    assert expression_at(static_reflector(1e-3, 0.5), [0.0]) == [None]


def test_pulse_reflector():
    r = pulse_reflector(1e-3, 0.3, 1.0, 0.1, 2e-5)
    d = r.delay(np.array([0.5, 1.05, 1.2]))
    assert d.tolist() == [1e-3, 1e-3 + 2e-5, 1e-3]


def test_scene_json_round_trip(tx):
    segs = [(AuTrajectoryParams(ExpressionLabel.HAPPY, 2e-3, 1e-6, 0.2, 0.01), 1.0),
            (AuTrajectoryParams(ExpressionLabel.ANGRY, 2.1e-3, 1e-6, 0.1, 0.01), 1.0)]
    sc = Scene([static_reflector(1e-3, 0.5), timeline_reflector(segs),
                pulse_reflector(1e-3, 0.3, 0.01, 0.01, 1e-5),
                au_trajectory(AuTrajectoryParams(ExpressionLabel.SURPRISE, 2e-3, 1e-5, 0.2, 0.05))],
               ambient_noise=NoiseSpec(5.0), out_of_band_noise=NoiseSpec(math.inf, (16000, 19000)),
               seed=11)
    text = json.dumps(sc.to_dict())
    back = Scene.from_dict(json.loads(text))
    assert back.to_dict() == sc.to_dict()
    assert np.array_equal(propagate(back, tx).samples, propagate(sc, tx).samples)


def test_scene_distance_form():
    sc = Scene.from_dict({"reflectors": [{"type": "static", "distance_m": 0.343,
                                          "attenuation": 0.5}]})
    assert sc.reflectors[0].delay(np.zeros(1))[0] == pytest.approx(distance_to_delay(0.343))
    assert distance_to_delay(0.343) == pytest.approx(2e-3)


@pytest.mark.parametrize("bad", [{"reflectors": [{"type": "wormhole"}]},
                                 {"reflectors": [{"type": "static"}]}])
def test_bad_scene_rejected(bad):
    with pytest.raises(SceneError):
        Scene.from_dict(bad)


def test_add_noise_infinite_snr_is_identity(tx):
    assert add_noise(tx, math.inf) is tx


def test_add_noise_non_finite_rejected(tx):
    with pytest.raises(ValueError):
        add_noise(tx, math.nan)
    with pytest.raises(ValueError):
        add_noise(tx, -math.inf)


def test_add_noise_zero_db_power(cfg):
    x = synthesize_frames(cfg, 10)
    y = add_noise(x, 0.0, seed=3)
    noise = y.samples - x.samples
    assert np.mean(noise ** 2) == pytest.approx(np.mean(x.samples ** 2), rel=0.05)


def test_add_noise_band_confined(cfg):
    x = SampleBuffer(np.ones(1 << 15) * 0.1, cfg.sample_rate)
    noise = add_noise(x, 0.0, (100.0, 15000.0), seed=2).samples - x.samples
    spec = np.abs(np.fft.rfft(noise)) ** 2
    f = np.fft.rfftfreq(noise.shape[0], 1 / cfg.sample_rate)
    in_band = spec[(f >= 100) & (f <= 15000)].sum()
    above = spec[f > 16000].sum()
    assert above == 0.0 or 10 * np.log10(in_band / above) >= 40


def test_add_noise_band_validated(tx):
    with pytest.raises(ValueError):
        add_noise(tx, 0.0, (100.0, 30000.0))
