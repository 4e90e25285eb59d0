import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chirpface.chirp import (
    ChirpConfig,
    PCM16Buffer,
    SampleBuffer,
    dequantize_pcm16,
    instantaneous_frequency,
    instantaneous_phase,
    quantize_pcm16,
    synthesize_chirp,
    synthesize_frame,
    synthesize_frames,
)


def test_instantaneous_frequency_examples(cfg):
    assert instantaneous_frequency(cfg, 0.0) == 16000.0
    assert instantaneous_frequency(cfg, 0.040) == pytest.approx(19000.0)
    assert instantaneous_frequency(cfg, 0.020) == pytest.approx(17500.0)


def test_instantaneous_frequency_domain(cfg):
    with pytest.raises(ValueError):
        instantaneous_frequency(cfg, -1e-6)
    with pytest.raises(ValueError):
        instantaneous_frequency(cfg, 0.0401)


def test_instantaneous_phase_examples(cfg):
    assert instantaneous_phase(cfg, 0.0) == 0.0
    assert instantaneous_phase(ChirpConfig(phi_min=1.5), 0.0) == 1.5
    assert instantaneous_phase(cfg, 0.001) == pytest.approx(2 * np.pi * 16.0375)


def test_phase_derivative_is_frequency(cfg):
    rng = np.random.default_rng(0)
    h = 1e-7
    for t in rng.uniform(h, cfg.duration_T - h, 100):
        fd = (instantaneous_phase(cfg, t + h) - instantaneous_phase(cfg, t - h)) / (2 * h)
        want = 2 * np.pi * instantaneous_frequency(cfg, t)
        assert abs(fd - want) / want < 1e-6


def test_frequency_affine_with_slope_c(cfg):
    t = np.linspace(0, cfg.duration_T, 11)
    f = instantaneous_frequency(cfg, t)
    assert np.allclose(np.diff(f) / np.diff(t), cfg.chirp_rate)
    assert cfg.chirp_rate == pytest.approx(75000.0)


@pytest.mark.parametrize("kw", [
    dict(f_min=0.0), dict(f_min=19000.0, f_max=16000.0), dict(f_max=30000.0),
    dict(duration_T=0.0), dict(silence_T_sil=-0.01), dict(sample_rate=-1.0),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ChirpConfig(**kw)


def test_config_round_trip(cfg):
    assert ChirpConfig.from_dict(cfg.to_dict()) == cfg


def test_chirp_samples(cfg):
    x = synthesize_chirp(cfg)
    assert len(x) == 1764
    assert x.samples[0] == 0.0
    n = np.arange(len(x))
    assert np.array_equal(x.samples, np.sin(instantaneous_phase(cfg, n / cfg.sample_rate)))
    assert np.array_equal(x.samples, synthesize_chirp(cfg).samples)


def test_frame_layout(cfg):
    f = synthesize_frame(cfg)
    assert len(f) == 3087
    assert np.all(f.samples[1764:] == 0.0)
    assert f.energy() == pytest.approx(synthesize_chirp(cfg).energy(), rel=1e-12)
    no_gap = ChirpConfig(silence_T_sil=0.0)
    assert np.array_equal(synthesize_frame(no_gap).samples, synthesize_chirp(no_gap).samples)


def test_frames_repeat_with_phase_reset(cfg):
    x = synthesize_frames(cfg, 3).samples
    assert len(x) == 3 * 3087
    f = synthesize_frame(cfg).samples
    for i in range(3):
        assert np.array_equal(x[i * 3087:(i + 1) * 3087], f)
    with pytest.raises(ValueError):
        synthesize_frames(cfg, 0)


def test_gain_scales(cfg):
    half = ChirpConfig(gain=0.5)
    assert np.allclose(synthesize_chirp(half).samples, 0.5 * synthesize_chirp(cfg).samples)


def test_pcm_examples():
    pcm = quantize_pcm16(SampleBuffer(np.array([0.0, 1.0, -1.0]), 44100.0))
    assert pcm.codes.tolist() == [0, 32767, -32767]
    back = dequantize_pcm16(pcm).samples
    assert back[0] == 0.0 and abs(back[1] - 1.0) <= 1 / 32767 and back[2] == -back[1]
    assert pcm.clipped == 0


def test_pcm_clipping_counted():
    pcm = quantize_pcm16(SampleBuffer(np.array([1.5, -2.0, 0.3]), 44100.0))
    assert pcm.clipped == 2
    assert pcm.codes[0] == 32767 and pcm.codes[1] == -32767


def test_pcm_bytes_little_endian():
    pcm = PCM16Buffer(np.array([1, -2], dtype=np.int16), 44100.0)
    assert pcm.to_bytes() == b"\x01\x00\xfe\xff"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=200))
def test_pcm_round_trip_error(values):
    x = np.array(values)
    back = dequantize_pcm16(quantize_pcm16(SampleBuffer(x, 44100.0))).samples
    assert np.max(np.abs(back - x)) <= 1 / 32767


def test_sample_buffer_rejects_nonfinite():
    with pytest.raises(ValueError):
        SampleBuffer(np.array([0.0, np.nan]), 44100.0)
