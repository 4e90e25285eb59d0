import numpy as np
import pytest

from chirpface.channel import AuTrajectoryParams, Scene, au_trajectory, static_reflector
from chirpface.chirp import ChirpConfig
from chirpface.labels import ExpressionLabel
from chirpface.ml import Dataset

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []

CLUTTER_DELAYS = (0.5e-3, 0.8e-3, 3.2e-3, 3.8e-3, 4.5e-3)


@pytest.fixture
def cfg():
    return ChirpConfig()


def moving_scene(seed, extra_static=False):
    """Direct path, four clutter echoes and one face-like moving reflector.

    Returns ``(scene, face_delay)``; the face sits between 1.5 and 2.5 ms,
    clear of the clutter delays.
    """
    rng = np.random.default_rng(seed)
    reflectors = [static_reflector(0.0, 0.8)]
    face_delay = rng.uniform(1.5e-3, 2.5e-3)
    clutter = rng.choice(CLUTTER_DELAYS, 4, replace=False) + rng.uniform(-1e-4, 1e-4, 4)
    for d in clutter:
        reflectors.append(static_reflector(float(d), rng.uniform(0.2, 0.5)))
    face = au_trajectory(AuTrajectoryParams(
        ExpressionLabel.SURPRISE, face_delay, delay_swing=rng.uniform(5e-6, 2e-5),
        attenuation_base=0.1, attenuation_swing=0.02, tempo=rng.uniform(0.5, 2.0),
        phase0=rng.uniform(0, 2 * np.pi)))
    if extra_static:
        reflectors.append(static_reflector(rng.uniform(0.3e-3, 5e-3), rng.uniform(0.1, 0.5)))
    return Scene(reflectors + [face], seed=seed), face_delay


def separable_benchmark(seed=0, n_per_class=100, spread=0.6):
    """Four Gaussian clusters in the plane, one per class."""
    rng = np.random.default_rng(seed)
    centres = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0], [6.0, 6.0]])
    X = np.vstack([c + spread * rng.standard_normal((n_per_class, 2)) for c in centres])
    y = np.repeat(np.arange(4), n_per_class)
    return Dataset(X, y)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
