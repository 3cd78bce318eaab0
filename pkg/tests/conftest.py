import numpy as np
import pytest

from handkey import simulator
from handkey.core import Session
from handkey.layout import qwerty_keyboard, standard_finger_map


@pytest.fixture(scope="session")
def kb():
    return qwerty_keyboard()


@pytest.fixture(scope="session")
def finger_map():
    return standard_finger_map()


def make_session(
    text,
    kb,
    seed=0,
    error_rate=0.0,
    depth_std=None,
    jitter_std=None,
    xz_std=None,
    depth_bias=None,
):
    """Synthesize a session; noise params default to the calibrated values,
    pass explicit zeros for a noiseless session."""
    tp = simulator.TypistParams(
        finger_map=standard_finger_map(), error_rate=error_rate
    )
    noise = simulator.NoiseParams(seed=seed)
    for name, val in (
        ("depth_std", depth_std),
        ("jitter_std", jitter_std),
        ("xz_std", xz_std),
        ("depth_bias", depth_bias),
    ):
        if val is not None:
            setattr(noise, name, val)
    return simulator.synth_session(text, kb, tp, noise)


def make_clean_session(text, kb, seed=0, error_rate=0.0):
    return make_session(
        text, kb, seed=seed, error_rate=error_rate,
        depth_std=0.0, jitter_std=0.0, xz_std=0.0, depth_bias=0.0,
    )


def constant_session(coords_row, n_frames=10, fps=60.0, **kw):
    coords = np.tile(np.asarray(coords_row, dtype=float), (n_frames, 1, 1))
    times = np.arange(n_frames) / fps
    return Session(times=times, coords=coords, nominal_fps=fps, **kw)
