import numpy as np
import pytest

from handkey.core import JOINTS_PER_HAND, PoV, Session, Space
from handkey.errors import (
    DegenerateBaseline,
    MissingDepth,
    WrongSpace,
)
from handkey.transforms import (
    CameraModel,
    backproject_fixed_depth,
    camera_basis,
    invert_observed,
    project_2d,
    stereo_reconstruct,
    to_observed,
)

from conftest import make_clean_session, make_session


def random_session(seed=0, n_frames=20):
    rng = np.random.default_rng(seed)
    coords = rng.normal(0, 0.05, (n_frames, 2 * JOINTS_PER_HAND, 3))
    coords[:, :, 1] += 0.03  # hands above the keyboard plane
    return Session(times=np.arange(n_frames) / 60.0, coords=coords)


def test_camera_basis_orthonormal():
    cam = CameraModel(PoV(30.0, 45.0, 0.8), target=np.zeros(3))
    pos, R = camera_basis(cam)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.norm(pos) == pytest.approx(0.8)


def test_camera_basis_top_down_fallback():
    cam = CameraModel(PoV(0.0, 90.0, 1.0), target=np.zeros(3))
    _, R = camera_basis(cam)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)


def test_round_trip_exact():
    s = random_session(1)
    cam = CameraModel(PoV(25.0, 50.0, 1.1)).resolved(s)
    back = invert_observed(to_observed(s, cam), cam)
    assert np.max(np.abs(back.coords - s.coords)) < 1e-9
    assert back.space is Space.ORIGINAL


def test_round_trip_top_down():
    s = random_session(2)
    cam = CameraModel(PoV(0.0, 90.0, 1.0)).resolved(s)
    back = invert_observed(to_observed(s, cam), cam)
    assert np.max(np.abs(back.coords - s.coords)) < 1e-9


def test_observed_space_tagging():
    s = random_session(3)
    cam = CameraModel(PoV(0.0, 60.0)).resolved(s)
    obs = to_observed(s, cam)
    assert obs.space is Space.OBSERVED
    assert not obs.depth_absent
    assert obs.pov == cam.pov


def test_to_observed_requires_original():
    s = random_session(4)
    cam = CameraModel(PoV(0.0, 60.0)).resolved(s)
    obs = to_observed(s, cam)
    with pytest.raises(WrongSpace):
        to_observed(obs, cam)


def test_project_2d_drops_depth():
    s = random_session(5)
    cam = CameraModel(PoV(10.0, 70.0)).resolved(s)
    flat = project_2d(to_observed(s, cam))
    assert flat.space is Space.PROJECTED_2D
    assert flat.depth_absent
    with pytest.raises(WrongSpace):
        project_2d(flat)


def test_invert_requires_depth():
    s = random_session(6)
    cam = CameraModel(PoV(10.0, 70.0)).resolved(s)
    flat = project_2d(to_observed(s, cam))
    with pytest.raises(MissingDepth):
        invert_observed(flat, cam)


def test_stereo_exact_for_wide_baselines():
    s = random_session(7)
    for h in (15.0, 40.0, 90.0):
        cam_a = CameraModel(PoV(0.0, 55.0)).resolved(s)
        cam_b = CameraModel(PoV(h, 55.0)).resolved(s)
        a = project_2d(to_observed(s, cam_a))
        b = project_2d(to_observed(s, cam_b))
        rec = stereo_reconstruct(a, cam_a, b, cam_b)
        assert np.max(np.abs(rec.coords - s.coords)) < 1e-6
        assert rec.space is Space.ORIGINAL


def test_stereo_degenerate_baseline():
    s = random_session(8)
    cam_a = CameraModel(PoV(0.0, 55.0)).resolved(s)
    cam_b = CameraModel(PoV(5.0, 55.0)).resolved(s)
    a = project_2d(to_observed(s, cam_a))
    b = project_2d(to_observed(s, cam_b))
    with pytest.raises(DegenerateBaseline):
        stereo_reconstruct(a, cam_a, b, cam_b)


def test_backproject_fixed_depth_flattens():
    s = random_session(9)
    cam = CameraModel(PoV(0.0, 60.0)).resolved(s)
    rec = backproject_fixed_depth(project_2d(to_observed(s, cam)), cam)
    assert rec.space is Space.ORIGINAL
    # every reconstructed point sits at the same camera depth: the spread
    # along the viewing direction collapses
    pos, R = camera_basis(cam)
    fwd = R[2]
    depths = (rec.coords.reshape(-1, 3) - pos) @ fwd
    assert np.std(depths) < 1e-9


def test_round_trip_on_simulated_sessions(kb):
    s, _ = make_session("hello there friend", kb, seed=11)
    for pov in (PoV(0, 60), PoV(-30, 45), PoV(60, 80)):
        cam = CameraModel(pov).resolved(s)
        back = invert_observed(to_observed(s, cam), cam)
        assert np.max(np.abs(back.coords - s.coords)) < 1e-9
