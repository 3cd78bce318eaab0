import numpy as np
import pytest

from handkey import io
from handkey.core import (
    BACKSPACE,
    INDEX_TIP,
    MIDDLE_TIP,
    PINKY_TIP,
    GroundTruth,
    Hand,
    JointId,
    PoV,
)
from handkey.detection import detect_keystrokes
from handkey.errors import ConfigError
from handkey.layout import qwerty_keyboard

from conftest import make_clean_session


def test_session_roundtrip(tmp_path, kb):
    s, _ = make_clean_session("hello world", kb)
    p = tmp_path / "s.npz"
    io.save_session(s, p)
    s2 = io.load_session(p)
    assert np.array_equal(s2.coords, s.coords)
    assert np.array_equal(s2.times, s.times)
    assert s2.nominal_fps == s.nominal_fps
    assert s2.space == s.space
    assert s2.depth_absent == s.depth_absent


def test_session_roundtrip_transformed(tmp_path, kb):
    from handkey.transforms import CameraModel, to_observed

    s, _ = make_clean_session("hi there", kb)
    cam = CameraModel(PoV(0.0, 60.0, 1.0)).resolved(s)
    obs = to_observed(s, cam)
    p = tmp_path / "obs.npz"
    io.save_session(obs, p)
    s2 = io.load_session(p)
    assert s2.space == obs.space
    assert s2.pov == obs.pov
    assert np.array_equal(s2.coords, obs.coords)


def test_keyboard_roundtrip(tmp_path):
    kb = qwerty_keyboard(key_width=0.02, key_pitch=0.022)
    p = tmp_path / "kb.json"
    io.save_keyboard(kb, p)
    kb2 = io.load_keyboard(p)
    assert kb2.key_width == kb.key_width
    assert kb2.key_pitch == kb.key_pitch
    assert kb2.plane_y == kb.plane_y
    assert kb2.keys == {k: tuple(v) for k, v in kb.keys.items()}


def test_ground_truth_roundtrip(tmp_path):
    gt = GroundTruth(
        text="ab",
        events=[
            (0.1, "a", JointId(Hand.LEFT, INDEX_TIP)),
            (0.2, "x", JointId(Hand.LEFT, INDEX_TIP)),
            (0.3, BACKSPACE, JointId(Hand.RIGHT, PINKY_TIP)),
            (0.4, "b", JointId(Hand.RIGHT, MIDDLE_TIP)),
        ],
    )
    p = tmp_path / "gt.json"
    io.save_ground_truth(gt, p)
    gt2 = io.load_ground_truth(p)
    assert gt2.text == gt.text
    assert gt2.events == gt.events


def test_events_roundtrip(tmp_path, kb):
    s, _ = make_clean_session("the cat", kb)
    events = detect_keystrokes(s)
    p = tmp_path / "ev.tsv"
    io.save_events(events, p)
    back = io.load_events(p, n_frames=len(s.times))
    assert len(back) == len(events)
    for a, b in zip(events, back):
        assert a.frame_idx == b.frame_idx
        assert a.amplitude == pytest.approx(b.amplitude)
        assert np.array_equal(a.window, b.window)


def test_report_roundtrip(tmp_path):
    rep = {"cer": 0.0142, "wer": 0.042, "notes": ["ok"]}
    p = tmp_path / "r.json"
    io.save_report(rep, p)
    assert io.load_report(p) == rep


def test_wrong_format_id_rejected(tmp_path, kb):
    s, _ = make_clean_session("hi", kb)
    kb_path = tmp_path / "kb.json"
    io.save_keyboard(kb, kb_path)
    # keyboard file fed to the ground-truth loader and vice versa
    with pytest.raises(ConfigError):
        io.load_ground_truth(kb_path)
    gt_path = tmp_path / "gt.json"
    io.save_ground_truth(GroundTruth(text="a", events=[]), gt_path)
    with pytest.raises(ConfigError):
        io.load_keyboard(gt_path)
    with pytest.raises(ConfigError):
        io.load_report(kb_path)


def test_events_format_line_checked(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("#NOTEVT\nframe\tamplitude\n3\t1.0\n")
    with pytest.raises(ConfigError):
        io.load_events(p, n_frames=10)
