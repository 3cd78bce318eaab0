import numpy as np
import pytest

from handkey.detection import (
    DetectionParams,
    depth_acceleration,
    detect_keystrokes,
    find_peaks,
    fit_two_gaussians,
)
from handkey.errors import NonUniform, TooFewFrames, TooFewSamples

from conftest import make_clean_session, make_session


def test_acceleration_constant_is_zero():
    a = depth_acceleration(np.full(20, 3.7), fps=60.0)
    assert a.shape == (18,)
    assert np.allclose(a, 0.0)


def test_acceleration_exact_for_quadratic():
    # y(t) = t^2 has second derivative exactly 2 under central differences
    fps = 50.0
    y = (np.arange(30) / fps) ** 2
    a = depth_acceleration(y, fps=fps)
    assert np.allclose(a, 2.0)


def test_acceleration_too_few_frames():
    with pytest.raises(TooFewFrames):
        depth_acceleration(np.array([1.0, 2.0]), fps=60.0)


def test_acceleration_rejects_nonuniform_sampling():
    ser = np.zeros((5, 4))
    ser[:, 0] = [0.0, 0.1, 0.2, 0.35, 0.4]
    with pytest.raises(NonUniform):
        depth_acceleration(ser, fps=10.0)


def test_find_peaks_single_triangle():
    a = np.array([0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0])
    assert find_peaks(a) == [(3, 3.0)]


def test_find_peaks_min_separation_keeps_larger():
    # two local maxima 3 apart; separation 6 forces keeping only the larger
    a = np.array([0.0, 2.0, 0.5, 0.9, 3.0, 0.0, 0.0])
    assert find_peaks(a, min_separation=6) == [(4, 3.0)]
    both = find_peaks(a, min_separation=2)
    assert [i for i, _ in both] == [1, 4]


def test_find_peaks_all_negative_is_empty():
    assert find_peaks(-np.ones(10)) == []


def test_find_peaks_requires_positive_separation():
    with pytest.raises(ValueError):
        find_peaks(np.zeros(5), min_separation=0)


def test_gmm_recovers_known_mixture():
    rng = np.random.default_rng(42)
    x = np.concatenate([rng.normal(0, 1, 500), rng.normal(10, 1, 500)])
    fit = fit_two_gaussians(x)
    assert fit.means[0] == pytest.approx(0.0, abs=0.2)
    assert fit.means[1] == pytest.approx(10.0, abs=0.2)
    assert fit.threshold == pytest.approx(5.0, abs=0.3)


def test_gmm_invariants():
    rng = np.random.default_rng(3)
    x = np.concatenate([rng.normal(0, 1, 200), rng.normal(4, 2, 300)])
    fit = fit_two_gaussians(x)
    assert fit.weights[0] + fit.weights[1] == pytest.approx(1.0, abs=1e-9)
    assert fit.means[0] <= fit.means[1]
    assert fit.stds[0] > 0 and fit.stds[1] > 0
    assert fit.means[0] <= fit.threshold <= fit.means[1]


def test_gmm_identical_samples_collapse_handled():
    fit = fit_two_gaussians(np.full(50, 2.5))
    assert fit.threshold == 2.5


def test_gmm_too_few_samples():
    with pytest.raises(TooFewSamples):
        fit_two_gaussians(np.arange(5, dtype=float))


def test_gmm_deterministic():
    rng = np.random.default_rng(9)
    x = np.concatenate([rng.normal(0, 1, 100), rng.normal(6, 1, 100)])
    a, b = fit_two_gaussians(x), fit_two_gaussians(x)
    assert a.means == b.means and a.threshold == b.threshold


def test_detect_zero_noise_exact_count(kb):
    s, gt = make_clean_session("the quick brown fox jumps over it", kb)
    events = detect_keystrokes(s, kb)
    assert len(events) == len(gt.events)
    gt_frames = sorted(int(round(t * s.nominal_fps)) for t, _, _ in gt.events)
    det = sorted(ev.frame_idx for ev in events)
    assert all(abs(a - b) <= 1 for a, b in zip(gt_frames, det))


def test_detect_empty_text_session(kb):
    s, gt = make_clean_session("", kb)
    assert detect_keystrokes(s, kb) == []


def test_detect_windows_are_16_frames_in_bounds(kb):
    s, _ = make_clean_session("hello world", kb)
    for ev in detect_keystrokes(s, kb):
        assert len(ev.window) == 16
        assert ev.window.min() >= 0 and ev.window.max() < len(s)


def test_detect_calibrated_noise_recall_precision(kb):
    # measured over seeds 1-5: recall >= 0.9, precision >= 0.8 at +/-2 frames
    recalls, precisions = [], []
    for seed in range(1, 6):
        from handkey.corpus import sample_text

        s, gt = make_session(sample_text(40, seed=seed), kb, seed=seed)
        events = detect_keystrokes(s, kb)
        gt_frames = [int(round(t * s.nominal_fps)) for t, _, _ in gt.events]
        det = [ev.frame_idx for ev in events]
        hits = sum(1 for f in gt_frames if any(abs(f - d) <= 2 for d in det))
        matched = sum(1 for d in det if any(abs(f - d) <= 2 for f in gt_frames))
        recalls.append(hits / len(gt_frames))
        precisions.append(matched / max(len(det), 1))
    assert np.median(recalls) >= 0.9
    assert np.median(precisions) >= 0.8


def test_detect_monotone_in_threshold(kb):
    # raising the amplitude cutoff can only shrink the event set
    s, _ = make_session("some words being typed here", kb, seed=2)
    events = detect_keystrokes(s, kb)
    amps = sorted(ev.amplitude for ev in events)
    counts = [sum(1 for ev in events if ev.amplitude >= tau) for tau in amps]
    assert counts == sorted(counts, reverse=True)


def test_detection_params_validation():
    with pytest.raises(ValueError):
        DetectionParams(min_separation=0)
