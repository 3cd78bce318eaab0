"""Keystroke-frame detection from the fingertip depth signal.

A press shows up as a positive peak in the second derivative of the
pressing fingertip's depth coordinate. Tracking noise produces many fake
peaks of smaller amplitude, so the pooled peak amplitudes are modeled as a
two-component Gaussian mixture and thresholded at the equal-error point
between admitting a fake keystroke and missing a real one.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    JointId,
    KeyboardModel,
    KeystrokeEvent,
    Session,
    Space,
    all_fingertips,
    event_window,
    fingertip_series,
)
from .errors import NonUniform, TooFewFrames, TooFewSamples, WrongSpace


@dataclass
class DetectionParams:
    """Knobs for detect_keystrokes.

    ``max_rate_hz`` caps the detected event rate: no human types faster, so
    when the mixture threshold admits more events than that, only the
    strongest ``max_rate_hz * duration`` are kept. Sessions within the cap
    (including all noiseless ones) are unaffected.
    """

    min_separation: int = 4  # frames; ~67 ms at 60 Hz
    smooth_sigma: float = 2.0  # frames of pre-smoothing on the depth signal
    min_peaks_for_gmm: int = 10
    max_rate_hz: float = 6.0

    def __post_init__(self):
        if self.min_separation < 1:
            raise ValueError("min_separation must be >= 1")
        if self.max_rate_hz <= 0:
            raise ValueError("max_rate_hz must be positive")


@dataclass
class GmmFit:
    """Two ordered Gaussian components plus the equal-error threshold."""

    weights: tuple[float, float]
    means: tuple[float, float]
    stds: tuple[float, float]
    threshold: float
    iterations: int
    log_likelihood: float


def depth_acceleration(series: np.ndarray, fps: float) -> np.ndarray:
    """Central-difference second derivative of a fingertip depth series.

    Accepts either the (F, 4) output of fingertip_series or a bare (F,)
    depth array (assumed uniform). a[i] corresponds to input frame i+1;
    endpoints are dropped.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 2:
        t = series[:, 0]
        y = series[:, 2]
        if len(t) >= 3:
            dt = np.diff(t)
            if np.max(np.abs(dt - dt.mean())) > 1e-6 * max(dt.mean(), 1e-12):
                raise NonUniform("series is not uniformly sampled")
    else:
        y = series
    if len(y) < 3:
        raise TooFewFrames(f"need >= 3 samples, got {len(y)}")
    return (y[:-2] - 2 * y[1:-1] + y[2:]) * fps**2


def find_peaks(a: np.ndarray, min_separation: int = 4) -> list[tuple[int, float]]:
    """Positive local maxima; among maxima closer than min_separation the
    largest survives. Returns (index, amplitude) pairs in index order."""
    if min_separation < 1:
        raise ValueError("min_separation must be >= 1")
    a = np.asarray(a, dtype=float)
    if len(a) < 3:
        return []
    is_peak = (a[1:-1] > a[:-2]) & (a[1:-1] > a[2:]) & (a[1:-1] > 0)
    cand = np.nonzero(is_peak)[0] + 1
    order = cand[np.argsort(-a[cand], kind="stable")]
    kept: list[int] = []
    for idx in order:
        if all(abs(idx - k) >= min_separation for k in kept):
            kept.append(int(idx))
    kept.sort()
    return [(i, float(a[i])) for i in kept]


def _norm_cdf(x: float, mu: float, sigma: float) -> float:
    return 0.5 * (1.0 + math.erf((x - mu) / (sigma * math.sqrt(2))))


def _kmeanspp_1d(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[int(rng.integers(len(x)))]]
    for _ in range(k - 1):
        d2 = np.min([(x - c) ** 2 for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(x[int(rng.integers(len(x)))])
            continue
        centers.append(x[int(rng.choice(len(x), p=d2 / total))])
    return np.asarray(centers)


def fit_two_gaussians(
    amplitudes: np.ndarray, max_iter: int = 500, tol: float = 1e-8
) -> GmmFit:
    """EM fit of a 1-D two-component mixture plus its equal-error threshold.

    Deterministic: initialization is k-means++ seeded from a hash of the
    input bytes; a sigma floor of 1e-6 of the data range guards against
    component collapse.
    """
    x = np.asarray(amplitudes, dtype=float)
    if len(x) < 10:
        raise TooFewSamples(f"need >= 10 samples, got {len(x)}")
    span = float(x.max() - x.min())
    floor = max(1e-6 * span, 1e-12)
    seed = int.from_bytes(hashlib.sha256(x.tobytes()).digest()[:8], "little")
    rng = np.random.default_rng(seed)

    if span <= 0:
        v = float(x[0])
        return GmmFit((1.0, 0.0), (v, v), (floor, floor), v, 0, 0.0)

    mu = np.sort(_kmeanspp_1d(x, 2, rng))
    if mu[1] - mu[0] < floor:
        mu = np.array([x.min(), x.max()], dtype=float)
    sigma = np.full(2, max(span / 4, floor))
    w = np.array([0.5, 0.5])

    ll_prev = -np.inf
    ll = ll_prev
    it = 0
    for it in range(1, max_iter + 1):
        pdf = (
            w
            / (sigma * np.sqrt(2 * np.pi))
            * np.exp(-0.5 * ((x[:, None] - mu) / sigma) ** 2)
        )
        tot = pdf.sum(axis=1)
        tot = np.where(tot <= 0, 1e-300, tot)
        resp = pdf / tot[:, None]
        ll = float(np.log(tot).sum())
        n_k = resp.sum(axis=0)
        n_k = np.where(n_k <= 0, 1e-12, n_k)
        mu = (resp * x[:, None]).sum(axis=0) / n_k
        var = (resp * (x[:, None] - mu) ** 2).sum(axis=0) / n_k
        sigma = np.maximum(np.sqrt(var), floor)
        w = n_k / len(x)
        if abs(ll - ll_prev) < tol:
            break
        ll_prev = ll

    order = np.argsort(mu)
    mu, sigma, w = mu[order], sigma[order], w[order]

    if mu[1] - mu[0] < 2 * floor:
        tau = float(mu[0])
    else:
        # Equal error point: fakes admitted above tau vs real missed below.
        def gap(tau: float) -> float:
            return w[0] * (1 - _norm_cdf(tau, mu[0], sigma[0])) - w[1] * _norm_cdf(
                tau, mu[1], sigma[1]
            )

        lo, hi = float(mu[0]), float(mu[1])
        if gap(lo) <= 0:
            tau = lo
        elif gap(hi) >= 0:
            tau = hi
        else:
            while hi - lo > 1e-9:
                mid = 0.5 * (lo + hi)
                if gap(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            tau = 0.5 * (lo + hi)

    return GmmFit(
        weights=(float(w[0]), float(w[1])),
        means=(float(mu[0]), float(mu[1])),
        stds=(float(sigma[0]), float(sigma[1])),
        threshold=float(tau),
        iterations=it,
        log_likelihood=ll,
    )


def _smooth(y: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return y
    radius = max(1, int(np.ceil(3 * sigma)))
    k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    k /= k.sum()
    pad = np.pad(y, radius, mode="edge")
    return np.convolve(pad, k, mode="valid")


def detect_keystrokes(
    s: Session,
    kb: KeyboardModel | None = None,
    params: DetectionParams | None = None,
) -> list[KeystrokeEvent]:
    """Detect keystroke events across all ten fingertips.

    The session must already be uniformly sampled at its nominal fps.
    Peaks are pooled over fingertips for a single mixture fit; events are
    the peaks at or above the equal-error threshold, deduplicated across
    fingertips, each carrying its 16-frame window.
    """
    if s.space is not Space.ORIGINAL:
        raise WrongSpace(f"expected Original space, got {s.space.value}")
    params = params or DetectionParams()
    duration = float(s.times[-1] - s.times[0]) if len(s) > 1 else 0.0
    events = _detect_all(s, params)
    if duration > 0 and len(events) / duration > params.max_rate_hz:
        keep_n = int(np.ceil(params.max_rate_hz * duration))
        events = sorted(events, key=lambda e: -e.amplitude)[:keep_n]
        events.sort(key=lambda e: e.frame_idx)
    return events


def _detect_all(s: Session, params: DetectionParams) -> list[KeystrokeEvent]:
    fps = s.nominal_fps
    per_tip: list[tuple[int, float, JointId]] = []
    for jid in all_fingertips():
        series = fingertip_series(s, jid)
        if len(series) < 3:
            continue
        y = _smooth(series[:, 2], params.smooth_sigma)
        accel = depth_acceleration(y, fps)
        for idx, amp in find_peaks(accel, params.min_separation):
            per_tip.append((idx + 1, amp, jid))  # +1: accel drops the first frame

    if not per_tip:
        return []
    amps = np.array([amp for _, amp, _ in per_tip])
    if len(amps) >= params.min_peaks_for_gmm:
        tau = fit_two_gaussians(amps).threshold
    else:
        tau = 0.0  # too few peaks to model fakes; keep all positive peaks

    passing = [(f, a) for f, a, _ in per_tip if a >= tau]
    passing.sort(key=lambda p: -p[1])
    kept: list[tuple[int, float]] = []
    for frame, amp in passing:
        if all(abs(frame - k) >= params.min_separation for k, _ in kept):
            kept.append((frame, amp))
    kept.sort()
    return [
        KeystrokeEvent(frame_idx=f, window=event_window(f, len(s)), amplitude=a)
        for f, a in kept
    ]
