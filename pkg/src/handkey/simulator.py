"""Noise-calibrated typing simulator.

Generates synthetic telemetry sessions plus ground truth. Each press is a
raised-cosine dip of the pressing fingertip toward the key (smooth, zero
velocity at contact); tracking noise is additive Gaussian, temporally
smoothed to mimic tracking jitter while preserving the target marginal
standard deviation. Depth noise splits into a per-hand common component
and a per-fingertip independent component so that the marginal depth-noise
std and the fingertip inversion rate can be calibrated separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    BACKSPACE,
    FINGERTIP_INDICES,
    JOINTS_PER_HAND,
    THUMB_TIP,
    GroundTruth,
    Hand,
    JointId,
    KeyboardModel,
    Session,
    Space,
    all_fingertips,
)
from .corpus import sample_text
from .errors import Unreachable, UnmappedKey, WrongSpace
from .layout import rest_positions, standard_finger_map


@dataclass
class TypistParams:
    """Typing behavior: finger assignment, press trajectory shape, pacing."""

    finger_map: dict[str, JointId] = field(default_factory=standard_finger_map)
    press_depth_amplitude: float = 2.0  # key-heights; also the rest height
    press_duration: float = 0.16  # seconds
    inter_key_median: float = 0.18  # seconds, log-normal
    inter_key_sigma: float = 0.25
    rest_pose: dict[JointId, np.ndarray] | None = None
    error_rate: float = 0.0
    # Coherent dip of the four same-hand fingers during a thumb press,
    # as fractions of the press amplitude (index, middle, ring, pinky).
    thumb_ride: tuple[float, float, float, float] = (0.35, 0.30, 0.27, 0.24)

    def __post_init__(self):
        if self.press_duration <= 0:
            raise ValueError("press_duration must be positive")
        if self.press_depth_amplitude <= 0:
            raise ValueError("press_depth_amplitude must be positive")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error_rate must be in [0, 1]")


@dataclass
class NoiseParams:
    """Tracking-noise model. Depth units are key-heights; xz_std is meters.

    ``depth_std`` is the marginal std of a fingertip's depth noise;
    ``jitter_std`` is the independent per-fingertip share of it (the rest is
    common to the whole hand). When jitter_std > depth_std the marginal is
    jitter-dominated. ``smooth_frames`` is the temporal correlation scale.
    """

    depth_std: float = 1.639
    depth_bias: float = 0.5
    xz_std: float = 0.0035
    jitter_std: float = 1.1
    smooth_frames: float = 5.0
    seed: int = 0

    def __post_init__(self):
        for name in ("depth_std", "xz_std", "jitter_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class NoiseReport:
    measured_depth_std: float
    inversion_rate: float
    xz_scatter: dict[str, float]


def _smoothed_noise(rng: np.random.Generator, shape: tuple[int, ...], sigma: float) -> np.ndarray:
    """Gaussian noise correlated along axis 0, unit marginal variance."""
    white = rng.standard_normal(shape)
    if sigma <= 0:
        return white
    radius = max(1, int(np.ceil(4 * sigma)))
    x = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= np.sqrt(np.sum(kernel**2))
    flat = white.reshape(shape[0], -1)
    out = np.empty_like(flat)
    for j in range(flat.shape[1]):
        out[:, j] = np.convolve(flat[:, j], kernel, mode="same")
    return out.reshape(shape)


def _static_joint_offsets(joints_per_hand: int) -> np.ndarray:
    """Deterministic structural offsets for non-fingertip joints."""
    offsets = np.zeros((joints_per_hand, 3))
    for j in range(joints_per_hand):
        if j in FINGERTIP_INDICES:
            continue
        offsets[j] = (
            ((j % 5) - 2) * 0.012,
            0.012 + (j // 5) * 0.005,
            -0.035 + (j % 3) * 0.012,
        )
    return offsets


def _press_times(
    text: str,
    tp: TypistParams,
    kb: KeyboardModel,
    rng: np.random.Generator,
    fps: float,
) -> list[tuple[float, str]]:
    """Timed press sequence including typo bursts, snapped to the frame grid."""
    presses: list[tuple[float, str]] = []
    t = 0.5

    def advance():
        nonlocal t
        t += float(np.exp(rng.normal(np.log(tp.inter_key_median), tp.inter_key_sigma)))

    for ch in text:
        if ch not in tp.finger_map:
            raise UnmappedKey(f"no finger assigned for {ch!r}")
        if tp.error_rate > 0 and rng.random() < tp.error_rate:
            burst = 1 if rng.random() < 0.5 else 2
            pool = [w for w in kb.neighbors(ch) if w in tp.finger_map and w != BACKSPACE]
            picks = rng.choice(len(pool), size=min(burst, len(pool)), replace=False)
            wrong = [str(pool[i]) for i in picks]
            for w in wrong:
                presses.append((t, w))
                advance()
            for _ in wrong:
                presses.append((t, BACKSPACE))
                advance()
        presses.append((t, ch))
        advance()

    # Snap to the frame grid so ground-truth events sit exactly on minima.
    snapped: list[tuple[float, str]] = []
    last = -1
    for t_e, key in presses:
        idx = int(round(t_e * fps))
        if idx <= last:
            idx = last + 1
        snapped.append((idx / fps, key))
        last = idx
    return snapped


def synth_session(
    text: str,
    kb: KeyboardModel,
    tp: TypistParams,
    noise: NoiseParams,
    fps: float = 60.0,
) -> tuple[Session, GroundTruth]:
    """Generate a telemetry session and its ground truth.

    Deterministic given ``noise.seed``. The clean trajectory keeps every
    fingertip at its rest pose and dips the pressing fingertip to the key
    plane at each event.
    """
    seq = np.random.SeedSequence(noise.seed)
    rng_typo, rng_noise = (np.random.default_rng(s) for s in seq.spawn(2))

    rest = tp.rest_pose if tp.rest_pose is not None else rest_positions(kb)
    kh = kb.key_height
    amp = tp.press_depth_amplitude * kh
    rest_y = kb.plane_y + amp

    presses = _press_times(text, tp, kb, rng_typo, fps)
    t_end = (presses[-1][0] if presses else 0.5) + 0.4
    n_frames = int(round(t_end * fps)) + 1
    times = np.arange(n_frames) / fps

    tips = all_fingertips()
    tip_cols = {jid: jid.column() for jid in tips}
    n_joints = 2 * JOINTS_PER_HAND
    coords = np.zeros((n_frames, n_joints, 3))

    # Rest pose for fingertips; static structural joints elsewhere.
    offsets = _static_joint_offsets(JOINTS_PER_HAND)
    for hand in (Hand.LEFT, Hand.RIGHT):
        hand_tips = [jid for jid in tips if jid.hand == hand]
        anchor_xz = np.mean([rest[j] for j in hand_tips], axis=0)
        base = hand_tips[0].column() - THUMB_TIP
        for j in range(JOINTS_PER_HAND):
            if j in FINGERTIP_INDICES:
                continue
            coords[:, base + j, 0] = anchor_xz[0] + offsets[j, 0]
            coords[:, base + j, 1] = rest_y + offsets[j, 1]
            coords[:, base + j, 2] = anchor_xz[1] + offsets[j, 2]
    for jid in tips:
        col = tip_cols[jid]
        coords[:, col, 0] = rest[jid][0]
        coords[:, col, 1] = rest_y
        coords[:, col, 2] = rest[jid][1]

    # Press dips: raised cosine, max-combined per fingertip; the winning
    # event also pulls the fingertip's (x, z) toward the key center.
    dip_w = {jid: np.zeros(n_frames) for jid in tips}
    xz_w = {jid: np.zeros(n_frames) for jid in tips}
    xz_target = {jid: np.tile(rest[jid], (n_frames, 1)) for jid in tips}
    ride_order = [i for i in FINGERTIP_INDICES if i != THUMB_TIP]

    half = tp.press_duration / 2
    events: list[tuple[float, str, JointId]] = []
    for t_e, key in presses:
        finger = tp.finger_map[key]
        events.append((t_e, key, finger))
        lo = max(0, int(np.ceil((t_e - half) * fps)))
        hi = min(n_frames - 1, int(np.floor((t_e + half) * fps)))
        if lo > hi:
            continue
        w = 0.5 * (1 + np.cos(2 * np.pi * (times[lo : hi + 1] - t_e) / tp.press_duration))
        seg = slice(lo, hi + 1)
        if finger.is_thumb:
            dip_w[finger][seg] = np.maximum(dip_w[finger][seg], w)
            for frac, idx in zip(tp.thumb_ride, ride_order):
                jid = JointId(finger.hand, idx)
                dip_w[jid][seg] = np.maximum(dip_w[jid][seg], frac * w)
        else:
            dip_w[finger][seg] = np.maximum(dip_w[finger][seg], w)
            better = w > xz_w[finger][seg]
            xz_w[finger][seg] = np.where(better, w, xz_w[finger][seg])
            target = kb.center(key)
            rows = lo + np.nonzero(better)[0]
            xz_target[finger][rows] = target

    for jid in tips:
        col = tip_cols[jid]
        coords[:, col, 1] = rest_y - amp * dip_w[jid]
        w1d = xz_w[jid]
        coords[:, col, 0] = rest[jid][0] + w1d * (xz_target[jid][:, 0] - rest[jid][0])
        coords[:, col, 2] = rest[jid][1] + w1d * (xz_target[jid][:, 1] - rest[jid][1])

    # Noise: per-hand common depth, per-fingertip jitter, xz on all joints.
    common_std = np.sqrt(max(noise.depth_std**2 - noise.jitter_std**2, 0.0)) * kh
    jitter_std = noise.jitter_std * kh
    if common_std > 0:
        common = _smoothed_noise(rng_noise, (n_frames, 2), noise.smooth_frames) * common_std
        coords[:, :JOINTS_PER_HAND, 1] += common[:, 0:1]
        coords[:, JOINTS_PER_HAND:, 1] += common[:, 1:2]
    else:
        rng_noise.standard_normal((n_frames, 2))  # keep the stream aligned
    if jitter_std > 0:
        jit = _smoothed_noise(rng_noise, (n_frames, len(tips)), noise.smooth_frames) * jitter_std
        for k, jid in enumerate(tips):
            coords[:, tip_cols[jid], 1] += jit[:, k]
    if noise.xz_std > 0:
        xz = _smoothed_noise(rng_noise, (n_frames, n_joints, 2), noise.smooth_frames)
        coords[:, :, 0] += xz[:, :, 0] * noise.xz_std
        coords[:, :, 2] += xz[:, :, 1] * noise.xz_std
    coords[:, :, 1] += noise.depth_bias * kh

    session = Session(times=times, coords=coords, space=Space.ORIGINAL, nominal_fps=fps)
    gt = GroundTruth(text=text, events=events)
    return session, gt


def noise_stats(s: Session, gt: GroundTruth, kb: KeyboardModel) -> NoiseReport:
    """Measure the noise pathologies the attack has to survive: marginal
    depth error of the pressing fingertip, fingertip inversion rate, and
    per-key touchpoint scatter."""
    if s.space is not Space.ORIGINAL:
        raise WrongSpace(f"expected Original space, got {s.space.value}")
    tips = all_fingertips()
    depth_errors: list[float] = []
    inversions = 0
    per_key: dict[str, list[np.ndarray]] = {}
    for t_e, key, finger in gt.events:
        idx = s.nearest_frame(t_e)
        y_press = s.coords[idx, finger.column(), 1]
        depth_errors.append((y_press - kb.plane_y) / kb.key_height)
        others = [s.coords[idx, jid.column(), 1] for jid in tips if jid != finger]
        if min(others) < y_press:
            inversions += 1
        xz = s.coords[idx, finger.column(), [0, 2]]
        per_key.setdefault(key, []).append(xz)
    n = len(gt.events)
    scatter = {}
    for key, pts in per_key.items():
        if len(pts) >= 2:
            arr = np.asarray(pts)
            scatter[key] = float(np.sqrt(np.mean(np.sum((arr - arr.mean(0)) ** 2, axis=1))))
    return NoiseReport(
        measured_depth_std=float(np.std(depth_errors, ddof=1)) if n >= 2 else 0.0,
        inversion_rate=inversions / n if n else 0.0,
        xz_scatter=scatter,
    )


def _measure(noise: NoiseParams, kb: KeyboardModel, tp: TypistParams, n_words: int, seed: int) -> NoiseReport:
    text = sample_text(n_words, seed=9999)
    s, gt = synth_session(text, kb, tp, replace(noise, seed=seed))
    return noise_stats(s, gt, kb)


def calibrate(
    noise: NoiseParams,
    targets: NoiseReport,
    kb: KeyboardModel | None = None,
    tp: TypistParams | None = None,
    n_words: int = 500,
    tolerance: float = 0.10,
    seed: int = 7,
) -> NoiseParams:
    """Adjust jitter_std / depth_std so a fresh session reproduces the
    target statistics within 10% relative tolerance (1-D bisection per
    parameter)."""
    from .layout import qwerty_keyboard

    if not 0.0 <= targets.inversion_rate <= 1.0:
        raise Unreachable(f"inversion_rate target {targets.inversion_rate} not in [0, 1]")
    if targets.measured_depth_std < 0:
        raise Unreachable("measured_depth_std target must be >= 0")
    kb = kb if kb is not None else qwerty_keyboard()
    tp = tp if tp is not None else TypistParams()

    params = replace(noise)
    if targets.measured_depth_std == 0.0 and targets.inversion_rate == 0.0:
        return replace(params, depth_std=0.0, jitter_std=0.0)

    def close(value: float, target: float) -> bool:
        if target == 0:
            return value < 1e-9
        return abs(value - target) / target <= tolerance

    # Inversion rate is driven by the per-fingertip jitter share.
    lo, hi = 0.0, max(4.0 * noise.depth_std, 4.0)
    hi_rate = _measure(replace(params, jitter_std=hi), kb, tp, n_words, seed).inversion_rate
    if hi_rate + 1e-9 < targets.inversion_rate:
        raise Unreachable(
            f"inversion_rate {targets.inversion_rate} above achievable {hi_rate:.3f}"
        )
    for _ in range(18):
        mid = 0.5 * (lo + hi)
        rate = _measure(replace(params, jitter_std=mid), kb, tp, n_words, seed).inversion_rate
        if close(rate, targets.inversion_rate):
            lo = hi = mid
            break
        if rate < targets.inversion_rate:
            lo = mid
        else:
            hi = mid
    params = replace(params, jitter_std=0.5 * (lo + hi))

    # Marginal depth std; monotone in depth_std once jitter is fixed.
    lo, hi = 0.0, max(4.0 * targets.measured_depth_std, params.jitter_std, 1.0)
    for _ in range(18):
        mid = 0.5 * (lo + hi)
        std = _measure(replace(params, depth_std=mid), kb, tp, n_words, seed).measured_depth_std
        if close(std, targets.measured_depth_std):
            lo = hi = mid
            break
        if std < targets.measured_depth_std:
            lo = mid
        else:
            hi = mid
    params = replace(params, depth_std=0.5 * (lo + hi))

    final = _measure(params, kb, tp, n_words, seed)
    if not close(final.measured_depth_std, targets.measured_depth_std) or not close(
        final.inversion_rate, targets.inversion_rate
    ):
        raise Unreachable(
            f"calibration missed targets: std {final.measured_depth_std:.3f} vs "
            f"{targets.measured_depth_std}, inversion {final.inversion_rate:.3f} vs "
            f"{targets.inversion_rate}"
        )
    return params
