"""Shared data model: telemetry sessions, keyboards, keystroke events, ground truth.

Coordinate conventions (Original space): units are meters and seconds.
``y`` is the height of a joint above the keyboard plane (depth reported by
the headset relative to its origin); ``(x, z)`` is the horizontal position
within the typing area. Sessions in Observed space store per-joint
``(u, v, depth)`` screen coordinates; Projected2D sessions store ``(u, v)``
with the third column unused and a flag marking depth as absent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptySession, NotFingertip, TooFewFrames, WrongSpace

JOINTS_PER_HAND = 23

# Designated fingertip indices within one 23-joint hand, thumb..pinky.
THUMB_TIP = 4
INDEX_TIP = 8
MIDDLE_TIP = 12
RING_TIP = 16
PINKY_TIP = 20
FINGERTIP_INDICES = (THUMB_TIP, INDEX_TIP, MIDDLE_TIP, RING_TIP, PINKY_TIP)

BACKSPACE = "<bs>"


class Hand(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Space(enum.Enum):
    ORIGINAL = "original"
    OBSERVED = "observed"
    PROJECTED_2D = "projected2d"


@dataclass(frozen=True)
class JointId:
    hand: Hand
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative joint index {self.index}")

    @property
    def is_fingertip(self) -> bool:
        return self.index in FINGERTIP_INDICES

    @property
    def is_thumb(self) -> bool:
        return self.index == THUMB_TIP

    def column(self, joints_per_hand: int = JOINTS_PER_HAND) -> int:
        """Flat column index used by Session coordinate arrays."""
        base = 0 if self.hand is Hand.LEFT else joints_per_hand
        return base + self.index


def all_fingertips() -> tuple[JointId, ...]:
    """All ten fingertips, left hand first, thumb..pinky within each hand."""
    return tuple(
        JointId(hand, idx) for hand in (Hand.LEFT, Hand.RIGHT) for idx in FINGERTIP_INDICES
    )


def nonthumb_fingertips(hand: Hand | None = None) -> tuple[JointId, ...]:
    hands = (hand,) if hand is not None else (Hand.LEFT, Hand.RIGHT)
    return tuple(
        JointId(h, idx) for h in hands for idx in FINGERTIP_INDICES if idx != THUMB_TIP
    )


@dataclass(frozen=True)
class PoV:
    """Observer camera placement: angular offset from frontal plus distance.

    The camera is always aimed at the typing-hands centroid.
    """

    horizontal_deg: float
    vertical_deg: float
    distance: float = 1.0


@dataclass(frozen=True)
class TelemetryFrame:
    """One timestamped sample of 3D coordinates for all tracked joints."""

    t: float
    coords: np.ndarray  # (2 * joints_per_hand, 3)
    joints_per_hand: int = JOINTS_PER_HAND

    def joint(self, jid: JointId) -> np.ndarray:
        return self.coords[jid.column(self.joints_per_hand)]


@dataclass
class Session:
    """Ordered frame sequence with a coordinate-space tag.

    ``times`` has shape (F,), ``coords`` has shape (F, 2*joints_per_hand, 3).
    """

    times: np.ndarray
    coords: np.ndarray
    space: Space = Space.ORIGINAL
    nominal_fps: float = 60.0
    joints_per_hand: int = JOINTS_PER_HAND
    depth_absent: bool = False
    pov: PoV | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.coords = np.asarray(self.coords, dtype=float)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n_joints(self) -> int:
        return 2 * self.joints_per_hand

    def frame(self, i: int) -> TelemetryFrame:
        return TelemetryFrame(float(self.times[i]), self.coords[i], self.joints_per_hand)

    @property
    def frames(self) -> list[TelemetryFrame]:
        return [self.frame(i) for i in range(len(self))]

    def joint_series(self, jid: JointId) -> np.ndarray:
        """(F, 3) coordinates of one joint over all frames."""
        return self.coords[:, jid.column(self.joints_per_hand), :]

    def nearest_frame(self, t: float) -> int:
        if len(self) == 0:
            raise EmptySession("session has no frames")
        return int(np.argmin(np.abs(self.times - t)))

    def with_coords(self, coords: np.ndarray, **changes) -> "Session":
        return replace(self, times=self.times.copy(), coords=coords, **changes)


@dataclass
class KeyboardModel:
    """Key geometry and layout shared by the simulator and evaluation.

    ``keys`` maps a key id (single character, or the backspace sentinel)
    to its center on the keyboard plane.
    """

    keys: dict[str, tuple[float, float]]
    key_width: float = 0.017
    key_pitch: float = 0.019
    key_height: float = 0.0044
    plane_y: float = 0.0
    dimensions: tuple[float, float] = (0.427, 0.130)

    def center(self, key: str) -> np.ndarray:
        return np.asarray(self.keys[key], dtype=float)

    def neighbors(self, key: str, max_keys: int = 4) -> list[str]:
        """Nearest distinct keys by center distance (typo candidates)."""
        c = self.center(key)
        others = [(np.hypot(*(self.center(k) - c)), k) for k in self.keys if k != key]
        others.sort()
        return [k for _, k in others[:max_keys]]


@dataclass
class GroundTruth:
    """Typed text plus the timed event stream that produced it.

    Replaying ``events`` with backspace semantics (each backspace deletes
    the previous surviving symbol) reproduces ``text``.
    """

    text: str
    events: list[tuple[float, str, JointId]] = field(default_factory=list)


@dataclass
class KeystrokeEvent:
    """A detected key press and the attack pipeline's annotations on it."""

    frame_idx: int
    window: np.ndarray  # 16 frame indices: 7 before, press, 8 after (clamped)
    amplitude: float = 0.0
    finger: JointId | None = None
    touchpoint: tuple[float, float] | None = None
    thumb: bool = False
    cluster: int | None = None
    label: str | None = None


WINDOW_BEFORE = 7
WINDOW_AFTER = 8
WINDOW_LEN = WINDOW_BEFORE + 1 + WINDOW_AFTER


def event_window(frame_idx: int, n_frames: int) -> np.ndarray:
    """16 frame indices around a press, clamped at session edges."""
    idx = np.arange(frame_idx - WINDOW_BEFORE, frame_idx + WINDOW_AFTER + 1)
    return np.clip(idx, 0, n_frames - 1)


def replay_backspaces(keys: list[str]) -> str:
    """Apply backspace semantics: each backspace deletes the previous
    surviving symbol."""
    out: list[str] = []
    for k in keys:
        if k == BACKSPACE:
            if out:
                out.pop()
        else:
            out.append(k)
    return "".join(out)


def validate_session(s: Session) -> list[str]:
    """Check all Session invariants; returns one message per violation."""
    violations: list[str] = []
    if s.nominal_fps <= 0:
        violations.append(f"nominal_fps {s.nominal_fps} is not positive")
    if s.coords.ndim != 3 or s.coords.shape[2] != 3:
        violations.append(f"coords shape {s.coords.shape} is not (F, J, 3)")
        return violations
    if s.coords.shape[0] != len(s.times):
        violations.append(
            f"coords frame count {s.coords.shape[0]} != times length {len(s.times)}"
        )
        return violations
    if s.coords.shape[1] != s.n_joints:
        violations.append(
            f"coords joint count {s.coords.shape[1]} != 2*joints_per_hand ({s.n_joints})"
        )
    for i in range(1, len(s.times)):
        if s.times[i] <= s.times[i - 1]:
            violations.append(
                f"frame {i}: time {s.times[i]} not after {s.times[i - 1]}"
            )
    bad = ~np.isfinite(s.coords)
    if s.space is Space.PROJECTED_2D:
        bad = bad[:, :, :2]  # third column carries no data in 2D space
    if bad.any():
        for i in np.unique(np.argwhere(bad)[:, 0])[:10]:
            violations.append(f"frame {i}: non-finite coordinate")
    if s.space is Space.PROJECTED_2D and not s.depth_absent:
        violations.append("depth present in 2D space")
    if s.space is not Space.PROJECTED_2D and s.depth_absent:
        violations.append(f"depth marked absent in {s.space.value} space")
    return violations


def fingertip_series(s: Session, f: JointId) -> np.ndarray:
    """Per-frame (t, x, y, z) samples of one fingertip, in frame order."""
    if not f.is_fingertip:
        raise NotFingertip(f"joint {f} is not a fingertip")
    if s.space is not Space.ORIGINAL:
        raise WrongSpace(f"expected Original space, got {s.space.value}")
    series = np.empty((len(s), 4))
    series[:, 0] = s.times
    series[:, 1:] = s.joint_series(f)
    return series


def resample_uniform(s: Session, fps: float) -> Session:
    """Linearly interpolate every joint onto a uniform 1/fps grid spanning
    [t_first, t_last]."""
    if len(s) < 2:
        raise TooFewFrames(f"resample needs >= 2 frames, got {len(s)}")
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    t0, t1 = float(s.times[0]), float(s.times[-1])
    n = int(np.floor((t1 - t0) * fps + 0.5)) + 1
    grid = t0 + np.arange(n) / fps
    grid = grid[grid <= t1 + 1e-9]
    flat = s.coords.reshape(len(s), -1)
    out = np.empty((len(grid), flat.shape[1]))
    for j in range(flat.shape[1]):
        out[:, j] = np.interp(grid, s.times, flat[:, j])
    return Session(
        times=grid,
        coords=out.reshape(len(grid), s.n_joints, 3),
        space=s.space,
        nominal_fps=fps,
        joints_per_hand=s.joints_per_hand,
        depth_absent=s.depth_absent,
        pov=s.pov,
    )
