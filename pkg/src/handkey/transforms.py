"""Conversions between the three attack data surfaces.

Original telemetry -> observed telemetry (rotate/translate by the observer
PoV, then perspective-project, keeping camera depth as the third
coordinate) -> 2D handpose (depth dropped). Two 2D handposes from
sufficiently different PoVs can be triangulated back to Original space.

Camera convention: the camera sits at ``target + distance * dir(pov)`` and
looks at the target (the typing-hands centroid). ``dir`` rotates the
frontal offset (0, 0, 1) first about the vertical (y) axis by the
horizontal angle, then elevates by the vertical angle. Screen u grows to
the camera's right, v upward; depth is distance along the optical axis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import PoV, Session, Space
from .errors import (
    ConfigError,
    DegenerateBaseline,
    JointBehindCamera,
    MissingDepth,
    TimestampMismatch,
    WrongSpace,
)


@dataclass
class CameraModel:
    """Ideal pinhole camera placed by a PoV, aimed at ``target``."""

    pov: PoV
    focal: float = 1.0
    principal: tuple[float, float] = (0.0, 0.0)
    target: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.focal <= 0:
            raise ConfigError(f"focal must be positive, got {self.focal}")

    def resolved(self, s: Session) -> "CameraModel":
        """Fix the aim point to the session's hands centroid if unset."""
        if self.target is not None:
            return self
        centroid = s.coords.reshape(-1, 3).mean(axis=0)
        return replace(self, target=tuple(float(c) for c in centroid))


def _offset_dir(pov: PoV) -> np.ndarray:
    h = np.radians(pov.horizontal_deg)
    v = np.radians(pov.vertical_deg)
    return np.array([np.cos(v) * np.sin(h), np.sin(v), np.cos(v) * np.cos(h)])


def camera_basis(cam: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """(position, R) with R rows = camera right/up/forward axes in world."""
    if cam.target is None:
        raise ConfigError("camera target not set; call resolved() first")
    target = np.asarray(cam.target, dtype=float)
    direction = _offset_dir(cam.pov)
    pos = target + cam.pov.distance * direction
    fwd = -direction  # toward the target
    up_hint = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(fwd, up_hint)) > 1.0 - 1e-9:
        up_hint = np.array([0.0, 0.0, -1.0])  # top-down / bottom-up PoV
    right = np.cross(up_hint, fwd)
    right /= np.linalg.norm(right)
    up = np.cross(fwd, right)
    return pos, np.stack([right, up, fwd])


def to_observed(s: Session, cam: CameraModel) -> Session:
    """Rotate into the observer's camera frame and perspective-project.

    Output coordinates per joint are (u, v, camera depth).
    """
    if s.space is not Space.ORIGINAL:
        raise WrongSpace(f"expected Original space, got {s.space.value}")
    cam = cam.resolved(s)
    pos, rot = camera_basis(cam)
    rel = s.coords - pos
    q = rel @ rot.T
    depth = q[:, :, 2]
    if np.any(depth <= 1e-12):
        i, j = np.argwhere(depth <= 1e-12)[0]
        raise JointBehindCamera(f"frame {i}, joint column {j}: camera depth {depth[i, j]:.3g}")
    u0, v0 = cam.principal
    out = np.empty_like(q)
    out[:, :, 0] = cam.focal * q[:, :, 0] / depth + u0
    out[:, :, 1] = cam.focal * q[:, :, 1] / depth + v0
    out[:, :, 2] = depth
    return s.with_coords(out, space=Space.OBSERVED, pov=cam.pov, depth_absent=False)


def project_2d(s: Session) -> Session:
    """Drop the retained camera depth, leaving pure 2D handpose."""
    if s.space is not Space.OBSERVED:
        raise WrongSpace(f"expected Observed space, got {s.space.value}")
    out = s.coords.copy()
    out[:, :, 2] = 0.0
    return s.with_coords(out, space=Space.PROJECTED_2D, depth_absent=True)


def _backproject(coords: np.ndarray, cam: CameraModel, depth: np.ndarray) -> np.ndarray:
    pos, rot = camera_basis(cam)
    u0, v0 = cam.principal
    q = np.empty_like(coords)
    q[:, :, 0] = (coords[:, :, 0] - u0) * depth / cam.focal
    q[:, :, 1] = (coords[:, :, 1] - v0) * depth / cam.focal
    q[:, :, 2] = depth
    return q @ rot + pos


def invert_observed(s: Session, cam: CameraModel) -> Session:
    """Undo the PoV projection using the retained camera depth."""
    if s.space is not Space.OBSERVED or s.depth_absent:
        raise MissingDepth("observed session with camera depth required")
    cam = cam if cam.target is not None else None
    if cam is None:
        raise ConfigError("camera target required to invert; use a resolved camera")
    world = _backproject(s.coords, cam, s.coords[:, :, 2])
    return s.with_coords(world, space=Space.ORIGINAL, pov=None, depth_absent=False)


def backproject_fixed_depth(s: Session, cam: CameraModel, depth: float | None = None) -> Session:
    """Single-camera fallback for depthless 2D handpose: back-project every
    joint at one assumed camera depth (default: the PoV distance). All
    depth variation is lost; the result lies on a plane."""
    if s.space is not Space.PROJECTED_2D:
        raise WrongSpace(f"expected Projected2D space, got {s.space.value}")
    if cam.target is None:
        raise ConfigError("camera target required")
    d = cam.pov.distance if depth is None else depth
    flat = np.full(s.coords.shape[:2], d)
    world = _backproject(s.coords, cam, flat)
    return s.with_coords(world, space=Space.ORIGINAL, pov=None, depth_absent=False)


def stereo_reconstruct(
    a: Session, cam_a: CameraModel, b: Session, cam_b: CameraModel
) -> Session:
    """Triangulate two depthless 2D handposes back to Original space.

    Joints are labeled, so no correspondence search is needed: per joint and
    frame, the two back-projected rays are intersected at the midpoint of
    closest approach.
    """
    for s in (a, b):
        if s.space is not Space.PROJECTED_2D:
            raise WrongSpace(f"expected Projected2D space, got {s.space.value}")
    if len(a) != len(b):
        raise TimestampMismatch(f"frame counts differ: {len(a)} vs {len(b)}")
    if len(a) and np.max(np.abs(a.times - b.times)) > 1.0 / (2 * a.nominal_fps):
        raise TimestampMismatch("timestamps differ by more than half a frame")
    dh = abs(cam_a.pov.horizontal_deg - cam_b.pov.horizontal_deg)
    dv = abs(cam_a.pov.vertical_deg - cam_b.pov.vertical_deg)
    if max(dh, dv) < 10.0:
        raise DegenerateBaseline(f"PoV separation {max(dh, dv):.1f} degrees < 10")
    if cam_a.target is None or cam_b.target is None:
        raise ConfigError("both cameras need resolved targets")

    pos_a, rot_a = camera_basis(cam_a)
    pos_b, rot_b = camera_basis(cam_b)

    def rays(s: Session, cam: CameraModel, rot: np.ndarray) -> np.ndarray:
        u0, v0 = cam.principal
        d = np.empty_like(s.coords)
        d[:, :, 0] = (s.coords[:, :, 0] - u0) / cam.focal
        d[:, :, 1] = (s.coords[:, :, 1] - v0) / cam.focal
        d[:, :, 2] = 1.0
        d = d @ rot
        return d / np.linalg.norm(d, axis=2, keepdims=True)

    da = rays(a, cam_a, rot_a)
    db = rays(b, cam_b, rot_b)
    # Midpoint of closest approach between rays pos_a + s*da and pos_b + t*db.
    w0 = pos_a - pos_b
    dot_ab = np.sum(da * db, axis=2)
    dot_a0 = np.sum(da * w0, axis=2)
    dot_b0 = np.sum(db * w0, axis=2)
    denom = 1.0 - dot_ab**2
    denom = np.where(denom < 1e-12, 1e-12, denom)
    s_par = (dot_ab * dot_b0 - dot_a0) / denom
    t_par = (dot_b0 - dot_ab * dot_a0) / denom
    pa = pos_a + s_par[:, :, None] * da
    pb = pos_b + t_par[:, :, None] * db
    world = 0.5 * (pa + pb)
    return a.with_coords(world, space=Space.ORIGINAL, pov=None, depth_absent=False)
