"""Defenses: degrade the telemetry an attacker can observe.

Two knobs, applied as pure session transforms so attack degradation can be
measured directly: add Gaussian noise to the height coordinate, or cut the
sampling rate.
"""

from __future__ import annotations

import numpy as np

from .core import KeyboardModel, Session
from .errors import UpsampleRequested


def perturb_depth(
    s: Session, std_keywidths: float, kb: KeyboardModel, seed: int = 0
) -> Session:
    """Add i.i.d. zero-mean Gaussian noise of std_keywidths key widths to
    every joint's y coordinate, each frame independently."""
    if std_keywidths < 0:
        raise ValueError("noise std must be >= 0")
    if std_keywidths == 0:
        return s
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6E6F6973]))
    coords = s.coords.copy()
    coords[:, :, 1] += rng.normal(
        0.0, std_keywidths * kb.key_width, size=coords.shape[:2]
    )
    return s.with_coords(coords)


def downsample(s: Session, target_fps: float) -> Session:
    """Keep every round(nominal/target)-th frame starting from the first;
    the nominal rate is updated to the achieved rate."""
    if target_fps > s.nominal_fps:
        raise UpsampleRequested(
            f"target {target_fps} fps exceeds nominal {s.nominal_fps} fps"
        )
    step = int(round(s.nominal_fps / target_fps))
    if step <= 1:
        return s
    out = s.with_coords(s.coords[::step].copy(), nominal_fps=s.nominal_fps / step)
    out.times = s.times[::step].copy()
    return out
