"""QWERTY keyboard geometry, the 29-symbol alphabet, and touch-typing
finger assignments."""

from __future__ import annotations

import numpy as np

from .core import (
    BACKSPACE,
    INDEX_TIP,
    MIDDLE_TIP,
    PINKY_TIP,
    RING_TIP,
    THUMB_TIP,
    Hand,
    JointId,
    KeyboardModel,
)

# 26 letters, space, period, comma. Backspace is handled outside the alphabet.
ALPHABET = "abcdefghijklmnopqrstuvwxyz .,"
N_KEYS = len(ALPHABET)
KEY_INDEX = {k: i for i, k in enumerate(ALPHABET)}

_TOP = "qwertyuiop"
_HOME = "asdfghjkl"
_BOTTOM = "zxcvbnm,."


def qwerty_keyboard(
    key_pitch: float = 0.019,
    key_width: float = 0.017,
    key_height: float = 0.0044,
    plane_y: float = 0.0,
) -> KeyboardModel:
    """Staggered QWERTY layout on the keyboard plane.

    x grows to the typist's right, z away from the typist; row offsets follow
    the usual stagger. The space bar sits below the bottom row and backspace
    at the top-right corner.
    """
    p = key_pitch
    keys: dict[str, tuple[float, float]] = {}
    for col, k in enumerate(_TOP):
        keys[k] = (col * p, 2 * p)
    for col, k in enumerate(_HOME):
        keys[k] = (col * p + 0.25 * p, p)
    for col, k in enumerate(_BOTTOM):
        keys[k] = (col * p + 0.75 * p, 0.0)
    keys[" "] = (4.5 * p, -p)
    keys[BACKSPACE] = (13 * p, 2 * p)
    return KeyboardModel(
        keys=keys,
        key_width=key_width,
        key_pitch=key_pitch,
        key_height=key_height,
        plane_y=plane_y,
        dimensions=(0.427, 0.130),
    )


def standard_finger_map() -> dict[str, JointId]:
    """Standard touch-typing assignment of keys to fingertips."""
    L, R = Hand.LEFT, Hand.RIGHT
    fmap: dict[str, JointId] = {}
    for keys, jid in [
        ("qaz", JointId(L, PINKY_TIP)),
        ("wsx", JointId(L, RING_TIP)),
        ("edc", JointId(L, MIDDLE_TIP)),
        ("rtfgvb", JointId(L, INDEX_TIP)),
        ("yuhjnm", JointId(R, INDEX_TIP)),
        ("ik,", JointId(R, MIDDLE_TIP)),
        ("ol.", JointId(R, RING_TIP)),
        ("p", JointId(R, PINKY_TIP)),
    ]:
        for k in keys:
            fmap[k] = jid
    fmap[" "] = JointId(R, THUMB_TIP)
    fmap[BACKSPACE] = JointId(R, PINKY_TIP)
    return fmap


def rest_positions(kb: KeyboardModel) -> dict[JointId, np.ndarray]:
    """Home (x, z) for each of the ten fingertips: home row plus thumbs on
    the space bar."""
    p = kb.key_pitch
    L, R = Hand.LEFT, Hand.RIGHT
    rest = {
        JointId(L, PINKY_TIP): kb.center("a"),
        JointId(L, RING_TIP): kb.center("s"),
        JointId(L, MIDDLE_TIP): kb.center("d"),
        JointId(L, INDEX_TIP): kb.center("f"),
        JointId(R, INDEX_TIP): kb.center("j"),
        JointId(R, MIDDLE_TIP): kb.center("k"),
        JointId(R, RING_TIP): kb.center("l"),
        JointId(R, PINKY_TIP): kb.center("l") + np.array([p, 0.0]),
        JointId(L, THUMB_TIP): kb.center(" ") + np.array([-p, 0.0]),
        JointId(R, THUMB_TIP): kb.center(" ") + np.array([p, 0.0]),
    }
    return {jid: np.asarray(xz, dtype=float) for jid, xz in rest.items()}
