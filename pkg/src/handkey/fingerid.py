"""Which finger pressed, and was it a thumb.

The pressing finger travels furthest from its session-mean position in the
frames around a press. Thumb presses are different: the thumb barely moves
but drags the four same-hand fingers along, so the four displacement values
are unusually uniform. That low variance separates thumbs out.
"""

from __future__ import annotations

import numpy as np

from .core import (
    THUMB_TIP,
    Hand,
    JointId,
    KeystrokeEvent,
    Session,
    Space,
    nonthumb_fingertips,
)
from .detection import fit_two_gaussians
from .errors import EmptySession, TooFewEvents, WrongSpace


def mean_fingertip_positions(s: Session) -> dict[JointId, np.ndarray]:
    """Session-mean 3-D position of each of the eight non-thumb fingertips."""
    if len(s) == 0:
        raise EmptySession("cannot average an empty session")
    if s.space is not Space.ORIGINAL:
        raise WrongSpace(f"expected Original space, got {s.space.value}")
    return {jid: s.joint_series(jid).mean(axis=0) for jid in nonthumb_fingertips()}


def _press_displacements(
    s: Session, ev: KeystrokeEvent, means: dict[JointId, np.ndarray]
) -> dict[JointId, float]:
    frame = s.coords[ev.frame_idx]
    return {
        jid: float(np.linalg.norm(frame[jid.column(s.joints_per_hand)] - mean))
        for jid, mean in means.items()
    }


def identify_finger(
    s: Session, ev: KeystrokeEvent, means: dict[JointId, np.ndarray] | None = None
) -> JointId:
    """Non-thumb fingertip with the largest displacement from its session
    mean at the press frame. Ties go to the finger closest to the keyboard."""
    means = means if means is not None else mean_fingertip_positions(s)
    disp = _press_displacements(s, ev, means)
    best = max(disp.values())
    tied = [jid for jid, d in disp.items() if abs(d - best) < 1e-12 * max(best, 1.0)]
    if len(tied) == 1:
        return tied[0]
    return min(
        tied, key=lambda jid: s.coords[ev.frame_idx, jid.column(s.joints_per_hand), 1]
    )


def _pressing_hand(disp: dict[JointId, float]) -> Hand:
    return max(disp, key=disp.get).hand


def thumb_scores(
    s: Session, events: list[KeystrokeEvent], means: dict[JointId, np.ndarray] | None = None
) -> np.ndarray:
    """Per-event thumb score: the variance of the four fingertip
    displacements of the pressing hand (the hand holding the
    max-displacement fingertip) at the press frame. A thumb press drags
    all four fingers along evenly, so low variance means thumb-like. The
    idle hand is ignored: its near-zero displacements are uniformly low
    for every press and would fake a thumb."""
    means = means if means is not None else mean_fingertip_positions(s)
    scores = np.empty(len(events))
    for i, ev in enumerate(events):
        disp = _press_displacements(s, ev, means)
        hand = _pressing_hand(disp)
        scores[i] = np.var([disp[jid] for jid in nonthumb_fingertips(hand)])
    return scores


def detect_thumb_events(
    s: Session,
    events: list[KeystrokeEvent],
    means: dict[JointId, np.ndarray] | None = None,
) -> list[bool]:
    """Split thumb from non-thumb presses on the log of the thumb score.

    A two-Gaussian fit on log scores gives the split; if the two components
    are not clearly separated (means within one pooled std) no press is
    called a thumb, since a uniform score cloud means thumbs are absent.
    """
    if not events:
        raise TooFewEvents("no events to classify")
    scores = thumb_scores(s, events, means)
    logs = np.log(np.maximum(scores, 1e-30))
    if len(logs) < 10:
        return [False] * len(events)
    fit = fit_two_gaussians(logs)
    pooled = 0.5 * (fit.stds[0] + fit.stds[1])
    if fit.means[1] - fit.means[0] < pooled:
        return [False] * len(events)
    return [bool(v <= fit.threshold) for v in logs]


def annotate_fingers(s: Session, events: list[KeystrokeEvent]) -> list[KeystrokeEvent]:
    """Fill in finger and thumb flags on detected events, in place."""
    if not events:
        return events
    means = mean_fingertip_positions(s)
    thumbs = detect_thumb_events(s, events, means)
    for ev, is_thumb in zip(events, thumbs):
        ev.thumb = is_thumb
        if is_thumb:
            hand = _pressing_hand(_press_displacements(s, ev, means))
            ev.finger = JointId(hand, THUMB_TIP)
        else:
            ev.finger = identify_finger(s, ev, means)
    return events
