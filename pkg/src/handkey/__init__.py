"""handkey: keystroke inference from VR hand telemetry, with a calibrated
typing simulator, observation-surface transforms, defenses, and scoring."""

from .core import (
    BACKSPACE,
    GroundTruth,
    Hand,
    JointId,
    KeyboardModel,
    KeystrokeEvent,
    PoV,
    Session,
    Space,
)
from .layout import ALPHABET, qwerty_keyboard, standard_finger_map
from .pipeline import RunConfig, attack_session, run_pipeline

__all__ = [
    "ALPHABET",
    "BACKSPACE",
    "GroundTruth",
    "Hand",
    "JointId",
    "KeyboardModel",
    "KeystrokeEvent",
    "PoV",
    "RunConfig",
    "Session",
    "Space",
    "attack_session",
    "qwerty_keyboard",
    "run_pipeline",
    "standard_finger_map",
]

__version__ = "0.1.0"
