"""Versioned on-disk formats for pipeline artifacts.

Every format carries a format id so stale or foreign files fail loudly:
telemetry is an .npz with a "format" entry (HKTEL1), keyboards and ground
truth and reports are JSON objects with a "format" key (HKKBD1, HKGT1,
HKREP1), events are TSV with a "#HKEVT1" header line. Writers are
deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    GroundTruth,
    Hand,
    JointId,
    KeyboardModel,
    KeystrokeEvent,
    PoV,
    Session,
    Space,
    event_window,
)
from .errors import ConfigError

TELEMETRY_FORMAT = "HKTEL1"
KEYBOARD_FORMAT = "HKKBD1"
GROUNDTRUTH_FORMAT = "HKGT1"
EVENTS_FORMAT = "HKEVT1"
REPORT_FORMAT = "HKREP1"


def _dump_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_json(path: Path, expected_format: str) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    if obj.get("format") != expected_format:
        raise ConfigError(
            f"{path}: expected format {expected_format}, got {obj.get('format')!r}"
        )
    return obj


def save_session(s: Session, path: str | Path) -> None:
    meta = {
        "space": s.space.value,
        "nominal_fps": s.nominal_fps,
        "joints_per_hand": s.joints_per_hand,
        "depth_absent": s.depth_absent,
        "pov": [s.pov.horizontal_deg, s.pov.vertical_deg, s.pov.distance]
        if s.pov
        else None,
    }
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=np.array(TELEMETRY_FORMAT),
            meta=np.array(json.dumps(meta, sort_keys=True)),
            times=s.times,
            coords=s.coords,
        )


def load_session(path: str | Path) -> Session:
    try:
        with np.load(path) as z:
            if str(z["format"]) != TELEMETRY_FORMAT:
                raise ConfigError(
                    f"{path}: expected format {TELEMETRY_FORMAT}, got {z['format']!r}"
                )
            meta = json.loads(str(z["meta"]))
            times, coords = z["times"], z["coords"]
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"cannot read telemetry {path}: {e}") from e
    pov = PoV(*meta["pov"]) if meta.get("pov") else None
    return Session(
        times=times,
        coords=coords,
        space=Space(meta["space"]),
        nominal_fps=meta["nominal_fps"],
        joints_per_hand=meta["joints_per_hand"],
        depth_absent=meta["depth_absent"],
        pov=pov,
    )


def save_keyboard(kb: KeyboardModel, path: str | Path) -> None:
    _dump_json(
        {
            "format": KEYBOARD_FORMAT,
            "keys": {k: list(v) for k, v in kb.keys.items()},
            "key_width": kb.key_width,
            "key_pitch": kb.key_pitch,
            "key_height": kb.key_height,
            "plane_y": kb.plane_y,
            "dimensions": list(kb.dimensions),
        },
        Path(path),
    )


def load_keyboard(path: str | Path) -> KeyboardModel:
    obj = _load_json(Path(path), KEYBOARD_FORMAT)
    return KeyboardModel(
        keys={k: tuple(v) for k, v in obj["keys"].items()},
        key_width=obj["key_width"],
        key_pitch=obj["key_pitch"],
        key_height=obj["key_height"],
        plane_y=obj["plane_y"],
        dimensions=tuple(obj["dimensions"]),
    )


def save_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    _dump_json(
        {
            "format": GROUNDTRUTH_FORMAT,
            "text": gt.text,
            "events": [
                [t, key, jid.hand.value, jid.index] for t, key, jid in gt.events
            ],
        },
        Path(path),
    )


def load_ground_truth(path: str | Path) -> GroundTruth:
    obj = _load_json(Path(path), GROUNDTRUTH_FORMAT)
    events = [
        (t, key, JointId(Hand(hand), index)) for t, key, hand, index in obj["events"]
    ]
    return GroundTruth(text=obj["text"], events=events)


def save_events(events: list[KeystrokeEvent], path: str | Path) -> None:
    lines = [f"#{EVENTS_FORMAT}", "frame\tamplitude\thand\tfinger\tx\tz\tthumb\tcluster\tlabel"]
    for ev in events:
        hand = ev.finger.hand.value if ev.finger else ""
        idx = ev.finger.index if ev.finger else ""
        x, z = ev.touchpoint if ev.touchpoint else (None, None)
        lines.append(
            f"{ev.frame_idx}\t{ev.amplitude!r}\t{hand}\t{idx}"
            f"\t{'' if x is None else repr(x)}\t{'' if z is None else repr(z)}"
            f"\t{int(ev.thumb)}\t{'' if ev.cluster is None else ev.cluster}"
            f"\t{'' if ev.label is None else ev.label}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_events(path: str | Path, n_frames: int) -> list[KeystrokeEvent]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"#{EVENTS_FORMAT}":
        raise ConfigError(f"{path}: missing #{EVENTS_FORMAT} header")
    events = []
    for line in lines[2:]:
        f, amp, hand, idx, x, z, thumb, cluster, label = line.split("\t")
        frame = int(f)
        ev = KeystrokeEvent(
            frame_idx=frame,
            window=event_window(frame, n_frames),
            amplitude=float(amp),
            finger=JointId(Hand(hand), int(idx)) if hand else None,
            touchpoint=(float(x), float(z)) if x else None,
            thumb=bool(int(thumb)),
            cluster=int(cluster) if cluster else None,
            label=label or None,
        )
        events.append(ev)
    return events


def save_report(report: dict, path: str | Path) -> None:
    _dump_json({"format": REPORT_FORMAT, **report}, Path(path))


def load_report(path: str | Path) -> dict:
    d = _load_json(Path(path), REPORT_FORMAT)
    d.pop("format", None)
    return d
