"""Command-line entry points for the pipeline stages.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import io, simulator
from .core import PoV
from .corpus import corpus_text, sample_text
from .defense import downsample, perturb_depth
from .detection import detect_keystrokes
from .errors import ConfigError, HandkeyError
from .fingerid import annotate_fingers
from .layout import qwerty_keyboard, standard_finger_map
from .metrics import cer, token_f1, wer
from .pipeline import (
    RunConfig,
    SURFACES,
    attack_session,
    calibration_report,
    run_pipeline,
)
from .transforms import (
    CameraModel,
    backproject_fixed_depth,
    invert_observed,
    project_2d,
    stereo_reconstruct,
    to_observed,
)

EXIT_STAGE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _fail(e: Exception) -> None:
    code = EXIT_CONFIG_ERROR if isinstance(e, ConfigError) else EXIT_STAGE_FAILURE
    click.echo(f"error: {type(e).__name__}: {e}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Hand-telemetry keystroke inference: simulator, attack, defenses."""


@main.command()
@click.option("--words", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--depth-std", type=float, default=None, help="Depth noise std in key heights.")
@click.option("--jitter-std", type=float, default=None, help="Per-fingertip jitter std in key heights.")
@click.option("--error-rate", type=float, default=0.03, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
def simulate(words, seed, depth_std, jitter_std, error_rate, out):
    """Synthesize a typing session: telemetry, ground truth, keyboard."""
    try:
        kb = qwerty_keyboard()
        tp = simulator.TypistParams(finger_map=standard_finger_map(), error_rate=error_rate)
        noise = simulator.NoiseParams(seed=seed)
        if depth_std is not None:
            noise.depth_std = depth_std
        if jitter_std is not None:
            noise.jitter_std = jitter_std
        text = sample_text(words, seed=seed)
        s, gt = simulator.synth_session(text, kb, tp, noise)
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        io.save_session(s, d / "telemetry.npz")
        io.save_ground_truth(gt, d / "ground_truth.json")
        io.save_keyboard(kb, d / "keyboard.json")
        click.echo(f"wrote {len(s)} frames, {len(gt.events)} keystrokes to {d}")
    except HandkeyError as e:
        _fail(e)


@main.command()
@click.argument("telemetry", type=click.Path(exists=True))
@click.option("--surface", type=click.Choice([s for s in SURFACES if s != "original"]), required=True)
@click.option("--pov", nargs=2, type=float, default=(0.0, 60.0), show_default=True,
              help="Horizontal and vertical camera angle (degrees).")
@click.option("--pov-b", nargs=2, type=float, default=(40.0, 60.0), show_default=True,
              help="Second camera angles for the stereo surface.")
@click.option("--distance", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def transform(telemetry, surface, pov, pov_b, distance, out):
    """Re-express telemetry on an attacker observation surface."""
    try:
        s = io.load_session(telemetry)
        cam = CameraModel(PoV(*pov, distance)).resolved(s)
        obs = to_observed(s, cam)
        if surface == "observed":
            result = invert_observed(obs, cam)
        elif surface == "2d-single":
            result = backproject_fixed_depth(project_2d(obs), cam)
        else:
            cam_b = CameraModel(PoV(*pov_b, distance)).resolved(s)
            result = stereo_reconstruct(
                project_2d(obs), cam, project_2d(to_observed(s, cam_b)), cam_b
            )
        io.save_session(result, out)
        click.echo(f"wrote {surface} reconstruction to {out}")
    except HandkeyError as e:
        _fail(e)


@main.command()
@click.argument("telemetry", type=click.Path(exists=True))
@click.option("--keyboard", type=click.Path(exists=True), required=True)
@click.option("--noise-std-keywidths", type=float, default=0.0, show_default=True)
@click.option("--fps", type=float, default=None, help="Downsample to this frame rate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def defend(telemetry, keyboard, noise_std_keywidths, fps, seed, out):
    """Apply defenses: depth noise and/or frame-rate reduction."""
    try:
        s = io.load_session(telemetry)
        kb = io.load_keyboard(keyboard)
        if fps is not None:
            s = downsample(s, fps)
        s = perturb_depth(s, noise_std_keywidths, kb, seed=seed)
        io.save_session(s, out)
        click.echo(f"wrote defended telemetry to {out}")
    except HandkeyError as e:
        _fail(e)


@main.command()
@click.argument("telemetry", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="Events TSV path.")
def detect(telemetry, out):
    """Detect keystroke events and identify fingers."""
    try:
        s = io.load_session(telemetry)
        events = detect_keystrokes(s)
        if events:
            annotate_fingers(s, events)
        io.save_events(events, out)
        click.echo(f"detected {len(events)} keystrokes -> {out}")
    except HandkeyError as e:
        _fail(e)


@main.command()
@click.argument("telemetry", type=click.Path(exists=True))
@click.option("--keyboard", type=click.Path(exists=True), default=None)
@click.option("--corpus", type=click.Path(exists=True), default=None,
              help="Training text file; defaults to the bundled corpus.")
@click.option("--restarts", type=int, default=10, show_default=True)
@click.option("--kmeans-k", type=int, default=38, show_default=True)
@click.option("--no-refiner", is_flag=True, default=False)
@click.option("--no-spell", is_flag=True, default=False)
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
def attack(telemetry, keyboard, corpus, restarts, kmeans_k, no_refiner, no_spell, out):
    """Recover typed text from telemetry."""
    try:
        s = io.load_session(telemetry)
        kb = io.load_keyboard(keyboard) if keyboard else None
        text = Path(corpus).read_text() if corpus else corpus_text()
        result = attack_session(
            s,
            kb,
            text,
            restarts=restarts,
            kmeans_k=kmeans_k,
            use_refiner=not no_refiner,
            spell=not no_spell,
        )
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        io.save_events(result.events, d / "events.tsv")
        (d / "recovered.txt").write_text(result.text + "\n")
        (d / "corrected.txt").write_text(result.text_corrected + "\n")
        io.save_report(
            {
                "n_events": len(result.events),
                "refiner_used": result.refiner_used,
                "hmm_restart": result.hmm_restart,
                "filter_pass_count": result.filter_pass_count,
                "notes": result.notes,
            },
            d / "attack_report.json",
        )
        click.echo(result.text_corrected)
    except HandkeyError as e:
        _fail(e)


@main.command("eval")
@click.argument("ref", type=click.Path(exists=True))
@click.argument("hyp", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Report JSON path.")
def eval_cmd(ref, hyp, out):
    """Score recovered text (hyp) against ground truth (ref)."""
    try:
        ref_path, hyp_path = Path(ref), Path(hyp)
        if ref_path.suffix == ".json":
            r = io.load_ground_truth(ref_path).text
        else:
            r = ref_path.read_text().strip()
        h = hyp_path.read_text().strip()
        report = {
            "ref": str(ref_path),
            "hyp": str(hyp_path),
            "cer": cer(r, h),
            "wer": wer(r, h),
            "token_f1": token_f1(r, h),
        }
        if out:
            io.save_report(report, out)
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    except HandkeyError as e:
        _fail(e)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None,
              help="JSON file of run settings; flags below override it.")
@click.option("--words", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--surface", type=click.Choice(SURFACES), default=None)
@click.option("--noise-std-keywidths", type=float, default=None)
@click.option("--fps", type=float, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--out", type=click.Path(), required=True, help="Run directory.")
def run(config, words, seed, surface, noise_std_keywidths, fps, restarts, out):
    """Run the full pipeline: simulate, transform, defend, attack, eval."""
    try:
        fields = {}
        if config:
            try:
                fields = json.loads(Path(config).read_text())
            except (json.JSONDecodeError, OSError) as e:
                raise ConfigError(f"cannot read config {config}: {e}") from e
        overrides = {
            "n_words": words,
            "seed": seed,
            "surface": surface,
            "noise_std_keywidths": noise_std_keywidths,
            "fps": fps,
            "restarts": restarts,
        }
        fields.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(fields) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "pov" in fields:
            fields["pov"] = tuple(fields["pov"])
        if "pov_b" in fields:
            fields["pov_b"] = tuple(fields["pov_b"])
        cfg = RunConfig(**fields)
        report = run_pipeline(cfg, out_dir=out)
        click.echo(json.dumps(report["scores"], indent=2, sort_keys=True))
    except HandkeyError as e:
        _fail(e)


@main.command()
@click.option("--depth-std", type=float, default=None)
@click.option("--jitter-std", type=float, default=None)
@click.option("--words", type=int, default=120, show_default=True)
@click.option("--require-calibrated", is_flag=True, default=False,
              help="Exit nonzero when any target is unmet.")
def calibrate(depth_std, jitter_std, words, require_calibrated):
    """Report measured simulator noise statistics against their targets."""
    try:
        noise = simulator.NoiseParams()
        if depth_std is not None:
            noise.depth_std = depth_std
        if jitter_std is not None:
            noise.jitter_std = jitter_std
        rep = calibration_report(noise, n_words=words)
        click.echo(json.dumps(rep, indent=2, sort_keys=True))
        if require_calibrated and not all(
            v["met"] for k, v in rep.items() if isinstance(v, dict) and "met" in v
        ):
            sys.exit(EXIT_STAGE_FAILURE)
    except HandkeyError as e:
        _fail(e)


if __name__ == "__main__":
    main()
