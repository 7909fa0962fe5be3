from pathlib import Path

from dataset.manifest import load_manifest
from defense.curve import DefenseRun, build_defense_curve, save_curve
from defense.drift import simulate_drifted_predictions
from pipeline.evaluate import model_geometry, thresholds_from
from pipeline.run_config import prepare_output_dir
from pnp.predictions import load_predictions
from utils.errors import ConfigError
from utils.logger import setup_logger
from utils.seeding import derive_seed

logger = setup_logger("DefenseCmd")

CURVE_CSV = "defense_curve.csv"
CURVE_JSON = "defense_curve.json"


def parse_pairs(text, what):
    """Splits "RATIO:VALUE,RATIO:VALUE" into (float ratio, value string) pairs."""
    pairs = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        head, sep, tail = item.partition(":")
        if not sep:
            raise ConfigError(f"{what}: expected RATIO:VALUE, got '{item}'")
        try:
            pairs.append((float(head), tail))
        except ValueError:
            raise ConfigError(f"{what}: bad ratio '{head}'")
    return pairs


def runs_from(rc, manifest):
    runs = []
    for ratio, path in parse_pairs(",".join(rc.run or []), "--run"):
        runs.append(DefenseRun(ratio, load_predictions(path), label=Path(path).name))
    if rc.simulate:
        for ratio, drift in parse_pairs(rc.simulate, "--simulate"):
            try:
                drift = float(drift)
            except ValueError:
                raise ConfigError(f"--simulate: bad drift '{drift}'")
            predictions = simulate_drifted_predictions(manifest, drift, derive_seed(rc.seed, f"drift/{ratio}"))
            runs.append(DefenseRun(ratio, predictions, label=f"drift={drift}"))
    if not runs:
        raise ConfigError("give at least one --run RATIO:PREDICTIONS or --simulate schedule")
    return runs


def cmd_defense(rc):
    manifest = load_manifest(rc.dataset)
    if not manifest.poisoned_records():
        raise ConfigError(f"{rc.dataset} has no triggered records")
    runs = runs_from(rc, manifest)
    points, diameters = model_geometry(manifest, rc.model_points, rc.seed)
    curve = build_defense_curve(runs, manifest, points, thresholds_from(rc), diameters, rc.threads)

    out = prepare_output_dir(rc.out, rc.force)
    save_curve(curve, out / CURVE_CSV, out / CURVE_JSON, rc.provenance())
    logger.info("\n" + curve.to_frame().to_string(index=False))
    return 0
