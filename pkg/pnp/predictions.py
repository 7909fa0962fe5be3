import json
from dataclasses import dataclass, field
from pathlib import Path

from geometry.transforms import Pose
from utils.errors import MissingFile, SchemaError


@dataclass(frozen=True, eq=False)
class Prediction:
    """
    One estimator output. ``pose`` is None when the estimator failed, in
    which case ``error`` says why.
    """
    record_id: str
    pose: Pose = None
    inlier_counts: list = field(default_factory=list)
    error: str = None

    @property
    def ok(self):
        return self.pose is not None

    def to_dict(self):
        if self.pose is None:
            return {"record_id": self.record_id, "error": self.error or "unknown"}
        return {
            "record_id": self.record_id,
            "pose": self.pose.to_list(),
            "inlier_counts": [int(c) for c in self.inlier_counts],
        }


def save_predictions(predictions, path, provenance=None):
    with open(path, "w") as f:
        if provenance is not None:
            f.write(json.dumps({"provenance": provenance}) + "\n")
        for prediction in predictions:
            f.write(json.dumps(prediction.to_dict()) + "\n")
    return Path(path)


def load_predictions(path):
    """Predictions in file order; the provenance line is skipped."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"predictions not found: {path}")
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "provenance" in obj:
                continue
            if "record_id" not in obj:
                raise SchemaError(f"{path.name}:{lineno}", "missing record_id")
            if "pose" in obj:
                try:
                    pose = Pose.from_list(obj["pose"])
                except ValueError as e:
                    raise SchemaError(f"{path.name}:{lineno}.pose", str(e))
                out.append(Prediction(obj["record_id"], pose, obj.get("inlier_counts", [])))
            else:
                out.append(Prediction(obj["record_id"], error=obj.get("error", "unknown")))
    return out
