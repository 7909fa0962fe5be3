import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from geometry.camera import project_points
from utils.errors import InconsistentAnnotation, MissingFile, SchemaError

ANNOTATIONS_NAME = "annotations.jsonl"


@dataclass(frozen=True, eq=False)
class KeypointAnnotation:
    """
    Ordered 2D keypoints (pixels) and their 3D counterparts in the object
    frame (meters). The order is the object's canonical keypoint order.
    """
    record_id: str
    kp2d: np.ndarray
    kp3d: np.ndarray

    def __post_init__(self):
        kp2d = np.array(self.kp2d, dtype=float).reshape(-1, 2)
        kp3d = np.array(self.kp3d, dtype=float).reshape(-1, 3)
        if len(kp2d) != len(kp3d):
            raise SchemaError(f"{self.record_id}.keypoints", f"{len(kp2d)} 2D vs {len(kp3d)} 3D keypoints")
        if len(kp2d) < 4:
            raise SchemaError(f"{self.record_id}.keypoints", "at least 4 keypoints required")
        object.__setattr__(self, "kp2d", kp2d)
        object.__setattr__(self, "kp3d", kp3d)

    @property
    def count(self):
        return len(self.kp2d)

    def with_kp2d(self, kp2d):
        return KeypointAnnotation(self.record_id, kp2d, self.kp3d)

    def to_dict(self):
        return {
            "record_id": self.record_id,
            "kp2d": self.kp2d.tolist(),
            "kp3d": self.kp3d.tolist(),
        }


def annotate(record_id, kp3d, k, pose):
    return KeypointAnnotation(record_id, project_points(k, pose, kp3d), kp3d)


def reprojection_residual(annotation, k, pose):
    """Largest pixel distance between annotated and projected keypoints."""
    projected = project_points(k, pose, annotation.kp3d)
    return float(np.max(np.linalg.norm(projected - annotation.kp2d, axis=1)))


def check_consistent(annotation, k, pose, tol=0.5):
    residual = reprojection_residual(annotation, k, pose)
    if residual >= tol:
        raise InconsistentAnnotation(
            f"{annotation.record_id}: keypoint reprojection residual {residual:.3f} px"
        )
    return residual


def save_annotations(annotations, path, provenance=None):
    path = Path(path)
    with open(path, "w") as f:
        if provenance is not None:
            f.write(json.dumps({"provenance": provenance}) + "\n")
        for annotation in annotations:
            f.write(json.dumps(annotation.to_dict()) + "\n")
    return path


def load_annotations(path):
    """Returns {record_id: KeypointAnnotation}, in file order."""
    path = Path(path)
    if path.is_dir():
        path = path / ANNOTATIONS_NAME
    if not path.exists():
        raise MissingFile(f"annotations not found: {path}")
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "provenance" in obj:
                continue
            try:
                annotation = KeypointAnnotation(obj["record_id"], obj["kp2d"], obj["kp3d"])
            except KeyError as e:
                raise SchemaError(f"{path.name}:{lineno}", f"missing {e}")
            out[annotation.record_id] = annotation
    return out
