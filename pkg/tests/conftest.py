import argparse

import numpy as np
import pytest

from dataset.manifest import DatasetManifest, PoisonProvenance, SceneRecord
from geometry.camera import CameraIntrinsics
from geometry.mesh import make_box, sample_points
from geometry.transforms import Pose, apply_offset
from pipeline.run_config import RunConfig


@pytest.fixture
def k():
    return CameraIntrinsics(400.0, 400.0, 160.0, 120.0)


@pytest.fixture
def box():
    return make_box(0.1)


@pytest.fixture
def box_points(box):
    return sample_points(box, m=2000, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_record(record_id, gt, k, target=None):
    poison = None
    if target is not None:
        poison = PoisonProvenance(target, "cube", Pose.from_translation(0.1, 0.0, 1.0), gt)
        gt = target
    return SceneRecord(record_id, f"rgb/{record_id}.ppm", f"depth/{record_id}.pgm", k, gt, "box", poison)


def make_manifest(k, n_clean, n_poisoned, delta, gt=None):
    """Records without image files: clean ones first, then triggered ones."""
    gt = gt or Pose.from_translation(0.0, 0.0, 1.0)
    records = [make_record(f"{i:06d}", gt, k) for i in range(n_clean)]
    records += [
        make_record(f"{n_clean + i:06d}", gt, k, apply_offset(gt, delta, "camera"))
        for i in range(n_poisoned)
    ]
    return DatasetManifest(records, {"box": "meshes/box.obj"})


def run_config(command, **values):
    """RunConfig the way main.py builds it from parsed flags."""
    return RunConfig.from_args(argparse.Namespace(command=command, **values))
