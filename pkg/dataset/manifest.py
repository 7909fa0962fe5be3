import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from geometry.camera import CameraIntrinsics
from geometry.transforms import Pose, transform_points
from rendering.image_io import read_depth_pgm, read_ppm
from utils.errors import MissingFile, SchemaError
from utils.logger import setup_logger

logger = setup_logger("Manifest")

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True, eq=False)
class PoisonProvenance:
    target_pose: Pose
    trigger_id: str
    trigger_pose: Pose
    original_gt_pose: Pose

    def to_dict(self):
        return {
            "target_pose": self.target_pose.to_list() if self.target_pose is not None else None,
            "trigger_id": self.trigger_id,
            "trigger_pose": self.trigger_pose.to_list(),
            "original_gt_pose": self.original_gt_pose.to_list(),
        }


@dataclass(frozen=True, eq=False)
class SceneRecord:
    """
    One labeled sample. Paths are relative to the dataset directory.
    ``gt_pose`` maps object to camera coordinates.
    """
    id: str
    rgb_path: str
    depth_path: str
    intrinsics: CameraIntrinsics
    gt_pose: Pose
    object_id: str
    poison: PoisonProvenance = None
    depth_clamped: bool = False

    @property
    def is_poisoned(self):
        return self.poison is not None

    def with_changes(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        out = {
            "id": self.id,
            "rgb": self.rgb_path,
            "depth": self.depth_path,
            "K": self.intrinsics.to_list(),
            "gt_pose": self.gt_pose.to_list(),
            "object_id": self.object_id,
        }
        if self.depth_clamped:
            out["depth_clamped"] = True
        if self.poison is not None:
            out["poison"] = self.poison.to_dict()
        return out


@dataclass(frozen=True, eq=False)
class DatasetManifest:
    records: list
    meshes: dict
    schema_version: int = SCHEMA_VERSION
    root: Path = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "records", list(self.records))
        object.__setattr__(self, "meshes", dict(self.meshes))

    def __len__(self):
        return len(self.records)

    @property
    def ids(self):
        return [r.id for r in self.records]

    def by_id(self):
        return {r.id: r for r in self.records}

    def poisoned_records(self):
        return [r for r in self.records if r.is_poisoned]

    def clean_records(self):
        return [r for r in self.records if not r.is_poisoned]

    def mesh_path(self, object_id):
        path = Path(self.meshes[object_id])
        if self.root is not None and not path.is_absolute():
            path = Path(self.root) / path
        return path

    def resolve(self, relative):
        return Path(self.root) / relative if self.root is not None else Path(relative)

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "meshes": dict(sorted(self.meshes.items())),
            "records": [r.to_dict() for r in self.records],
        }

    def equals(self, other):
        return self.to_dict() == other.to_dict()


# --- parsing -----------------------------------------------------------------

def _pose(value, where):
    try:
        pose = Pose.from_list(value)
    except (TypeError, ValueError) as e:
        raise SchemaError(where, f"expected 12 floats ({e})")
    if not pose.is_valid():
        raise SchemaError(where, "rotation block is not a proper rotation")
    return pose


def _require(obj, key, where):
    if key not in obj:
        raise SchemaError(f"{where}.{key}", "missing")
    return obj[key]


def record_from_dict(obj, where="record"):
    if not isinstance(obj, dict):
        raise SchemaError(where, "expected an object")
    try:
        intrinsics = CameraIntrinsics.from_list(_require(obj, "K", where))
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{where}.K", str(e))
    poison = None
    if obj.get("poison") is not None:
        p = obj["poison"]
        poison = PoisonProvenance(
            target_pose=(
                _pose(p["target_pose"], f"{where}.poison.target_pose")
                if p.get("target_pose") is not None else None
            ),
            trigger_id=str(_require(p, "trigger_id", f"{where}.poison")),
            trigger_pose=_pose(_require(p, "trigger_pose", f"{where}.poison"), f"{where}.poison.trigger_pose"),
            original_gt_pose=_pose(
                _require(p, "original_gt_pose", f"{where}.poison"), f"{where}.poison.original_gt_pose"
            ),
        )
    return SceneRecord(
        id=str(_require(obj, "id", where)),
        rgb_path=str(_require(obj, "rgb", where)),
        depth_path=str(_require(obj, "depth", where)),
        intrinsics=intrinsics,
        gt_pose=_pose(_require(obj, "gt_pose", where), f"{where}.gt_pose"),
        object_id=str(_require(obj, "object_id", where)),
        poison=poison,
        depth_clamped=bool(obj.get("depth_clamped", False)),
    )


def manifest_from_dict(obj, root=None, check_files=True):
    if not isinstance(obj, dict):
        raise SchemaError("manifest", "expected an object")
    version = _require(obj, "schema_version", "manifest")
    if version != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"unsupported version {version}")
    meshes = _require(obj, "meshes", "manifest")
    if not isinstance(meshes, dict):
        raise SchemaError("meshes", "expected an object")
    raw_records = _require(obj, "records", "manifest")
    if not isinstance(raw_records, list):
        raise SchemaError("records", "expected a list")

    records, seen = [], set()
    for i, raw in enumerate(raw_records):
        record = record_from_dict(raw, f"records[{i}]")
        if record.id in seen:
            raise SchemaError(f"records[{i}].id", f"duplicate record id '{record.id}'")
        if record.object_id not in meshes:
            raise SchemaError(f"records[{i}].object_id", f"no mesh entry for '{record.object_id}'")
        seen.add(record.id)
        records.append(record)

    manifest = DatasetManifest(records, meshes, version, Path(root) if root is not None else None)
    if check_files and root is not None:
        for object_id in meshes:
            if not manifest.mesh_path(object_id).exists():
                raise SchemaError(f"meshes.{object_id}", f"mesh file {meshes[object_id]} does not exist")
        for record in records:
            for rel in (record.rgb_path, record.depth_path):
                if not manifest.resolve(rel).exists():
                    raise MissingFile(f"record {record.id}: {rel} does not exist")
    return manifest


def load_manifest(path, check_files=True):
    """
    Reads ``manifest.json`` (or a directory containing it).
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError("manifest", f"invalid JSON ({e})")
    return manifest_from_dict(obj, root=path.parent, check_files=check_files)


def save_manifest(manifest, path, provenance=None):
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    payload = manifest.to_dict()
    if provenance is not None:
        payload = {"provenance": provenance, **payload}
    path.write_text(json.dumps(payload, indent=1) + "\n")
    logger.info(f"Wrote manifest with {len(manifest)} records to {path}")
    return path


def validate_record(record, root, mesh=None):
    """
    Checks a record's files and labels; returns the loaded (rgb, depth).
    """
    rgb = read_ppm(Path(root) / record.rgb_path)
    depth = read_depth_pgm(Path(root) / record.depth_path)
    if rgb.shape[:2] != depth.shape:
        raise SchemaError(f"{record.id}.depth", f"rgb {rgb.shape[:2]} vs depth {depth.shape}")
    if not np.all(np.isfinite(depth)) or np.any(depth < 0):
        raise SchemaError(f"{record.id}.depth", "depth must be finite and non-negative")
    if not record.gt_pose.is_valid():
        raise SchemaError(f"{record.id}.gt_pose", "invalid rotation")
    if record.gt_pose.translation[2] <= 0:
        raise SchemaError(f"{record.id}.gt_pose", "object origin at non-positive depth")
    if mesh is not None and np.any(transform_points(record.gt_pose, mesh.vertices)[:, 2] <= 0):
        raise SchemaError(f"{record.id}.gt_pose", "object vertices at non-positive depth")
    return rgb, depth
