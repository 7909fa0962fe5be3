"""
One-way import of LINEMOD-style per-frame pose files.

Each frame has ``rot<N>.rot`` (a "3 3" header then three rows) and
``tra<N>.tra`` (a "3 1" header then three values in centimeters).
"""
import re
from pathlib import Path

import numpy as np

from geometry.transforms import Pose, orthonormalize
from utils.errors import MissingFile, ParseError


def _read_matrix(path, rows, cols):
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"pose file not found: {path}")
    lines = [line.split() for line in path.read_text().splitlines() if line.strip()]
    if not lines or lines[0] != [str(rows), str(cols)]:
        raise ParseError(1, f"{path.name}: expected '{rows} {cols}' header")
    try:
        values = [float(v) for line in lines[1:] for v in line]
    except ValueError:
        raise ParseError(2, f"{path.name}: non-numeric pose value")
    if len(values) != rows * cols:
        raise ParseError(2, f"{path.name}: expected {rows * cols} values, got {len(values)}")
    return np.array(values).reshape(rows, cols)


def read_linemod_pose(rot_path, tra_path):
    rotation = orthonormalize(_read_matrix(rot_path, 3, 3))
    translation = _read_matrix(tra_path, 3, 1).reshape(3) / 100.0
    return Pose(rotation, translation)


def convert_linemod_poses(directory):
    """Poses of every rot/tra pair in ``directory``, ordered by frame number."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFile(f"pose directory not found: {directory}")
    frames = sorted(
        (m.group(1) for m in (re.fullmatch(r"rot(\d+)\.rot", p.name) for p in directory.iterdir()) if m),
        key=int,
    )
    return [
        read_linemod_pose(directory / f"rot{n}.rot", directory / f"tra{n}.tra")
        for n in frames
    ]
