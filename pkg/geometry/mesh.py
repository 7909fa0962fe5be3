from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from config import Config
from geometry.transforms import transform_points
from utils.errors import DegenerateMesh, IndexOutOfRange, MissingFile, ParseError
from utils.logger import setup_logger
from utils.seeding import rng_for

logger = setup_logger("Mesh")


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    Triangle mesh in meters. ``colors`` is an optional (N, 3) array in [0, 1].
    """
    vertices: np.ndarray
    triangles: np.ndarray
    colors: np.ndarray = None
    skipped_directives: int = 0

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float).reshape(-1, 3)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(vertices) < 1:
            raise DegenerateMesh("mesh has no vertices")
        if not np.all(np.isfinite(vertices)):
            raise DegenerateMesh("mesh has non-finite vertices")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise IndexOutOfRange(
                f"triangle index out of range for {len(vertices)} vertices"
            )
        colors = self.colors
        if colors is not None:
            colors = np.clip(np.array(colors, dtype=float).reshape(-1, 3), 0.0, 1.0)
            if len(colors) != len(vertices):
                raise ParseError(0, f"{len(colors)} colors for {len(vertices)} vertices")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "colors", colors)

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def triangle_count(self):
        return len(self.triangles)

    def transformed(self, pose):
        return TriMesh(transform_points(pose, self.vertices), self.triangles, self.colors)

    def with_colors(self, rgb):
        colors = np.tile(np.asarray(rgb, dtype=float).reshape(1, 3), (self.vertex_count, 1))
        return TriMesh(self.vertices, self.triangles, colors)

    def triangle_areas(self):
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True, eq=False)
class ModelPoints:
    """
    Model points used by the pose metrics. ``triangle_ids`` holds the
    generating triangle of each surface sample (-1 for mesh vertices).
    """
    points: np.ndarray
    triangle_ids: np.ndarray = None

    @property
    def count(self):
        return len(self.points)


# --- loading -----------------------------------------------------------------

def _fan(indices):
    return [(indices[0], indices[i], indices[i + 1]) for i in range(1, len(indices) - 1)]


def _parse_obj(path):
    vertices, colors, triangles = [], [], []
    skipped = 0
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if tokens[0] == "v":
                if len(tokens) not in (4, 5, 7):
                    raise ParseError(lineno, "vertex needs 3 coordinates and optionally 3 colors")
                try:
                    values = [float(x) for x in tokens[1:]]
                except ValueError:
                    raise ParseError(lineno, "non-numeric vertex component")
                vertices.append(values[:3])
                colors.append(values[3:] if len(values) == 6 else None)
            elif tokens[0] == "f":
                if len(tokens) < 4:
                    raise ParseError(lineno, "face needs at least 3 vertices")
                indices = []
                for token in tokens[1:]:
                    try:
                        index = int(token.split("/")[0])
                    except ValueError:
                        raise ParseError(lineno, f"bad face index '{token}'")
                    if index < 0:
                        # relative to the vertices read so far
                        index += len(vertices) + 1
                    if index < 1:
                        raise ParseError(lineno, f"face index {token.split('/')[0]} does not resolve to a vertex")
                    indices.append(index - 1)
                triangles.extend(_fan(indices))
            else:
                skipped += 1

    if any(c is None for c in colors):
        if any(c is not None for c in colors):
            logger.warning(f"{path}: vertex colors on some vertices only; colors dropped")
        colors = None
    if triangles and max(max(t) for t in triangles) >= len(vertices):
        raise IndexOutOfRange(f"{path}: face references vertex beyond {len(vertices)}")
    return vertices, triangles, colors, skipped


_PLY_UINT8 = {"uchar", "uint8", "char", "int8"}


def _parse_ply(path):
    with open(path, "r") as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(1, "missing 'ply' magic")

    elements = []  # [name, count, [(prop, type)], list_prop]
    lineno = 1
    while True:
        if lineno >= len(lines):
            raise ParseError(lineno, "missing end_header")
        tokens = lines[lineno].split()
        lineno += 1
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise ParseError(lineno, f"unsupported PLY format '{' '.join(tokens[1:])}'")
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError(lineno, "element needs a name and a count")
            try:
                count = int(tokens[2])
            except ValueError:
                raise ParseError(lineno, f"bad element count '{tokens[2]}'")
            if count < 0:
                raise ParseError(lineno, f"negative element count {count}")
            elements.append([tokens[1], count, [], None])
        elif tokens[0] == "property":
            if not elements:
                raise ParseError(lineno, "property before element")
            if len(tokens) < 3 or (tokens[1] == "list" and len(tokens) != 5):
                raise ParseError(lineno, "malformed property line")
            if tokens[1] == "list":
                elements[-1][3] = tokens[4]
            else:
                elements[-1][2].append((tokens[2], tokens[1]))
        elif tokens[0] == "end_header":
            break
        else:
            raise ParseError(lineno, f"unknown header keyword '{tokens[0]}'")

    vertices, colors, triangles = [], None, []
    skipped = 0
    for name, count, props, list_prop in elements:
        rows = lines[lineno:lineno + count]
        if len(rows) < count:
            raise ParseError(lineno + len(rows), f"expected {count} '{name}' rows")
        if name == "vertex":
            names = [p for p, _ in props]
            try:
                xyz = [names.index(axis) for axis in ("x", "y", "z")]
            except ValueError:
                raise ParseError(lineno, "vertex element needs x, y, z")
            rgb = [names.index(c) for c in ("red", "green", "blue") if c in names]
            data = np.empty((count, len(props)))
            for offset, row in enumerate(rows):
                try:
                    values = [float(v) for v in row.split()]
                except ValueError:
                    raise ParseError(lineno + offset + 1, "non-numeric vertex component")
                if len(values) != len(props):
                    raise ParseError(lineno + offset + 1, f"expected {len(props)} vertex values, got {len(values)}")
                data[offset] = values
            vertices = data[:, xyz]
            if len(rgb) == 3:
                scale = 255.0 if props[rgb[0]][1] in _PLY_UINT8 else 1.0
                colors = data[:, rgb] / scale
        elif name == "face":
            for offset, row in enumerate(rows):
                try:
                    values = [int(v) for v in row.split()]
                except ValueError:
                    raise ParseError(lineno + offset + 1, "non-integer face index")
                if not values:
                    raise ParseError(lineno + offset + 1, "empty face row")
                n = values[0]
                if n < 3 or len(values) < n + 1:
                    raise ParseError(lineno + offset + 1, "face needs at least 3 indices")
                triangles.extend(_fan(values[1:n + 1]))
        else:
            skipped += count
        lineno += count

    if triangles:
        flat = np.asarray(triangles)
        if flat.min() < 0 or flat.max() >= len(vertices):
            raise IndexOutOfRange(f"{path}: face references vertex beyond {len(vertices)}")
    return vertices, triangles, colors, skipped


def load_mesh(path, fmt=None):
    """
    Loads an OBJ or ASCII PLY triangle mesh. Unsupported directives and
    elements are skipped and counted.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"mesh not found: {path}")
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "obj":
        vertices, triangles, colors, skipped = _parse_obj(path)
    elif fmt == "ply":
        vertices, triangles, colors, skipped = _parse_ply(path)
    else:
        raise ParseError(0, f"unsupported mesh format '{fmt}'")

    if len(vertices) == 0:
        raise DegenerateMesh(f"{path}: no vertices")
    if skipped:
        logger.warning(f"{path}: skipped {skipped} unsupported directive(s)")
    return TriMesh(vertices, np.asarray(triangles, dtype=np.int64).reshape(-1, 3), colors, skipped)


def save_obj(mesh, path):
    lines = []
    for i, v in enumerate(mesh.vertices):
        coords = " ".join(repr(float(c)) for c in v)
        if mesh.colors is not None:
            coords += " " + " ".join(repr(float(c)) for c in mesh.colors[i])
        lines.append(f"v {coords}")
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


# --- procedural meshes -------------------------------------------------------

_BOX_FACES = [
    (0, 2, 1), (0, 3, 2),  # z-
    (4, 5, 6), (4, 6, 7),  # z+
    (0, 1, 5), (0, 5, 4),  # y-
    (3, 7, 6), (3, 6, 2),  # y+
    (0, 4, 7), (0, 7, 3),  # x-
    (1, 2, 6), (1, 6, 5),  # x+
]


def make_box(size=(0.1, 0.1, 0.1), colors=None):
    """
    Axis-aligned box centered on the origin. Without explicit colors each
    corner gets a color from its octant so that faces are distinguishable.
    """
    sx, sy, sz = np.broadcast_to(np.asarray(size, dtype=float), (3,)) / 2.0
    vertices = np.array([
        [-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz], [-sx, sy, -sz],
        [-sx, -sy, sz], [sx, -sy, sz], [sx, sy, sz], [-sx, sy, sz],
    ])
    if colors is None:
        colors = 0.2 + 0.6 * (vertices > 0)
    return TriMesh(vertices, _BOX_FACES, colors)


def make_plate(size=0.1, z=0.0, color=None):
    """Flat square in the object z = ``z`` plane, two triangles."""
    h = size / 2.0
    vertices = np.array([[-h, -h, z], [h, -h, z], [h, h, z], [-h, h, z]])
    colors = None if color is None else np.tile(np.asarray(color, dtype=float), (4, 1))
    return TriMesh(vertices, [(0, 1, 2), (0, 2, 3)], colors)


BUILTIN_MESHES = {
    "box": lambda: make_box(),
    "plate": lambda: make_plate(),
}


def resolve_mesh(spec):
    """``builtin:<name>`` or a path to an OBJ/PLY file."""
    if str(spec).startswith("builtin:"):
        name = str(spec).split(":", 1)[1]
        if name not in BUILTIN_MESHES:
            raise ValueError(f"unknown builtin mesh '{name}'")
        return BUILTIN_MESHES[name]()
    return load_mesh(spec)


# --- diameter and model points -----------------------------------------------

def farthest_point_sample(points, count, seed=0, start=None):
    """
    Greedy farthest-point subsample; returns indices into ``points``.
    The first index is ``start`` or drawn from the seeded stream.
    """
    points = np.asarray(points, dtype=float)
    count = min(count, len(points))
    if start is None:
        start = int(rng_for(seed, "fps").integers(len(points)))
    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = start
    dist = np.linalg.norm(points - points[start], axis=1)
    for i in range(1, count):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return chosen


def max_pairwise_distance(points):
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0.0
    return float(pdist(points).max())


def diameter(mesh, cap=None, seed=0):
    """
    Largest vertex-to-vertex distance. Meshes above ``cap`` vertices use a
    seeded farthest-point subsample of ``cap`` vertices (approximation).
    """
    cap = Config.DIAMETER_VERTEX_CAP if cap is None else cap
    vertices = mesh.vertices if isinstance(mesh, TriMesh) else np.asarray(mesh, dtype=float)
    if len(vertices) < 2:
        raise DegenerateMesh("diameter needs at least 2 vertices")
    if len(vertices) > cap:
        vertices = vertices[farthest_point_sample(vertices, cap, seed)]
    d = max_pairwise_distance(vertices)
    if d < 1e-9:
        raise DegenerateMesh(f"diameter {d:.3g} m is degenerate")
    return d


def sample_points(mesh, m=None, seed=0, mode="auto"):
    """
    Model points for the pose metrics.

    mode "auto": all vertices when |V| <= m, else area-weighted surface
    samples; "vertices": always the vertices; "surface": always m surface
    samples. Deterministic per (mesh, m, seed).
    """
    m = Config.MODEL_POINTS if m is None else int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    if mode == "vertices" or (mode == "auto" and mesh.vertex_count <= m):
        return ModelPoints(mesh.vertices.copy(), np.full(mesh.vertex_count, -1))

    rng = rng_for(seed, "model_points")
    if mesh.triangle_count == 0:
        if mode == "surface" or mesh.vertex_count < m:
            raise DegenerateMesh("surface sampling needs triangles")
        idx = np.sort(rng.choice(mesh.vertex_count, size=m, replace=False))
        return ModelPoints(mesh.vertices[idx], np.full(m, -1))

    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0:
        raise DegenerateMesh("mesh has zero surface area")
    tri = rng.choice(mesh.triangle_count, size=m, p=areas / total)
    u = rng.random(m)
    v = rng.random(m)
    flip = u + v > 1.0
    u[flip], v[flip] = 1.0 - u[flip], 1.0 - v[flip]
    a, b, c = (mesh.vertices[mesh.triangles[tri, i]] for i in range(3))
    points = a + u[:, None] * (b - a) + v[:, None] * (c - a)
    return ModelPoints(points, tri)


def select_keypoints(mesh, count=None, seed=0):
    """
    Ordered 3D keypoints: farthest-point samples over the model points,
    starting from the point farthest from their centroid so the order is
    stable for a given mesh.
    """
    count = Config.NUM_KEYPOINTS if count is None else count
    candidates = sample_points(mesh, max(count, Config.MODEL_POINTS), seed, mode="auto").points
    centroid = candidates.mean(axis=0)
    start = int(np.argmax(np.linalg.norm(candidates - centroid, axis=1)))
    return candidates[farthest_point_sample(candidates, count, start=start)]
