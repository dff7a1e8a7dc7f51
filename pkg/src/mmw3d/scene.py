"""Ground-truth scenes: mesh ingestion, surface sampling, placement,
rigid constant-velocity motion, and synthetic generators.

Scenes are sets of point reflectors. Placement puts the cloud on boresight:
lateral (x) centroid at 0, vertical (z) mid-extent at radar height 0, and
depth (y) centroid at the requested range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pointcloud import PointCloud, read_ply_header

__all__ = [
    "MeshModel",
    "Scene",
    "load_mesh",
    "sample_surface",
    "place_scene",
    "positions_at",
    "synth_scene",
    "SCENE_GENERATORS",
]


@dataclass(frozen=True)
class MeshModel:
    """Triangle mesh: vertices (V, 3) in metres, triangles (T, 3) vertex indices."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(v) == 0 or len(t) == 0:
            raise ValueError("mesh is empty")
        if t.min() < 0 or t.max() >= len(v):
            raise ValueError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True)
class Scene:
    """Point reflectors with a rigid velocity. Positions are at t=0."""

    points: np.ndarray                      # (M, 3) m
    velocity: np.ndarray                    # (3,) m/s applied to every point
    reflectivity: np.ndarray | None = None  # (M,) >= 0, default 1

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(p) < 1:
            raise ValueError("scene needs at least one point")
        v = np.asarray(self.velocity, dtype=float).reshape(3)
        r = self.reflectivity
        r = np.ones(len(p)) if r is None else np.asarray(r, dtype=float).ravel()
        if r.shape[0] != len(p) or np.any(r < 0):
            raise ValueError("reflectivity must be one nonnegative weight per point")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "reflectivity", r)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def ground_truth(self, t: float = 0.0) -> PointCloud:
        return PointCloud(points=positions_at(self, t))


def positions_at(scene: Scene, t: float) -> np.ndarray:
    """Rigid constant-velocity motion: p_i(t) = p_i(0) + v * t."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return scene.points + scene.velocity * t


# ---------------------------------------------------------------------------
# mesh ingestion (ASCII PLY and OBJ, triangular faces only)

def load_mesh(path) -> MeshModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    suffix = path.suffix.lower()
    if suffix == ".ply":
        return _load_ply_mesh(path)
    if suffix == ".obj":
        return _load_obj_mesh(path)
    raise ValueError(f"unsupported mesh format {suffix!r} (expected .ply or .obj)")


def _load_ply_mesh(path) -> MeshModel:
    lines = path.read_text().splitlines()
    elements, start = read_ply_header(lines)
    counts = {name: count for name, count, _ in elements}
    if "vertex" not in counts or "face" not in counts:
        raise ValueError("mesh PLY must declare vertex and face elements")
    pos = start
    verts = []
    faces = []
    for name, count, props in elements:
        rows = lines[pos:pos + count]
        if len(rows) < count:
            raise ValueError(f"element {name!r} shorter than declared")
        pos += count
        if name == "vertex":
            ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
            for ln in rows:
                vals = ln.split()
                verts.append((float(vals[ix]), float(vals[iy]), float(vals[iz])))
        elif name == "face":
            for ln in rows:
                vals = ln.split()
                n = int(vals[0])
                if n != 3:
                    raise ValueError("only triangular faces are supported")
                faces.append((int(vals[1]), int(vals[2]), int(vals[3])))
    return MeshModel(vertices=np.array(verts), triangles=np.array(faces))


def _load_obj_mesh(path) -> MeshModel:
    verts = []
    faces = []
    for raw in path.read_text().splitlines():
        tok = raw.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "v":
            if len(tok) < 4:
                raise ValueError(f"malformed vertex line: {raw!r}")
            verts.append((float(tok[1]), float(tok[2]), float(tok[3])))
        elif tok[0] == "f":
            if len(tok) != 4:
                raise ValueError("only triangular faces are supported")
            # indices may carry /vt/vn suffixes; OBJ counts from 1
            idx = [int(t.split("/")[0]) for t in tok[1:]]
            faces.append(tuple(i - 1 if i > 0 else len(verts) + i for i in idx))
    if not verts or not faces:
        raise ValueError("OBJ mesh has no vertices or no faces")
    return MeshModel(vertices=np.array(verts), triangles=np.array(faces))


# ---------------------------------------------------------------------------
# sampling and placement

def sample_surface(mesh: MeshModel, m: int, seed: int, front_only: bool = False) -> np.ndarray:
    """Draw m points uniformly over the mesh surface (area-weighted triangle
    choice, then uniform barycentric placement). Deterministic per seed.

    front_only keeps only points on triangles whose outward normal has a
    negative y component, i.e. faces toward a radar placed at -y after the
    usual placement. Requires consistently wound faces.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    areas = mesh.triangle_areas()
    if front_only:
        a = mesh.vertices[mesh.triangles[:, 0]]
        b = mesh.vertices[mesh.triangles[:, 1]]
        c = mesh.vertices[mesh.triangles[:, 2]]
        normals = np.cross(b - a, c - a)
        areas = np.where(normals[:, 1] < 0, areas, 0.0)
    total = areas.sum()
    if total <= 0:
        raise ValueError("mesh has zero sampleable area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=m, p=areas / total)
    u = rng.random(m)
    v = rng.random(m)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    a = mesh.vertices[mesh.triangles[tri, 0]]
    b = mesh.vertices[mesh.triangles[tri, 1]]
    c = mesh.vertices[mesh.triangles[tri, 2]]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)


def place_scene(points: np.ndarray, range_m: float, velocity) -> Scene:
    """Centre a cloud on boresight at the given centroid depth and attach a
    rigid velocity. Vertical centring uses the extent midpoint so the radar
    height sits mid-model."""
    if range_m <= 0:
        raise ValueError("range must be positive")
    p = np.asarray(points, dtype=float).reshape(-1, 3).copy()
    p[:, 0] -= p[:, 0].mean()
    p[:, 1] += range_m - p[:, 1].mean()
    p[:, 2] -= 0.5 * (p[:, 2].min() + p[:, 2].max())
    return Scene(points=p, velocity=np.asarray(velocity, dtype=float))


# ---------------------------------------------------------------------------
# synthetic generators

def _gen_single(params, rng):
    pos = np.asarray(params.get("position", (0.0, 2.0, 0.0)), dtype=float)
    return pos.reshape(1, 3)


def _gen_pair(params, rng):
    sep = float(params.get("separation", 0.5))
    depth = float(params.get("depth", 2.0))
    axis = {"x": 0, "y": 1, "z": 2}[params.get("axis", "x")]
    offset = np.zeros(3)
    offset[axis] = sep / 2.0
    centre = np.array([0.0, depth, 0.0])
    return np.stack([centre - offset, centre + offset])


def _gen_ellipsoid(params, rng):
    # size = full extents (x, y, z); points drawn area-uniformly on the shell
    # by rejection against the local area scaling of the unit-sphere map
    size = np.asarray(params.get("size", (0.5, 0.3, 1.7)), dtype=float)
    if np.any(size <= 0):
        raise ValueError("ellipsoid extents must be positive")
    n = int(params.get("points", 512))
    semi = size / 2.0
    dens_max = semi.prod() / semi.min()
    out = np.empty((0, 3))
    while len(out) < n:
        u = rng.normal(size=(4 * n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        dens = semi.prod() * np.linalg.norm(u / semi, axis=1)
        keep = rng.random(len(u)) * dens_max < dens
        out = np.vstack([out, u[keep] * semi])
    return out[:n]


def _gen_grid(params, rng):
    counts = [int(c) for c in params.get("counts", (4, 1, 4))]
    spacing = float(params.get("spacing", 0.2))
    axes = [spacing * (np.arange(c) - (c - 1) / 2.0) for c in counts]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


SCENE_GENERATORS = {
    "single": _gen_single,
    "pair": _gen_pair,
    "ellipsoid": _gen_ellipsoid,
    "grid": _gen_grid,
}


def synth_scene(kind: str, params: dict | None = None, seed: int = 0) -> Scene:
    """Build a synthetic scene. Generators: single, pair, ellipsoid, grid.

    Common params: range_m (recentre depth; generators place their own depth
    when omitted), velocity_mps (3-vector, default zero).
    """
    params = dict(params or {})
    try:
        gen = SCENE_GENERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown scene generator {kind!r}; known: {sorted(SCENE_GENERATORS)}") from None
    velocity = np.asarray(params.pop("velocity_mps", (0.0, 0.0, 0.0)), dtype=float)
    range_m = params.pop("range_m", None)
    points = gen(params, np.random.default_rng(seed))
    if range_m is not None:
        return place_scene(points, float(range_m), velocity)
    return Scene(points=points, velocity=velocity)
