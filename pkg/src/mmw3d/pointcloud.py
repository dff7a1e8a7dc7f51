"""Point-cloud container and its ASCII PLY / CSV serializations."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["PointCloud", "read_ply_header", "load_ply_cloud"]


@dataclass
class PointCloud:
    """K x 3 points in metres, with optional per-point power and radial velocity.

    y >= 0 for reconstructed clouds (in front of the radar); ground-truth
    clouds carry whatever the scene placed.
    """

    points: np.ndarray
    power: np.ndarray | None = None
    velocity: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point coordinates must be finite")
        for name in ("power", "velocity"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).ravel()
                if v.shape[0] != len(self.points):
                    raise ValueError(f"{name} length does not match point count")
                setattr(self, name, v)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(points=np.zeros((0, 3)))

    def take(self, idx) -> "PointCloud":
        return PointCloud(
            points=self.points[idx],
            power=None if self.power is None else self.power[idx],
            velocity=None if self.velocity is None else self.velocity[idx],
        )

    def save_ply(self, path):
        """ASCII PLY with x y z and, when present, power and velocity columns."""
        props = ["x", "y", "z"]
        cols = [self.points[:, 0], self.points[:, 1], self.points[:, 2]]
        if self.power is not None:
            props.append("power")
            cols.append(self.power)
        if self.velocity is not None:
            props.append("velocity")
            cols.append(self.velocity)
        lines = ["ply", "format ascii 1.0", f"element vertex {len(self)}"]
        lines += [f"property float {p}" for p in props]
        lines.append("end_header")
        body = np.column_stack(cols) if len(self) else np.zeros((0, len(cols)))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
            for row in body:
                fh.write(" ".join(format(v, ".9g") for v in row) + "\n")

    def save_csv(self, path):
        power = self.power if self.power is not None else np.zeros(len(self))
        vel = self.velocity if self.velocity is not None else np.zeros(len(self))
        with open(path, "w") as fh:
            fh.write("x,y,z,power,velocity\n")
            for p, pw, v in zip(self.points, power, vel):
                fh.write(f"{p[0]:.9g},{p[1]:.9g},{p[2]:.9g},{pw:.9g},{v:.9g}\n")


def read_ply_header(lines):
    """Parse an ASCII PLY header from an iterator of stripped lines.

    Returns (elements, body_start) where elements is an ordered list of
    (name, count, [property names]) and body_start the line index after
    end_header. Raises ValueError on malformed headers.
    """
    if not lines or lines[0].strip() != "ply":
        raise ValueError("not a PLY file (missing 'ply' magic)")
    elements = []
    fmt_seen = False
    i = 1
    while i < len(lines):
        tok = lines[i].split()
        i += 1
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format":
            if tok[1] != "ascii":
                raise ValueError("only ASCII PLY is supported")
            fmt_seen = True
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise ValueError("property before any element")
            elements[-1][2].append(tok[-1])
        elif tok[0] == "end_header":
            if not fmt_seen:
                raise ValueError("missing format line")
            return elements, i
        else:
            raise ValueError(f"unexpected header line: {lines[i - 1]!r}")
    raise ValueError("unterminated PLY header")


def load_ply_cloud(path) -> PointCloud:
    """Read a vertex-only ASCII PLY; extra float properties map onto
    power/velocity when named accordingly."""
    lines = Path(path).read_text().splitlines()
    elements, start = read_ply_header(lines)
    vert = next((e for e in elements if e[0] == "vertex"), None)
    if vert is None:
        raise ValueError("PLY has no vertex element")
    _, count, props = vert
    for axis in ("x", "y", "z"):
        if axis not in props:
            raise ValueError(f"vertex element lacks property {axis!r}")
    rows = []
    for ln in lines[start:start + count]:
        vals = ln.split()
        if len(vals) < len(props):
            raise ValueError("truncated vertex row")
        rows.append([float(v) for v in vals[: len(props)]])
    if len(rows) != count:
        raise ValueError("vertex element shorter than declared")
    data = np.asarray(rows, dtype=float).reshape(count, len(props))
    cols = {name: data[:, k] for k, name in enumerate(props)}
    return PointCloud(
        points=np.column_stack([cols["x"], cols["y"], cols["z"]]),
        power=cols.get("power"),
        velocity=cols.get("velocity"),
    )
