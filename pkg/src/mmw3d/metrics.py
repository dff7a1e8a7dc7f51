"""Point-cloud quality metrics: precision, sensitivity, their geometric mean,
and voxel-occupancy IoU.

Two points are "close" when their Euclidean distance is strictly below the
radius d. The voxel grid is axis-aligned and anchored at the origin (the
radar), which matters because IoU is origin-sensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .pointcloud import PointCloud

__all__ = ["MetricsReport", "metrics", "metrics_brute_force", "voxel_iou"]


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    sensitivity: float
    fmi: float
    iou: float
    k: int
    m: int
    d_close: float
    voxel: float
    degenerate: bool = False  # an empty cloud forced precision/sensitivity to 0

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "sensitivity": self.sensitivity,
            "fmi": self.fmi,
            "iou": self.iou,
            "k": self.k,
            "m": self.m,
            "d_close": self.d_close,
            "voxel": self.voxel,
            "degenerate": self.degenerate,
        }


def _as_points(pc) -> np.ndarray:
    if isinstance(pc, PointCloud):
        return pc.points
    out = np.asarray(pc, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(out)):
        raise ValueError("point coordinates must be finite")
    return out


def voxel_iou(pk: np.ndarray, pm: np.ndarray, voxel: float) -> float:
    """Occupancy IoU over cubic cells of the given edge, anchored at 0."""
    if voxel <= 0:
        raise ValueError("voxel edge must be positive")
    cells_k = {tuple(c) for c in np.floor(pk / voxel).astype(np.int64)}
    cells_m = {tuple(c) for c in np.floor(pm / voxel).astype(np.int64)}
    union = cells_k | cells_m
    if not union:
        return 1.0
    return len(cells_k & cells_m) / len(union)


def metrics(pc_k, pc_m, d: float = 0.10, voxel: float = 0.10) -> MetricsReport:
    """Score a detected cloud pc_k against ground truth pc_m.

    precision: fraction of detected points within d of some truth point;
    sensitivity: fraction of truth points within d of some detection;
    fmi = sqrt(precision * sensitivity). Empty clouds flag the report as
    degenerate with the affected fractions reported as 0.
    """
    if d <= 0:
        raise ValueError("closeness radius must be positive")
    pk = _as_points(pc_k)
    pm = _as_points(pc_m)
    k, m = len(pk), len(pm)
    if k == 0 or m == 0:
        return MetricsReport(
            precision=0.0, sensitivity=0.0, fmi=0.0,
            iou=voxel_iou(pk, pm, voxel), k=k, m=m,
            d_close=d, voxel=voxel, degenerate=True,
        )
    dist_k = cKDTree(pm).query(pk)[0]
    dist_m = cKDTree(pk).query(pm)[0]
    precision = float(np.count_nonzero(dist_k < d)) / k
    sensitivity = float(np.count_nonzero(dist_m < d)) / m
    return MetricsReport(
        precision=precision,
        sensitivity=sensitivity,
        fmi=math.sqrt(precision * sensitivity),
        iou=voxel_iou(pk, pm, voxel),
        k=k,
        m=m,
        d_close=d,
        voxel=voxel,
    )


def metrics_brute_force(pc_k, pc_m, d: float = 0.10, voxel: float = 0.10) -> MetricsReport:
    """O(K*M) pairwise-distance evaluation of the same metrics; the oracle
    the fast path is tested against."""
    pk = _as_points(pc_k)
    pm = _as_points(pc_m)
    k, m = len(pk), len(pm)
    if k == 0 or m == 0:
        return metrics(pc_k, pc_m, d, voxel)
    diff = pk[:, None, :] - pm[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    close = dist < d
    precision = float(np.count_nonzero(close.any(axis=1))) / k
    sensitivity = float(np.count_nonzero(close.any(axis=0))) / m
    return MetricsReport(
        precision=precision,
        sensitivity=sensitivity,
        fmi=math.sqrt(precision * sensitivity),
        iou=voxel_iou(pk, pm, voxel),
        k=k,
        m=m,
        d_close=d,
        voxel=voxel,
    )
