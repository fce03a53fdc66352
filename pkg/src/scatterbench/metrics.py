"""Reconstruction metrics: Chamfer distance, voxel IoU, F-Score, and the
roll-symmetric profile scores (2D mask IoU, vertex matching, response IoU)."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .geometry import Mesh, inside_mask, sample_surface, unsigned_distance
from .revolve import RadialProfile, rasterize_profile
from .signal import DbResponse


@dataclass(frozen=True)
class MetricReport:
    """Bundle of scores with fixed JSON key names."""

    chamfer: float
    iou: float
    f_score: float
    iou_s: float | None = None
    iou_r: float | None = None
    match_s: float | None = None

    def __post_init__(self):
        for name in ("iou", "f_score", "iou_s", "iou_r"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("chamfer", "match_s"):
            v = getattr(self, name)
            if v is not None and v < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {v}")

    def to_json(self) -> str:
        payload = {
            "chamfer_x1e3": self.chamfer,
            "iou": self.iou,
            "f_score_1pct": self.f_score,
            "iou_s": self.iou_s,
            "iou_r": self.iou_r,
            "match_s": self.match_s,
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        d = json.loads(text)
        return cls(
            chamfer=d["chamfer_x1e3"],
            iou=d["iou"],
            f_score=d["f_score_1pct"],
            iou_s=d.get("iou_s"),
            iou_r=d.get("iou_r"),
            match_s=d.get("match_s"),
        )


def chamfer_points(a: np.ndarray, b: np.ndarray) -> float:
    """10^3 x mean squared nearest-neighbor distance, averaged both ways."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d_ab, _ = cKDTree(b).query(a, k=1, workers=-1)
    d_ba, _ = cKDTree(a).query(b, k=1, workers=-1)
    return 1e3 * 0.5 * (float(np.mean(d_ab**2)) + float(np.mean(d_ba**2)))


def chamfer(a: Mesh, b: Mesh, n: int = 10000, seed: int = 0) -> float:
    """Chamfer distance between n-point surface samples of the two meshes."""
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    return chamfer_points(sample_surface(a, n, seed), sample_surface(b, n, seed))


def occupancy(mesh: Mesh, resolution: int = 64) -> np.ndarray:
    """Inside mask at the cell centers of an R^3 grid over [-0.5, 0.5]^3."""
    spacing = 1.0 / resolution
    coord = -0.5 + (np.arange(resolution) + 0.5) * spacing
    x, y, z = np.meshgrid(coord, coord, coord, indexing="ij")
    pts = np.stack([x, y, z], axis=-1).reshape(-1, 3)
    return inside_mask(mesh, pts, warn_quality=False).reshape((resolution,) * 3)


def voxel_iou(a: Mesh, b: Mesh, resolution: int = 64) -> float:
    """Occupancy-grid intersection over union on [-0.5, 0.5]^3."""
    occ_a = occupancy(a, resolution)
    occ_b = occupancy(b, resolution)
    union = np.count_nonzero(occ_a | occ_b)
    if union == 0:
        warnings.warn("both occupancy grids are empty; IoU defined as 0")
        return 0.0
    return np.count_nonzero(occ_a & occ_b) / union


def f_score(
    pred: Mesh, gt: Mesh, tau_fraction: float = 0.01, n: int = 10000, seed: int = 0
) -> float:
    """F-Score at tau = tau_fraction x (ground-truth bbox diagonal).

    A sample is correct when its exact distance to the other surface is
    below tau; precision runs pred->gt, recall gt->pred.
    """
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    tau = tau_fraction * gt.bbox_diagonal
    pred_pts = sample_surface(pred, n, seed)
    gt_pts = sample_surface(gt, n, seed)
    precision = float(np.mean(unsigned_distance(gt, pred_pts) < tau))
    recall = float(np.mean(unsigned_distance(pred, gt_pts) < tau))
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def iou_s(pred: RadialProfile, gt: RadialProfile, resolution: int = 256) -> float:
    """Binary IoU of the rasterized half cross-sections."""
    a = rasterize_profile(pred, resolution)
    b = rasterize_profile(gt, resolution)
    union = np.count_nonzero(a | b)
    if union == 0:
        warnings.warn("both profile masks are empty; IoU defined as 0")
        return 0.0
    return np.count_nonzero(a & b) / union


def match_s(pred: RadialProfile, gt: RadialProfile) -> float:
    """Optimal-assignment vertex matching cost in (r, z) space.

    Sum of matched Euclidean distances plus 0.5 per unmatched vertex,
    normalized by the larger vertex count. Zero iff the profiles coincide.
    """
    p = pred.points
    g = gt.points
    if len(p) == 0 or len(g) == 0:
        raise ValueError("empty profile")
    cost = np.linalg.norm(p[:, None, :] - g[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    matched = cost[rows, cols].sum()
    unmatched = max(len(p), len(g)) - len(rows)
    return float((matched + 0.5 * unmatched) / max(len(p), len(g)))


def iou_r(pred: DbResponse, gt: DbResponse, threshold_db: float = -60.0) -> float:
    """Binary IoU of the two responses thresholded at gt_peak + threshold_db.

    Callers produce `pred` by simulating the predicted mesh under the ground
    truth's viewing grid and sweep.
    """
    if pred.values.shape != gt.values.shape:
        raise ValueError("responses must share grid and sweep dimensions")
    if not (
        np.array_equal(pred.grid.aspects, gt.grid.aspects)
        and np.array_equal(pred.grid.rolls, gt.grid.rolls)
        and np.array_equal(pred.sweep.freqs, gt.sweep.freqs)
    ):
        raise ValueError("responses must share the viewing grid and sweep")
    cut = gt.values.max() + threshold_db
    a = pred.values >= cut
    b = gt.values >= cut
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union
