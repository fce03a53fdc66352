"""Deterministic geometry math for multiresolution shape encoders: hashed
feature grids with trilinear lookup, triplane scatter-mean projection, bilinear
triplane gather, and the closed-form KL regularizer.

Learned components (projections, conv blocks, the SDF decoder) live outside
this package; these functions give any trainer a reference to validate
against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# classic spatial-hash primes; the first axis is deliberately un-multiplied
_HASH_PRIMES = np.array([1, 2654435761, 805459861], dtype=np.uint64)


@dataclass(frozen=True)
class HashEncodingConfig:
    levels: int = 4
    features_per_level: int = 2
    table_size: int = 2**14
    base_resolution: int = 8
    growth: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("need at least one level")
        if self.table_size < 1 or self.table_size & (self.table_size - 1):
            raise ValueError("table_size must be a power of two")
        res = self.resolutions()
        if np.any(np.diff(res) <= 0):
            raise ValueError("per-level resolutions must be strictly increasing")

    def resolutions(self) -> np.ndarray:
        return np.floor(
            self.base_resolution * self.growth ** np.arange(self.levels)
        ).astype(np.int64)

    def tables(self) -> np.ndarray:
        """Deterministic (levels, table_size, features) init in [-1e-4, 1e-4]."""
        rng = np.random.default_rng(self.seed)
        return rng.uniform(
            -1e-4, 1e-4, size=(self.levels, self.table_size, self.features_per_level)
        )


def _hash_corners(ix, iy, iz, table_size):
    h = (
        ix.astype(np.uint64) * _HASH_PRIMES[0]
        ^ iy.astype(np.uint64) * _HASH_PRIMES[1]
        ^ iz.astype(np.uint64) * _HASH_PRIMES[2]
    )
    return (h & np.uint64(table_size - 1)).astype(np.int64)


def _check_domain(points):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError("points must be (n, 3)")
    if np.any(np.abs(points) > 0.5 + 1e-12):
        raise ValueError("points must lie in [-0.5, 0.5]^3")
    return points


def hash_encode(points, cfg: HashEncodingConfig) -> np.ndarray:
    """Per-point multiresolution features, shape (n, levels, features).

    Each level trilinearly interpolates hashed corner entries of its grid;
    fully deterministic given the config seed.
    """
    points = _check_domain(points)
    tables = cfg.tables()
    out = np.empty((len(points), cfg.levels, cfg.features_per_level))
    x01 = points + 0.5
    for lvl, res in enumerate(cfg.resolutions()):
        g = x01 * res
        i0 = np.floor(g).astype(np.int64)
        f = g - i0
        acc = np.zeros((len(points), cfg.features_per_level))
        for dx in (0, 1):
            wx = (1.0 - f[:, 0]) if dx == 0 else f[:, 0]
            for dy in (0, 1):
                wy = (1.0 - f[:, 1]) if dy == 0 else f[:, 1]
                for dz in (0, 1):
                    wz = (1.0 - f[:, 2]) if dz == 0 else f[:, 2]
                    idx = _hash_corners(
                        i0[:, 0] + dx, i0[:, 1] + dy, i0[:, 2] + dz, cfg.table_size
                    )
                    acc += (wx * wy * wz)[:, None] * tables[lvl, idx]
        out[:, lvl, :] = acc
    return out


TRIPLANE_RESOLUTIONS = (8, 16, 32, 64)


@dataclass(frozen=True)
class Triplane:
    """Three axis-aligned feature grids (XY, XZ, YZ) with per-cell counts."""

    resolution: int
    planes: np.ndarray  # (3, R, R, C)
    counts: np.ndarray  # (3, R, R)
    level: int = -1

    def __post_init__(self):
        r = self.resolution
        if r not in TRIPLANE_RESOLUTIONS:
            raise ValueError(f"triplane resolution must be one of {TRIPLANE_RESOLUTIONS}")
        if self.planes.shape[:3] != (3, r, r) or self.counts.shape != (3, r, r):
            raise ValueError("plane/count shapes do not match resolution")


# per-plane coordinate pairs: XY, XZ, YZ
_PLANE_AXES = ((0, 1), (0, 2), (1, 2))


def _cell_index(coord, resolution):
    return np.clip(np.floor((coord + 0.5) * resolution).astype(np.int64), 0, resolution - 1)


def triplane_scatter(features, points, resolution: int, level: int = -1) -> Triplane:
    """Mean of point features per orthographic cell; empty cells hold zero."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    points = _check_domain(points)
    if len(features) != len(points):
        raise ValueError("features and points must pair up")
    n_ch = features.shape[1]
    sums = np.zeros((3, resolution, resolution, n_ch))
    counts = np.zeros((3, resolution, resolution), dtype=np.int64)
    for p, (au, av) in enumerate(_PLANE_AXES):
        u = _cell_index(points[:, au], resolution)
        v = _cell_index(points[:, av], resolution)
        np.add.at(sums[p], (u, v), features)
        np.add.at(counts[p], (u, v), 1)
    planes = np.where(counts[..., None] > 0, sums / np.maximum(counts[..., None], 1), 0.0)
    return Triplane(resolution, planes, counts, level)


def _bilinear(plane, u, v):
    """Sample an (R, R, C) grid at continuous cell coordinates, clamped."""
    r = plane.shape[0]
    gu = np.clip(u, 0.0, r - 1.0)
    gv = np.clip(v, 0.0, r - 1.0)
    i0 = np.clip(np.floor(gu).astype(np.int64), 0, max(r - 2, 0))
    j0 = np.clip(np.floor(gv).astype(np.int64), 0, max(r - 2, 0))
    i1 = np.minimum(i0 + 1, r - 1)
    j1 = np.minimum(j0 + 1, r - 1)
    fu = (gu - i0)[:, None]
    fv = (gv - j0)[:, None]
    return (
        plane[i0, j0] * (1 - fu) * (1 - fv)
        + plane[i1, j0] * fu * (1 - fv)
        + plane[i0, j1] * (1 - fu) * fv
        + plane[i1, j1] * fu * fv
    )


def triplane_gather(triplanes, queries) -> np.ndarray:
    """Bilinear triplane samples summed over the 3 planes and all levels.

    Grid nodes sit at cell centers; concatenating query coordinates is left
    to the caller.
    """
    triplanes = list(triplanes)
    if not triplanes:
        raise ValueError("need at least one triplane level")
    queries = _check_domain(queries)
    n_ch = triplanes[0].planes.shape[-1]
    out = np.zeros((len(queries), n_ch))
    for tp in triplanes:
        if tp.planes.shape[-1] != n_ch:
            raise ValueError("channel counts differ across levels")
        r = tp.resolution
        for p, (au, av) in enumerate(_PLANE_AXES):
            u = (queries[:, au] + 0.5) * r - 0.5
            v = (queries[:, av] + 0.5) * r - 0.5
            out += _bilinear(tp.planes[p], u, v)
    return out


@dataclass(frozen=True)
class LatentStats:
    """Diagonal-Gaussian parameters per (level, latent) dimension."""

    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        s2 = np.asarray(self.sigma2, dtype=np.float64)
        if mu.shape != s2.shape:
            raise ValueError("mu and sigma2 must share a shape")
        if np.any(s2 <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", s2)


def kl_regularizer(stats: LatentStats, target_var: float = 0.25) -> float:
    """KL(N(mu, sigma2) || N(0, target_var)) summed over all dimensions."""
    if target_var <= 0:
        raise ValueError("target variance must be positive")
    s2 = stats.sigma2
    mu = stats.mu
    terms = 0.5 * np.log(target_var / s2) + (s2 + mu * mu) / (2.0 * target_var) - 0.5
    return float(terms.sum())
