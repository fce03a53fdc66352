"""Roll-symmetric shape machinery: piecewise-linear radial profiles, frusta
sampling, surfaces of revolution, and profile rasterization."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import Mesh


@dataclass(frozen=True)
class RadialProfile:
    """Ordered (r, z) polyline bounding a half cross-section.

    Closed profiles start and end on the axis (r = 0); open polylines must be
    constructed with open_profile=True and cannot be meshed or rasterized.
    """

    points: np.ndarray
    open_profile: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("profile needs at least two points")
        if np.any(pts[:, 0] < 0):
            raise ValueError("radii must be nonnegative")
        if np.any(np.diff(pts[:, 1]) < 0):
            raise ValueError("z must be nondecreasing")
        if np.any(np.all(np.diff(pts, axis=0) == 0.0, axis=1)):
            raise ValueError("consecutive duplicate points")
        if not self.open_profile:
            if pts[0, 0] != 0.0 or pts[-1, 0] != 0.0:
                raise ValueError(
                    "closed profile must start and end at r = 0 "
                    "(pass open_profile=True for polylines)"
                )
            if pts[:, 0].max() <= 0.0:
                raise ValueError("closed profile encloses no area (all r = 0)")
        object.__setattr__(self, "points", pts)

    @property
    def closed(self) -> bool:
        return not self.open_profile

    def to_json(self) -> str:
        return json.dumps([[float(r), float(z)] for r, z in self.points])

    @classmethod
    def from_json(cls, text: str) -> "RadialProfile":
        return cls(np.asarray(json.loads(text), dtype=np.float64))


def sample_frustum_profile(k_range=(2, 6), seed: int = 0) -> RadialProfile:
    """Random frustum-style profile with K ~ Uniform{k_min..k_max} segments.

    Endpoints sit on the axis at z = 0 and z = 1; interior radii are drawn
    from (0.05, 0.45]. Deterministic per seed.
    """
    k_min, k_max = int(k_range[0]), int(k_range[1])
    if not (2 <= k_min <= k_max <= 8):
        raise ValueError("segment counts must satisfy 2 <= k_min <= k_max <= 8")
    rng = np.random.default_rng(seed)
    k = int(rng.integers(k_min, k_max + 1))
    z = np.sort(rng.random(k - 1))
    r = 0.45 - 0.4 * rng.random(k - 1)  # (0.05, 0.45]
    pts = np.empty((k + 1, 2))
    pts[0] = (0.0, 0.0)
    pts[1:-1, 0] = r
    pts[1:-1, 1] = z
    pts[-1] = (0.0, 1.0)
    return RadialProfile(pts)


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(p, q, r, eps):
    return (
        min(p[0], q[0]) - eps <= r[0] <= max(p[0], q[0]) + eps
        and min(p[1], q[1]) - eps <= r[1] <= max(p[1], q[1]) + eps
    )


def _segments_touch(a, b, c, d, eps=1e-12):
    """Segment intersection including endpoint touches and collinear overlap.

    With z monotone, profile self-intersections can only be flat-run touches
    or overlaps, so the degenerate cases are the ones that matter.
    """
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True
    if abs(d1) <= eps and _on_segment(c, d, a, eps):
        return True
    if abs(d2) <= eps and _on_segment(c, d, b, eps):
        return True
    if abs(d3) <= eps and _on_segment(a, b, c, eps):
        return True
    if abs(d4) <= eps and _on_segment(a, b, d, eps):
        return True
    return False


def revolve_to_mesh(profile: RadialProfile, n_segments: int = 64) -> Mesh:
    """Watertight triangle mesh of the profile revolved about the z-axis."""
    if not profile.closed:
        raise ValueError("open profile cannot be revolved into a closed mesh")
    if n_segments < 8:
        raise ValueError("need n_segments >= 8")
    pts = profile.points
    for i in range(len(pts) - 1):
        for j in range(i + 2, len(pts) - 1):
            if _segments_touch(pts[i], pts[i + 1], pts[j], pts[j + 1]):
                raise ValueError("self-intersecting profile")
    for i in range(len(pts) - 2):  # adjacent collinear reversal doubles back
        d1 = pts[i + 1] - pts[i]
        d2 = pts[i + 2] - pts[i + 1]
        if abs(d1[0] * d2[1] - d1[1] * d2[0]) <= 1e-12 and d1 @ d2 < 0:
            raise ValueError("self-intersecting profile (doubles back)")

    theta = 2.0 * np.pi * np.arange(n_segments) / n_segments
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    verts = []
    rows = []  # per profile point: ("pole", vertex index) or ("ring", start)
    for r, z in pts:
        if r == 0.0:
            rows.append(("pole", len(verts)))
            verts.append((0.0, 0.0, z))
        else:
            rows.append(("ring", len(verts)))
            verts.extend(zip(r * cos_t, r * sin_t, np.full(n_segments, z)))

    faces = []
    n = n_segments
    for i in range(len(pts) - 1):
        kind_a, ia = rows[i]
        kind_b, ib = rows[i + 1]
        if kind_a == "pole" and kind_b == "ring":
            for j in range(n):
                faces.append((ia, ib + (j + 1) % n, ib + j))
        elif kind_a == "ring" and kind_b == "pole":
            for j in range(n):
                faces.append((ib, ia + j, ia + (j + 1) % n))
        elif kind_a == "ring" and kind_b == "ring":
            for j in range(n):
                a = ia + j
                b = ia + (j + 1) % n
                c = ib + (j + 1) % n
                d = ib + j
                faces.append((a, b, c))
                faces.append((a, c, d))
        # pole->pole would be a degenerate spike; duplicates are rejected above
    return Mesh.from_arrays(np.asarray(verts), np.asarray(faces, dtype=np.int64))


def rasterize_profile(profile: RadialProfile, resolution: int = 256) -> np.ndarray:
    """Binary occupancy of the half cross-section on r in [0, 0.5], z in [0, 1].

    Returns a (resolution, resolution) bool array indexed [z, r] at pixel
    centers, filled by even-odd crossing against the closed polygon (the
    closing edge runs along the axis).
    """
    if not profile.closed:
        raise ValueError("open profile cannot be rasterized")
    if resolution < 2:
        raise ValueError("resolution too small")
    poly = profile.points
    rs = (np.arange(resolution) + 0.5) * (0.5 / resolution)
    zs = (np.arange(resolution) + 0.5) * (1.0 / resolution)
    rg, zg = np.meshgrid(rs, zs)  # [z, r]
    inside = np.zeros(rg.shape, dtype=bool)
    closed = np.vstack([poly, poly[:1]])
    for (r1, z1), (r2, z2) in zip(closed[:-1], closed[1:]):
        if z1 == z2:
            continue
        crosses = (z1 > zg) != (z2 > zg)
        with np.errstate(invalid="ignore"):
            r_at = r1 + (zg - z1) * (r2 - r1) / (z2 - z1)
        inside ^= crosses & (rg < r_at)
    return inside
