"""Monostatic radar response from first principles.

Physical-optics facet integration over triangle meshes and the parametric
scattering-center model (points, spheres, rings). Conventions:

* The viewing direction u points from the target toward the radar; phase uses
  the round-trip factor 2k with k = 2*pi*f/c.
* Complex responses F carry linear scattering amplitude in sqrt(m^2), so |F|^2
  is RCS in m^2. The prefactor i*k/sqrt(pi) makes the broadside flat-plate
  oracle sigma = 4*pi*A^2/lambda^2 hold exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.special import j0

from .geometry import Mesh, batch_any_hit


@dataclass(frozen=True)
class ViewingGrid:
    """Sorted aspect angles in [0, pi] and roll angles in [0, 2*pi)."""

    aspects: np.ndarray
    rolls: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.aspects, dtype=np.float64))
        r = np.atleast_1d(np.asarray(self.rolls, dtype=np.float64))
        if a.size < 1 or r.size < 1:
            raise ValueError("grid needs at least one aspect and one roll")
        if np.any(np.diff(a) <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("angles must be strictly increasing")
        if a[0] < 0 or a[-1] > np.pi:
            raise ValueError("aspects must lie in [0, pi]")
        if r[0] < 0 or r[-1] >= 2 * np.pi:
            raise ValueError("rolls must lie in [0, 2*pi)")
        object.__setattr__(self, "aspects", a)
        object.__setattr__(self, "rolls", r)

    @classmethod
    def uniform(cls, n_aspect: int, n_roll: int) -> "ViewingGrid":
        aspects = np.linspace(0.0, np.pi, n_aspect) if n_aspect > 1 else np.array([0.0])
        rolls = np.linspace(0.0, 2 * np.pi, n_roll, endpoint=False)
        return cls(aspects, rolls)

    @property
    def n_aspect(self) -> int:
        return len(self.aspects)

    @property
    def n_roll(self) -> int:
        return len(self.rolls)

    def directions(self) -> np.ndarray:
        """Unit viewing directions, shape (n_aspect, n_roll, 3)."""
        a = self.aspects[:, None]
        r = self.rolls[None, :]
        return np.stack(
            [np.sin(a) * np.cos(r), np.sin(a) * np.sin(r), np.cos(a) * np.ones_like(r)],
            axis=-1,
        )


@dataclass(frozen=True)
class FrequencySweep:
    """n linearly spaced frequencies spanning [f_min, f_max] Hz."""

    f_min: float
    f_max: float
    n: int
    freqs: np.ndarray = field(init=False)

    def __post_init__(self):
        if not (0 < self.f_min < self.f_max):
            raise ValueError("need 0 < f_min < f_max")
        if self.n < 2:
            raise ValueError("need at least 2 frequencies to span [f_min, f_max]")
        object.__setattr__(self, "freqs", np.linspace(self.f_min, self.f_max, self.n))

    @property
    def bandwidth(self) -> float:
        return self.f_max - self.f_min

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * self.freqs / SPEED_OF_LIGHT


@dataclass(frozen=True)
class RadarResponse:
    """Complex scattering amplitudes, shape (n_aspect, n_roll, n_freq)."""

    grid: ViewingGrid
    sweep: FrequencySweep
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        expect = (self.grid.n_aspect, self.grid.n_roll, self.sweep.n)
        if v.shape != expect:
            raise ValueError(f"values shape {v.shape} != grid x sweep {expect}")
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("response contains non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ScatteringCenter:
    """Point, sphere, or ring scatterer for the component-sum model."""

    kind: str
    position: np.ndarray
    amplitude: float | None = None
    radius: float | None = None
    axis: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("point", "sphere", "ring"):
            raise ValueError(f"unknown scattering center kind: {self.kind}")
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=np.float64)
        )
        if self.kind in ("sphere", "ring"):
            if self.radius is None or self.radius <= 0:
                raise ValueError(f"{self.kind} center needs radius > 0")
        if self.kind == "ring":
            if self.axis is None:
                raise ValueError("ring center needs an axis")
            ax = np.asarray(self.axis, dtype=np.float64)
            n = np.linalg.norm(ax)
            if abs(n - 1.0) > 1e-9:
                raise ValueError("ring axis must be unit length")
            object.__setattr__(self, "axis", ax)
        if self.amplitude is None and self.kind != "sphere":
            raise ValueError(f"{self.kind} center needs an amplitude")

    @property
    def effective_amplitude(self) -> float:
        if self.amplitude is not None:
            return float(self.amplitude)
        return float(np.sqrt(np.pi) * self.radius)  # sphere optical RCS pi*r^2


# ---------------------------------------------------------------------------
# the closed-form facet phase integral

def _phase_sinc(x):
    """E(x) = (exp(ix) - 1)/(ix) = exp(ix/2) * sin(x/2)/(x/2); E(0) = 1."""
    return np.exp(0.5j * x) * np.sinc(x / (2.0 * np.pi))


def _poly_phase_moments(s):
    """P_n(s) = integral_0^1 p^n exp(isp) dp for n = 1, 3, 5."""
    s = np.asarray(s, dtype=np.float64)
    out = np.empty((3,) + s.shape, dtype=np.complex128)
    small = np.abs(s) < 0.8
    if small.any():
        ss = s[small]
        for j, n in enumerate((1, 3, 5)):
            term = np.full(ss.shape, 1.0 / (n + 1), dtype=np.complex128)
            acc = term.copy()
            for kk in range(1, 26):
                term = term * (1j * ss) / kk * (n + kk) / (n + kk + 1)
                acc += term
            out[j][small] = acc
    big = ~small
    if big.any():
        sb = s[big]
        isb = 1j * sb
        eis = np.exp(isb)
        p = (eis - 1.0) / isb  # P_0
        series = []
        for n in range(1, 6):
            p = (eis - n * p) / isb
            series.append(p)
        out[0][big] = series[0]
        out[1][big] = series[2]
        out[2][big] = series[4]
    return out[0], out[1], out[2]


def _simplex_phase_series(a, b):
    """Series evaluation of D(a, b) for the near-diagonal a ~ b."""
    s = 0.5 * (a + b)
    hd = 0.5 * (a - b)
    p1, p3, p5 = _poly_phase_moments(s)
    h2 = (1j * hd) ** 2
    return p1 + h2 * (p3 / 6.0) + h2 * h2 * (p5 / 120.0)


def _simplex_phase(a, b):
    """D(a, b) = integral over the unit simplex of exp(i(au + bv)) du dv.

    Divided-difference form everywhere except a tube around a == b, where a
    short series in the half-difference keeps full precision. D(0, 0) = 1/2.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scalar = a.ndim == 0 and b.ndim == 0
    a, b = np.broadcast_arrays(np.atleast_1d(a), np.atleast_1d(b))
    d = a - b
    near = np.abs(d) < 1e-3
    safe = np.where(near, 1.0, d)
    out = (_phase_sinc(a) - _phase_sinc(b)) / (1j * safe)
    if near.any():
        out[near] = _simplex_phase_series(a[near], b[near])
    return out[0] if scalar else out


def facet_integral(v0, v1, v2, w) -> complex:
    """Exact surface integral of exp(i w . r) over the triangle (v0, v1, v2)."""
    v0 = np.asarray(v0, dtype=np.float64)
    e1 = np.asarray(v1, dtype=np.float64) - v0
    e2 = np.asarray(v2, dtype=np.float64) - v0
    w = np.asarray(w, dtype=np.float64)
    cross = np.cross(e1, e2)
    two_area = np.linalg.norm(cross)
    if two_area <= 1e-14 * max(np.dot(e1, e1), np.dot(e2, e2), 1e-300):
        raise ValueError("degenerate triangle")
    d = _simplex_phase(np.dot(w, e1), np.dot(w, e2))
    return complex(two_area * np.exp(1j * np.dot(w, v0)) * d)


# ---------------------------------------------------------------------------
# simulators

def _shadow_mask(mesh, dirs, vis, centroids, diag):
    """(n_view, m) True where a front-facing facet's centroid-to-radar ray is
    blocked by any other facet. Only rows marked visible are tested."""
    eps = 1e-5 * diag
    t_min = 1e-7 * diag
    blocked = np.zeros(vis.shape, dtype=bool)
    views, sources = np.nonzero(vis)
    if len(views) == 0:
        return blocked
    u = dirs[views]
    o = centroids[sources] + eps * u
    blocked[views, sources] = batch_any_hit(mesh, o, u, t_min)
    return blocked


def simulate_po(
    mesh: Mesh,
    grid: ViewingGrid,
    sweep: FrequencySweep,
    shadowing: bool = True,
    scale: float = 1.0,
    threads: int | None = None,
) -> RadarResponse:
    """Physical-optics response of a mesh over a viewing grid and sweep.

    scale converts model units to meters. Facets with n.u <= 0 are culled;
    with shadowing on, facets whose centroid-to-radar ray is blocked are also
    excluded. Facet accumulation is in ascending face-index order, and results
    are bit-identical for any thread count.
    """
    if mesh.n_faces == 0:
        raise ValueError("empty mesh")
    if scale <= 0:
        raise ValueError("scale must be positive")

    tri = mesh.triangles() * scale
    v0 = tri[:, 0]
    e1 = tri[:, 1] - v0
    e2 = tri[:, 2] - v0
    normals = mesh.face_normals
    two_area = 2.0 * mesh.face_areas * scale * scale
    # occlusion is invariant to uniform scaling; test it in model units
    cent_model = mesh.centroids()
    diag_model = mesh.bbox_diagonal

    dirs = grid.directions().reshape(-1, 3)
    nv = len(dirs)
    k = sweep.wavenumbers()
    nf = sweep.n
    m = mesh.n_faces

    F = np.empty((nv, nf), dtype=np.complex128)
    chunk = max(1, int(1e6) // max(nf * m, 1))
    spans = [(s, min(nv, s + chunk)) for s in range(0, nv, chunk)]
    k0 = k[0]
    dk = k[1] - k[0] if nf > 1 else 0.0

    def geometric_phase(base_angle, step_angle):
        # exp(i*(base + j*step)) over the frequency axis via cumprod:
        # one complex multiply per element instead of a transcendental
        w_, m_ = base_angle.shape
        arr = np.empty((w_, nf, m_), dtype=np.complex128)
        arr[:, 0, :] = np.exp(1j * base_angle)
        if nf > 1:
            arr[:, 1:, :] = np.exp(1j * step_angle)[:, None, :]
            np.cumprod(arr, axis=1, out=arr)
        return arr

    def run_span(span):
        s, e = span
        u = dirs[s:e]
        proj = u @ normals.T  # (wc, m)
        vis = proj > 0.0
        if shadowing:
            vis &= ~_shadow_mask(mesh, u, vis, cent_model, diag_model)
        wgt = np.where(vis, proj, 0.0) * two_area[None, :]
        u0 = u @ v0.T
        u1 = u @ e1.T
        u2 = u @ e2.T
        x1 = k[None, :, None] * u1[:, None, :]  # = a/2 with a = 2k u.e1
        x2 = k[None, :, None] * u2[:, None, :]
        ea = geometric_phase(k0 * u1, dk * u1)  # exp(i k u1)
        eb = geometric_phase(k0 * u2, dk * u2)
        # E(2x) = exp(ix) sin(x)/x
        ea *= np.where(np.abs(x1) < 1e-8, 1.0, ea.imag / np.where(x1 == 0.0, 1.0, x1))
        eb *= np.where(np.abs(x2) < 1e-8, 1.0, eb.imag / np.where(x2 == 0.0, 1.0, x2))
        diff = 2.0 * (x1 - x2)  # a - b
        near = np.abs(diff) < 1e-3
        d = (ea - eb) / (1j * np.where(near, 1.0, diff))
        if near.any():
            d[near] = _simplex_phase_series(2.0 * x1[near], 2.0 * x2[near])
        d *= geometric_phase(2.0 * k0 * u0, 2.0 * dk * u0)
        d *= wgt[:, None, :]
        F[s:e] = d.sum(axis=2) * (1j * k / np.sqrt(np.pi))[None, :]

    if threads and threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_span, spans))
    else:
        for span in spans:
            run_span(span)
    return RadarResponse(grid, sweep, F.reshape(grid.n_aspect, grid.n_roll, nf))


def simulate_centers(
    centers, grid: ViewingGrid, sweep: FrequencySweep
) -> RadarResponse:
    """Sum of parametric scattering-center responses, in list order."""
    centers = list(centers)
    if not centers:
        raise ValueError("need at least one scattering center")
    dirs = grid.directions()  # (na, nr, 3)
    k = sweep.wavenumbers()  # (nf,)
    F = np.zeros((grid.n_aspect, grid.n_roll, sweep.n), dtype=np.complex128)
    for ctr in centers:
        amp = ctr.effective_amplitude
        pu = dirs @ ctr.position  # (na, nr)
        if ctr.kind == "point":
            F += amp * np.exp(2j * k[None, None, :] * pu[:, :, None])
        elif ctr.kind == "sphere":
            F += amp * np.exp(2j * k[None, None, :] * (pu[:, :, None] + ctr.radius))
        else:  # ring
            cos_t = np.clip(dirs @ ctr.axis, -1.0, 1.0)
            sin_t = np.sqrt(1.0 - cos_t * cos_t)
            bessel = j0(2.0 * k[None, None, :] * ctr.radius * sin_t[:, :, None])
            F += amp * bessel * np.exp(2j * k[None, None, :] * pu[:, :, None])
    return RadarResponse(grid, sweep, F)
