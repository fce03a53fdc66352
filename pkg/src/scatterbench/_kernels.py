"""Hot-loop kernels, JIT-compiled when numba is available.

The numpy fallbacks compute identical IEEE operations, so results do not
depend on whether numba is installed.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


@njit(cache=True, nogil=True)
def _any_hit_loop(origins, dirs, v0, e1, e2, t_min, out):
    """Early-exit any-hit test: out[i] = True when ray i hits any triangle."""
    n_rays = origins.shape[0]
    m = v0.shape[0]
    for i in range(n_rays):
        ox, oy, oz = origins[i, 0], origins[i, 1], origins[i, 2]
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        blocked = False
        for f in range(m):
            e1x, e1y, e1z = e1[f, 0], e1[f, 1], e1[f, 2]
            e2x, e2y, e2z = e2[f, 0], e2[f, 1], e2[f, 2]
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if abs(det) <= 1e-12:
                continue
            inv = 1.0 / det
            tx = ox - v0[f, 0]
            ty = oy - v0[f, 1]
            tz = oz - v0[f, 2]
            u = (tx * px + ty * py + tz * pz) * inv
            if u < -1e-12 or u > 1.0 + 1e-12:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < -1e-12 or u + v > 1.0 + 1e-12:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            if t > t_min:
                blocked = True
                break
        out[i] = blocked


@njit(cache=True, nogil=True)
def _first_hit_loop(origins, dirs, v0, e1, e2, t_min, out_t, out_f):
    """Nearest hit per ray: out_t[i] = inf and out_f[i] = -1 on miss.

    Ties in t break to the lowest face index (faces scanned in order).
    """
    n_rays = origins.shape[0]
    m = v0.shape[0]
    for i in range(n_rays):
        ox, oy, oz = origins[i, 0], origins[i, 1], origins[i, 2]
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        best_t = np.inf
        best_f = -1
        for f in range(m):
            e1x, e1y, e1z = e1[f, 0], e1[f, 1], e1[f, 2]
            e2x, e2y, e2z = e2[f, 0], e2[f, 1], e2[f, 2]
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if abs(det) <= 1e-12:
                continue
            inv = 1.0 / det
            tx = ox - v0[f, 0]
            ty = oy - v0[f, 1]
            tz = oz - v0[f, 2]
            u = (tx * px + ty * py + tz * pz) * inv
            if u < -1e-12 or u > 1.0 + 1e-12:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < -1e-12 or u + v > 1.0 + 1e-12:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            if t > t_min and t < best_t:
                best_t = t
                best_f = f
        out_t[i] = best_t
        out_f[i] = best_f
