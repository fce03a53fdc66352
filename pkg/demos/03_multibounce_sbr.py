"""Shooting-and-bouncing rays: where single-bounce physics is not enough.
====================================================================

A 90-degree dihedral corner retroreflects after two bounces. Single-bounce
simulation misses almost all of that return; the SBR simulator picks it up.
"""

import numpy as np

import scatterbench as sb
from scatterbench.geometry import Mesh, merge_meshes

# dihedral: two perpendicular plates meeting along the z-axis
size, h = 0.5, 0.25
va = np.array([[0, 0, -h], [size, 0, -h], [size, 0, h], [0, 0, h]])
vb = np.array([[0, 0, -h], [0, size, -h], [0, size, h], [0, 0, h]])
dihedral = merge_meshes(
    Mesh.from_arrays(va, [[0, 2, 1], [0, 3, 2]]),
    Mesh.from_arrays(vb, [[0, 1, 2], [0, 2, 3]]),
)

bisector = sb.ViewingGrid(np.array([np.pi / 2]), np.array([np.pi / 4]))
sweep = sb.FrequencySweep(1.0e10, 1.2e10, 2)

for bounces in (1, 2, 3):
    cfg = sb.SbrConfig(rays_per_wavelength=16, max_bounces=bounces)
    resp = sb.simulate_sbr(dihedral, bisector, sweep, cfg)
    print(f"max_bounces={bounces}: |F| = {abs(resp.values[0, 0, 0]):8.3f}")

# sanity: on a convex target, single-bounce SBR converges to physical optics
plate = sb.make_plate(1.0, 1.0)
broadside = sb.ViewingGrid(np.array([0.0]), np.array([0.0]))
po = sb.simulate_po(plate, broadside, sweep, shadowing=False)
print("\nplate |F|, PO vs SBR at increasing ray density:")
print(f"  PO        {abs(po.values[0, 0, 0]):.4f}")
for rays in (4, 8, 16):
    sbr = sb.simulate_sbr(plate, broadside, sweep, sb.SbrConfig(rays, 1))
    print(f"  SBR {rays:3d}/wl {abs(sbr.values[0, 0, 0]):.4f}")
