"""Component scattering models: points, spheres, rings.
==================================================

High-frequency returns often reduce to a handful of discrete scattering
centers. Two points interfere as 2|cos(kd)|; a ring seen off-axis rolls off
as a Bessel function J0.
"""

import numpy as np

import scatterbench as sb

broadside = sb.ViewingGrid(np.array([0.0]), np.array([0.0]))
sweep = sb.FrequencySweep(8e9, 12e9, 128)

# two unit point scatterers separated by d along the line of sight
d = 0.1
pair = [
    sb.ScatteringCenter("point", (0, 0, 0), 1.0),
    sb.ScatteringCenter("point", (0, 0, d), 1.0),
]
resp = sb.simulate_centers(pair, broadside, sweep)
k = sweep.wavenumbers()
print("two-point interference |F| vs 2|cos(kd)|, first 4 frequencies:")
for i in range(4):
    print(f"  k={k[i]:8.2f}  |F|={abs(resp.values[0, 0, i]):.6f}"
          f"  2|cos(kd)|={2 * abs(np.cos(k[i] * d)):.6f}")

# a ring tilted away from the axis picks up a J0 envelope
tilted = sb.ViewingGrid(np.array([0.6]), np.array([0.0]))
ring = [sb.ScatteringCenter("ring", (0, 0, 0), 1.0, radius=0.25, axis=(0, 0, 1))]
ring_resp = sb.simulate_centers(ring, tilted, sweep)
print("\nring at 0.6 rad off axis, |F| across the sweep:")
amps = np.abs(ring_resp.values[0, 0])
print("  min/max:", amps.min().round(4), amps.max().round(4))

# a sphere center defaults its amplitude to sqrt(pi) r (optical RCS pi r^2)
sph = sb.ScatteringCenter("sphere", (0, 0, 0), radius=0.2)
print("\nsphere center default amplitude:", sph.effective_amplitude)
print("  implied RCS:", sph.effective_amplitude**2, "= pi r^2 =", np.pi * 0.04)
