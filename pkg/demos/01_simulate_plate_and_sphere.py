"""Physical-optics simulation against closed-form oracles.
====================================================

A 1 m^2 flat plate seen broadside has the textbook radar cross section
sigma = 4 pi A^2 / lambda^2, and a large sphere settles at sigma = pi r^2.
Both fall straight out of the facet-integration simulator.
"""

import numpy as np
from scipy.constants import c

import scatterbench as sb

# --- flat plate, broadside, 10 GHz -----------------------------------------
plate = sb.make_plate(1.0, 1.0)
broadside = sb.ViewingGrid(np.array([0.0]), np.array([0.0]))
sweep = sb.FrequencySweep(1.0e10, 1.2e10, 2)

resp = sb.simulate_po(plate, broadside, sweep, shadowing=False)
lam = c / sweep.f_min
rcs = abs(resp.values[0, 0, 0]) ** 2
print(f"plate RCS      {rcs:10.1f} m^2")
print(f"4 pi A^2/l^2   {4 * np.pi / lam**2:10.1f} m^2")

# --- sphere in the optical region (kr = 100) --------------------------------
r = 0.5
f_c = 100 / r * c / (2 * np.pi)
sphere = sb.make_icosphere(5, r)
sweep_s = sb.FrequencySweep(0.95 * f_c, 1.05 * f_c, 16)
resp_s = sb.simulate_po(sphere, broadside, sweep_s, shadowing=False, threads=2)
mean_rcs = np.mean(np.abs(resp_s.values[0, 0]) ** 2)
print(f"\nsphere RCS     {mean_rcs:10.4f} m^2 (mean over sweep)")
print(f"pi r^2         {np.pi * r * r:10.4f} m^2")

# --- a full aspect sweep of a frustum, rendered as a heatmap ----------------
from pathlib import Path

from scatterbench.cli import render_heatmap, write_pgm

profile = sb.sample_frustum_profile((2, 6), seed=7)
mesh = sb.revolve_to_mesh(profile, 64)
grid = sb.ViewingGrid.uniform(64, 1)  # roll-symmetric: one roll bin suffices
sweep_f = sb.FrequencySweep(8e9, 12e9, 128)
db = sb.to_db(sb.simulate_po(mesh, grid, sweep_f, threads=2))

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
write_pgm(out / "frustum_aspect_frequency.pgm", render_heatmap(db, roll_index=0))
print(f"\nwrote {out / 'frustum_aspect_frequency.pgm'} (aspect x frequency map)")
