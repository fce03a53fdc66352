"""Partial observability and noise, the way real measurements arrive.
================================================================

Responses convert to dB amplitude, get split into frequency blocks, lose a
contiguous window of viewing angles, and pick up complex Gaussian noise.
"""

from pathlib import Path

import numpy as np

import scatterbench as sb
from scatterbench.cli import render_heatmap, write_pgm

mesh = sb.revolve_to_mesh(sb.sample_frustum_profile((3, 6), seed=21), 48)
grid = sb.ViewingGrid.uniform(64, 16)
sweep = sb.FrequencySweep(8e9, 12e9, 128)
resp = sb.simulate_po(mesh, grid, sweep, threads=2)

# add noise at the two extremes used for robustness sweeps
for level in (-80.0, -40.0):
    noisy = sb.add_noise(resp, level, seed=1)
    floor = np.abs(noisy.values - resp.values) ** 2
    print(f"noise {level:+.0f} dB: mean injected power {floor.mean():.2e}")

# dB conversion and frequency blocks
db = sb.to_db(sb.add_noise(resp, -60.0, seed=1))
blocks = sb.split_blocks(db, 4)
print(f"\nsplit into {len(blocks)} blocks of {blocks[0].shape[2]} frequencies each")

# mask 60% of the viewing angles, keeping the observed windows contiguous
mask = sb.gen_mask(grid.n_aspect, grid.n_roll, coverage=0.6, seed=5)
masked = sb.apply_mask(db, mask)
print(f"observed aspect window {mask.aspect_window}, roll window {mask.roll_window}")
print(f"masked fraction {1 - mask.observed().mean():.3f} (requested 0.6)")

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
write_pgm(out / "masked_response.pgm", render_heatmap(masked, roll_index=0))
print(f"wrote {out / 'masked_response.pgm'}")
