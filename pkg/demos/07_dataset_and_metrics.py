"""A miniature end-to-end benchmark run.
==================================

Generate a small reproducible dataset (meshes + responses + manifest), split
it, and score two mock reconstructors: one that returns the ground truth and
one that always answers with a sphere.
"""

import tempfile
from pathlib import Path

import numpy as np

import scatterbench as sb
from scatterbench.dataset import DatasetConfig, generate_dataset, split_manifest

with tempfile.TemporaryDirectory() as td:
    root = Path(td)
    mesh_dir = root / "meshes"
    mesh_dir.mkdir()
    for i in range(6):
        mesh = sb.revolve_to_mesh(sb.sample_frustum_profile((2, 6), seed=100 + i), 16)
        sb.write_obj(mesh, mesh_dir / f"shape{i:02d}.obj")

    config = DatasetConfig(
        n_aspect=16, n_roll=16, n_freq=32, shadowing=True, seed=42,
        noise_levels_db=(None, -60.0),
    )
    manifest = generate_dataset(mesh_dir, config, root / "ds", threads=2)
    print(f"{len(manifest.records)} records "
          f"({len({r['mesh_path'] for r in manifest.records})} meshes x variants)")

    manifest = split_manifest(manifest, test_fraction=0.34, seed=1)
    n_test = sum(r["split"] == "test" for r in manifest.records)
    print(f"split: {len(manifest.records) - n_test} train / {n_test} test records")

    # score reconstructors on the test meshes
    test_meshes = sorted({r["mesh_path"] for r in manifest.records if r["split"] == "test"})
    baseline, _ = sb.normalize_mesh(sb.make_icosphere(2, 1.0))
    print("\n              chamfer      IoU   F-Score")
    for label, predict in (("oracle", None), ("sphere", baseline)):
        cds, ious, fs = [], [], []
        for rel in test_meshes:
            gt = sb.load_mesh(root / "ds" / rel)
            pred = gt if predict is None else predict
            cds.append(sb.chamfer(pred, gt, n=10000, seed=0))
            ious.append(sb.voxel_iou(pred, gt, resolution=32))
            fs.append(sb.f_score(pred, gt, n=10000, seed=0))
        print(f"  {label:8s} {np.mean(cds):9.3f} {np.mean(ious):8.3f} {np.mean(fs):9.3f}")
