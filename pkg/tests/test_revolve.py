import numpy as np
import pytest

from scatterbench.geometry import is_watertight, mesh_volume
from scatterbench.po import FrequencySweep, ViewingGrid, simulate_po
from scatterbench.revolve import (
    RadialProfile,
    rasterize_profile,
    revolve_to_mesh,
    sample_frustum_profile,
)
from scatterbench.signal import to_db


class TestRadialProfile:
    def test_validation(self):
        with pytest.raises(ValueError, match="nondecreasing"):
            RadialProfile([[0, 0], [0.3, 0.5], [0.2, 0.2], [0, 1]])
        with pytest.raises(ValueError, match="nonnegative"):
            RadialProfile([[0, 0], [-0.1, 0.5], [0, 1]])
        with pytest.raises(ValueError, match="duplicate"):
            RadialProfile([[0, 0], [0.3, 0.5], [0.3, 0.5], [0, 1]])
        with pytest.raises(ValueError, match="r = 0"):
            RadialProfile([[0.1, 0], [0.3, 1]])
        with pytest.raises(ValueError, match="no area"):
            RadialProfile([[0, 0], [0, 0.5], [0, 1]])

    def test_open_profile_allowed_explicitly(self):
        p = RadialProfile([[0.1, 0], [0.3, 1]], open_profile=True)
        assert not p.closed

    def test_json_roundtrip(self):
        p = sample_frustum_profile((2, 6), seed=3)
        q = RadialProfile.from_json(p.to_json())
        assert np.array_equal(p.points, q.points)


class TestSampleFrustumProfile:
    def test_deterministic(self):
        a = sample_frustum_profile((2, 8), seed=42)
        b = sample_frustum_profile((2, 8), seed=42)
        assert np.array_equal(a.points, b.points)

    def test_forced_segment_count(self):
        p = sample_frustum_profile((2, 2), seed=0)
        assert len(p.points) == 3  # two segments

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            sample_frustum_profile((1, 4), seed=0)
        with pytest.raises(ValueError):
            sample_frustum_profile((4, 9), seed=0)

    def test_population_invariants_and_uniformity(self):
        counts = np.zeros(9, dtype=int)
        for seed in range(10_000):
            p = sample_frustum_profile((2, 6), seed=seed)
            pts = p.points
            k = len(pts) - 1
            counts[k] += 1
            assert pts[0, 0] == 0 and pts[0, 1] == 0
            assert pts[-1, 0] == 0 and pts[-1, 1] == 1
            interior = pts[1:-1]
            assert np.all(interior[:, 0] > 0.05) and np.all(interior[:, 0] <= 0.45)
            assert np.all(np.diff(pts[:, 1]) >= 0)
        # K uniform over {2..6}: binomial 3-sigma per bin
        n = counts.sum()
        sigma = np.sqrt(n * 0.2 * 0.8)
        for k in range(2, 7):
            assert abs(counts[k] - n * 0.2) < 3 * sigma


class TestRevolveToMesh:
    def test_cylinder_volume_oracle(self):
        profile = RadialProfile([[0, 0.1], [0.3, 0.1], [0.3, 0.9], [0, 0.9]])
        mesh = revolve_to_mesh(profile, 256)
        expect = np.pi * 0.3**2 * 0.8
        assert mesh_volume(mesh) == pytest.approx(expect, rel=0.005)

    def test_cone_apex_degree(self):
        n = 32
        cone = revolve_to_mesh(RadialProfile([[0, 0], [0.3, 0.5], [0, 1]]), n)
        apex_faces = np.count_nonzero(np.any(cone.faces == 0, axis=1))
        assert apex_faces == n

    def test_watertight_construction(self):
        for seed in range(20):
            mesh = revolve_to_mesh(sample_frustum_profile((2, 8), seed=seed), 24)
            assert is_watertight(mesh)
            assert mesh_volume(mesh) > 0

    def test_volume_convergence_rate(self):
        profile = RadialProfile([[0, 0.0], [0.4, 0.3], [0.4, 0.7], [0, 1.0]])
        exact = None
        errs = []
        # solid of revolution volume via 1D integral of pi r(z)^2
        z = np.linspace(0, 1, 200_001)
        r = np.interp(z, profile.points[:, 1], profile.points[:, 0])
        exact = np.trapezoid(np.pi * r**2, z)
        for n in (32, 64, 128):
            errs.append(abs(mesh_volume(revolve_to_mesh(profile, n)) - exact))
        # O(1/n^2): each doubling cuts the error ~4x
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)

    def test_rejects_open_and_self_intersecting(self):
        with pytest.raises(ValueError):
            revolve_to_mesh(RadialProfile([[0.1, 0], [0.2, 1]], open_profile=True))
        bowtie = RadialProfile(
            [[0.0, 0.0], [0.4, 0.5], [0.1, 0.5], [0.3, 0.5], [0.0, 1.0]]
        )
        # segments (0-1) and (2-3) cross at z = 0.5 turns
        with pytest.raises(ValueError, match="intersect"):
            revolve_to_mesh(bowtie, 16)

    def test_roll_symmetry_of_response(self):
        profile = RadialProfile([[0, 0], [0.35, 0.25], [0.3, 0.75], [0, 1]])
        mesh = revolve_to_mesh(profile, 256)
        grid = ViewingGrid(np.linspace(0.4, 2.7, 6), np.linspace(0, 2 * np.pi, 12, endpoint=False))
        sweep = FrequencySweep(1.5e9, 2.5e9, 4)
        resp = simulate_po(mesh, grid, sweep, shadowing=False, threads=2)
        amp = np.abs(resp.values)
        spread = amp.std(axis=1) / amp.mean(axis=1)
        assert spread.max() < 0.02


class TestRasterizeProfile:
    def test_rectangle_pixel_count(self):
        profile = RadialProfile([[0, 0.25], [0.25, 0.25], [0.25, 0.75], [0, 0.75]])
        res = 128
        mask = rasterize_profile(profile, res)
        # expected: half the rows (z in [.25,.75]) x half the cols (r < .25)
        expect = (res // 2) * (res // 2)
        assert abs(mask.sum() - expect) <= 2 * res  # within one row/col
        # interior pixel and exterior pixel
        assert mask[res // 2, res // 4]
        assert not mask[res // 2, int(res * 0.6)]

    def test_open_rejected(self):
        with pytest.raises(ValueError):
            rasterize_profile(RadialProfile([[0.1, 0], [0.2, 1]], open_profile=True))

    def test_grid_refinement_consistency(self):
        for seed in (1, 2, 3):
            profile = sample_frustum_profile((2, 8), seed=seed)
            f128 = rasterize_profile(profile, 128).mean()
            f256 = rasterize_profile(profile, 256).mean()
            assert abs(f128 - f256) / f256 < 0.02
