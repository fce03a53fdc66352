import numpy as np
import pytest

from scatterbench.geometry import make_box, make_icosphere, make_plate, make_torus
from scatterbench.revolve import sample_frustum_profile, revolve_to_mesh


@pytest.fixture(scope="session")
def icosphere():
    return make_icosphere(3, 1.0)


@pytest.fixture(scope="session")
def small_sphere():
    return make_icosphere(2, 0.45)


@pytest.fixture(scope="session")
def unit_plate():
    return make_plate(1.0, 1.0)


def brute_force_closest_distances(mesh, queries):
    """Oracle: closest-point distance by looping every triangle."""
    from scatterbench.geometry import _closest_points_on_triangles

    queries = np.atleast_2d(queries)
    tri = mesh.triangles()
    best = np.full(len(queries), np.inf)
    for f in range(mesh.n_faces):
        cp = _closest_points_on_triangles(
            queries,
            np.broadcast_to(tri[f, 0], queries.shape),
            np.broadcast_to(tri[f, 1], queries.shape),
            np.broadcast_to(tri[f, 2], queries.shape),
        )
        best = np.minimum(best, np.linalg.norm(queries - cp, axis=1))
    return best


def benchmark_meshes(seed=0):
    """Ten diverse watertight meshes spanning smooth, boxy, toroidal, and
    revolved topologies; the reconstruction benchmarks run on these."""
    rng = np.random.default_rng(seed)
    meshes = [
        make_icosphere(2, 0.42),
        make_box((0.8, 0.55, 0.35)),
        make_box((0.25, 0.25, 0.85)),
        make_torus(0.3, 0.12, 40, 20),
        make_icosphere(1, 0.3),
    ]
    for i in range(5):
        profile = sample_frustum_profile((2, 6), seed=int(rng.integers(1 << 31)))
        meshes.append(revolve_to_mesh(profile, 24))
    return meshes
