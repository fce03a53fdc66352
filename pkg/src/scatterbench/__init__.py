"""scatterbench: high-frequency monostatic radar simulation and 3D shape
reconstruction benchmarking.

The package simulates complex radar responses of triangle meshes from first
principles (facet-integrated physical optics, multi-bounce SBR, and a
parametric scattering-center model), generates reproducible benchmark
datasets with noise and partial-observability variants, provides the
deterministic math used by multiresolution shape encoders and diffusion
samplers, and scores reconstructed shapes with a full metric suite.
"""

from .diffusion import DiffusionSchedule, build_interleaved_mask, make_schedule, p_step, q_sample
from .encoding import (
    HashEncodingConfig,
    LatentStats,
    Triplane,
    hash_encode,
    kl_regularizer,
    triplane_gather,
    triplane_scatter,
)
from .geometry import (
    Mesh,
    NormalizationTransform,
    Ray,
    is_watertight,
    load_mesh,
    make_box,
    make_icosphere,
    make_plate,
    make_torus,
    merge_meshes,
    mesh_volume,
    normalize_mesh,
    ray_first_hit,
    sample_surface,
    signed_distance,
    unsigned_distance,
)
from .metrics import MetricReport, chamfer, chamfer_points, f_score, iou_r, iou_s, match_s, voxel_iou
from .po import (
    FrequencySweep,
    RadarResponse,
    ScatteringCenter,
    ViewingGrid,
    facet_integral,
    simulate_centers,
    simulate_po,
)
from .revolve import RadialProfile, rasterize_profile, revolve_to_mesh, sample_frustum_profile
from .sbr import SbrConfig, simulate_sbr
from .sdfgrid import SdfGrid, extract_mesh, sample_sdf_grid, write_obj
from .signal import (
    DB_FLOOR,
    DbResponse,
    ObservabilityMask,
    add_noise,
    apply_mask,
    gen_mask,
    split_blocks,
    to_db,
)
from .dataset import (
    DatasetConfig,
    DatasetManifest,
    derive_seed,
    generate_dataset,
    read_tensor,
    split_manifest,
    write_tensor,
)

__version__ = "0.1.0"
