"""Reproducible dataset generation and bit-exact serialization.

Tensor files use the R2T1 layout: magic "R2T1", a u8 dtype code (1=f32,
2=f64, 3=complex64 as interleaved f32 pairs, 4=u8), a u8 ndim, ndim x u64
little-endian dims, then row-major little-endian data. Response files store
the model-ready dB tensor (float32) after noise injection and masking.

Per-item seeds derive from hash64(global_seed, item_id, stage), so items can
be generated in parallel with byte-identical output for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import signal as sig
from .geometry import load_mesh, normalize_mesh
from .po import FrequencySweep, ViewingGrid, simulate_po
from .sbr import SbrConfig, simulate_sbr
from .sdfgrid import write_obj

_MAGIC = b"R2T1"
_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<c8"), 4: np.dtype("u1")}
_CODE_FOR_KIND = {"f4": 1, "f8": 2, "c8": 3, "u1": 4}

MESH_SUFFIXES = (".off", ".obj", ".stl")


def write_tensor(path, tensor) -> None:
    """Write a tensor in the R2T1 layout, atomically (temp file + rename)."""
    tensor = np.asarray(tensor)
    key = f"{tensor.dtype.kind}{tensor.dtype.itemsize}"
    if key == "c16":
        raise TypeError("complex tensors must be complex64 (the format stores f32 pairs)")
    code = _CODE_FOR_KIND.get(key)
    if code is None:
        raise TypeError(f"unsupported dtype {tensor.dtype}")
    header = _MAGIC + struct.pack("<BB", code, tensor.ndim)
    header += struct.pack(f"<{tensor.ndim}Q", *tensor.shape)
    payload = np.ascontiguousarray(tensor.astype(_DTYPE_CODES[code], copy=False))
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    os.replace(tmp, path)


def read_tensor(path) -> np.ndarray:
    """Read an R2T1 tensor; validates magic, dtype code, and byte length."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"bad magic in {path}")
    if len(data) < 6:
        raise ValueError(f"truncated header in {path}")
    code, ndim = struct.unpack_from("<BB", data, 4)
    if code not in _DTYPE_CODES:
        raise ValueError(f"unknown dtype code {code} in {path}")
    if len(data) < 6 + 8 * ndim:
        raise ValueError(f"truncated dims in {path}")
    dims = struct.unpack_from(f"<{ndim}Q", data, 6)
    dtype = _DTYPE_CODES[code]
    n_items = int(np.prod(dims, dtype=np.uint64)) if ndim else 1
    expect = 6 + 8 * ndim + n_items * dtype.itemsize
    if len(data) != expect:
        raise ValueError(f"file length {len(data)} != expected {expect} in {path}")
    arr = np.frombuffer(data, dtype=dtype, offset=6 + 8 * ndim).reshape(dims)
    return arr.copy()


def derive_seed(global_seed: int, item_id: str, stage: str) -> int:
    """Stable 64-bit per-item seed; no shared RNG stream between items."""
    h = hashlib.blake2b(digest_size=8)
    h.update(f"{global_seed}|{item_id}|{stage}".encode())
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class DatasetConfig:
    """Generation parameters; None entries in the variant lists mean 'clean'."""

    simulator: str = "po"
    n_aspect: int = 64
    n_roll: int = 64
    f_min: float = 8e9
    f_max: float = 12e9
    n_freq: int = 128
    scale: float = 1.0
    shadowing: bool = True
    sbr_rays_per_wavelength: float = 8.0
    sbr_max_bounces: int = 3
    noise_levels_db: tuple = (None,)
    mask_coverages: tuple = (None,)
    seed: int = 0

    def __post_init__(self):
        if self.simulator not in ("po", "sbr"):
            raise ValueError("simulator must be 'po' or 'sbr'")
        object.__setattr__(self, "noise_levels_db", tuple(self.noise_levels_db))
        object.__setattr__(self, "mask_coverages", tuple(self.mask_coverages))

    def grid(self) -> ViewingGrid:
        return ViewingGrid.uniform(self.n_aspect, self.n_roll)

    def sweep(self) -> FrequencySweep:
        return FrequencySweep(self.f_min, self.f_max, self.n_freq)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_levels_db"] = list(self.noise_levels_db)
        d["mask_coverages"] = list(self.mask_coverages)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        return cls(**d)


@dataclass
class DatasetManifest:
    simulator: str
    config: dict
    records: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    schema_version: int = 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": self.schema_version,
                "simulator": self.simulator,
                "config": self.config,
                "records": self.records,
                "excluded": self.excluded,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        d = json.loads(text)
        return cls(
            simulator=d["simulator"],
            config=d["config"],
            records=d["records"],
            excluded=d.get("excluded", []),
            schema_version=d.get("schema_version", 1),
        )

    def save(self, path) -> None:
        tmp = str(path) + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(self.to_json())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def validate(self, root) -> None:
        """Check id uniqueness and that every referenced file exists."""
        root = Path(root)
        ids = [r["id"] for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate record ids in manifest")
        for rec in self.records:
            for key in ("mesh_path", "response_path"):
                if not (root / rec[key]).exists():
                    raise ValueError(f"missing file for {rec['id']}: {rec[key]}")


def _variant_suffix(noise_db, coverage):
    parts = []
    if noise_db is not None:
        parts.append(f"n{int(noise_db)}")
    if coverage is not None:
        parts.append(f"m{int(round(100 * coverage))}")
    return ("__" + "_".join(parts)) if parts else ""


def generate_dataset(mesh_dir, config: DatasetConfig, out_dir, threads: int | None = None) -> DatasetManifest:
    """Simulate every mesh in mesh_dir and write tensors, meshes, manifest.

    Output layout: out_dir/{manifest.json, responses/<id>.r2t, meshes/<id>.obj}.
    Fully deterministic from (config, seed); items failing to simulate are
    skipped and listed under `excluded`.
    """
    mesh_dir = Path(mesh_dir)
    out_dir = Path(out_dir)
    paths = sorted(p for p in mesh_dir.iterdir() if p.suffix.lower() in MESH_SUFFIXES)
    if not paths:
        raise ValueError(f"no mesh files in {mesh_dir}")
    (out_dir / "responses").mkdir(parents=True, exist_ok=True)
    (out_dir / "meshes").mkdir(parents=True, exist_ok=True)

    grid = config.grid()
    sweep = config.sweep()
    sbr_cfg = SbrConfig(config.sbr_rays_per_wavelength, config.sbr_max_bounces)

    def run_mesh(path):
        mesh_id = path.stem
        try:
            mesh, _ = normalize_mesh(load_mesh(path))
            if config.simulator == "po":
                base = simulate_po(
                    mesh, grid, sweep, shadowing=config.shadowing, scale=config.scale
                )
            else:
                base = simulate_sbr(mesh, grid, sweep, sbr_cfg, scale=config.scale)
        except Exception as exc:  # noqa: BLE001 - item-level isolation
            return mesh_id, None, f"{type(exc).__name__}: {exc}"
        mesh_rel = f"meshes/{mesh_id}.obj"
        write_obj(mesh, out_dir / mesh_rel)
        records = []
        for noise_db in config.noise_levels_db:
            for coverage in config.mask_coverages:
                rec_id = mesh_id + _variant_suffix(noise_db, coverage)
                seed = derive_seed(config.seed, rec_id, "variant")
                resp = base
                if noise_db is not None:
                    resp = sig.add_noise(resp, noise_db, derive_seed(config.seed, rec_id, "noise"))
                db = sig.to_db(resp)
                mask_info = None
                if coverage is not None:
                    mask_seed = derive_seed(config.seed, rec_id, "mask")
                    mask = sig.gen_mask(grid.n_aspect, grid.n_roll, coverage, mask_seed)
                    db = sig.apply_mask(db, mask)
                    mask_info = {
                        "coverage": coverage,
                        "seed": mask_seed,
                        "aspect_window": list(mask.aspect_window),
                        "roll_window": list(mask.roll_window),
                    }
                resp_rel = f"responses/{rec_id}.r2t"
                write_tensor(out_dir / resp_rel, db.values.astype(np.float32))
                records.append(
                    {
                        "id": rec_id,
                        "mesh_path": mesh_rel,
                        "response_path": resp_rel,
                        "mask": mask_info,
                        "noise_level_db": noise_db,
                        "seed": seed,
                        "split": "train",
                    }
                )
        return mesh_id, records, None

    workers = threads or int(os.environ.get("R2S_THREADS", "0")) or (os.cpu_count() or 1)
    if workers > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_mesh, paths))
    else:
        results = [run_mesh(p) for p in paths]

    manifest = DatasetManifest(simulator=config.simulator, config=config.to_dict())
    for mesh_id, records, error in results:  # already in sorted mesh order
        if error is not None:
            manifest.excluded.append({"id": mesh_id, "reason": error})
        else:
            manifest.records.extend(records)
    manifest.save(out_dir / "manifest.json")
    return manifest


def split_manifest(manifest: DatasetManifest, test_fraction: float, seed: int) -> DatasetManifest:
    """Deterministic train/test split by mesh, so all variants of a mesh land
    on the same side."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    mesh_of = {r["id"]: r["mesh_path"] for r in manifest.records}
    meshes = sorted(set(mesh_of.values()))
    if len(meshes) < 2:
        raise ValueError("need at least two meshes to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(meshes))
    n_test = int(round(test_fraction * len(meshes)))
    n_test = min(max(n_test, 1), len(meshes) - 1)
    test_meshes = {meshes[i] for i in order[:n_test]}
    records = [
        {**r, "split": "test" if r["mesh_path"] in test_meshes else "train"}
        for r in manifest.records
    ]
    return DatasetManifest(
        simulator=manifest.simulator,
        config=manifest.config,
        records=records,
        excluded=list(manifest.excluded),
        schema_version=manifest.schema_version,
    )
