"""Command-line surface: every subcommand is a thin composition of library
calls. Exit codes: 0 success, 1 usage error, 2 data error."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as mt
from . import signal as sig
from .geometry import load_mesh, normalize_mesh
from .po import FrequencySweep, RadarResponse, ScatteringCenter, ViewingGrid, simulate_centers, simulate_po
from .revolve import RadialProfile, revolve_to_mesh, sample_frustum_profile
from .sbr import SbrConfig, simulate_sbr
from .sdfgrid import SdfGrid, extract_mesh, sample_sdf_grid, write_obj
from .signal import DbResponse


def render_heatmap(db: DbResponse, roll_index=None, aspect_index=None) -> np.ndarray:
    """8-bit grayscale image of one response slice.

    Exactly one of roll_index (aspect x frequency image) or aspect_index
    (roll x frequency image) selects the slice. The dB range [min, max] maps
    linearly to [0, 255]; a constant slice maps to all zeros.
    """
    if (roll_index is None) == (aspect_index is None):
        raise ValueError("select exactly one of roll_index or aspect_index")
    if roll_index is not None:
        if not 0 <= roll_index < db.grid.n_roll:
            raise ValueError("roll index out of range")
        img = db.values[:, roll_index, :]
    else:
        if not 0 <= aspect_index < db.grid.n_aspect:
            raise ValueError("aspect index out of range")
        img = db.values[aspect_index, :, :]
    if img.size == 0:
        raise ValueError("empty slice")
    lo, hi = float(img.min()), float(img.max())
    if hi <= lo:
        return np.zeros(img.shape, dtype=np.uint8)
    return np.round((img - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path, image: np.ndarray) -> None:
    """Binary PGM ("P5") writer for 8-bit grayscale images."""
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(image.tobytes())


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _default_threads():
    env = os.environ.get("R2S_THREADS")
    return int(env) if env else None


def _load_response(path, grid=None, sweep=None):
    """Rebuild a DbResponse or RadarResponse from a tensor file.

    Grid and sweep are synthesized (uniform/default band) when not supplied;
    only their shapes matter for the signal-domain subcommands.
    """
    values = ds.read_tensor(path)
    if values.ndim != 3:
        raise ValueError(f"response tensor must be 3-D, got {values.shape}")
    na, nr, nf = values.shape
    grid = grid or ViewingGrid.uniform(na, nr)
    sweep = sweep or FrequencySweep(8e9, 12e9, nf)
    if np.iscomplexobj(values):
        return RadarResponse(grid, sweep, values.astype(np.complex128))
    return DbResponse(grid, sweep, values.astype(np.float64))


def _sim_from_args(mesh, args, threads):
    grid = ViewingGrid.uniform(args.naspect, args.nroll)
    sweep = FrequencySweep(args.fmin, args.fmax, args.nfreq)
    if args.sim == "po":
        return simulate_po(
            mesh, grid, sweep,
            shadowing=args.shadowing == "on", scale=args.scale, threads=threads,
        )
    cfg = SbrConfig(rays_per_wavelength=args.rays_per_wavelength, max_bounces=args.bounces)
    return simulate_sbr(mesh, grid, sweep, cfg, scale=args.scale, threads=threads)


def _cmd_simulate(args):
    threads = args.threads or _default_threads()
    if args.sim == "centers":
        if not args.centers:
            raise ValueError("--sim centers requires --centers FILE")
        with open(args.centers) as fh:
            spec = json.load(fh)
        centers = [
            ScatteringCenter(
                kind=c["kind"],
                position=c["position"],
                amplitude=c.get("amplitude"),
                radius=c.get("radius"),
                axis=c.get("axis"),
            )
            for c in spec
        ]
        grid = ViewingGrid.uniform(args.naspect, args.nroll)
        sweep = FrequencySweep(args.fmin, args.fmax, args.nfreq)
        resp = simulate_centers(centers, grid, sweep)
    else:
        mesh, _ = normalize_mesh(load_mesh(args.mesh))
        resp = _sim_from_args(mesh, args, threads)
    ds.write_tensor(args.out, resp.values.astype(np.complex64))
    print(f"wrote {args.out} shape {resp.values.shape}")


def _cmd_gen_frusta(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = ds.derive_seed(args.seed, f"frustum_{i:05d}", "profile")
        profile = sample_frustum_profile((args.kmin, args.kmax), seed)
        (out / f"frustum_{i:05d}.json").write_text(profile.to_json())
        write_obj(revolve_to_mesh(profile, args.segments), out / f"frustum_{i:05d}.obj")
    print(f"wrote {args.count} frusta to {out}")


def _cmd_gen_dataset(args):
    with open(args.config) as fh:
        config = ds.DatasetConfig.from_dict(json.load(fh))
    threads = args.threads or _default_threads()
    manifest = ds.generate_dataset(args.meshes, config, args.out, threads=threads)
    print(f"wrote {len(manifest.records)} records to {args.out} "
          f"({len(manifest.excluded)} excluded)")


def _cmd_mask(args):
    resp = _load_response(args.response)
    if isinstance(resp, RadarResponse):
        resp = sig.to_db(resp)
    mask = sig.gen_mask(resp.grid.n_aspect, resp.grid.n_roll, args.coverage, args.seed)
    out = sig.apply_mask(resp, mask, fill=args.fill)
    ds.write_tensor(args.out, out.values.astype(np.float32))
    print(f"wrote {args.out} (aspect window {mask.aspect_window}, "
          f"roll window {mask.roll_window})")


def _cmd_noise(args):
    resp = _load_response(args.response)
    if not isinstance(resp, RadarResponse):
        raise ValueError("noise applies in the linear domain: need a complex response file")
    out = sig.add_noise(resp, args.level_db, args.seed)
    ds.write_tensor(args.out, out.values.astype(np.complex64))
    print(f"wrote {args.out}")


def _cmd_sdf(args):
    if args.action == "sample":
        if not args.mesh:
            raise ValueError("sdf sample requires --mesh")
        mesh, _ = normalize_mesh(load_mesh(args.mesh))
        grid = sample_sdf_grid(mesh, args.resolution)
        ds.write_tensor(args.out, grid.values.astype(np.float32))
        print(f"wrote {args.out} (R={args.resolution})")
    else:  # extract
        if not args.grid:
            raise ValueError("sdf extract requires --grid")
        values = ds.read_tensor(args.grid).astype(np.float64)
        if values.ndim != 3 or len(set(values.shape)) != 1:
            raise ValueError("SDF grid tensor must be cubic")
        r = values.shape[0]
        spacing = 1.0 / r
        grid = SdfGrid(r, np.full(3, -0.5 + 0.5 * spacing), spacing, values)
        mesh = extract_mesh(grid, iso=args.iso)
        write_obj(mesh, args.out)
        print(f"wrote {args.out} ({mesh.n_faces} faces)")


def _cmd_evaluate(args):
    pred, _ = normalize_mesh(load_mesh(args.pred_mesh))
    gt, _ = normalize_mesh(load_mesh(args.gt_mesh))
    scores = {
        "chamfer": mt.chamfer(pred, gt, n=args.samples, seed=args.seed),
        "iou": mt.voxel_iou(pred, gt, resolution=args.resolution),
        "f_score": mt.f_score(pred, gt, n=args.samples, seed=args.seed),
    }
    if args.pred_profile and args.gt_profile:
        pp = RadialProfile.from_json(Path(args.pred_profile).read_text())
        gp = RadialProfile.from_json(Path(args.gt_profile).read_text())
        scores["iou_s"] = mt.iou_s(pp, gp)
        scores["match_s"] = mt.match_s(pp, gp)
    if args.gt_response and args.sim_config:
        with open(args.sim_config) as fh:
            config = ds.DatasetConfig.from_dict(json.load(fh))
        grid, sweep = config.grid(), config.sweep()
        gt_db = _load_response(args.gt_response, grid, sweep)
        if isinstance(gt_db, RadarResponse):
            gt_db = sig.to_db(gt_db)
        pred_resp = simulate_po(
            pred, grid, sweep, shadowing=config.shadowing, scale=config.scale,
            threads=args.threads or _default_threads(),
        )
        scores["iou_r"] = mt.iou_r(sig.to_db(pred_resp), gt_db)
    report = mt.MetricReport(
        chamfer=scores["chamfer"],
        iou=scores["iou"],
        f_score=scores["f_score"],
        iou_s=scores.get("iou_s"),
        iou_r=scores.get("iou_r"),
        match_s=scores.get("match_s"),
    )
    Path(args.out).write_text(report.to_json())
    print(report.to_json())


def _cmd_plot(args):
    resp = _load_response(args.response)
    if isinstance(resp, RadarResponse):
        resp = sig.to_db(resp)
    axis, _, index = args.slice.partition(":")
    idx = int(index) if index else 0
    if axis == "roll":
        img = render_heatmap(resp, roll_index=idx)
    elif axis == "aspect":
        img = render_heatmap(resp, aspect_index=idx)
    else:
        raise ValueError("--slice must look like roll:IDX or aspect:IDX")
    write_pgm(args.out, img)
    print(f"wrote {args.out} ({img.shape[1]}x{img.shape[0]})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scatterbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a radar response")
    p.add_argument("--mesh")
    p.add_argument("--sim", choices=["po", "sbr", "centers"], default="po")
    p.add_argument("--centers", help="JSON file of scattering centers")
    p.add_argument("--fmin", type=float, default=8e9)
    p.add_argument("--fmax", type=float, default=12e9)
    p.add_argument("--nfreq", type=int, default=128)
    p.add_argument("--naspect", type=int, default=64)
    p.add_argument("--nroll", type=int, default=64)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--shadowing", choices=["on", "off"], default="on")
    p.add_argument("--rays-per-wavelength", type=float, default=8.0)
    p.add_argument("--bounces", type=int, default=3)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gen-frusta", help="generate random frusta profiles and meshes")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmin", type=int, default=2)
    p.add_argument("--kmax", type=int, default=6)
    p.add_argument("--segments", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_frusta)

    p = sub.add_parser("gen-dataset", help="simulate a mesh directory into a dataset")
    p.add_argument("--meshes", required=True)
    p.add_argument("--config", required=True, help="DatasetConfig JSON file")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("mask", help="apply a random observability mask")
    p.add_argument("--response", required=True)
    p.add_argument("--coverage", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fill", type=float, default=sig.DB_FLOOR)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("noise", help="add complex Gaussian noise to a response")
    p.add_argument("--response", required=True)
    p.add_argument("--level-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("sdf", help="sample an SDF grid or extract its surface")
    p.add_argument("action", choices=["sample", "extract"])
    p.add_argument("--mesh")
    p.add_argument("--grid")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--iso", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sdf)

    p = sub.add_parser("evaluate", help="score a reconstruction against ground truth")
    p.add_argument("--pred-mesh", required=True)
    p.add_argument("--gt-mesh", required=True)
    p.add_argument("--gt-response")
    p.add_argument("--sim-config")
    p.add_argument("--pred-profile")
    p.add_argument("--gt-profile")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("plot", help="render a response slice as a PGM heatmap")
    p.add_argument("--response", required=True)
    p.add_argument("--slice", default="roll:0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
