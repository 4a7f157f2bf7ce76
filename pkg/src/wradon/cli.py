"""Command-line pipeline: phantoms, projections, rays, reduction,
inversion, symmetry checks, comparison, analysis reports.

Exit codes: 0 success (and symmetry condition holds), 1 symmetry
condition fails (check-symmetry only), 2 usage error, 3 data error
(unreadable or inconsistent files, vanishing averaged weight, offset
range too small).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analysis import (bump_discrimination, fourier_slice_residual,
                       make_bump_probe, parity_report, run_noise_experiment)
from .errors import DataError
from .fileio import (default_sibling, load_field, load_rays, load_sinogram,
                     load_weight_spec, save_field, save_json, save_pgm,
                     save_profiles, save_rays, save_sinogram)
from .filters import SpectralPlan
from .forward import (add_noise, build_ray_layout, radon_w, ray_transform,
                      reduce_rays_to_planes)
from .grids import (GridSpec, ScalarField, make_phantom, sphere_grid_for)
from .inversion import chang_invert, exactness_residual
from .weights import check_chang_symmetry, constant_weight, weight_from_spec


def _ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid_spec(dim: int, grid: str, spacing: str | None, extent: float) -> GridSpec:
    counts = _ints(grid)
    if len(counts) == 1:
        counts = counts * dim
    if len(counts) != dim:
        raise ValueError(f"--grid needs 1 or {dim} counts")
    if spacing is not None:
        steps = _floats(spacing)
        if len(steps) == 1:
            steps = steps * dim
        if len(steps) != dim:
            raise ValueError(f"--spacing needs 1 or {dim} steps")
    else:
        steps = [extent / n for n in counts]
    origin = [-(n - 1) * h / 2.0 for n, h in zip(counts, steps)]
    return GridSpec(dim, tuple(counts), tuple(steps), tuple(origin))


def _sphere(dim: int, angles: str):
    counts = _ints(angles)
    need = 1 if dim == 2 else 2
    if len(counts) != need:
        raise ValueError(f"--angles needs {need} count(s) for dimension {dim}")
    return sphere_grid_for(dim, *counts)


def _weight(source: str | None, dim: int):
    if source is None:
        return constant_weight(1.0, dim)
    return weight_from_spec(load_weight_spec(source), dim, load_field=load_field)


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _with_meta(field: ScalarField, meta: dict) -> ScalarField:
    merged = dict(field.meta)
    merged.update(meta)
    return ScalarField(field.spec, field.values, merged)


# ---------------------------------------------------------------------------
# commands

def cmd_phantom(args) -> int:
    spec = _grid_spec(args.dim, args.grid, args.spacing, args.extent)
    bodies = None
    if args.bodies:
        text = args.bodies.strip()
        bodies = json.loads(text) if text.startswith("[") else \
            json.loads(open(args.bodies, encoding="utf-8").read())
    center = _floats(args.center) if args.center else None
    field = make_phantom(args.kind, spec, center=center, radius=args.radius,
                         sigma=args.sigma, amplitude=args.amplitude,
                         edge=args.edge, mollify=not args.raw, bodies=bodies)
    field = _with_meta(field, {"config": _config(args)})
    save_field(args.out, field)
    print(f"wrote {args.out}: {args.kind} phantom, shape {field.shape}")
    return 0


def cmd_forward(args) -> int:
    field = load_field(args.field)
    weight = _weight(args.weight, field.dim)
    dirs = _sphere(field.dim, args.angles)
    sino = radon_w(field, weight, dirs, args.s_count, args.s_max,
                   step=args.step, threads=args.threads,
                   meta={"config": _config(args)})
    save_sinogram(args.out, sino)
    print(f"wrote {args.out}: {dirs.count} directions x {sino.s_count} offsets")
    return 0


def cmd_rays(args) -> int:
    field = load_field(args.field)
    if field.dim != 3:
        raise DataError("ray simulation needs a 3D field")
    weight = _weight(args.weight, 3)
    sphere = _sphere(3, args.angles)
    eta = np.array(_floats(args.eta))
    layout = build_ray_layout(sphere, eta, args.slices, args.slice_extent,
                              args.u_count, args.u_max,
                              polar_cap_tol=args.polar_cap_tol)
    rays = ray_transform(field, weight, layout, step=args.step,
                         threads=args.threads)
    if args.sigma > 0:
        rays = add_noise(rays, args.sigma, args.seed)
    rays = rays.with_values(rays.values, extra_meta={"config": _config(args)})
    save_rays(args.out, rays)
    print(f"wrote {args.out}: {rays.values.shape[0]} slices x "
          f"{rays.values.shape[1]} directions x {rays.values.shape[2]} offsets")
    return 0


def cmd_reduce(args) -> int:
    rays = load_rays(args.rays)
    weight = _weight(args.weight, 3)
    dirs = _sphere(3, args.angles)
    sino, induced = reduce_rays_to_planes(rays, weight, dirs, args.s_count,
                                          args.s_max, args.polar_cap_tol)
    sino = sino.with_values(sino.values, {"config": _config(args)})
    save_sinogram(args.out, sino)
    missing = sino.meta.get("missing_directions", [])
    print(f"wrote {args.out}: {dirs.count} directions "
          f"({len(missing)} in the polar cap)")
    if args.weight_out:
        save_json(args.weight_out, induced.meta["spec"])
        print(f"wrote {args.weight_out}: induced plane weight spec")
    return 0


def cmd_invert(args) -> int:
    sino = load_sinogram(args.sino)
    spec = _grid_spec(sino.dim, args.grid, args.spacing, args.extent)
    if args.w0_field:
        weight = load_field(args.w0_field)
    elif args.weight:
        weight = _weight(args.weight, sino.dim)
    else:
        weight = 1.0
    plan = SpectralPlan(pad_factor=args.pad, window=args.window)
    rec = chang_invert(sino, weight, spec, plan=plan, threads=args.threads,
                       missing=args.missing, w0_floor=args.w0_floor)
    field = _with_meta(rec.field, {"config": _config(args)})
    save_field(args.out, field)
    save_pgm(default_sibling(args.out, ".pgm"), field,
             meta={"config": _config(args)})
    save_profiles(default_sibling(args.out, ".profiles.csv"), field)
    print(f"wrote {args.out} (+ .pgm, .profiles.csv): "
          f"reconstruction on shape {field.shape}")
    return 0


def cmd_check_symmetry(args) -> int:
    weight = _weight(args.weight, args.dim)
    spec = _grid_spec(args.dim, args.grid, args.spacing, args.extent)
    dirs = _sphere(args.dim, args.angles)
    rep = check_chang_symmetry(weight, spec, dirs, tol=args.tol)
    print(f"max |W_even - w0| = {rep.max_violation:.6e} over "
          f"{rep.x_count} points x {rep.dir_count} directions")
    print(f"min |w0| = {rep.min_abs_w0:.6e}")
    if rep.min_abs_w0 < args.w0_floor:
        print(f"warning: averaged weight falls below the floor {args.w0_floor:g}")
    if args.out:
        save_json(args.out, {"max_violation": rep.max_violation,
                             "min_abs_w0": rep.min_abs_w0,
                             "x_count": rep.x_count,
                             "dir_count": rep.dir_count, "tol": rep.tol,
                             "argmax": rep.argmax, "holds": rep.holds,
                             "config": _config(args)})
    if rep.holds:
        print(f"symmetry condition holds at tolerance {args.tol:g}")
        return 0
    print(f"symmetry condition FAILS at tolerance {args.tol:g}")
    return 1


def cmd_compare(args) -> int:
    recon = load_field(args.recon)
    reference = load_field(args.reference)
    res = exactness_residual(recon, reference,
                             interior_fraction=args.interior_fraction,
                             rel_floor=args.rel_floor)
    print(f"interior: rel L2 {res.rel_l2_interior:.4e}, "
          f"rel max {res.rel_max_interior:.4e} "
          f"(radius {res.interior_radius:.3g})")
    print(f"support:  rel L2 {res.rel_l2_support:.4e}, "
          f"rel max {res.rel_max_support:.4e}")
    if args.out:
        save_json(args.out, {"rel_l2_interior": res.rel_l2_interior,
                             "rel_max_interior": res.rel_max_interior,
                             "rel_l2_support": res.rel_l2_support,
                             "rel_max_support": res.rel_max_support,
                             "interior_radius": res.interior_radius,
                             "ref_peak": res.ref_peak,
                             "config": _config(args)})
    return 0


def cmd_report(args) -> int:
    cfg = _config(args)
    if args.kind == "fourier":
        sino = load_sinogram(args.sino)
        rep = fourier_slice_residual(sino, threads=args.threads,
                                     return_report=True)
        out = {"residual": rep.residual, "plain_residual": rep.plain_residual,
               "filtered_residual": rep.filtered_residual,
               "xi": rep.xi, "bin_width": rep.bin_width,
               "excluded_count": len(rep.excluded),
               "window_sigma": rep.window_sigma, "config": cfg}
        print(f"dual-identity residual {rep.residual:.4e} "
              f"(plain {rep.plain_residual:.4e}, "
              f"filtered {rep.filtered_residual:.4e})")
    elif args.kind == "parity":
        field = load_field(args.field)
        weight = _weight(args.weight, field.dim)
        dirs = _sphere(field.dim, args.angles)
        rep = parity_report(weight, field, dirs, args.s_count,
                            s_max=args.s_max, threads=args.threads)
        out = {"data_max": rep.data_max, "even_violation": rep.even_violation,
               "hilbert_parity_violation": rep.hilbert_parity_violation,
               "fourier_even_max": rep.fourier_even_max,
               "fourier_odd_max": rep.fourier_odd_max, "config": cfg}
        print(f"difference data max {rep.data_max:.4e}; parity violation "
              f"{rep.even_violation:.4e}; Hilbert parity violation "
              f"{rep.hilbert_parity_violation:.4e}")
    elif args.kind == "noise":
        rays = load_rays(args.rays)
        weight = _weight(args.weight, 3)
        dirs = _sphere(3, args.angles)
        rep = run_noise_experiment(rays, weight, dirs, args.s_count,
                                   args.s_max, sigma=args.sigma,
                                   seed=args.seed, trials=args.trials,
                                   polar_cap_tol=args.polar_cap_tol)
        out = {"trial_count": rep.trial_count, "cell_count": rep.cell_count,
               "sigma_sq": rep.sigma_sq,
               "reduced_variance": rep.reduced_variance,
               "model_variance": rep.model_variance,
               "variance_ratio_emp": rep.variance_ratio_emp,
               "variance_ratio_model": rep.variance_ratio_model,
               "max_rel_mismatch": rep.max_rel_mismatch, "config": cfg}
        print(f"variance ratio {rep.variance_ratio_emp:.4e} "
              f"(closed form {rep.variance_ratio_model:.4e}) over "
              f"{rep.trial_count} trials")
    else:
        weight = _weight(args.weight, args.dim)
        dirs = _sphere(args.dim, args.angles)
        y = np.array(_floats(args.y))
        theta = np.array(_floats(args.theta))
        try:
            probe = make_bump_probe(weight, y, theta, dirs,
                                    epsilon_frac=args.epsilon_frac,
                                    delta0=args.delta0)
        except DataError as exc:
            if "no violation" not in str(exc):
                raise
            out = {"no_violation": True, "message": str(exc), "config": cfg}
            print(str(exc))
            if args.out:
                save_json(args.out, out)
            return 0
        rep = bump_discrimination(weight, probe, dirs)
        out = {"y": probe.y, "theta": probe.theta, "delta": probe.delta,
               "z": probe.z, "epsilon": probe.epsilon,
               "difference": rep.difference, "mass": rep.mass,
               "bound": rep.bound, "quad_tol": rep.quad_tol,
               "certified": rep.certified, "config": cfg}
        print(f"certified={rep.certified}: |difference| {rep.difference:.6e} "
              f">= bound {rep.bound:.6e} (quad tol {rep.quad_tol:.2e})")
    if args.out:
        save_json(args.out, out)
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_grid_flags(p, default_grid="33", default_extent=2.2):
    p.add_argument("--grid", default=default_grid,
                   help="per-axis sample counts, e.g. 256 or 64,64,64")
    p.add_argument("--spacing", default=None,
                   help="per-axis grid step (default: extent/count)")
    p.add_argument("--extent", type=float, default=default_extent,
                   help="grid width when --spacing is not given")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wradon",
                                 description="weighted Radon transforms: "
                                 "projection, inversion, symmetry analysis")
    sub = ap.add_subparsers(dest="command", required=True)
    cpu = max(1, os.cpu_count() or 1)

    p = sub.add_parser("phantom", help="write a test field")
    p.add_argument("--dim", type=int, choices=(2, 3), required=True)
    _add_grid_flags(p, "128", 2.2)
    p.add_argument("--kind", choices=("ball", "gaussian", "ellipsoids"),
                   default="ball")
    p.add_argument("--center", default=None, help="comma-separated center")
    p.add_argument("--radius", type=float, default=0.7)
    p.add_argument("--sigma", type=float, default=0.12)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--edge", type=float, default=None,
                   help="mollification width (default: two cells)")
    p.add_argument("--raw", action="store_true", help="skip mollification")
    p.add_argument("--bodies", default=None,
                   help="JSON list (inline or file) for ellipsoids")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("forward", help="weighted plane transform of a field")
    p.add_argument("--field", required=True)
    p.add_argument("--weight", default=None, help="weight spec JSON "
                   "(inline or file; default: constant 1)")
    p.add_argument("--angles", required=True, help="M (2D) or L,M (3D)")
    p.add_argument("--s-count", type=int, default=257)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--threads", type=int, default=cpu)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("rays", help="weighted ray transform on slices")
    p.add_argument("--field", required=True)
    p.add_argument("--weight", default=None)
    p.add_argument("--angles", required=True,
                   help="L,M plane-normal grid the rays must cover")
    p.add_argument("--eta", default="0,0,1")
    p.add_argument("--slices", type=int, default=97)
    p.add_argument("--slice-extent", type=float, default=0.9)
    p.add_argument("--u-count", type=int, default=97)
    p.add_argument("--u-max", type=float, default=0.95)
    p.add_argument("--polar-cap-tol", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--threads", type=int, default=cpu)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rays)

    p = sub.add_parser("reduce", help="collapse ray data onto plane data")
    p.add_argument("--rays", required=True)
    p.add_argument("--weight", default=None, help="ray weight spec")
    p.add_argument("--angles", required=True)
    p.add_argument("--s-count", type=int, default=65)
    p.add_argument("--s-max", type=float, required=True)
    p.add_argument("--polar-cap-tol", type=float, default=0.05)
    p.add_argument("--weight-out", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("invert", help="approximate inversion of plane data")
    p.add_argument("--sino", required=True)
    _add_grid_flags(p, "128", 2.2)
    p.add_argument("--weight", default=None)
    p.add_argument("--w0-field", default=None,
                   help="field file holding the averaged weight")
    p.add_argument("--pad", type=int, default=4)
    p.add_argument("--window", choices=("none", "cosine"), default="none")
    p.add_argument("--missing", choices=("error", "zero"), default="error")
    p.add_argument("--w0-floor", type=float, default=1e-8)
    p.add_argument("--threads", type=int, default=cpu)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("check-symmetry",
                       help="test whether the weight's even part equals "
                       "its direction average")
    p.add_argument("--weight", required=True)
    p.add_argument("--dim", type=int, choices=(2, 3), required=True)
    _add_grid_flags(p)
    p.add_argument("--angles", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--w0-floor", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check_symmetry)

    p = sub.add_parser("compare", help="error metrics between two fields")
    p.add_argument("--recon", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--interior-fraction", type=float, default=0.9)
    p.add_argument("--rel-floor", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="analysis reports (JSON)")
    p.add_argument("--kind", choices=("fourier", "parity", "noise", "bump"),
                   required=True)
    p.add_argument("--sino", default=None)
    p.add_argument("--field", default=None)
    p.add_argument("--rays", default=None)
    p.add_argument("--weight", default=None)
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--angles", default="360")
    p.add_argument("--s-count", type=int, default=257)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--polar-cap-tol", type=float, default=0.05)
    p.add_argument("--y", default="0,0")
    p.add_argument("--theta", default="1,0")
    p.add_argument("--epsilon-frac", type=float, default=0.25)
    p.add_argument("--delta0", type=float, default=0.4)
    p.add_argument("--threads", type=int, default=cpu)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
