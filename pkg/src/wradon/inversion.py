"""Backprojection and the normalized-filter approximate inversion.

The approximate inverse divides the data by the direction average of the
weight, applies the fused offset filter (derivative of order ``dim - 1``,
Hilbert-composed in even dimension), backprojects over the direction
sphere, and scales by a dimension constant:

    c_even = (-1)^((dim - 2)/2) / (2 (2 pi)^(dim - 1))
    c_odd  = (-1)^((dim - 1)/2) / (2 (2 pi)^(dim - 1))

so dim 2 gives 1/(4 pi) and dim 3 gives -1/(8 pi^2), each divided
pointwise by the averaged weight. The division by the average is what
makes the formula exact whenever the even part of the weight equals its
direction average, and approximate otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DataError
from .filters import SpectralPlan, chang_filter
from .forward import _run_indexed
from .grids import GridSpec, ScalarField, Sinogram
from .weights import Weight, w0_field


def chang_constant(dim: int) -> float:
    """Dimension constant of the approximate inversion (without the
    pointwise averaged-weight division)."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    if dim % 2 == 0:
        sign = -1.0 if ((dim - 2) // 2) % 2 else 1.0
    else:
        sign = -1.0 if ((dim - 1) // 2) % 2 else 1.0
    return sign / (2.0 * (2.0 * np.pi) ** (dim - 1))


def _corner_bound(spec: GridSpec, direction: np.ndarray) -> float:
    lo, hi = spec.bounds()
    corners = np.array([lo, hi])
    best = 0.0
    for mask in range(2 ** spec.dim):
        c = np.array([corners[(mask >> a) & 1][a] for a in range(spec.dim)])
        best = max(best, abs(float(c @ direction)))
    return best


def backproject(sino: Sinogram, spec: GridSpec, *, threads: int = 1,
                missing: str = "error") -> ScalarField:
    """Integrate data over directions at each grid point.

    Evaluates ``sum_j mu_j g(x . theta_j, theta_j)`` with linear
    interpolation in the offset. The offset window must cover every
    ``x . theta`` the grid can produce; a short window raises instead of
    extrapolating. Directions carrying non-finite values raise by
    default; ``missing="zero"`` drops them from the sum.
    """
    if sino.dim != spec.dim:
        raise ValueError("data dimension does not match grid")
    if missing not in ("error", "zero"):
        raise ValueError("missing must be 'error' or 'zero'")
    dirs = sino.directions
    bad = ~np.isfinite(sino.values).all(axis=1)
    if bad.any():
        if missing == "error":
            raise DataError(f"{int(bad.sum())} directions carry non-finite "
                            "values; drop them or pass missing='zero'")
    need = max(_corner_bound(spec, dirs.nodes[j]) for j in range(dirs.count))
    if sino.s_max < need - 1e-12:
        raise DataError(f"offset window [{-sino.s_max:.6g}, {sino.s_max:.6g}] "
                        f"does not cover the grid (needs {need:.6g})")

    points = spec.points()
    n_pts = points.shape[0]
    ds = sino.s_step
    half = (sino.s_count - 1) / 2.0
    top = sino.s_count - 1

    n_blocks = min(max(threads, 1), dirs.count)
    edges = np.linspace(0, dirs.count, n_blocks + 1).astype(int)
    accs = np.zeros((n_blocks, n_pts), dtype=np.complex128)

    def run(b):
        acc = accs[b]
        for j in range(edges[b], edges[b + 1]):
            if bad[j]:
                continue
            pos = points @ dirs.nodes[j] / ds + half
            np.clip(pos, 0.0, float(top), out=pos)
            i0 = np.minimum(pos.astype(np.int64), top - 1)
            fr = pos - i0
            row = sino.values[j]
            acc += dirs.quad_weights[j] * (row[i0] * (1.0 - fr) + row[i0 + 1] * fr)

    _run_indexed(run, n_blocks, threads)
    total = accs[0]
    for b in range(1, n_blocks):
        total = total + accs[b]

    meta = {"op": "backproject", "missing": missing,
            "dropped_directions": np.nonzero(bad)[0].tolist() if bad.any() else []}
    return ScalarField(spec, total.reshape(spec.shape), meta)


@dataclass
class Reconstruction:
    """Approximate inversion output plus the choices that produced it."""

    field: ScalarField
    meta: dict = dc_field(default_factory=dict)
    residual: "ResidualReport | None" = None


def chang_invert(sino: Sinogram, weight, spec: GridSpec, *,
                 plan: SpectralPlan | None = None, threads: int = 1,
                 missing: str = "error", w0_floor: float = 1e-8
                 ) -> Reconstruction:
    """Approximate inversion of weighted plane data on a grid.

    ``weight`` may be a Weight (its direction average is computed on the
    data's own direction set), a ScalarField holding the averaged weight
    on ``spec``, or a scalar. Averaged-weight magnitudes below
    ``w0_floor`` are a data error: the formula divides by them.
    """
    dim = sino.dim
    filtered = chang_filter(sino, plan)
    bp = backproject(filtered, spec, threads=threads, missing=missing)

    if isinstance(weight, Weight):
        w0 = w0_field(weight, spec, sino.directions, floor=w0_floor).values
        w0_desc = {"from": "weight", "spec": weight.meta.get("spec")}
    elif isinstance(weight, ScalarField):
        if weight.spec != spec:
            raise ValueError("averaged-weight field lives on a different grid")
        w0 = weight.values
        small = np.abs(w0) < w0_floor
        if small.any():
            raise DataError("averaged weight vanishes on the grid "
                            f"(min |w0| = {np.abs(w0).min():.3e})")
        w0_desc = {"from": "field"}
    else:
        w0 = complex(weight)
        if abs(w0) < w0_floor:
            raise DataError(f"averaged weight {w0} is below the floor")
        w0_desc = {"from": "scalar", "value": [w0.real, w0.imag]}

    const = chang_constant(dim)
    values = const * bp.values / w0
    meta = {"op": "chang_invert", "constant": const, "w0": w0_desc,
            "filter": filtered.meta.get("filter"),
            "boundary_warning": filtered.meta.get("boundary_warning"),
            "source": dict(sino.meta)}
    return Reconstruction(ScalarField(spec, values, meta), meta)


@dataclass(frozen=True)
class ResidualReport:
    """Relative errors of a reconstruction against a reference field.

    The interior numbers are taken on the ball of radius
    ``interior_radius`` about the origin (edge-of-grid artifacts
    excluded); the support numbers on the cells where the reference
    exceeds ``rel_floor`` times its peak.
    """

    rel_l2_interior: float
    rel_max_interior: float
    rel_l2_support: float
    rel_max_support: float
    interior_radius: float
    ref_peak: float


def exactness_residual(recon, reference: ScalarField, *,
                       interior_fraction: float = 0.9,
                       rel_floor: float = 1e-3) -> ResidualReport:
    """Compare a reconstruction (or its field) to a reference field."""
    if isinstance(recon, Reconstruction):
        recon = recon.field
    if recon.spec != reference.spec:
        raise ValueError("fields live on different grids")
    pts = recon.spec.points()
    radii = np.sqrt((pts * pts).sum(axis=1))
    lo, hi = recon.spec.bounds()
    inscribed = min(min(-lo), min(hi))
    r_int = interior_fraction * inscribed

    diff = (recon.values - reference.values).ravel()
    ref = reference.values.ravel()
    ref_peak = float(np.abs(ref).max())
    if ref_peak == 0.0:
        raise ValueError("reference field is identically zero")

    def stats(mask):
        if not mask.any():
            return float("nan"), float("nan")
        d = diff[mask]
        r = ref[mask]
        denom = float(np.sqrt((np.abs(r) ** 2).sum()))
        rel_l2 = float(np.sqrt((np.abs(d) ** 2).sum())) / denom \
            if denom > 0 else float("inf")
        rel_max = float(np.abs(d).max()) / ref_peak
        return rel_l2, rel_max

    l2_i, mx_i = stats(radii <= r_int)
    l2_s, mx_s = stats(np.abs(ref) >= rel_floor * ref_peak)
    return ResidualReport(l2_i, mx_i, l2_s, mx_s, r_int, ref_peak)
