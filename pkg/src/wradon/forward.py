"""Weighted plane and ray transforms, and the collapse of rays onto planes.

Geometry
--------
Plane data are parametrized by a unit normal ``theta`` and a signed offset
``s``: the value at ``(s, theta)`` integrates ``W(x, theta) f(x)`` over the
line (2D) or plane (3D) ``{x . theta = s}``.

Ray data in 3D are grouped into slices perpendicular to a fixed axis
``eta``: every stored ray lies in some plane ``{x . eta = c}`` with an
in-plane direction ``alpha`` and in-plane signed offset ``u``, so its base
point is ``c * eta + u * cross(eta, alpha)`` and satisfies ``base . alpha = 0``.

For a plane normal ``theta`` with ``cross(eta, theta) != 0``, the rays with
direction ``alpha = cross(eta, theta)/|cross(eta, theta)|`` rule the plane
``{x . theta = s}``; integrating the ray values over the ruling parameter
recovers the plane transform whose weight is ``W(x, theta) = w(x, alpha)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DataError
from .grids import (ScalarField, Sinogram, SphereGrid, interpolate,
                    orthonormal_frame, perp2, symmetric_coords,
                    trapezoid)
from .weights import Weight

_ALPHA_MATCH_TOL = 1e-9


def _run_indexed(fn, count: int, threads: int):
    """Run fn(j) for each index, optionally on a thread pool.

    Each call writes to its own output slot, so results do not depend on
    the scheduling order.
    """
    if threads <= 1 or count <= 1:
        for j in range(count):
            fn(j)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fn, range(count)))


def _field_reach(field: ScalarField, support_radius: float | None) -> float:
    if support_radius is not None:
        return float(support_radius)
    r = field.support_radius()
    return r + max(field.spacing)


def radon_w(field: ScalarField, weight: Weight, directions: SphereGrid,
            s_count: int, s_max: float | None = None, *,
            step: float | None = None, support_radius: float | None = None,
            threads: int = 1, meta: dict | None = None) -> Sinogram:
    """Weighted plane transform of a field on a direction/offset lattice.

    Lines (2D) or planes (3D) are sampled on a regular lattice with
    spacing ``step`` (default: half the smallest grid spacing) out to the
    field's support radius, and integrated with the trapezoid rule.
    Offsets beyond the support give exact zeros. The offset grid is
    symmetric; ``s_max`` defaults to the grid's corner radius so the
    result always covers a later backprojection onto the same grid.
    """
    dim = field.dim
    if directions.ambient_dim != dim:
        raise ValueError("direction set dimension does not match field")
    if weight.dim != dim:
        raise ValueError("weight dimension does not match field")
    if s_max is None:
        s_max = field.spec.corner_radius()
    if s_max < field.support_radius():
        raise DataError(f"offset range {s_max:.6g} does not cover the "
                        f"support radius {field.support_radius():.6g}")
    sino = Sinogram.zeros(directions, s_max, s_count)
    s_vals = sino.s_values

    reach = _field_reach(field, support_radius)
    h = step if step is not None else 0.5 * min(field.spacing)
    t_count = 2 * int(np.ceil(reach / h)) + 1
    t_vals = symmetric_coords(t_count, h)

    active = np.abs(s_vals) <= reach
    s_act = s_vals[active]
    values = np.zeros((directions.count, s_count), dtype=np.complex128)

    if dim == 2:
        def run(j):
            theta = directions.nodes[j]
            tp = perp2(theta)
            pts = s_act[:, None, None] * theta + t_vals[None, :, None] * tp
            fv = interpolate(field, pts.reshape(-1, 2)).reshape(len(s_act), t_count)
            wv = weight.eval_line_slab(theta, s_act, t_vals)
            if wv is None:
                wv = weight.eval(pts.reshape(-1, 2), theta) \
                    .reshape(len(s_act), t_count)
            values[j, active] = trapezoid(fv * wv, dx=h, axis=1)
    else:
        p_count = t_count

        def run(j):
            theta = directions.nodes[j]
            hint = weight.frame_hint(theta)
            u, v = hint if hint is not None else orthonormal_frame(theta)
            row = np.zeros(len(s_act), dtype=np.complex128)
            block = max(1, 4_000_000 // (p_count * p_count))
            for lo in range(0, len(s_act), block):
                s_blk = s_act[lo:lo + block]
                pts = (s_blk[:, None, None, None] * theta
                       + t_vals[None, :, None, None] * u
                       + t_vals[None, None, :, None] * v)
                fv = interpolate(field, pts.reshape(-1, 3)) \
                    .reshape(len(s_blk), p_count, p_count)
                wv = weight.eval_plane_slab(theta, u, v, s_blk, t_vals, t_vals)
                if wv is None:
                    wv = weight.eval(pts.reshape(-1, 3), theta) \
                        .reshape(len(s_blk), p_count, p_count)
                row[lo:lo + block] = trapezoid(trapezoid(fv * wv, dx=h, axis=2),
                                              dx=h, axis=1)
            values[j, active] = row

    _run_indexed(run, directions.count, threads)

    out_meta = {"op": "radon_w", "weight": weight.meta.get("spec"),
                "sample_step": h, "support_radius": reach,
                "directions": dict(directions.info),
                "s_count": s_count, "s_max": float(s_max)}
    if meta:
        out_meta.update(meta)
    return sino.with_values(values, out_meta)


# ---------------------------------------------------------------------------
# ray data

@dataclass(frozen=True)
class RayData:
    """Weighted ray integrals on a slices x directions x offsets lattice.

    ``values[l, k, i]`` belongs to the ray with base point
    ``slice_offsets[l] * eta + u_offsets[i] * cross(eta, directions[k])``
    and direction ``directions[k]``; every direction is perpendicular to
    ``eta`` and every base point is perpendicular to its ray.
    """

    eta: np.ndarray
    slice_offsets: np.ndarray
    directions: np.ndarray
    u_offsets: np.ndarray
    values: np.ndarray
    noise_sigma: float | None = None
    seed: int | None = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        eta = np.ascontiguousarray(np.asarray(self.eta, dtype=np.float64))
        if eta.shape != (3,) or abs(np.sqrt(eta @ eta) - 1.0) > 1e-12:
            raise ValueError("eta must be a unit 3-vector")
        dirs = np.ascontiguousarray(np.asarray(self.directions, dtype=np.float64))
        if dirs.ndim != 2 or dirs.shape[1] != 3:
            raise ValueError("directions must be (count, 3)")
        norms = np.sqrt((dirs * dirs).sum(axis=1))
        if np.abs(norms - 1.0).max(initial=0.0) > 1e-12:
            raise ValueError("ray directions must be unit vectors")
        if np.abs(dirs @ eta).max(initial=0.0) > 1e-14:
            raise ValueError("ray directions must be perpendicular to eta")
        for d in dirs:
            m = np.cross(eta, d)
            if abs(m @ d) > 1e-13:
                raise ValueError("in-plane offset axis must be perpendicular "
                                 "to the ray direction")
        sl = np.ascontiguousarray(np.asarray(self.slice_offsets, dtype=np.float64))
        uo = np.ascontiguousarray(np.asarray(self.u_offsets, dtype=np.float64))
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.complex128))
        if vals.shape != (len(sl), len(dirs), len(uo)):
            raise ValueError("values must have shape (slices, directions, offsets)")
        for name, arr in (("eta", eta), ("slice_offsets", sl),
                          ("directions", dirs), ("u_offsets", uo),
                          ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def with_values(self, values, *, noise_sigma=None, seed=None,
                    extra_meta: dict | None = None) -> "RayData":
        meta = dict(self.meta)
        if extra_meta:
            meta.update(extra_meta)
        return RayData(self.eta, self.slice_offsets, self.directions,
                       self.u_offsets, values,
                       noise_sigma if noise_sigma is not None else self.noise_sigma,
                       seed if seed is not None else self.seed, meta)


def ray_directions_for(sphere: SphereGrid, eta: np.ndarray,
                       polar_cap_tol: float = 0.05):
    """In-plane ray directions needed to cover a plane-normal set.

    Returns ``(alphas, index_of_node)`` where ``index_of_node[j]`` is the
    row of ``alphas`` serving sphere node ``j``, or -1 inside the polar
    cap ``|cross(eta, theta)| <= polar_cap_tol``.
    """
    eta = np.asarray(eta, dtype=np.float64)
    alphas: list[np.ndarray] = []
    index = np.full(sphere.count, -1, dtype=np.int64)
    for j in range(sphere.count):
        cr = np.cross(eta, sphere.nodes[j])
        nrm = np.sqrt(cr @ cr)
        if nrm <= polar_cap_tol:
            continue
        alpha = cr / nrm
        for k, known in enumerate(alphas):
            if np.abs(known - alpha).max() < 1e-12:
                index[j] = k
                break
        else:
            index[j] = len(alphas)
            alphas.append(alpha)
    return np.array(alphas), index


def build_ray_layout(sphere: SphereGrid, eta, slice_count: int,
                     slice_half_extent: float, u_count: int, u_max: float,
                     polar_cap_tol: float = 0.05,
                     support_radius: float | None = None) -> RayData:
    """Empty ray lattice whose directions cover a plane-normal set exactly."""
    eta = np.asarray(eta, dtype=np.float64)
    eta = eta / np.sqrt(eta @ eta)
    alphas, index = ray_directions_for(sphere, eta, polar_cap_tol)
    if len(alphas) == 0:
        raise ValueError("no usable directions outside the polar cap")
    if slice_count < 2 or u_count < 2:
        raise ValueError("need at least 2 slices and 2 offsets")
    slices = symmetric_coords(slice_count, 2.0 * slice_half_extent / (slice_count - 1))
    u_off = symmetric_coords(u_count, 2.0 * u_max / (u_count - 1))
    vals = np.zeros((slice_count, len(alphas), u_count), dtype=np.complex128)
    meta = {"alpha_index_of_direction": index.tolist(),
            "polar_cap_tol": polar_cap_tol,
            "plane_directions": dict(sphere.info)}
    if support_radius is not None:
        meta["support_radius"] = float(support_radius)
    return RayData(eta, slices, alphas, u_off, vals, meta=meta)


def ray_transform(field: ScalarField, ray_weight: Weight, layout: RayData, *,
                  step: float | None = None, support_radius: float | None = None,
                  threads: int = 1) -> RayData:
    """Weighted ray integrals of a field on a ray lattice.

    Rays are sampled with the trapezoid rule at spacing ``step`` (default:
    half the smallest grid spacing), truncated at the field's support
    sphere. Rays missing the support give exact zeros.
    """
    if field.dim != 3 or ray_weight.dim != 3:
        raise ValueError("ray transform lives in three dimensions")
    reach = _field_reach(field, support_radius)
    h = step if step is not None else 0.5 * min(field.spacing)
    t_count = 2 * int(np.ceil(reach / h)) + 1
    t_vals = symmetric_coords(t_count, h)

    eta = layout.eta
    L, K, U = layout.values.shape
    values = np.zeros((L, K, U), dtype=np.complex128)
    c_grid, u_grid = layout.slice_offsets, layout.u_offsets

    def run(k):
        alpha = layout.directions[k]
        m = np.cross(eta, alpha)
        m = m / np.sqrt(m @ m)
        bases = c_grid[:, None, None] * eta + u_grid[None, :, None] * m
        bases = bases.reshape(-1, 3)
        hit = (bases * bases).sum(axis=1) <= reach * reach
        if not hit.any():
            return
        base_hit = bases[hit]
        out = np.zeros(len(base_hit), dtype=np.complex128)
        block = max(1, 6_000_000 // t_count)
        wv_all = ray_weight.eval_ray_slab(alpha, base_hit, t_vals)
        for lo in range(0, len(base_hit), block):
            blk = base_hit[lo:lo + block]
            pts = blk[:, None, :] + t_vals[None, :, None] * alpha
            fv = interpolate(field, pts.reshape(-1, 3)).reshape(len(blk), t_count)
            if wv_all is None:
                wv = ray_weight.eval(pts.reshape(-1, 3), alpha) \
                    .reshape(len(blk), t_count)
            else:
                wv = wv_all[lo:lo + block]
            out[lo:lo + block] = trapezoid(fv * wv, dx=h, axis=1)
        slot = np.zeros(L * U, dtype=np.complex128)
        slot[hit] = out
        values[:, k, :] = slot.reshape(L, U)

    _run_indexed(run, K, threads)

    meta = {"op": "ray_transform", "weight": ray_weight.meta.get("spec"),
            "sample_step": h, "support_radius": reach}
    return layout.with_values(values, extra_meta=meta)


def add_noise(rays: RayData, sigma: float, seed: int) -> RayData:
    """Independent Gaussian noise (real, standard deviation sigma) per ray."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    noisy = rays.values + sigma * rng.standard_normal(rays.values.shape)
    return rays.with_values(noisy, noise_sigma=sigma, seed=seed,
                            extra_meta={"noise": {"sigma": sigma, "seed": seed}})


class InducedPlaneWeight(Weight):
    """Plane weight ``W(x, theta) = w(x, alpha(eta, theta))`` of a ray weight."""

    def __init__(self, ray_weight: Weight, eta, polar_cap_tol: float = 0.05):
        eta = np.asarray(eta, dtype=np.float64)
        self.ray_weight = ray_weight
        self.eta = eta / np.sqrt(eta @ eta)
        self.polar_cap_tol = polar_cap_tol
        super().__init__(3, None, kind="custom", bound=ray_weight.bound,
                         meta={"spec": {"kind": "induced_plane",
                                        "eta": self.eta.tolist(),
                                        "polar_cap_tol": polar_cap_tol,
                                        "of": ray_weight.meta.get("spec")}})

    def alpha(self, theta: np.ndarray) -> np.ndarray:
        cr = np.cross(self.eta, np.asarray(theta, dtype=np.float64))
        nrm = np.sqrt(cr @ cr)
        if nrm <= self.polar_cap_tol:
            raise DataError("plane normal lies in the polar cap; "
                            "no ray direction induces this plane weight")
        return cr / nrm

    def eval(self, points, theta):
        return self.ray_weight.eval(points, self.alpha(theta))

    def frame_hint(self, theta):
        alpha = self.alpha(theta)
        beta = np.cross(np.asarray(theta, dtype=np.float64), alpha)
        return alpha, beta

    def eval_plane_slab(self, theta, u, v, s_values, p_values, q_values):
        alpha = self.alpha(theta)
        if np.abs(u - alpha).max() > 1e-12:
            return None
        theta = np.asarray(theta, dtype=np.float64)
        s = np.asarray(s_values, dtype=np.float64)
        q = np.asarray(q_values, dtype=np.float64)
        bases = (s[:, None, None] * theta + q[None, :, None] * v).reshape(-1, 3)
        wv = self.ray_weight.eval_ray_slab(alpha, bases, p_values)
        if wv is None:
            return None
        wv = wv.reshape(len(s), len(q), len(p_values))
        return np.swapaxes(wv, 1, 2)


def _default_reach(rays: RayData) -> float:
    reach = rays.meta.get("support_radius")
    if reach is None:
        reach = min(float(np.abs(rays.slice_offsets).max()),
                    float(np.abs(rays.u_offsets).max()))
    return float(reach)


def plane_reduction_stencil(rays: RayData, theta, s_values, *,
                            reach: float | None = None,
                            polar_cap_tol: float = 0.05):
    """Linear-combination structure collapsing stored rays onto one plane
    normal.

    Returns ``(k, stencils)`` where ``k`` indexes the matching ray
    direction and ``stencils[i] = (flat_idx, coeff)`` expresses the plane
    value at offset ``s_values[i]`` as ``coeff @ rays.values[:, k, :].ravel()[flat_idx]``.
    The coefficients are the trapezoid weights along the ruling parameter
    times the linear-interpolation split between adjacent offset nodes,
    so their squares give the exact noise-variance multiplier of the
    reduction. Rays are used only inside the centered ball of radius
    ``reach`` (default: the recorded support radius).
    """
    eta = rays.eta
    theta = np.asarray(theta, dtype=np.float64)
    cr = np.cross(eta, theta)
    nrm = float(np.sqrt(cr @ cr))
    if nrm <= polar_cap_tol:
        raise DataError("plane normal lies inside the polar cap")
    alpha = cr / nrm
    diffs = np.abs(rays.directions - alpha).max(axis=1)
    k = int(np.argmin(diffs))
    if diffs[k] > _ALPHA_MATCH_TOL:
        raise DataError("ray data do not contain the needed in-plane direction")

    u_grid = rays.u_offsets
    du = u_grid[1] - u_grid[0]
    if np.abs(np.diff(u_grid) - du).max() > 1e-12 * max(abs(du), 1.0):
        raise DataError("offset grid must be uniform")
    if reach is None:
        reach = _default_reach(rays)

    c_grid = rays.slice_offsets
    u_count = len(u_grid)
    beta = np.cross(theta, alpha)
    beta_eta = float(beta @ eta)
    theta_eta = float(theta @ eta)

    stencils = []
    for s in np.asarray(s_values, dtype=np.float64):
        win2 = reach * reach - s * s
        if win2 <= 0.0:
            stencils.append(None)
            continue
        win = np.sqrt(win2)
        tau = (c_grid - s * theta_eta) / beta_eta
        sel = np.nonzero(np.abs(tau) <= win)[0]
        if len(sel) >= 2:
            u = -s * nrm + tau[sel] * theta_eta
            pos = (u - u_grid[0]) / du
            inside = (pos >= 0.0) & (pos <= u_count - 1)
            sel, pos = sel[inside], pos[inside]
        if len(sel) < 2:
            stencils.append(None)
            continue
        i0 = np.minimum(pos.astype(np.int64), u_count - 2)
        fr = pos - i0
        dtau = abs(tau[sel[1]] - tau[sel[0]])
        w = np.full(len(sel), dtau)
        w[0] = w[-1] = 0.5 * dtau
        flat = np.concatenate([sel * u_count + i0, sel * u_count + i0 + 1])
        coeff = np.concatenate([w * (1.0 - fr), w * fr])
        stencils.append((flat, coeff))
    return k, stencils


def reduce_rays_to_planes(rays: RayData, ray_weight: Weight,
                          directions: SphereGrid, s_count: int, s_max: float,
                          polar_cap_tol: float = 0.05
                          ) -> tuple[Sinogram, InducedPlaneWeight]:
    """Collapse ray data onto plane data by integrating over the ruling lines.

    For each plane normal outside the polar cap the stored slices are
    traversed along the ruling parameter (which maps one-to-one onto slice
    offsets), ray values are linearly interpolated in the in-plane offset,
    and the trapezoid rule over the ruling parameter yields the plane
    value. Normals inside the cap are flagged missing (NaN values plus an
    index list in the metadata), never silently zeroed.

    Returns the plane sinogram together with the induced plane weight.
    """
    if directions.ambient_dim != 3:
        raise ValueError("reduction produces 3D plane data")
    eta = rays.eta
    sino = Sinogram.zeros(directions, s_max, s_count)
    s_vals = sino.s_values
    reach = _default_reach(rays)

    values = np.full((directions.count, s_count), np.nan, dtype=np.complex128)
    missing = []
    for j in range(directions.count):
        theta = directions.nodes[j]
        cr = np.cross(eta, theta)
        if np.sqrt(cr @ cr) <= polar_cap_tol:
            missing.append(j)
            continue
        k, stencils = plane_reduction_stencil(rays, theta, s_vals, reach=reach,
                                              polar_cap_tol=polar_cap_tol)
        slab = rays.values[:, k, :].ravel()
        row = np.zeros(s_count, dtype=np.complex128)
        for i, st in enumerate(stencils):
            if st is not None:
                flat, coeff = st
                row[i] = slab[flat] @ coeff
        values[j] = row

    meta = {"op": "reduce_rays_to_planes", "eta": eta.tolist(),
            "polar_cap_tol": polar_cap_tol, "missing_directions": missing,
            "weight": ray_weight.meta.get("spec"),
            "support_radius": float(reach)}
    if rays.noise_sigma is not None:
        meta["noise"] = {"sigma": rays.noise_sigma, "seed": rays.seed}
    induced = InducedPlaneWeight(ray_weight, eta, polar_cap_tol)
    return sino.with_values(values, meta), induced
