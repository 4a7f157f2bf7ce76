"""Direction-dependent weights W(x, theta) and their symmetry diagnostics.

A weight is anything that can be evaluated at a batch of points for one
direction. In two dimensions the direction argument is the plane normal
theta; attenuation weights then integrate along ``perp2(theta)``. In three
dimensions an attenuation weight is a ray weight: the direction argument
is the ray direction itself, and its plane form arises when ray data are
collapsed onto planes (see ``wradon.forward``).

The direction average

    w0(x) = (1 / |S^{n-1}|) * integral of W(x, theta) over directions

is computed with the same spherical quadrature that the transforms use, so
symmetry checks and reconstructions see one consistent discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .grids import (GridSpec, ScalarField, SphereGrid, interpolate,
                    orthonormal_frame, perp2, symmetric_coords,
                    trapezoid)


class Weight:
    """Evaluable weight with a kind tag and a crude magnitude bound."""

    def __init__(self, dim: int, fn, kind: str = "custom",
                 bound: float | None = None, meta: dict | None = None):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        self.dim = dim
        self._fn = fn
        self.kind = kind
        self.bound = bound
        self.meta = meta or {}

    def eval(self, points: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Weight values at ``points`` (N, dim) for one unit direction."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = self._fn(pts, np.asarray(theta, dtype=np.float64))
        return np.asarray(out, dtype=np.complex128)

    # Optional fast-path hooks; the generic weight provides none.

    def frame_hint(self, theta: np.ndarray):
        """Preferred in-plane frame for plane sampling, or None."""
        return None

    def eval_line_slab(self, theta, s_values, t_values):
        """2D values on the lattice ``s*theta + t*perp2(theta)``, or None."""
        return None

    def eval_plane_slab(self, theta, u, v, s_values, p_values, q_values):
        """3D values on ``s*theta + p*u + q*v``, or None."""
        return None

    def eval_ray_slab(self, alpha, base_points, t_values):
        """Values along rays ``base + t*alpha`` as ``(N, T)``, or None."""
        return None


def constant_weight(value: complex, dim: int) -> Weight:
    """W identically equal to ``value`` (which must be nonzero)."""
    value = complex(value)
    if value == 0:
        raise ValueError("constant weight must be nonzero")

    def fn(pts, theta):
        return np.full(len(pts), value, dtype=np.complex128)

    return Weight(dim, fn, kind="constant", bound=abs(value),
                  meta={"spec": {"kind": "constant",
                                 "value": [value.real, value.imag]}})


# ---------------------------------------------------------------------------
# spatial profiles used by the parametric weights

def make_profile(spec: dict | None, dim: int):
    """Scalar spatial factor from a small dict description.

    ``{"type": "one"}`` (default), ``{"type": "gaussian", "center": [...],
    "sigma": s}``, or ``{"type": "ball", "center": [...], "radius": r,
    "edge": w}`` (smooth indicator, cosine edge).
    """
    spec = spec or {"type": "one"}
    kind = spec.get("type", "one")
    if kind == "one":
        def prof(pts):
            return np.ones(len(pts))
        prof.sup = 1.0
    elif kind == "gaussian":
        center = np.asarray(spec.get("center", [0.0] * dim), float)
        sigma = float(spec["sigma"])

        def prof(pts):
            r2 = ((pts - center) ** 2).sum(axis=1)
            return np.exp(-0.5 * r2 / (sigma * sigma))
        prof.sup = 1.0
    elif kind == "ball":
        center = np.asarray(spec.get("center", [0.0] * dim), float)
        radius = float(spec["radius"])
        edge = float(spec.get("edge", 0.1 * radius))

        def prof(pts):
            rho = np.sqrt(((pts - center) ** 2).sum(axis=1))
            out = np.zeros(len(pts))
            out[rho <= radius] = 1.0
            band = (rho > radius) & (rho < radius + edge)
            out[band] = 0.5 * (1.0 + np.cos(np.pi * (rho[band] - radius) / edge))
            return out
        prof.sup = 1.0
    else:
        raise ValueError(f"unknown profile type {kind!r}")
    prof.spec = dict(spec)
    return prof


def poly_theta_weight(dim: int, constant: complex = 1.0,
                      terms: list[tuple] | None = None) -> Weight:
    """W(x, theta) = constant + sum of coef * profile(x) * prod(theta**powers).

    ``terms`` is a list of ``(coef, powers, profile_spec)`` with ``powers``
    a length-``dim`` tuple of exponents.
    """
    terms = terms or []
    built = []
    bound = abs(complex(constant))
    for coef, powers, prof_spec in terms:
        if len(powers) != dim:
            raise ValueError("term powers must have length dim")
        prof = make_profile(prof_spec, dim)
        built.append((complex(coef), tuple(int(p) for p in powers), prof))
        bound += abs(complex(coef)) * prof.sup

    def fn(pts, theta):
        out = np.full(len(pts), complex(constant), dtype=np.complex128)
        for coef, powers, prof in built:
            tfac = 1.0
            for a, p in enumerate(powers):
                if p:
                    tfac = tfac * theta[a] ** p
            if tfac != 0.0:
                out += coef * tfac * prof(pts)
        return out

    spec = {"kind": "polynomial_in_theta",
            "constant": [complex(constant).real, complex(constant).imag],
            "terms": [{"coef": [c.real, c.imag], "powers": list(p),
                       "profile": prof.spec} for c, p, prof in built]}
    return Weight(dim, fn, kind="polynomial_in_theta", bound=bound,
                  meta={"spec": spec})


def half_wave_weight(dim: int, coef: float, axis: int = 0,
                     profile: dict | None = None) -> Weight:
    """W(x, theta) = 1 + coef * profile(x) * max(theta[axis], 0).

    Picks up one hemisphere only, so it genuinely breaks the antipodal
    symmetry that exact inversion needs.
    """
    prof = make_profile(profile, dim)
    coef = float(coef)

    def fn(pts, theta):
        tfac = max(float(theta[axis]), 0.0)
        out = np.ones(len(pts), dtype=np.complex128)
        if tfac:
            out += coef * tfac * prof(pts)
        return out

    spec = {"kind": "half_wave", "coef": coef, "axis": axis,
            "profile": prof.spec}
    return Weight(dim, fn, kind="custom", bound=1.0 + abs(coef) * prof.sup,
                  meta={"spec": spec})


def symmetrize(weight: Weight) -> Weight:
    """The even part in theta: ``(W(x, theta) + W(x, -theta)) / 2``."""

    def fn(pts, theta):
        return 0.5 * (weight.eval(pts, theta) + weight.eval(pts, -theta))

    return Weight(weight.dim, fn, kind="custom", bound=weight.bound,
                  meta={"spec": {"kind": "symmetrized",
                                 "of": weight.meta.get("spec")}})


# ---------------------------------------------------------------------------
# attenuation

@dataclass(frozen=True)
class AttenuationMap:
    """Non-negative attenuation coefficient on a grid, plus its ray step."""

    field: ScalarField
    step: float

    def __post_init__(self):
        vals = self.field.values
        if np.abs(vals.imag).max(initial=0.0) > 0.0:
            raise ValueError("attenuation map must be real-valued")
        if vals.real.min(initial=0.0) < 0.0:
            raise ValueError("attenuation map must be non-negative")
        if self.step <= 0:
            raise ValueError("step must be positive")


def divergent_beam(a: ScalarField | AttenuationMap, points: np.ndarray,
                   direction: np.ndarray, step: float | None = None) -> np.ndarray:
    """Trapezoid integral of the map along ``x + t*direction`` for t >= 0.

    The integration is truncated where the half-line has certainly left
    the map's bounding box. Default step: half the smallest grid spacing.
    """
    if isinstance(a, AttenuationMap):
        if step is None:
            step = a.step
        a = a.field
    if step is None:
        step = 0.5 * min(a.spacing)
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.sqrt(d @ d)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))

    box_radius = a.spec.corner_radius()
    pt_radius = float(np.sqrt((pts * pts).sum(axis=1).max(initial=0.0)))
    t_max = pt_radius + box_radius + step
    count = max(int(np.ceil(t_max / step)) + 1, 2)
    t = np.linspace(0.0, t_max, count)

    out = np.empty(len(pts))
    chunk = max(1, 8_000_000 // (count * a.dim))
    for lo in range(0, len(pts), chunk):
        block = pts[lo:lo + chunk]
        samples = block[:, None, :] + t[None, :, None] * d
        vals = interpolate(a, samples.reshape(-1, a.dim)).real
        out[lo:lo + chunk] = trapezoid(vals.reshape(len(block), count), dx=t[1] - t[0],
                                      axis=1)
    return out


def _reverse_cumtrapz(vals: np.ndarray, step: float) -> np.ndarray:
    """Trapezoid integrals from each sample to the end of the last axis."""
    seg = 0.5 * (vals[..., 1:] + vals[..., :-1]) * step
    out = np.zeros(vals.shape)
    out[..., :-1] = np.cumsum(seg[..., ::-1], axis=-1)[..., ::-1]
    return out


class AttenuationWeight(Weight):
    """W = exp(-D a) built from an attenuation map.

    In 2D the decay is integrated along ``perp2(theta)``; in 3D the
    direction argument is the ray direction itself. Large point batches
    are served from a cached table of the beam transform on a lattice
    aligned with the integration direction, so repeated evaluations for
    one direction cost one interpolation per point.
    """

    _TABLE_THRESHOLD = 512

    def __init__(self, a: ScalarField, step: float | None = None):
        step = step if step is not None else 0.5 * min(a.spacing)
        self.map = AttenuationMap(a, step)
        self._tables: dict[bytes, tuple] = {}
        super().__init__(a.dim, None, kind="attenuation", bound=1.0,
                         meta={"spec": {"kind": "attenuation", "step": step}})

    def ray_direction(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        return perp2(theta) if self.dim == 2 else theta

    def beam(self, points: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Divergent-beam transform of the map at ``points`` along ``direction``."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if len(pts) < self._TABLE_THRESHOLD:
            return divergent_beam(self.map, pts, direction)
        aux, frame = self._table(np.asarray(direction, dtype=np.float64))
        return interpolate(aux, pts @ frame.T).real

    def eval(self, points: np.ndarray, theta: np.ndarray) -> np.ndarray:
        da = self.beam(points, self.ray_direction(theta))
        return np.exp(-da).astype(np.complex128)

    def _table(self, direction: np.ndarray):
        key = direction.tobytes()
        hit = self._tables.get(key)
        if hit is not None:
            return hit
        a = self.map.field
        step = self.map.step
        if a.dim == 2:
            rows = np.stack([perp2(direction), direction])
        else:
            u, v = orthonormal_frame(direction)
            rows = np.stack([u, v, direction])
        # frame-coordinate bounds of the map's box, padded so that queries
        # slightly outside the support still interpolate to sensible values
        corners = np.array(np.meshgrid(*[(lo, hi) for lo, hi in
                                         zip(*a.spec.bounds())],
                                       indexing="ij")).reshape(a.dim, -1).T
        proj = corners @ rows.T
        lo = proj.min(axis=0) - 2 * step
        hi = proj.max(axis=0) + 2 * step
        shape = tuple(int(np.ceil((h - l) / step)) + 1 for l, h in zip(lo, hi))
        spec = GridSpec(a.dim, shape, (step,) * a.dim, tuple(lo))
        pts_frame = spec.points()
        samples = interpolate(a, pts_frame @ rows).real.reshape(shape)
        da = _reverse_cumtrapz(samples, step)
        aux = ScalarField(spec, da.astype(np.complex128))
        if len(self._tables) >= 32:
            self._tables.pop(next(iter(self._tables)))
        self._tables[key] = (aux, rows)
        return aux, rows

    def eval_line_slab(self, theta, s_values, t_values):
        """2D fast path: the line parameter runs along the decay direction."""
        if self.dim != 2:
            return None
        theta = np.asarray(theta, dtype=np.float64)
        d = perp2(theta)
        t = np.asarray(t_values, dtype=np.float64)
        dt = t[1] - t[0]
        # extend past the requested range so the tail of the map is included
        reach = self.map.field.spec.corner_radius() + dt
        extra = max(int(np.ceil((reach - t[-1]) / dt)), 0)
        t_all = np.concatenate([t, t[-1] + dt * (1 + np.arange(extra))])
        s = np.asarray(s_values, dtype=np.float64)
        pts = (s[:, None, None] * theta + t_all[None, :, None] * d)
        a_vals = interpolate(self.map.field,
                             pts.reshape(-1, 2)).real.reshape(len(s), len(t_all))
        da = _reverse_cumtrapz(a_vals, dt)[:, :len(t)]
        return np.exp(-da).astype(np.complex128)

    def eval_ray_slab(self, alpha, base_points, t_values):
        """3D fast path: cumulative decay along each ray in one sweep."""
        if self.dim != 3:
            return None
        alpha = np.asarray(alpha, dtype=np.float64)
        t = np.asarray(t_values, dtype=np.float64)
        dt = t[1] - t[0]
        reach = self.map.field.spec.corner_radius() + dt
        extra = max(int(np.ceil((reach - t[-1]) / dt)), 0)
        t_all = np.concatenate([t, t[-1] + dt * (1 + np.arange(extra))])
        base = np.atleast_2d(np.asarray(base_points, dtype=np.float64))
        out = np.empty((len(base), len(t)), dtype=np.complex128)
        chunk = max(1, 12_000_000 // (len(t_all) * 3))
        for lo in range(0, len(base), chunk):
            block = base[lo:lo + chunk]
            pts = block[:, None, :] + t_all[None, :, None] * alpha
            a_vals = interpolate(self.map.field, pts.reshape(-1, 3)).real
            da = _reverse_cumtrapz(a_vals.reshape(len(block), len(t_all)), dt)
            out[lo:lo + chunk] = np.exp(-da[:, :len(t)])
        return out


def attenuation_weight(a: ScalarField, step: float | None = None) -> AttenuationWeight:
    """Exponential attenuation weight from a non-negative map."""
    return AttenuationWeight(a, step)


# ---------------------------------------------------------------------------
# direction averages and symmetry checks

def eval_w0(weight: Weight, points: np.ndarray, sphere: SphereGrid) -> np.ndarray:
    """Direction average of the weight at ``points`` under the grid's quadrature."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if sphere.ambient_dim != weight.dim:
        raise ValueError("sphere grid dimension does not match weight")
    acc = np.zeros(len(pts), dtype=np.complex128)
    for j in range(sphere.count):
        acc += sphere.quad_weights[j] * weight.eval(pts, sphere.nodes[j])
    return acc / sphere.quad_weights.sum()


def w0_weight(weight: Weight, sphere: SphereGrid) -> Weight:
    """The direction average packaged as a (direction-blind) weight."""

    def fn(pts, theta):
        return eval_w0(weight, pts, sphere)

    return Weight(weight.dim, fn, kind="custom", bound=weight.bound,
                  meta={"spec": {"kind": "direction_average",
                                 "of": weight.meta.get("spec")}})


def w0_field(weight: Weight, spec: GridSpec, sphere: SphereGrid,
             floor: float = 1e-8) -> ScalarField:
    """Tabulated direction average; rejects near-vanishing averages.

    Raises ``DataError`` when ``|w0|`` drops below ``floor`` anywhere,
    reporting the offending grid node.
    """
    pts = spec.points()
    vals = eval_w0(weight, pts, sphere)
    mags = np.abs(vals)
    idx = int(np.argmin(mags))
    if mags[idx] < floor:
        raise DataError(
            f"direction average too small: |w0|={mags[idx]:.3e} < {floor:g} "
            f"at grid node {np.unravel_index(idx, spec.shape)} "
            f"(x={pts[idx].tolist()})")
    return ScalarField(spec, vals.reshape(spec.shape),
                       meta={"w0_floor": floor, "directions": sphere.count})


def sample_weight(weight: Weight, spec: GridSpec, sphere: SphereGrid) -> np.ndarray:
    """Dense table W[node, direction] over grid x sphere (for diagnostics)."""
    pts = spec.points()
    out = np.empty((len(pts), sphere.count), dtype=np.complex128)
    for j in range(sphere.count):
        out[:, j] = weight.eval(pts, sphere.nodes[j])
    return out


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of the exactness-condition check for a weight."""

    max_violation: float
    min_abs_w0: float
    x_count: int
    dir_count: int
    tol: float
    argmax: dict

    @property
    def holds(self) -> bool:
        return self.max_violation <= self.tol


def check_chang_symmetry(weight: Weight, spec: GridSpec, sphere: SphereGrid,
                         tol: float = 1e-10) -> SymmetryReport:
    """Measure how far the weight's even part is from its direction average.

    The reconstruction formula is exact precisely when the maximum over
    samples of ``|(W(x,theta) + W(x,-theta))/2 - w0(x)|`` vanishes; this
    returns that maximum over all grid nodes and direction nodes.
    """
    pts = spec.points()
    mu = sphere.quad_weights
    total = mu.sum()

    chunk = max(1, 4_000_000 // sphere.count)
    max_violation = 0.0
    min_abs_w0 = np.inf
    argmax = {}
    for lo in range(0, len(pts), chunk):
        block = pts[lo:lo + chunk]
        evals = np.empty((len(block), sphere.count), dtype=np.complex128)
        for j in range(sphere.count):
            evals[:, j] = weight.eval(block, sphere.nodes[j])
        w0 = evals @ mu / total
        min_abs_w0 = min(min_abs_w0, float(np.abs(w0).min()))
        even = 0.5 * (evals + evals[:, sphere.antipode])
        viol = np.abs(even - w0[:, None])
        k = np.unravel_index(int(np.argmax(viol)), viol.shape)
        if viol[k] > max_violation:
            max_violation = float(viol[k])
            argmax = {"x": block[k[0]].tolist(),
                      "theta": sphere.nodes[k[1]].tolist()}
    return SymmetryReport(max_violation, float(min_abs_w0), len(pts),
                          sphere.count, tol, argmax)


# ---------------------------------------------------------------------------
# JSON construction

def weight_from_spec(spec: dict, dim: int,
                     load_field=None) -> Weight:
    """Build a weight from its dict description (the CLI's --weight format).

    ``load_field`` maps a path string to a ScalarField and is only needed
    for attenuation specs that reference a field file.
    """
    kind = spec.get("kind")
    if kind == "constant":
        value = spec.get("value", 1.0)
        if isinstance(value, (list, tuple)):
            value = complex(value[0], value[1])
        return constant_weight(value, dim)
    if kind == "polynomial_in_theta":
        const = spec.get("constant", 1.0)
        if isinstance(const, (list, tuple)):
            const = complex(const[0], const[1])
        terms = []
        for term in spec.get("terms", []):
            coef = term["coef"]
            if isinstance(coef, (list, tuple)):
                coef = complex(coef[0], coef[1])
            terms.append((coef, term["powers"], term.get("profile")))
        return poly_theta_weight(dim, const, terms)
    if kind == "half_wave":
        return half_wave_weight(dim, spec["coef"], spec.get("axis", 0),
                                spec.get("profile"))
    if kind == "attenuation":
        ref = spec["map"]
        if isinstance(ref, ScalarField):
            a = ref
        else:
            if load_field is None:
                raise ValueError("attenuation spec needs a field loader")
            a = load_field(ref)
        w = attenuation_weight(a, spec.get("step"))
        if isinstance(ref, str):
            # keep the file reference so specs emitted into metadata can
            # be parsed back without the in-memory map
            w.meta["spec"]["map"] = ref
        return w
    if kind == "induced_plane":
        if dim != 3:
            raise ValueError("induced plane weights live in three dimensions")
        from .forward import InducedPlaneWeight
        inner = weight_from_spec(spec["of"], 3, load_field)
        return InducedPlaneWeight(inner, spec["eta"],
                                  spec.get("polar_cap_tol", 0.05))
    raise ValueError(f"unknown weight kind {kind!r}")
