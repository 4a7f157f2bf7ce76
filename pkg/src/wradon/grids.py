"""Uniform scalar grids, direction sets, phantoms, and sinogram containers.

Conventions
-----------
* Fields live on uniform axis-aligned grids. ``values[i0, i1(, i2)]`` is
  the sample at ``origin + (i0*h0, i1*h1(, i2*h2))``, row-major.
* Direction sets are antipodally closed: every node has a partner at
  exactly the negated coordinates, found by index arithmetic (never by
  nearest-neighbour search).
* Offset grids are symmetric about zero, built as ``(i - (count-1)/2) * step``
  so that ``s -> -s`` is an exact index reversal in floating point.
* All stored arrays are read-only after construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DataError

_UNIT_TOL = 1e-14
_MEASURE_TOL = 1e-12

# numpy renamed trapz in 2.0
trapezoid = getattr(np, "trapezoid", np.trapz)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def symmetric_coords(count: int, step: float) -> np.ndarray:
    """Uniform grid of ``count`` points with spacing ``step``, centered on 0.

    Built so that reversing the array negates it exactly in floating point.
    """
    if count < 1:
        raise ValueError("count must be positive")
    return (np.arange(count) - (count - 1) / 2.0) * step


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform axis-aligned grid (no values)."""

    dim: int
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if len(self.shape) != self.dim or len(self.spacing) != self.dim \
                or len(self.origin) != self.dim:
            raise ValueError("shape/spacing/origin must have length dim")
        if any(n < 2 for n in self.shape):
            raise ValueError("need at least 2 nodes per axis")
        if any(h <= 0 for h in self.spacing):
            raise ValueError("spacing must be positive")

    @classmethod
    def centered(cls, dim: int, n: int, width: float) -> "GridSpec":
        """Cube of ``n`` cells per axis covering ``[-width/2, width/2]``.

        Nodes sit at cell centers, symmetric about the origin.
        """
        h = width / n
        origin = -(n - 1) / 2.0 * h
        return cls(dim, (n,) * dim, (h,) * dim, (origin,) * dim)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def points(self) -> np.ndarray:
        """All node coordinates, shape ``(prod(shape), dim)``, row-major."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def corner_radius(self) -> float:
        corners = itertools.product(*[(c[0], c[-1]) for c in
                                      (self.axis_coords(a) for a in range(self.dim))])
        return max(float(np.sqrt(np.dot(c, c))) for c in corners)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.axis_coords(a)[0] for a in range(self.dim)])
        hi = np.array([self.axis_coords(a)[-1] for a in range(self.dim)])
        return lo, hi


@dataclass(frozen=True)
class ScalarField:
    """Complex scalar samples on a uniform grid."""

    spec: GridSpec
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.complex128))
        if v.shape != self.spec.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.spec.shape}")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.shape

    @property
    def spacing(self) -> tuple[float, ...]:
        return self.spec.spacing

    @property
    def origin(self) -> tuple[float, ...]:
        return self.spec.origin

    def cell_volume(self) -> float:
        return float(np.prod(self.spec.spacing))

    def mass(self) -> complex:
        """Riemann-sum integral of the field over its grid."""
        return complex(self.values.sum() * self.cell_volume())

    def support_radius(self, rel_floor: float = 0.0) -> float:
        """Largest |x| over nodes where |value| exceeds ``rel_floor * max``."""
        mag = np.abs(self.values)
        peak = mag.max()
        if peak == 0.0:
            return 0.0
        mask = mag > rel_floor * peak
        pts = self.spec.points()[mask.ravel()]
        return float(np.sqrt((pts * pts).sum(axis=1).max()))


@dataclass(frozen=True)
class SphereGrid:
    """Antipodally closed quadrature nodes on the unit circle or sphere.

    ``antipode`` is an index involution with ``nodes[antipode[j]]``
    bit-exactly equal to ``-nodes[j]``.
    """

    dim_sphere: int
    nodes: np.ndarray
    quad_weights: np.ndarray
    antipode: np.ndarray
    info: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.dim_sphere not in (1, 2):
            raise ValueError("dim_sphere must be 1 or 2")
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=np.float64))
        w = np.ascontiguousarray(np.asarray(self.quad_weights, dtype=np.float64))
        ant = np.ascontiguousarray(np.asarray(self.antipode, dtype=np.int64))
        k = nodes.shape[0]
        if nodes.ndim != 2 or nodes.shape[1] != self.dim_sphere + 1:
            raise ValueError("nodes must have shape (count, dim_sphere + 1)")
        if w.shape != (k,) or ant.shape != (k,):
            raise ValueError("weights/antipode must match node count")
        norms = np.sqrt((nodes * nodes).sum(axis=1))
        if np.abs(norms - 1.0).max() > _UNIT_TOL:
            raise ValueError("nodes must be unit vectors to 1e-14")
        if (w <= 0).any():
            raise ValueError("quadrature weights must be positive")
        measure = 2.0 * np.pi if self.dim_sphere == 1 else 4.0 * np.pi
        if abs(w.sum() - measure) > _MEASURE_TOL:
            raise ValueError("quadrature weights must sum to the sphere measure")
        if not np.array_equal(ant[ant], np.arange(k)):
            raise ValueError("antipode must be an involution")
        if not np.array_equal(nodes[ant], -nodes):
            raise ValueError("antipodal nodes must be exact negations")
        object.__setattr__(self, "nodes", _freeze(nodes))
        object.__setattr__(self, "quad_weights", _freeze(w))
        object.__setattr__(self, "antipode", _freeze(ant))

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.dim_sphere + 1

    @property
    def measure(self) -> float:
        return 2.0 * np.pi if self.dim_sphere == 1 else 4.0 * np.pi

    def integrate(self, samples: np.ndarray) -> complex:
        """Quadrature sum of per-node samples (last axis = node index)."""
        return np.asarray(samples) @ self.quad_weights


def make_circle_grid(count: int) -> SphereGrid:
    """Uniform directions on the unit circle, antipodally closed.

    ``count`` must be even and at least 4. Node ``j`` sits at angle
    ``2*pi*j/count``; the second half is constructed as the exact negation
    of the first half so antipodal pairing is bit-exact.
    """
    if count < 4 or count % 2:
        raise ValueError("count must be even and >= 4")
    half = count // 2
    ang = 2.0 * np.pi * np.arange(half) / count
    top = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    nodes = np.concatenate([top, -top], axis=0)
    weights = np.full(count, 2.0 * np.pi / count)
    antipode = (np.arange(count) + half) % count
    return SphereGrid(1, nodes, weights, antipode,
                      info={"kind": "circle", "count": count})


def make_sphere_grid(polar_count: int, azimuth_count: int) -> SphereGrid:
    """Gauss-Legendre x uniform-azimuth product grid on the unit sphere.

    ``polar_count`` Gauss-Legendre nodes in cos(polar angle), at least 2;
    ``azimuth_count`` uniform azimuths, even and at least 4. The polar
    nodes are symmetrized and the azimuth table negated halfway so that
    the antipode map ``(l, m) -> (polar_count-1-l, m + azimuth_count/2)``
    negates nodes bit-exactly.
    """
    if polar_count < 2:
        raise ValueError("polar_count must be >= 2")
    if azimuth_count < 4 or azimuth_count % 2:
        raise ValueError("azimuth_count must be even and >= 4")
    t, tw = np.polynomial.legendre.leggauss(polar_count)
    # force exact +/- pairing of the polar nodes
    t = 0.5 * (t - t[::-1])
    tw = 0.5 * (tw + tw[::-1])
    sin_pol = np.sqrt(1.0 - t * t)

    half = azimuth_count // 2
    ang = 2.0 * np.pi * np.arange(half) / azimuth_count
    cos_az = np.concatenate([np.cos(ang), -np.cos(ang)])
    sin_az = np.concatenate([np.sin(ang), -np.sin(ang)])

    count = polar_count * azimuth_count
    nodes = np.empty((count, 3))
    weights = np.empty(count)
    antipode = np.empty(count, dtype=np.int64)
    for l in range(polar_count):
        rows = l * azimuth_count + np.arange(azimuth_count)
        nodes[rows, 0] = sin_pol[l] * cos_az
        nodes[rows, 1] = sin_pol[l] * sin_az
        nodes[rows, 2] = t[l]
        weights[rows] = tw[l] * (2.0 * np.pi / azimuth_count)
        antipode[rows] = (polar_count - 1 - l) * azimuth_count \
            + (np.arange(azimuth_count) + half) % azimuth_count
    return SphereGrid(2, nodes, weights, antipode,
                      info={"kind": "sphere", "polar_count": polar_count,
                            "azimuth_count": azimuth_count})


def sphere_grid_for(dim: int, *counts: int) -> SphereGrid:
    """Direction set for ambient dimension ``dim`` (circle or sphere)."""
    if dim == 2:
        (count,) = counts
        return make_circle_grid(count)
    if dim == 3:
        polar, azimuth = counts
        return make_sphere_grid(polar, azimuth)
    raise ValueError("dim must be 2 or 3")


def perp2(v: np.ndarray) -> np.ndarray:
    """Clockwise in-plane normal ``(v[1], -v[0])`` of a 2-vector.

    Negating ``v`` negates the result bit-exactly.
    """
    return np.array([v[1], -v[0]])


def orthonormal_frame(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal in-plane frame ``(u, v)`` for a unit 3-vector.

    ``u`` comes from crossing the direction with the coordinate axis of its
    smallest-magnitude component (ties resolved to the lowest axis index),
    ``v = direction x u``. Negating the direction flips ``u`` bit-exactly
    and leaves ``v`` unchanged, which keeps plane sampling antipodally
    symmetric.
    """
    d = np.asarray(direction, dtype=np.float64)
    axis = int(np.argmin(np.abs(d)))
    e = np.zeros(3)
    e[axis] = 1.0
    u = np.cross(d, e)
    u = u / np.sqrt(u @ u)
    v = np.cross(d, u)
    return u, v


# ---------------------------------------------------------------------------
# phantoms

def _radial_ramp(rho: np.ndarray, radius: float, edge: float) -> np.ndarray:
    """1 inside ``radius``, cosine falloff to 0 at ``radius + edge``."""
    if edge <= 0:
        return (rho <= radius).astype(np.float64)
    out = np.zeros(rho.shape)
    out[rho <= radius] = 1.0
    band = (rho > radius) & (rho < radius + edge)
    out[band] = 0.5 * (1.0 + np.cos(np.pi * (rho[band] - radius) / edge))
    return out


# gaussian tails below this fraction of the amplitude are cut to exact zero,
# keeping the field compactly supported
_GAUSS_CUT = 1e-12


def _check_inside(spec: GridSpec, center, radius: float, what: str):
    lo, hi = spec.bounds()
    c = np.asarray(center, dtype=np.float64)
    if (c - radius < lo).any() or (c + radius > hi).any():
        raise ValueError(f"{what} support (radius {radius:g} about {c.tolist()}) "
                         "must lie strictly inside the grid bounding box")


def make_phantom(kind: str, spec: GridSpec, *, center=None, radius: float = 1.0,
                 sigma: float = 0.25, amplitude: float = 1.0,
                 edge: float | None = None, mollify: bool = True,
                 bodies: list[dict] | None = None) -> ScalarField:
    """Test objects on a grid: ``ball``, ``gaussian`` or ``ellipsoids``.

    ball
        Indicator of a ball, by default mollified over a radial band of
        width ``edge`` (two cells unless given). ``mollify=False`` gives
        the raw indicator.
    gaussian
        ``amplitude * exp(-|x-c|^2 / (2 sigma^2))``, cut to exact zero
        below 1e-12 of the amplitude so the support stays compact.
    ellipsoids
        Sum of mollified ellipsoid indicators; each body is a dict with
        ``center``, ``axes`` (semi-axes), optional ``amplitude`` and
        ``edge`` (width measured in the shortest-axis direction).

    The support must lie strictly inside the grid's node bounding box.
    """
    center = np.zeros(spec.dim) if center is None else np.asarray(center, float)
    pts = spec.points()
    default_edge = 2.0 * max(spec.spacing)

    if kind == "ball":
        w = (edge if edge is not None else default_edge) if mollify else 0.0
        _check_inside(spec, center, radius + w, "ball")
        rho = np.sqrt(((pts - center) ** 2).sum(axis=1))
        vals = amplitude * _radial_ramp(rho, radius, w)
    elif kind == "gaussian":
        trunc = sigma * np.sqrt(-2.0 * np.log(_GAUSS_CUT))
        _check_inside(spec, center, trunc, "gaussian")
        rho2 = ((pts - center) ** 2).sum(axis=1)
        vals = amplitude * np.exp(-0.5 * rho2 / (sigma * sigma))
        vals[vals < _GAUSS_CUT * abs(amplitude)] = 0.0
    elif kind == "ellipsoids":
        if not bodies:
            raise ValueError("ellipsoids phantom needs a non-empty bodies list")
        vals = np.zeros(len(pts))
        for body in bodies:
            c = np.asarray(body["center"], float)
            axes = np.asarray(body["axes"], float)
            amp = body.get("amplitude", 1.0)
            w = (body.get("edge", default_edge)) if mollify else 0.0
            # edge is a physical width; convert to the scaled radial coordinate
            w_rho = w / axes.min()
            _check_inside(spec, c, axes.max() * (1.0 + w_rho), "ellipsoid")
            rho = np.sqrt((((pts - c) / axes) ** 2).sum(axis=1))
            vals = vals + amp * _radial_ramp(rho, 1.0, w_rho)
    else:
        raise ValueError(f"unknown phantom kind {kind!r}")

    return ScalarField(spec, vals.reshape(spec.shape).astype(np.complex128),
                       meta={"phantom": kind})


# ---------------------------------------------------------------------------
# interpolation

def interpolate(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of a field; exactly 0 outside the grid.

    ``points`` is ``(N, dim)`` (a single point is also accepted); returns
    complex values of shape ``(N,)``.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.shape[1] != field.dim:
        raise ValueError("points dimension does not match field")

    spec = field.spec
    u = (pts - np.array(spec.origin)) / np.array(spec.spacing)
    n = np.array(spec.shape)
    inside = np.all((u >= 0.0) & (u <= n - 1), axis=1)

    out = np.zeros(len(pts), dtype=np.complex128)
    if inside.any():
        ui = u[inside]
        base = np.minimum(np.floor(ui).astype(np.int64), n - 2)
        frac = ui - base
        acc = np.zeros(len(ui), dtype=np.complex128)
        for corner in itertools.product((0, 1), repeat=field.dim):
            w = np.ones(len(ui))
            for a, c in enumerate(corner):
                w = w * (frac[:, a] if c else 1.0 - frac[:, a])
            idx = tuple(base[:, a] + corner[a] for a in range(field.dim))
            acc += w * field.values[idx]
        out[inside] = acc
    return out[0] if single else out


# ---------------------------------------------------------------------------
# sinogram container

@dataclass(frozen=True)
class Sinogram:
    """Weighted plane-transform samples: ``values[direction, offset]``.

    The offset grid is uniform and symmetric about zero (``s_min`` is
    exactly the negation of the largest offset), so that the involution
    ``(s, theta) -> (-s, -theta)`` acts by index arithmetic.
    """

    directions: SphereGrid
    s_count: int
    s_step: float
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.s_count < 2:
            raise ValueError("s_count must be >= 2")
        if self.s_step <= 0:
            raise ValueError("s_step must be positive")
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.complex128))
        if v.shape != (self.directions.count, self.s_count):
            raise ValueError("values must have shape (directions, s_count)")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def s_values(self) -> np.ndarray:
        return symmetric_coords(self.s_count, self.s_step)

    @property
    def s_min(self) -> float:
        return float(self.s_values[0])

    @property
    def s_max(self) -> float:
        return float(self.s_values[-1])

    @property
    def dim(self) -> int:
        return self.directions.ambient_dim

    def with_values(self, values: np.ndarray, extra_meta: dict | None = None) -> "Sinogram":
        meta = dict(self.meta)
        if extra_meta:
            meta.update(extra_meta)
        return Sinogram(self.directions, self.s_count, self.s_step, values, meta)

    @classmethod
    def zeros(cls, directions: SphereGrid, s_max: float, s_count: int,
              meta: dict | None = None) -> "Sinogram":
        if s_count < 2:
            raise ValueError("s_count must be >= 2")
        step = 2.0 * s_max / (s_count - 1)
        vals = np.zeros((directions.count, s_count), dtype=np.complex128)
        return cls(directions, s_count, step, vals, meta or {})


def antipodal_values(sino: Sinogram) -> np.ndarray:
    """The array ``g(-s, -theta)`` on the sinogram lattice.

    Exact on the lattice: offsets reverse, directions map through the
    antipode table.
    """
    return sino.values[sino.directions.antipode][:, ::-1]


def symmetrize_sinogram(sino: Sinogram) -> Sinogram:
    """Pointwise average of ``g(s, theta)`` and ``g(-s, -theta)``."""
    vals = 0.5 * (sino.values + antipodal_values(sino))
    return sino.with_values(vals, {"symmetrized": True})
