"""Cross-checks built from independent pipelines.

The checks here never trust the operator under test with both sides of
an identity:

* ``fourier_slice_residual`` compares a windowed n-D Fourier transform of
  the backprojection against radial sums of 1D offset spectra. The two
  sides share only the raw data.
* ``parity_report`` projects with the even part of a weight and with its
  direction average, and measures the parity the difference data must
  carry on the lattice, after the Hilbert transform, and in Fourier
  samples.
* ``bump_discrimination`` certifies a strict lower bound on the data
  difference produced by a weight whose even part deviates from its
  direction average, using a plateau bump and direct plane quadrature
  (no grids, no interpolation).
* ``noise_reduction_report`` compares the empirical variance of reduced
  ray noise against the closed form implied by the reduction stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DataError
from .filters import SpectralPlan, fourier_samples, s_derivative, hilbert
from .forward import (RayData, _default_reach, add_noise,
                      plane_reduction_stencil, radon_w, reduce_rays_to_planes)
from .grids import (GridSpec, ScalarField, Sinogram, SphereGrid,
                    antipodal_values, orthonormal_frame, perp2,
                    symmetric_coords)
from .inversion import backproject
from .weights import Weight, eval_w0, symmetrize, w0_weight

_PROBE_ANGLES_2D = (0.41, 1.17, 2.65, 4.85)
_PROBE_DIRS_3D = ((0.41, 0.68, 0.61), (-0.70, 0.30, 0.65),
                  (0.20, -0.90, 0.39), (-0.50, -0.50, -0.71))


# ---------------------------------------------------------------------------
# windowed Fourier-dual check

@dataclass(frozen=True)
class FourierDualReport:
    """Residuals of the two dual identities at the admitted probes.

    ``plain_*`` is the identity for the backprojection of the data
    itself; ``filtered_*`` for the backprojection of the data's
    (dim-1)-th offset derivative. Probes below one frequency bin of the
    offset window are excluded (the identities carry a 1/|xi|^(dim-1)
    factor there), and listed in ``excluded``.
    """

    residual: float
    plain_residual: float
    filtered_residual: float
    xi: np.ndarray
    plain_lhs: np.ndarray
    plain_rhs: np.ndarray
    filtered_lhs: np.ndarray
    filtered_rhs: np.ndarray
    excluded: tuple
    bin_width: float
    window_sigma: float
    eval_count: int


def _default_probes(dim, tau, spec, bin_width, window_sigma):
    half = len(tau) // 2
    mag = np.abs(spec[:, :half]).max(axis=0)
    peak = mag[1:].max(initial=0.0)
    if peak == 0.0:
        radii = bin_width * np.array([3.0, 6.0, 9.0])
    else:
        good = np.nonzero(mag[1:] >= 5e-3 * peak)[0]
        k_hi = tau[1 + good[-1]]
        # cap so the direction quadrature resolves the window kernel
        k_hi = min(k_hi, 3.2 / window_sigma)
        k_lo = max(2.2 * bin_width, 0.12 * k_hi)
        radii = np.geomspace(k_lo, max(k_hi, 1.5 * k_lo), 3)
    if dim == 2:
        units = np.array([(np.cos(a), np.sin(a)) for a in _PROBE_ANGLES_2D])
    else:
        units = np.array(_PROBE_DIRS_3D)
        units = units / np.sqrt((units * units).sum(axis=1))[:, None]
    return [r * u for r in radii for u in units]


def fourier_slice_residual(sino: Sinogram, xi_samples=None, *,
                           window_sigma: float | None = None,
                           eval_count: int | None = None,
                           eval_half_width: float | None = None,
                           pad_factor: int = 8, threads: int = 1,
                           return_report: bool = False):
    """Mismatch of the dual transform identities at sampled frequencies.

    Left sides: the n-D Fourier transform of a Gaussian-windowed
    backprojection, by direct lattice summation. Right sides: the radial
    frequency integral of the 1D offset spectra against the window's
    analytic transform, using the plane-data dual identity

        FT[backprojection](k w) = (2 pi)^(dim-1) / k^(dim-1)
                                  * (G(k, w) + G(-k, -w)),

    with ``G(tau, theta) = integral e^{i tau s} g(s, theta) ds``, and its
    filtered form (an extra ``(-i k)^(dim-1)`` on ``G(k, w)`` and
    ``(i k)^(dim-1)`` on ``G(-k, -w)``). Returns the worst relative
    mismatch over both identities, or the full report. A probe where
    both sides of an identity sit at the round-off floor of their own
    terms counts as exact agreement: on data with no antisymmetric part
    the filtered identity in even dimension reads 0 = 0.
    """
    dim = sino.dim
    dirs = sino.directions
    ds = sino.s_step
    s0 = float(sino.s_values[0])
    bin_width = 2.0 * np.pi / (sino.s_count * ds)

    tau, spec = fourier_samples(sino.values, s0, ds, pad_factor=pad_factor)
    nfft = len(tau)
    half = nfft // 2
    kk = tau[1:half]
    dk = float(tau[1])
    ant = dirs.antipode
    neg_cols = nfft - np.arange(1, half)
    g_pos = spec[:, 1:half]
    g_neg = spec[ant][:, neg_cols]
    sum_even = g_pos + g_neg
    sign = -1.0 if dim % 2 == 0 else 1.0
    sum_signed = g_pos + sign * g_neg
    zero_even = spec[:, 0] + spec[ant][:, 0]

    if eval_half_width is None:
        eval_half_width = 0.995 * sino.s_max / np.sqrt(dim)
    if window_sigma is None:
        window_sigma = eval_half_width / 4.0
    if eval_count is None:
        eval_count = 160 if dim == 2 else 56

    if xi_samples is None:
        xi_samples = _default_probes(dim, tau, spec, bin_width, window_sigma)
    xi_samples = [np.asarray(x, dtype=np.float64) for x in xi_samples]
    admitted = [x for x in xi_samples if np.sqrt(x @ x) >= bin_width]
    excluded = tuple(x for x in xi_samples if np.sqrt(x @ x) < bin_width)
    if not admitted:
        raise ValueError("every probe frequency sits below one bin of the "
                         "offset window")

    espec = GridSpec.centered(dim, eval_count, 2.0 * eval_half_width)
    plan = SpectralPlan(pad_factor=max(pad_factor, 4))
    deriv = s_derivative(sino, dim - 1, plan)
    u_plain = backproject(sino, espec, threads=threads)
    u_filt = backproject(deriv, espec, threads=threads)
    pts = espec.points()
    wprof = np.exp(-(pts * pts).sum(axis=1) / (2.0 * window_sigma ** 2))
    base_plain = u_plain.values.ravel() * wprof
    base_filt = u_filt.values.ravel() * wprof
    cellvol = float(np.prod(espec.spacing))

    mu = dirs.quad_weights
    vfac = (2.0 * np.pi * window_sigma ** 2) ** (dim / 2.0)
    sig2 = window_sigma ** 2
    kpow = kk ** (dim - 1)
    pref = (-1j) ** (dim - 1)

    # round-off floors: the magnitudes that flow through each sum, by the
    # triangle inequality, so a side whose terms cancel exactly is
    # recognized as zero rather than compared at the noise level
    eps = 1e3 * np.finfo(np.float64).eps
    wsum = cellvol * float(wprof.sum())
    a_plain_floor = eps * wsum * float(mu @ np.abs(sino.values).max(axis=1))
    a_filt_floor = eps * wsum * float(mu @ np.abs(deriv.values).max(axis=1))
    abs_even = np.abs(g_pos) + np.abs(g_neg)
    abs_zero = np.abs(spec[:, 0]) + np.abs(spec[ant][:, 0])

    a_plain, b_plain, a_filt, b_filt = [], [], [], []
    b_plain_floor, b_filt_floor = [], []
    for xi in admitted:
        phase = np.exp(1j * (pts @ xi))
        a_plain.append(cellvol * np.sum(phase * base_plain))
        a_filt.append(cellvol * np.sum(phase * base_filt))
        xin2 = float(xi @ xi)
        dots = dirs.nodes @ xi
        kern = vfac * np.exp(-0.5 * sig2 *
                             (xin2 - 2.0 * np.outer(dots, kk) + kk ** 2))
        zero_fac = 0.5 * dk * vfac * np.exp(-0.5 * sig2 * xin2)
        b_plain.append((dk * (mu @ (sum_even * kern).sum(axis=1))
                        + zero_fac * (mu @ zero_even)) / (2.0 * np.pi))
        b_filt.append(pref * dk
                      * (mu @ ((kpow * sum_signed) * kern).sum(axis=1))
                      / (2.0 * np.pi))
        b_plain_floor.append(eps * (dk * (mu @ (abs_even * kern).sum(axis=1))
                                    + zero_fac * (mu @ abs_zero))
                             / (2.0 * np.pi))
        b_filt_floor.append(eps * dk
                            * (mu @ ((kpow * abs_even) * kern).sum(axis=1))
                            / (2.0 * np.pi))

    def worst(a, b, a_floor, b_floor):
        a, b = np.asarray(a), np.asarray(b)
        live = np.maximum(np.abs(a), np.abs(b)) \
            > np.maximum(a_floor, np.asarray(b_floor))
        if not live.any():
            return 0.0
        a, b = a[live], b[live]
        scale = max(np.abs(a).max(), np.abs(b).max())
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 0.05 * scale)
        return float((np.abs(a - b) / denom).max())

    plain_res = worst(a_plain, b_plain, a_plain_floor, b_plain_floor)
    filt_res = worst(a_filt, b_filt, a_filt_floor, b_filt_floor)
    report = FourierDualReport(max(plain_res, filt_res), plain_res, filt_res,
                               np.array(admitted), np.asarray(a_plain),
                               np.asarray(b_plain), np.asarray(a_filt),
                               np.asarray(b_filt), excluded, bin_width,
                               window_sigma, eval_count)
    return report if return_report else report.residual


# ---------------------------------------------------------------------------
# parity of the symmetrized-minus-averaged data

@dataclass(frozen=True)
class ParityReport:
    """Parity diagnostics of ``g = R[W_even]f - R[w0]f``.

    ``g`` must be even under ``(s, theta) -> (-s, -theta)``; its Hilbert
    transform odd; and its offset spectra satisfy ``G(k, theta) =
    G(-k, -theta)``, so ``fourier_odd_max`` measures the same parity in
    frequency. ``data_max`` scales the violations. A weight whose even
    part equals its direction average gives ``data_max ~ 0``: such a
    weight is invisible to the difference, which is the content of the
    exactness dichotomy.
    """

    data_max: float
    even_violation: float
    hilbert_parity_violation: float
    fourier_even_max: float
    fourier_odd_max: float
    direction_count: int
    s_count: int


def parity_report(weight: Weight, field: ScalarField, directions: SphereGrid,
                  s_count: int, *, s_max: float | None = None,
                  step: float | None = None,
                  plan: SpectralPlan | None = None,
                  threads: int = 1) -> ParityReport:
    """Project with the even part of the weight and with its direction
    average, and report the parity structure of the difference."""
    w_even = symmetrize(weight)
    w_avg = w0_weight(weight, directions)
    g_even = radon_w(field, w_even, directions, s_count, s_max,
                     step=step, threads=threads)
    g_avg = radon_w(field, w_avg, directions, s_count, s_max,
                    step=step, threads=threads)
    g = g_even.with_values(g_even.values - g_avg.values,
                           {"op": "parity-difference"})

    flipped = antipodal_values(g)
    even_violation = float(np.abs(g.values - flipped).max())
    hg = hilbert(g, plan)
    h_flipped = antipodal_values(hg)
    h_violation = float(np.abs(hg.values + h_flipped).max())

    tau, spec = fourier_samples(g.values, float(g.s_values[0]), g.s_step)
    nfft = len(tau)
    half = nfft // 2
    neg_cols = nfft - np.arange(1, half)
    g_pos = spec[:, 1:half]
    g_neg = spec[directions.antipode][:, neg_cols]
    return ParityReport(float(np.abs(g.values).max()), even_violation,
                        h_violation, float(np.abs(g_pos + g_neg).max()),
                        float(np.abs(g_pos - g_neg).max()),
                        directions.count, s_count)


# ---------------------------------------------------------------------------
# bump discrimination

@dataclass(frozen=True)
class BumpProbe:
    """A plateau bump centered where a weight's even part deviates from
    its direction average.

    ``z`` is the deviation at the center for direction ``theta``;
    ``epsilon`` the continuity margin (the deviation stays within
    ``epsilon`` of ``z`` on the support ball, checked by sampling);
    ``delta`` the support radius. Requires ``0 < epsilon < |z|``.
    """

    y: np.ndarray
    theta: np.ndarray
    delta: float
    z: complex
    epsilon: float

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        th = np.ascontiguousarray(np.asarray(self.theta, dtype=np.float64))
        th = th / np.sqrt(th @ th)
        th.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "z", complex(self.z))
        if self.delta <= 0:
            raise ValueError("probe rejected: delta must be positive")
        if not 0.0 < self.epsilon < abs(self.z):
            raise ValueError("probe rejected: need 0 < epsilon < |z|, got "
                             f"epsilon={self.epsilon:.3e}, |z|={abs(self.z):.3e}")


def _plateau(r: np.ndarray, delta: float) -> np.ndarray:
    inner = delta / 2.0
    out = np.zeros_like(r)
    out[r <= inner] = 1.0
    shell = (r > inner) & (r < delta)
    out[shell] = 0.5 * (1.0 + np.cos(np.pi * (r[shell] - inner) / inner))
    return out


def _ball_lattice(y: np.ndarray, delta: float, per_axis: int) -> np.ndarray:
    offs = symmetric_coords(per_axis, 2.0 * delta / (per_axis - 1))
    grids = np.meshgrid(*([offs] * len(y)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    keep = (pts * pts).sum(axis=1) <= delta * delta
    return y[None, :] + pts[keep]


def make_bump_probe(weight: Weight, y, theta, sphere: SphereGrid, *,
                    epsilon: float | None = None, epsilon_frac: float = 0.25,
                    delta0: float = 0.4, min_delta: float = 1e-3,
                    sample_per_axis: int = 13, margin: float = 0.9,
                    z_floor: float = 1e-10) -> BumpProbe:
    """Probe construction: measure the deviation ``z`` at ``(y, theta)``
    and shrink ``delta`` until the sampled continuity margin holds.

    Fails when no deviation exists at the probe point (the weight's even
    part agrees with its average there) or when no radius down to
    ``min_delta`` satisfies the margin.
    """
    y = np.asarray(y, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    theta = theta / np.sqrt(theta @ theta)
    w_even = symmetrize(weight)
    z = complex(w_even.eval(y[None, :], theta)[0]
                - eval_w0(weight, y[None, :], sphere)[0])
    if abs(z) <= z_floor:
        raise DataError("no violation exists at this point and direction "
                        f"(deviation {abs(z):.3e})")
    eps = float(epsilon) if epsilon is not None else epsilon_frac * abs(z)

    delta = float(delta0)
    while delta >= min_delta:
        pts = _ball_lattice(y, delta, sample_per_axis)
        dev = w_even.eval(pts, theta) - eval_w0(weight, pts, sphere) - z
        if np.abs(dev).max() < margin * eps:
            return BumpProbe(y, theta, delta, z, eps)
        delta *= 0.5
    raise DataError("no support radius down to the minimum satisfies the "
                    "continuity margin")


@dataclass(frozen=True)
class BumpReport:
    """Certified lower bound on the data difference at the probe."""

    probe: BumpProbe
    difference: float
    mass: float
    bound: float
    quad_tol: float
    certified: bool
    sym_integral: complex
    avg_integral: complex


def _plane_quadrature(y, theta, delta, count):
    dim = len(y)
    h = 2.0 * delta / (count - 1)
    offs = symmetric_coords(count, h)
    w1 = np.full(count, h)
    w1[0] = w1[-1] = 0.5 * h
    if dim == 2:
        u = perp2(theta)
        pts = y[None, :] + offs[:, None] * u
        return pts, w1
    u, v = orthonormal_frame(theta)
    pts = (y[None, None, :] + offs[:, None, None] * u
           + offs[None, :, None] * v).reshape(-1, 3)
    return pts, np.outer(w1, w1).ravel()


def bump_discrimination(weight: Weight, probe: BumpProbe, sphere: SphereGrid,
                        *, count: int | None = None) -> BumpReport:
    """Certify ``|R[W_even]f - R[w0]f| >= (|z| - epsilon) * mass`` at the
    probe's central plane, for the probe's plateau bump ``f``.

    Both projections are direct plane quadratures of the analytic bump
    (no grid sampling); the quadrature tolerance is estimated by
    halving the step and is subtracted from the certified bound.
    """
    if count is None:
        count = 193 if weight.dim == 2 else 49
    w_even = symmetrize(weight)

    def run(cnt):
        pts, w = _plane_quadrature(probe.y, probe.theta, probe.delta, cnt)
        r = np.sqrt(((pts - probe.y[None, :]) ** 2).sum(axis=1))
        f = _plateau(r, probe.delta)
        i_sym = (w_even.eval(pts, probe.theta) * f) @ w
        i_avg = (eval_w0(weight, pts, sphere) * f) @ w
        mass = float(f @ w)
        return i_sym, i_avg, mass

    i_sym_c, i_avg_c, mass_c = run(count)
    i_sym, i_avg, mass = run(2 * count - 1)
    lhs = abs(i_sym - i_avg)
    drop = abs(probe.z) - probe.epsilon
    bound = drop * mass
    quad_tol = 2.0 * (abs(abs(i_sym_c - i_avg_c) - lhs)
                      + drop * abs(mass_c - mass)) + 1e-14 * max(lhs, bound)
    certified = (lhs >= bound - quad_tol) and (lhs > 0.0)
    return BumpReport(probe, lhs, mass, bound, quad_tol, certified,
                      complex(i_sym), complex(i_avg))


# ---------------------------------------------------------------------------
# noise reduction

@dataclass(frozen=True)
class NoiseReductionReport:
    """Empirical vs closed-form variance of reduced ray noise.

    Per selected plane cell, the reduction is the fixed linear
    combination given by its stencil, so reduced noise has variance
    ``sigma^2 * sum(c^2)`` against input variance ``sigma^2``, a
    reduction by ``sum(c^2) / (sum c)^2`` relative to the squared gain.
    """

    trial_count: int
    cell_count: int
    sigma_sq: float
    reduced_variance: float
    model_variance: float
    variance_ratio_emp: float
    variance_ratio_model: float
    max_rel_mismatch: float
    cells: tuple = dc_field(repr=False, default=())
    emp_var: np.ndarray = dc_field(repr=False, default=None)
    model_var: np.ndarray = dc_field(repr=False, default=None)
    weight_sums: np.ndarray = dc_field(repr=False, default=None)


def _collect_cells(clean: RayData, reduced_clean: Sinogram,
                   polar_cap_tol: float, cells):
    reach = reduced_clean.meta.get("support_radius")
    if reach is None:
        reach = _default_reach(clean)
    s_vals = reduced_clean.s_values
    dirs = reduced_clean.directions
    wanted = None if cells is None else {}
    if cells is not None:
        for j, i in cells:
            wanted.setdefault(int(j), set()).add(int(i))
    out = []
    for j in range(dirs.count):
        if wanted is not None and j not in wanted:
            continue
        theta = dirs.nodes[j]
        cr = np.cross(clean.eta, theta)
        if np.sqrt(cr @ cr) <= polar_cap_tol:
            if wanted is not None:
                raise DataError(f"requested direction {j} lies in the polar cap")
            continue
        k, stencils = plane_reduction_stencil(clean, theta, s_vals,
                                              reach=reach,
                                              polar_cap_tol=polar_cap_tol)
        for i, st in enumerate(stencils):
            if st is None:
                if wanted is not None and i in wanted[j]:
                    raise DataError(f"cell ({j}, {i}) receives no rays")
                continue
            if wanted is not None and i not in wanted[j]:
                continue
            flat, coeff = st
            out.append((j, i, k, flat, coeff,
                        float(coeff.sum()), float((coeff * coeff).sum())))
    if not out:
        raise DataError("no cells with at least two contributing rays")
    return out


def _assemble_noise_report(trials, sigma_sq, cell_rows, emp):
    s1 = np.array([c[5] for c in cell_rows])
    s2 = np.array([c[6] for c in cell_rows])
    model = sigma_sq * s2
    reduced_var = float(emp.mean())
    model_var = float(model.mean())
    if sigma_sq > 0.0:
        ratio_emp = reduced_var / (sigma_sq * float((s1 * s1).mean()))
        with np.errstate(invalid="ignore", divide="ignore"):
            mism = np.abs(emp / model - 1.0)
        max_mism = float(mism.max())
    else:
        ratio_emp = 0.0
        max_mism = 0.0
    ratio_model = float(s2.mean() / (s1 * s1).mean())
    return NoiseReductionReport(trials, len(cell_rows), sigma_sq,
                                reduced_var, model_var, ratio_emp,
                                ratio_model, max_mism,
                                tuple((c[0], c[1]) for c in cell_rows),
                                emp, model, s1)


def noise_reduction_report(clean: RayData, noisy, reduced_clean: Sinogram,
                           reduced_noisy, *, polar_cap_tol: float = 0.05,
                           cells=None) -> NoiseReductionReport:
    """Compare reduced-noise variance against the stencil closed form.

    ``noisy`` and ``reduced_noisy`` may be single objects or sequences
    of Monte-Carlo trials on the same layouts.
    """
    noisy_list = [noisy] if isinstance(noisy, RayData) else list(noisy)
    red_list = ([reduced_noisy] if isinstance(reduced_noisy, Sinogram)
                else list(reduced_noisy))
    if len(noisy_list) != len(red_list) or not noisy_list:
        raise DataError("need one reduced sinogram per noisy trial")
    for nd in noisy_list:
        if (not np.array_equal(nd.eta, clean.eta)
                or not np.array_equal(nd.slice_offsets, clean.slice_offsets)
                or not np.array_equal(nd.directions, clean.directions)
                or not np.array_equal(nd.u_offsets, clean.u_offsets)):
            raise DataError("noisy ray layout does not match the clean layout")
    for rd in red_list:
        if (rd.values.shape != reduced_clean.values.shape
                or rd.s_count != reduced_clean.s_count
                or abs(rd.s_step - reduced_clean.s_step) > 1e-14
                or not np.array_equal(rd.directions.nodes,
                                      reduced_clean.directions.nodes)):
            raise DataError("reduced sinogram lattice does not match")

    trials = len(noisy_list)
    sigma_sq = float(np.mean([np.mean(np.abs(nd.values - clean.values) ** 2)
                              for nd in noisy_list]))
    rows = _collect_cells(clean, reduced_clean, polar_cap_tol, cells)
    emp = np.zeros(len(rows))
    for rd in red_list:
        diff = rd.values - reduced_clean.values
        for c, (j, i, *_rest) in enumerate(rows):
            emp[c] += abs(diff[j, i]) ** 2
    emp /= trials
    return _assemble_noise_report(trials, sigma_sq, rows, emp)


def run_noise_experiment(clean: RayData, ray_weight: Weight,
                         directions: SphereGrid, s_count: int, s_max: float,
                         *, sigma: float, seed: int, trials: int,
                         polar_cap_tol: float = 0.05,
                         cells=None) -> NoiseReductionReport:
    """Monte-Carlo noise-reduction experiment with streamed trials.

    Each trial adds fresh Gaussian noise (per-trial seeds derived from
    the root seed) and pushes it through the reduction stencils; the
    stencil application is the same linear map ``reduce_rays_to_planes``
    evaluates, so trials need not be materialized.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    reduced_clean, _ = reduce_rays_to_planes(clean, ray_weight, directions,
                                             s_count, s_max, polar_cap_tol)
    rows = _collect_cells(clean, reduced_clean, polar_cap_tol, cells)
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    slabs = {k for (_, _, k, *_r) in rows}
    emp = np.zeros(len(rows))
    sig_acc = 0.0
    for t in range(trials):
        noise = add_noise(clean.with_values(np.zeros_like(clean.values)),
                          sigma, int(seeds[t]))
        sig_acc += float(np.mean(np.abs(noise.values) ** 2))
        flat = {k: noise.values[:, k, :].ravel() for k in slabs}
        for c, (j, i, k, idx, coeff, _s1, _s2) in enumerate(rows):
            emp[c] += abs(flat[k][idx] @ coeff) ** 2
    emp /= trials
    return _assemble_noise_report(trials, sig_acc / trials, rows, emp)
