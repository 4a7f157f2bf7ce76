"""One-dimensional spectral filters along the offset axis.

Convention
----------
All filters are Fourier multipliers for the transform

    G(tau) = integral e^{+i tau s} g(s) ds,

under which d/ds becomes multiplication by ``-i tau`` and the Hilbert
transform ``(1/pi) p.v. integral g(t) / (s - t) dt`` becomes
multiplication by ``i sign(tau)``. Data are zero-padded to a power of two
at least ``pad_factor`` times the sample count before the FFT; the
multiplier is applied on the padded frequency grid and the result is
cropped back to the original offsets. The padding, not periodization,
carries the filter tails, so inputs must decay toward the ends of the
offset window; a significant edge value is recorded as a boundary
warning in the output metadata.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grids import Sinogram

_BOUNDARY_RTOL = 1e-6


@dataclass(frozen=True)
class SpectralPlan:
    """Padding and windowing choices shared by the spectral filters.

    ``window`` is "none" (exact multipliers) or "cosine", which rolls the
    multiplier smoothly to zero over the outer ``taper_fraction`` of the
    frequency band to damp noise amplification by the high-order factors.
    """

    pad_factor: int = 4
    window: str = "none"
    taper_fraction: float = 0.1

    def __post_init__(self):
        if self.pad_factor < 2:
            raise ValueError("pad_factor must be at least 2")
        if self.window not in ("none", "cosine"):
            raise ValueError("window must be 'none' or 'cosine'")
        if not 0.0 < self.taper_fraction <= 1.0:
            raise ValueError("taper_fraction must lie in (0, 1]")

    def taper(self, tau: np.ndarray) -> np.ndarray:
        if self.window == "none":
            return np.ones_like(tau)
        cut = np.abs(tau).max() * (1.0 - self.taper_fraction)
        width = np.abs(tau).max() - cut
        out = np.ones_like(tau)
        hi = np.abs(tau) > cut
        out[hi] = 0.5 * (1.0 + np.cos(np.pi * (np.abs(tau[hi]) - cut) / width))
        return out


def padded_len(count: int, pad_factor: int = 4) -> int:
    """Smallest power of two holding pad_factor copies of the data."""
    n = 1
    while n < count * pad_factor:
        n *= 2
    return n


def boundary_ratio(values: np.ndarray) -> float:
    """Largest edge magnitude relative to the peak, 0 for zero data."""
    peak = float(np.abs(values).max(initial=0.0))
    if peak == 0.0:
        return 0.0
    edge = max(float(np.abs(values[..., 0]).max()),
               float(np.abs(values[..., -1]).max()))
    return edge / peak


def apply_multiplier(values: np.ndarray, step: float, multiplier,
                     plan: SpectralPlan | None = None) -> np.ndarray:
    """Apply a Fourier multiplier along the last axis of uniform samples.

    ``multiplier`` maps an array of angular frequencies to factors. The
    absolute offset origin cancels between the forward and inverse
    transforms, so only the step enters.
    """
    plan = plan or SpectralPlan()
    values = np.asarray(values, dtype=np.complex128)
    count = values.shape[-1]
    nfft = padded_len(count, plan.pad_factor)
    tau = 2.0 * np.pi * np.fft.fftfreq(nfft, d=step)
    mult = np.asarray(multiplier(tau), dtype=np.complex128) * plan.taper(tau)
    # the highest bin pairs with itself: the lattice only represents its
    # cosine mode, on which a multiplier acts by its real part; keeping
    # the imaginary part would break the conjugate pairing (odd
    # multipliers must vanish there)
    mult[nfft // 2] = mult[nfft // 2].real
    spec = np.fft.ifft(values, n=nfft, axis=-1)
    out = np.fft.fft(spec * mult, axis=-1)
    return out[..., :count]


def fourier_samples(values: np.ndarray, s_origin: float, step: float,
                    nfft: int | None = None, pad_factor: int = 4):
    """Continuous-transform samples ``G(tau)`` on the FFT frequency grid.

    Returns ``(tau, spectrum)`` with the absolute-origin phase included,
    approximating ``integral e^{i tau s} g(s) ds`` for data supported
    inside the offset window.
    """
    values = np.asarray(values, dtype=np.complex128)
    count = values.shape[-1]
    if nfft is None:
        nfft = padded_len(count, pad_factor)
    tau = 2.0 * np.pi * np.fft.fftfreq(nfft, d=step)
    spec = np.fft.ifft(values, n=nfft, axis=-1) * (nfft * step)
    spec = spec * np.exp(1j * tau * s_origin)
    return tau, spec


def derivative_multiplier(order: int):
    return lambda tau: (-1j * tau) ** order


def hilbert_multiplier():
    return lambda tau: 1j * np.sign(tau)


def chang_multiplier(dim: int):
    """Fused offset filter of the approximate inversion: the (dim-1)-th
    derivative, composed with the Hilbert transform when dim is even."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    if dim % 2 == 0:
        return lambda tau: 1j * np.sign(tau) * (-1j * tau) ** (dim - 1)
    return lambda tau: (-1j * tau) ** (dim - 1)


def _filter_sinogram(sino: Sinogram, multiplier, plan: SpectralPlan | None,
                     label: str) -> Sinogram:
    ratio = boundary_ratio(sino.values)
    out = apply_multiplier(sino.values, sino.s_step, multiplier, plan)
    meta = {"filter": label, "plan": {"pad_factor": (plan or SpectralPlan()).pad_factor,
                                      "window": (plan or SpectralPlan()).window}}
    if ratio > _BOUNDARY_RTOL:
        meta["boundary_warning"] = ratio
        warnings.warn(f"data do not decay at the offset boundary "
                      f"(edge/peak = {ratio:.2e}); filtered values are "
                      f"unreliable near the window ends", stacklevel=2)
    return sino.with_values(out, meta)


def s_derivative(sino: Sinogram, order: int = 1,
                 plan: SpectralPlan | None = None) -> Sinogram:
    """Spectral derivative of given order along the offset axis."""
    if order < 0:
        raise ValueError("order must be non-negative")
    return _filter_sinogram(sino, derivative_multiplier(order), plan,
                            f"derivative[{order}]")


def hilbert(sino: Sinogram, plan: SpectralPlan | None = None) -> Sinogram:
    """Hilbert transform along the offset axis."""
    return _filter_sinogram(sino, hilbert_multiplier(), plan, "hilbert")


def chang_filter(sino: Sinogram, plan: SpectralPlan | None = None) -> Sinogram:
    """Fused offset filter used by the approximate inversion."""
    return _filter_sinogram(sino, chang_multiplier(sino.dim), plan,
                            f"chang[{sino.dim}]")
