"""Weighted Radon transforms over lines and hyperplanes.

Forward projection with direction-dependent weights, approximate
(Chang-type) inversion built from the averaged weight, spectral filters
in the offset variable, ray-to-plane reduction for slice-by-slice
acquisition, and diagnostic reports that quantify when the approximate
inversion is exact.
"""

from .errors import DataError
from .grids import (GridSpec, ScalarField, SphereGrid, Sinogram,
                    antipodal_values, interpolate, make_circle_grid,
                    make_phantom, make_sphere_grid, sphere_grid_for,
                    symmetric_coords, symmetrize_sinogram)
from .weights import (AttenuationMap, AttenuationWeight, SymmetryReport,
                      Weight, attenuation_weight, check_chang_symmetry,
                      constant_weight, divergent_beam, eval_w0,
                      half_wave_weight, poly_theta_weight, sample_weight,
                      symmetrize, w0_field, w0_weight, weight_from_spec)
from .forward import (InducedPlaneWeight, RayData, add_noise,
                      build_ray_layout, plane_reduction_stencil, radon_w,
                      ray_directions_for, ray_transform,
                      reduce_rays_to_planes)
from .filters import (SpectralPlan, apply_multiplier, boundary_ratio,
                      chang_filter, chang_multiplier, derivative_multiplier,
                      fourier_samples, hilbert, hilbert_multiplier,
                      padded_len, s_derivative)
from .inversion import (Reconstruction, ResidualReport, backproject,
                        chang_constant, chang_invert, exactness_residual)
from .analysis import (BumpProbe, BumpReport, FourierDualReport,
                       NoiseReductionReport, ParityReport,
                       bump_discrimination, fourier_slice_residual,
                       make_bump_probe, noise_reduction_report,
                       parity_report, run_noise_experiment)
from .fileio import (default_sibling, load_field, load_json, load_rays,
                     load_sinogram, load_weight_spec, save_field, save_json,
                     save_pgm, save_profiles, save_rays, save_sinogram)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "GridSpec", "ScalarField", "SphereGrid", "Sinogram",
    "antipodal_values", "interpolate", "make_circle_grid", "make_phantom",
    "make_sphere_grid", "sphere_grid_for", "symmetric_coords",
    "symmetrize_sinogram",
    "AttenuationMap", "AttenuationWeight", "SymmetryReport", "Weight",
    "attenuation_weight", "check_chang_symmetry", "constant_weight",
    "divergent_beam", "eval_w0", "half_wave_weight", "poly_theta_weight",
    "sample_weight", "symmetrize", "w0_field", "w0_weight",
    "weight_from_spec",
    "InducedPlaneWeight", "RayData", "add_noise", "build_ray_layout",
    "plane_reduction_stencil", "radon_w", "ray_directions_for",
    "ray_transform", "reduce_rays_to_planes",
    "SpectralPlan", "apply_multiplier", "boundary_ratio", "chang_filter",
    "chang_multiplier", "derivative_multiplier", "fourier_samples",
    "hilbert", "hilbert_multiplier", "padded_len", "s_derivative",
    "Reconstruction", "ResidualReport", "backproject", "chang_constant",
    "chang_invert", "exactness_residual",
    "BumpProbe", "BumpReport", "FourierDualReport", "NoiseReductionReport",
    "ParityReport", "bump_discrimination", "fourier_slice_residual",
    "make_bump_probe", "noise_reduction_report", "parity_report",
    "run_noise_experiment",
    "default_sibling", "load_field", "load_json", "load_rays",
    "load_sinogram", "load_weight_spec", "save_field", "save_json",
    "save_pgm", "save_profiles", "save_rays", "save_sinogram",
    "__version__",
]
