"""Truncated-matrix laboratory for weighted composition operators f -> psi * (f o phi)
on reproducing-kernel Hilbert spaces over the disk, ball and polydisk."""
from ._accel import backend_name
from .series import (PolyMap, TruncatedSeries, enumerate_multi_indices, evaluate,
                     monomial_of_map, series_multiply)
from .spaces import DomainSpec, SpaceSpec, kernel_value, monomial_weight
from .operators import build_matrix, genzhu_value, genzhu_scan, adjoint_kernel_residual, compactness_proxy
from .dynamics import (ComponentwiseInverse, fixed_point_census, iterate_orbit, jacobian_at,
                       solve_fixed_point)
from .spectra import eigenvalues, match_spectra, predicted_set, truncation_convergence_study

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "PolyMap", "TruncatedSeries", "enumerate_multi_indices", "evaluate", "monomial_of_map",
    "series_multiply",
    "DomainSpec", "SpaceSpec", "kernel_value", "monomial_weight",
    "build_matrix", "genzhu_value", "genzhu_scan", "adjoint_kernel_residual", "compactness_proxy",
    "ComponentwiseInverse", "fixed_point_census", "iterate_orbit", "jacobian_at",
    "solve_fixed_point",
    "eigenvalues", "match_spectra", "predicted_set", "truncation_convergence_study",
]
