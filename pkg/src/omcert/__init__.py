"""Numerical certificates for weighted-norm decompositions.

Two constructive procedures are implemented and checked on grids: the
threshold splitting of weighted matrices, and the approximation of smooth
functions of polynomial growth by kernel-smoothed, slowly increasing ones.
"""

from .core import (
    EvaluationError,
    Grid,
    MultiIndex,
    NormParams,
    ParameterError,
    TestFunction,
    finite_difference_check,
    weight,
    weighted_sup_norm,
)
from .families import FAMILIES, make_family, product
from .kernel import KernelParams, bump, kernel_eval, kernel_mass, support_box
from .sequence_split import SplitCertificate, WeightedMatrix, matrix_norm, split
from .smoothing import (
    antiderivative,
    assemble_1d,
    assemble_2d,
    gap_certificate,
    select_parameters,
    smooth_derivative,
)
from .spectra import FiniteLinearSpectrum, SpectrumDescriptor, check_pr_condition, proj1_finite

__all__ = [
    "EvaluationError",
    "FAMILIES",
    "FiniteLinearSpectrum",
    "Grid",
    "KernelParams",
    "MultiIndex",
    "NormParams",
    "ParameterError",
    "SpectrumDescriptor",
    "SplitCertificate",
    "TestFunction",
    "WeightedMatrix",
    "antiderivative",
    "assemble_1d",
    "assemble_2d",
    "bump",
    "check_pr_condition",
    "finite_difference_check",
    "gap_certificate",
    "kernel_eval",
    "kernel_mass",
    "make_family",
    "matrix_norm",
    "product",
    "proj1_finite",
    "select_parameters",
    "smooth_derivative",
    "split",
    "support_box",
    "weight",
    "weighted_sup_norm",
]
