"""Forward and inverse solvers for 2-D acoustic medium scattering.

Two independent forward solvers (a PML finite-difference solver and a
truncated Neumann series on the Lippmann-Schwinger operator), measurement
synthesis, and adjoint-state L-BFGS reconstruction.
"""

from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateStartError,
    DomainError,
    IncompatibleGridError,
    InvmedError,
    LayoutError,
    SolverError,
    SupportViolationError,
)
from .grid import ComplexField, Grid, RealField, grid_norm, read_field, restrict, unit_grid, write_field
from .inversion import InversionConfig, check_adjoint_identity, lbfgs_minimize, objective_and_gradient
from .lippmann import GreenKernel, apply_S_hat, estimate_contraction, neumann_forward
from .measurement import make_layout, read_measurements, synthesize, write_measurements
from .metrics import relative_error, ssim
from .phantoms import normalize_max, sample_gaussian_mixture, two_gauss_test
from .pml import PmlConfig, assemble, forward_scatter, solve_source

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateInputError",
    "DegenerateStartError",
    "DomainError",
    "IncompatibleGridError",
    "InvmedError",
    "LayoutError",
    "SolverError",
    "SupportViolationError",
    "ComplexField",
    "Grid",
    "RealField",
    "grid_norm",
    "read_field",
    "restrict",
    "unit_grid",
    "write_field",
    "InversionConfig",
    "check_adjoint_identity",
    "lbfgs_minimize",
    "objective_and_gradient",
    "GreenKernel",
    "apply_S_hat",
    "estimate_contraction",
    "neumann_forward",
    "make_layout",
    "read_measurements",
    "synthesize",
    "write_measurements",
    "relative_error",
    "ssim",
    "normalize_max",
    "sample_gaussian_mixture",
    "two_gauss_test",
    "PmlConfig",
    "assemble",
    "forward_scatter",
    "solve_source",
]
