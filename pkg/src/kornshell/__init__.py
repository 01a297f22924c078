"""Korn constants of thin shallow shells."""

from .geometry import (CurvatureClass, GeometryError, PatchDomain, ShellDomain, SurfacePatch,
                       gauss_codazzi_residual, make_constant_patch, make_cylinder, make_developable,
                       make_torus_band)
from .korn_solver import (AssembledForms, KornConstantEstimator, KornEstimate, TensorBasis, assemble,
                          free_mode_deflation, min_rayleigh, trial_lower_bound)
from .scaling import PowerLawFit, Regime, SweepRow, classify_regime, fit_power_law, theory_exponents

__all__ = [
    "AssembledForms", "CurvatureClass", "GeometryError", "KornConstantEstimator", "KornEstimate",
    "PatchDomain", "PowerLawFit", "Regime", "ShellDomain", "SurfacePatch", "SweepRow", "TensorBasis",
    "assemble", "classify_regime", "fit_power_law", "free_mode_deflation", "gauss_codazzi_residual",
    "make_constant_patch", "make_cylinder", "make_developable", "make_torus_band", "min_rayleigh",
    "theory_exponents", "trial_lower_bound",
]

__version__ = "0.1.0"
