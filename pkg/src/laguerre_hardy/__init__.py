"""Hardy-type inequalities for Laguerre expansions, checked numerically.

Modules
-------
specfun
    Laguerre functions of both systems, their derivatives and scaled
    modified Bessel functions.
quadrature
    Weighted measures, composite Gauss-Legendre rules, inner products and
    atom validation.
kernels
    Closed-form kernels of ``R_r`` and their ``L^2`` norm scaling.
hardy
    Coefficient tables, Hardy sums and admissible exponents.
atoms
    Counterexample atoms and the sharpness and divergence scans.
cli
    Command-line experiment runner.
"""

from importlib.metadata import PackageNotFoundError, version as _version

from .errors import (
    CalibrationError,
    DomainError,
    EvaluationError,
    LaguerreHardyError,
    PrecisionError,
    StructuralError,
)
from .specfun import System, OrderParam, ell_conv, ell_std, bessel_i_scaled
from .quadrature import QuadratureRule, RadialMeasure, BallSpec, validate_atom
from .hardy import LaguerreSetting, GeneralParams, CoefficientTable, setting_params
from .atoms import AtomSpec, CalibrationResult, atom_conv, atom_std, calibrate_c

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "DomainError",
    "EvaluationError",
    "LaguerreHardyError",
    "PrecisionError",
    "StructuralError",
    "System",
    "OrderParam",
    "ell_conv",
    "ell_std",
    "bessel_i_scaled",
    "QuadratureRule",
    "RadialMeasure",
    "BallSpec",
    "validate_atom",
    "LaguerreSetting",
    "GeneralParams",
    "CoefficientTable",
    "setting_params",
    "AtomSpec",
    "CalibrationResult",
    "atom_conv",
    "atom_std",
    "calibrate_c",
    "__version__",
]
