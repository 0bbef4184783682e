"""Real-monodromy spectra of second-order Darboux operators on the line.

Modules
-------
odecore
    Frobenius series and double-double analytic continuation.
darboux
    Operators, exponent data and the Gaudin reduction.
monodromy
    Monodromy representations and trace coordinates.
reality
    Invariant Hermitian forms, spectrum scans and the Okamoto cross-check.
eigenfn
    Single-valued eigenfunctions, quadrature and residual checks.
abelian
    The closed-form rank-one case on an elliptic curve.
degenerate
    Reducible and trigonometric degenerations.
slcheck
    Real eigenvalues from Sturm-Liouville shooting.
cli
    Command line driver.
"""

from .darboux import (DarbouxParams, FuchsianOperator, GaudinData, build_operator,
                      gaudin_oper, gaudin_to_darboux, okamoto_dual)
from .errors import ConfigError, DarbouxError, NumericalFailure
from .monodromy import MonodromyConfig, MonodromyRep, compute_monodromy
from .reality import (DetectorTolerances, SpectralPoint, detect, invariant_form,
                      okamoto_reality_check, scan_spectrum, weyl_count)

__version__ = "0.1.0"

__all__ = [
    "DarbouxParams", "FuchsianOperator", "GaudinData", "build_operator", "gaudin_oper",
    "gaudin_to_darboux", "okamoto_dual", "ConfigError", "DarbouxError", "NumericalFailure",
    "MonodromyConfig", "MonodromyRep", "compute_monodromy", "DetectorTolerances",
    "SpectralPoint", "detect", "invariant_form", "okamoto_reality_check", "scan_spectrum",
    "weyl_count", "__version__",
]
