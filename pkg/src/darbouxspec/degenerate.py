"""Closed-form spectra of the reducible and trigonometric degenerations.

Reducible case: the spectrum is the union of the curves

    Lambda = lam^2 + c lam,    lam = n/2 + i gamma,  n in Z, gamma in R.

Trigonometric case: for ``L = d (z^2 - 1) d`` with singular points ``+-1``
and ``infinity``, put ``Lambda = mu^2 - 1/4`` and ``beta = 2 + 2 cos(2 pi mu)``.
The local monodromies at ``+-1`` are unipotent and ``tr M_inf = 2 - beta``.
(This is Legendre's equation of degree ``nu = mu - 1/2``, whose exponents
at infinity are ``-nu`` and ``nu + 1``.)  A pair of unipotents with real
``beta`` always preserves an indefinite Hermitian form, but only
``beta <= 0`` or ``beta >= 4`` gives a tempered generalized eigenfunction.
The cross-check therefore reports two flags: ``form_exists`` (from the
detector) and ``spectral_point`` (form exists and ``beta`` admissible).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .darboux import FuchsianOperator
from .errors import NumericalFailure
from .monodromy import MonodromyConfig, compute_monodromy
from .reality import DEFAULT_TOLERANCES, DetectorTolerances, invariant_form

#: Spectral multiplicities of the two degenerations.  Output rows carry
#: these so that downstream consumers see which case they are reading.
REDUCIBLE_MULTIPLICITY = 2
TRIGONOMETRIC_MULTIPLICITY = 1

MEMBERSHIP_TOL = 1e-8
ADMISSIBLE_TOL = 1e-9
TRACE_TOL = 1e-8


class CrossCheckFailed(NumericalFailure):
    """The numerical monodromy disagrees with the closed form."""


# ---------------------------------------------------------------------------
# reducible case
# ---------------------------------------------------------------------------

def reducible_roots(c: complex, lam: complex) -> Tuple[complex, complex]:
    """Roots of ``l^2 + c l - Lambda = 0``, larger real part first."""
    c, lam = complex(c), complex(lam)
    d = cmath.sqrt(c * c + 4 * lam)
    r = sorted([(-c + d) / 2, (-c - d) / 2], key=lambda z: (-z.real, -z.imag))
    return r[0], r[1]


def reducible_spectrum_membership(c: complex, lam: complex,
                                  tol: float = MEMBERSHIP_TOL) -> Optional[Tuple[int, float]]:
    """``(n, gamma)`` if ``Lambda`` lies on a reducible spectral curve.

    A root ``l`` of ``l^2 + c l = Lambda`` must satisfy ``2 Re l in Z``
    within ``tol``; then ``n = round(2 Re l)`` and ``gamma = Im l``.  The
    root with larger real part is tried first.  Returns ``None`` otherwise.
    """
    for r in reducible_roots(c, lam):
        n = round(2 * r.real)
        if abs(2 * r.real - n) <= tol:
            return int(n), float(r.imag)
    return None


def reducible_curve(c: complex, n: int, gamma) -> np.ndarray:
    """Points ``(n/2 + i gamma)^2 + c (n/2 + i gamma)`` of the ``n``-th curve."""
    l = n / 2 + 1j * np.asarray(gamma, dtype=float)
    return l * l + complex(c) * l


# ---------------------------------------------------------------------------
# trigonometric case
# ---------------------------------------------------------------------------

def trigonometric_operator() -> FuchsianOperator:
    """``d (z^2 - 1) d = (z^2 - 1) d^2 + 2 z d``."""
    return FuchsianOperator(np.array([-1, 0, 1], dtype=complex), np.array([0, 2], dtype=complex),
                            np.zeros(1, dtype=complex), s=0j, points=(-1 + 0j, 1 + 0j),
                            labels=("-1", "1"), exponents={"-1": (0j, 0j), "1": (0j, 0j)},
                            kind="trigonometric")


def trig_beta(mu: complex) -> complex:
    """``beta = 2 + 2 cos(2 pi mu)``."""
    return 2 + 2 * cmath.cos(2 * math.pi * complex(mu))


def trig_lambda(mu: complex) -> complex:
    """``Lambda = mu^2 - 1/4``."""
    mu = complex(mu)
    return mu * mu - 0.25


def trigonometric_point(mu: complex, tol: float = ADMISSIBLE_TOL) -> Tuple[complex, bool, complex]:
    """``(beta, admissible, Lambda)`` for the parameter ``mu``.

    ``admissible`` means ``beta`` real with ``beta <= 0`` or ``beta >= 4``
    (up to ``tol`` relative to ``1 + |beta|``), which is the same as
    ``mu = n/2 + i gamma``.
    """
    b = trig_beta(mu)
    t = tol * (1 + abs(b))
    adm = abs(b.imag) <= t and (b.real <= t or b.real >= 4 - t)
    return b, bool(adm), trig_lambda(mu)


def mu_from_lambda(lam: complex) -> complex:
    """A ``mu`` with ``mu^2 - 1/4 = Lambda`` (principal root, ``Re mu >= 0``)."""
    return cmath.sqrt(complex(lam) + 0.25)


@dataclass
class TrigCheck:
    """Result of :func:`trig_monodromy_crosscheck`."""

    mu: complex
    lam: complex
    beta: complex
    admissible: bool
    trace_numeric: complex
    trace_expected: complex
    trace_error: float
    dmin: float
    form_exists: bool
    spectral_point: bool
    signature: Tuple[int, int]
    form: np.ndarray
    relation_residual: float
    multiplicity: int = TRIGONOMETRIC_MULTIPLICITY
    tolerances: dict = field(default_factory=dict)

    @property
    def beta_real(self) -> bool:
        return abs(self.beta.imag) <= ADMISSIBLE_TOL * (1 + abs(self.beta))

    @property
    def boundary(self) -> bool:
        """``beta`` at 0 or 4, where the representation is reducible and the
        only invariant forms are degenerate."""
        t = ADMISSIBLE_TOL * (1 + abs(self.beta))
        return abs(self.beta) <= t or abs(self.beta - 4) <= t

    @property
    def consistent(self) -> bool:
        """Trace within tolerance, and away from the boundary a nondegenerate
        form exists exactly when ``beta`` is real."""
        ok = self.trace_error <= self.tolerances.get("trace_tol", TRACE_TOL)
        return ok and (self.boundary or self.form_exists == self.beta_real)

    def to_json(self) -> dict:
        c = lambda z: [z.real, z.imag]  # noqa: E731
        return {"mu": c(self.mu), "lambda": c(self.lam), "beta": c(self.beta),
                "admissible": self.admissible, "trace_numeric": c(self.trace_numeric),
                "trace_expected": c(self.trace_expected), "trace_error": self.trace_error,
                "dmin": self.dmin, "form_exists": self.form_exists,
                "spectral_point": self.spectral_point, "boundary": self.boundary,
                "consistent": self.consistent, "signature": list(self.signature),
                "form": [[c(v) for v in row] for row in np.asarray(self.form)],
                "relation_residual": self.relation_residual,
                "multiplicity": self.multiplicity, "tolerances": dict(self.tolerances)}


def trig_monodromy_crosscheck(mu: complex, tols: DetectorTolerances = DEFAULT_TOLERANCES,
                              cfg: MonodromyConfig = MonodromyConfig(),
                              trace_tol: float = TRACE_TOL, strict: bool = False) -> TrigCheck:
    """Numerical monodromy of ``d (z^2 - 1) d`` against the closed form.

    ``M_inf`` is continued independently along the large loop, so its trace
    is not a consequence of the relation.  With ``strict`` a trace error
    above ``trace_tol`` raises :class:`CrossCheckFailed`.
    """
    mu = complex(mu)
    beta, adm, lam = trigonometric_point(mu)
    op = trigonometric_operator()
    rep = compute_monodromy(op, lam, cfg)
    tr = complex(np.trace(rep.Minf))
    expected = 2 - beta
    err = abs(tr - expected)
    if strict and err > trace_tol:
        raise CrossCheckFailed(f"tr M_inf = {tr}, expected {expected}")
    res = invariant_form(rep, tols)
    exists = bool(res.dmin < tols.accept_tol and res.kernel_dim >= 1 and res.nondegenerate)
    tol_d = {"trace_tol": trace_tol, "admissible_tol": ADMISSIBLE_TOL}
    tol_d.update(tols.to_json())
    return TrigCheck(mu, lam, beta, adm, tr, expected, float(err), res.dmin, exists,
                     bool(exists and adm), res.signature, res.form.h,
                     float(rep.relation_residual), tolerances=tol_d)


def reducible_row(c: complex, lam: complex, tol: float = MEMBERSHIP_TOL) -> dict:
    """Membership record for output files."""
    m = reducible_spectrum_membership(c, lam, tol)
    return {"c": [complex(c).real, complex(c).imag], "lambda": [complex(lam).real, complex(lam).imag],
            "member": m is not None, "n": None if m is None else m[0],
            "gamma": None if m is None else m[1], "multiplicity": REDUCIBLE_MULTIPLICITY,
            "tol": tol}
