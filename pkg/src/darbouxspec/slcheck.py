"""Real accessory parameters from three Sturm-Liouville shooting problems.

On the slice ``a = 0`` with ``0 < x < 1`` every finite singular point has
exponents ``(0, 0)``.  The Frobenius pair at ``p`` is ``psi_1`` (holomorphic,
``psi_1(p) = 1``) and ``psi_2 = psi_1 log w + f_2``.  A solution is
holomorphic at ``p`` exactly when its ``psi_2`` coefficient vanishes, and
this coefficient does not depend on the branch of ``log w``.

* ``P1``: the solution holomorphic at ``0``, continued along ``[0, x]``, must
  be holomorphic at ``x``.
* ``P2``: the solution holomorphic at ``x``, continued along ``[x, 1]``, must
  be holomorphic at ``1``.
* ``P3``: the solution holomorphic at ``0`` is continued to ``1`` above and
  below ``x``; the sum of the two continuations must be holomorphic at ``1``.

For real ``Lambda`` the operator has real coefficients, so each mismatch is
real up to rounding and changes sign at simple roots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .darboux import DarbouxParams, FuchsianOperator, build_operator
from .errors import ConfigError
from .odecore import PathSpec, continue_frame, frobenius_solutions, match_at_singularity

PROBLEMS = ("P1", "P2", "P3")
ROOT_XTOL = 1e-12
ACCEPT_MISMATCH = 1e-9


def slice_operator(x: float) -> FuchsianOperator:
    """The ``a = 0`` operator with singular points ``0, x, 1`` (``s = -1``)."""
    x = float(x)
    if not 0 < x < 1:
        raise ConfigError(f"x must lie in (0, 1), got {x}")
    return build_operator(DarbouxParams.from_exponents((0, 0, 0, 0), x))


@dataclass(frozen=True)
class _Geometry:
    x: float
    r: float
    h: float

    @classmethod
    def of(cls, x: float) -> "_Geometry":
        g = min(x, 1 - x)
        return cls(x, 0.4 * g, 0.5 * g)


def _regular_start(op: FuchsianOperator, label: str, lam: float, r: float) -> np.ndarray:
    """``(psi_1, psi_1')`` of the holomorphic solution at ``p + r``."""
    s1, _ = frobenius_solutions(op, label, lam, r=r)
    (vh, _), (dh, _) = s1.evaluate_dd(complex(r), 0.0)
    return np.array([vh, dh], dtype=complex)


def _continue(op, lam, pts, v) -> np.ndarray:
    Y = np.array([[v[0], 0], [v[1], 1]], dtype=complex)
    path = PathSpec(tuple(complex(p) for p in pts))
    Yh, Yl, _ = continue_frame(op, lam, path, Y)
    return Yh[:, 0] + Yl[:, 0]


def _log_coefficient(op, label: str, lam: float, r: float, v: np.ndarray) -> complex:
    """Coefficient of ``psi_2`` at ``p - r`` (approached from the left)."""
    F = match_at_singularity(op, label, lam, r=r, angle=np.pi)
    return complex(np.linalg.solve(F.m + F.m_lo, v)[1])


def mismatch_complex(problem: str, x: float, lam: float,
                     op: Optional[FuchsianOperator] = None) -> complex:
    """The log-branch coefficient before discarding its imaginary part."""
    if problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")
    op = slice_operator(x) if op is None else op
    g = _Geometry.of(x)
    lam = float(lam)
    if problem == "P1":
        v = _regular_start(op, "0", lam, g.r)
        v = _continue(op, lam, [g.r, x - g.r], v)
        return _log_coefficient(op, "x", lam, g.r, v)
    if problem == "P2":
        v = _regular_start(op, "x", lam, g.r)
        v = _continue(op, lam, [x + g.r, 1 - g.r], v)
        return _log_coefficient(op, "1", lam, g.r, v)
    v0 = _regular_start(op, "0", lam, g.r)
    out = 0j
    for sgn in (1, -1):
        v = _continue(op, lam, [g.r, x + 1j * sgn * g.h, 1 - g.r], v0)
        out += _log_coefficient(op, "1", lam, g.r, v)
    return out


def shoot(problem: str, x: float, lam: float, op: Optional[FuchsianOperator] = None) -> float:
    """Real mismatch of problem ``P1``, ``P2`` or ``P3`` at real ``lam``.

    Zero exactly when the shooting condition holds.
    """
    return float(mismatch_complex(problem, x, lam, op).real)


@dataclass(frozen=True)
class RealEigenvalue:
    problem: str
    lam: float
    mismatch: float
    bracket: Tuple[float, float]

    def to_json(self) -> dict:
        return {"problem": self.problem, "lambda": self.lam, "mismatch": self.mismatch,
                "bracket": list(self.bracket), "xtol": ROOT_XTOL}


def real_spectrum(problem: str, x: float, window: Tuple[float, float],
                  step: float = 0.05, xtol: float = ROOT_XTOL) -> List[RealEigenvalue]:
    """Roots of :func:`shoot` in ``window``, increasing.

    The mismatch is sampled every ``step``; each sign change is refined by
    Brent's bracketing method to ``xtol``.  The mismatch is entire in
    ``lam``, so every sign change brackets a root.  Pairs of roots closer
    than ``step`` can be missed.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ConfigError("window must satisfy lo < hi")
    op = slice_operator(x)
    n = max(2, int(np.ceil((hi - lo) / step)) + 1)
    grid = np.linspace(lo, hi, n)
    f = lambda t: shoot(problem, x, t, op)  # noqa: E731
    vals = np.array([f(t) for t in grid])
    out: List[RealEigenvalue] = []
    for k in range(n - 1):
        a, b = grid[k], grid[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            root = a
        elif fa * fb < 0:
            root = brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
        else:
            continue
        out.append(RealEigenvalue(problem, float(root), f(root), (float(a), float(b))))
    if vals[-1] == 0.0:
        out.append(RealEigenvalue(problem, float(hi), 0.0, (float(hi), float(hi))))
    return out


def all_real_spectra(x: float, window: Tuple[float, float], problems: Sequence[str] = PROBLEMS,
                     step: float = 0.05) -> Dict[str, List[RealEigenvalue]]:
    return {p: real_spectrum(p, x, window, step) for p in problems}
