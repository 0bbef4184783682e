"""Darboux operators on the projective line and their parameter maps.

The elliptic Darboux operator is written in the Möbius-normalized chart with
finite singular points ``0, x, 1`` and a fourth singular point at infinity,

    L = P d^2 + Q d + R,    P = z (z - x) (z - 1),

acting on sections of the line bundle ``O(s)``.  With local exponent
differences ``a_p`` the coefficients are

    Q = sum_p (1 - a_p) P / (z - p),      R = r1 z,
    r1 = s (1 - s) - s * c0,              c0 = 3 - (a_0 + a_x + a_1),

which gives exponents ``{0, a_p}`` at every finite point and, in the twisted
chart ``psi = w^{-s} phi`` with ``w = 1/z``, exponents ``{0, a_inf}`` at
infinity where ``a_inf = 2 s - 1 + c0``.  This is the Fuchs relation
``sum_p a_p = 2 (s + 1)``.

All polynomials are numpy coefficient arrays with the constant term first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConfigError, ConstraintViolated, DegeneratePosition, NotSingular

FUCHS_TOL = 1e-10
INTEGER_TOL = 1e-12


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    n = len(c)
    while n > 1 and c[n - 1] == 0:
        n -= 1
    return c[:n].copy()


def _polyval(c: np.ndarray, z):
    return npoly.polyval(z, c)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FuchsianOperator:
    """Second-order operator ``P d^2 + Q d + R`` with polynomial coefficients.

    Parameters
    ----------
    P, Q, R : array_like
        Coefficients, lowest degree first.
    s : complex
        Twist of the line bundle the operator acts on.
    points : tuple of complex
        Finite singular points (zeros of ``P``) in a fixed order.
    labels : tuple of str
        One label per finite point, used as keys in results.
    exponents : dict
        Local exponent pairs keyed by label, plus ``"inf"`` when known.
    kind : str
        Free-form description (``"elliptic"``, ``"trigonometric"``, ...).
    lam : complex
        Accessory slot; the eigenvalue equation is ``L psi = lam psi``.
    """

    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    s: complex = 0j
    points: Tuple[complex, ...] = ()
    labels: Tuple[str, ...] = ()
    exponents: Dict[str, Tuple[complex, complex]] = field(default_factory=dict)
    kind: str = "generic"
    lam: complex = 0j

    def __post_init__(self):
        self.P = _trim(self.P)
        self.Q = _trim(self.Q)
        self.R = _trim(self.R)
        self.s = complex(self.s)
        self.lam = complex(self.lam)
        self.points = tuple(complex(p) for p in self.points)
        if not self.labels:
            self.labels = tuple(f"p{i}" for i in range(len(self.points)))
        if len(self.labels) != len(self.points):
            raise ValueError("one label per singular point is required")

    # -- evaluation --------------------------------------------------------
    def coefficients(self, z):
        """Return ``(P(z), Q(z), R(z))``."""
        return _polyval(self.P, z), _polyval(self.Q, z), _polyval(self.R, z)

    def apply(self, f, fp, fpp, z):
        """Apply ``L`` to a function given by its value and derivatives."""
        p, q, r = self.coefficients(z)
        return p * fpp + q * fp + r * f

    def point(self, label: str) -> complex:
        return self.points[self.labels.index(label)]

    def clearance(self, z) -> float:
        """Distance from ``z`` to the nearest finite singular point."""
        if not self.points:
            return np.inf
        return float(min(abs(complex(z) - p) for p in self.points))

    # -- local data ----------------------------------------------------------
    def exponent_difference(self, p: complex) -> complex:
        """Indicial readback ``a_p = 1 - Q(p)/P'(p)`` at a simple zero of P."""
        p = complex(p)
        dP = npoly.polyder(self.P)
        pv = _polyval(self.P, p)
        scale = max(1.0, float(np.max(np.abs(self.P))))
        if abs(pv) > 1e-9 * scale:
            raise NotSingular(f"{p} is not a zero of P")
        d = _polyval(dP, p)
        if abs(d) < 1e-12 * scale:
            raise NotSingular(f"{p} is not a simple zero of P")
        return 1.0 - _polyval(self.Q, p) / d

    def normalization_factor(self, label: str) -> complex:
        """Scalar ``exp(-i pi (rho_1 + rho_2))`` that moves a local
        monodromy matrix into SL(2)."""
        r1, r2 = self.exponents.get(label, (0j, 0j))
        return complex(np.exp(-1j * np.pi * (r1 + r2)))

    # -- transformations -----------------------------------------------------
    def formal_adjoint(self) -> "FuchsianOperator":
        """Formal adjoint ``P d^2 + (2P' - Q) d + (P'' - Q' + R)``.

        Uses the rules ``z* = z`` and ``d* = -d``.  The adjoint acts on
        sections twisted by ``-2 - s`` and has negated exponent differences.
        """
        dP = npoly.polyder(self.P)
        d2P = npoly.polyder(self.P, 2)
        dQ = npoly.polyder(self.Q)
        Qs = npoly.polysub(2 * dP, self.Q)
        Rs = npoly.polyadd(npoly.polysub(d2P, dQ), self.R)
        exps = {k: (-v[0], -v[1]) for k, v in self.exponents.items()}
        return FuchsianOperator(self.P.copy(), Qs, Rs, s=-2 - self.s,
                                points=self.points, labels=self.labels,
                                exponents=exps, kind=self.kind + "*",
                                lam=np.conj(self.lam))

    def chart_at_infinity(self) -> "FuchsianOperator":
        """The operator in ``w = 1/z`` acting on ``phi`` with ``psi = w^{-s} phi``.

        Uses ``d_z -> -(w^2 d_w - s w)``, which gives

            P(1/w) w^4 d_w^2 + (2 (1 - s) P(1/w) w - Q(1/w)) w^2 d_w
            + s (s - 1) P(1/w) w^2 + s Q(1/w) w + R(1/w).

        Raises ``ValueError`` if the result is not polynomial in ``w``
        (which means infinity is not a regular singular point in this twist).
        """
        s = self.s

        def laurent(c, shift, f=1.0):
            # f * c(1/w) * w^shift as {power: coefficient}
            return {shift - k: f * ck for k, ck in enumerate(c)}

        def add(*parts):
            out = {}
            for d in parts:
                for k, v in d.items():
                    out[k] = out.get(k, 0) + v
            return out

        Pw = laurent(self.P, 4)
        Qw = add(laurent(self.P, 3, 2 * (1 - s)), laurent(self.Q, 2, -1.0))
        Rw = add(laurent(self.P, 2, s * (s - 1)), laurent(self.Q, 1, s),
                 laurent(self.R, 0))

        def to_poly(d, name):
            scale = max([abs(v) for v in d.values()] + [1.0])
            for k, v in d.items():
                if k < 0 and abs(v) > 1e-12 * scale:
                    raise ValueError(f"{name} has a pole at w=0: infinity is "
                                     "not regular singular in this twist")
            n = max([k for k in d] + [0]) + 1
            c = np.zeros(n, dtype=complex)
            for k, v in d.items():
                if k >= 0:
                    c[k] += v
            return c

        P2 = to_poly(Pw, "P")
        Q2 = to_poly(Qw, "Q")
        R2 = to_poly(Rw, "R")
        # finite singular points in the w chart: w = 0 and 1/p for p != 0
        pts = [0j] + [1.0 / p for p in self.points if p != 0]
        labels = ["inf"] + [lb for lb, p in zip(self.labels, self.points) if p != 0]
        exps = {}
        if "inf" in self.exponents:
            exps["inf"] = self.exponents["inf"]
        return FuchsianOperator(P2, Q2, R2, s=0j, points=tuple(pts),
                                labels=tuple(labels), exponents=exps,
                                kind=self.kind + "@inf", lam=self.lam)


# ---------------------------------------------------------------------------
# Darboux parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DarbouxParams:
    """Exponent differences ``(a_0, a_x, a_1, a_inf)``, twist ``s`` and the
    position ``x`` of the fourth singular point."""

    a: Tuple[complex, complex, complex, complex]
    s: complex
    x: complex

    def __post_init__(self):
        a = tuple(complex(v) for v in self.a)
        if len(a) != 4:
            raise ConfigError("a must have four entries (a_0, a_x, a_1, a_inf)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "x", complex(self.x))

    @classmethod
    def from_exponents(cls, a, x) -> "DarbouxParams":
        """Build parameters with the twist fixed by the Fuchs relation."""
        a = tuple(complex(v) for v in a)
        return cls(a, sum(a) / 2 - 1, x)

    @property
    def fuchs_defect(self) -> float:
        return abs(sum(self.a) - 2 * (self.s + 1))

    def check_fuchs(self, tol: float = FUCHS_TOL) -> None:
        if self.fuchs_defect > tol * max(1.0, abs(self.s)):
            raise ConstraintViolated(
                f"Fuchs relation fails: sum(a) - 2(s+1) = "
                f"{sum(self.a) - 2 * (self.s + 1):.3e}")

    @property
    def in_main_regime(self) -> bool:
        """True if every ``a_p`` is imaginary (hence ``s`` in ``-1 + iR``)."""
        return all(abs(v.real) < 1e-12 for v in self.a)

    def to_json(self) -> dict:
        return {"a": [[v.real, v.imag] for v in self.a],
                "s": [self.s.real, self.s.imag],
                "x": [self.x.real, self.x.imag]}


def lame_params(s: complex, x: complex) -> DarbouxParams:
    """The Lamé slice ``a_p = (s + 1)/2`` at every singular point."""
    s = complex(s)
    return DarbouxParams(((s + 1) / 2,) * 4, s, x)


def build_operator(params: DarbouxParams, lam: complex = 0j) -> FuchsianOperator:
    """Elliptic Darboux operator with the prescribed exponent differences.

    Parameters
    ----------
    params : DarbouxParams
        Must satisfy the Fuchs relation.
    lam : complex
        Value stored in the accessory slot.

    Returns
    -------
    FuchsianOperator
        With exponents ``(0, a_p)`` at ``0, x, 1`` and ``(0, a_inf)`` at
        infinity in the twisted chart.
    """
    params.check_fuchs()
    x = params.x
    if abs(x) < 1e-12 or abs(x - 1) < 1e-12:
        raise DegeneratePosition(f"x = {x} collides with 0 or 1")
    a0, ax, a1, ainf = params.a
    s = params.s
    pts = (0j, x, 1 + 0j)
    P = npoly.polyfromroots(pts).astype(complex)
    Q = np.zeros(3, dtype=complex)
    for p, ap in zip(pts, (a0, ax, a1)):
        others = [q for q in pts if q != p]
        Q = npoly.polyadd(Q, (1 - ap) * npoly.polyfromroots(others))
    c0 = 3 - (a0 + ax + a1)
    r1 = s * (1 - s) - s * c0
    R = np.array([0, r1], dtype=complex)
    exps = {"0": (0j, a0), "x": (0j, ax), "1": (0j, a1), "inf": (0j, ainf)}
    return FuchsianOperator(P, Q, R, s=s, points=pts, labels=("0", "x", "1"),
                            exponents=exps, kind="elliptic", lam=lam)


def read_exponents(op: FuchsianOperator) -> DarbouxParams:
    """Recover ``DarbouxParams`` from an elliptic operator by indicial readback."""
    if len(op.points) != 3:
        raise ValueError("read_exponents expects the elliptic normal form")
    a_fin = [op.exponent_difference(p) for p in op.points]
    c0 = op.Q[2] / op.P[3] if len(op.Q) > 2 else 0j
    ainf = 2 * op.s - 1 + c0
    return DarbouxParams((a_fin[0], a_fin[1], a_fin[2], ainf), op.s, op.points[1])


def algebraic_adjoint(params: DarbouxParams) -> DarbouxParams:
    """``a -> -a`` and ``s -> -2 - s``.

    ``build_operator`` of the result agrees with the formal adjoint of
    ``build_operator(params)`` in ``P``, ``Q`` and the linear part of ``R``;
    the constant parts of ``R`` differ, which is a shift of the accessory
    parameter.
    """
    return DarbouxParams(tuple(-v for v in params.a), -2 - params.s, params.x)


def adjoint_accessory_shift(params: DarbouxParams) -> complex:
    """Constant ``c`` with ``(L(a, s))^* = L(-a, -2-s) + c``."""
    adj = build_operator(params).formal_adjoint()
    return complex(adj.R[0]) if len(adj.R) else 0j


# Okamoto-type involution on (a_0, a_x, a_1, a_inf).  It is the reflection
# a -> a - (sum a / 2) (1, 1, 1, 1) conjugated by the sign change of a_1.
OKAMOTO_MATRIX = 0.5 * np.array([[1, -1, 1, -1],
                                 [-1, 1, 1, -1],
                                 [1, 1, 1, 1],
                                 [-1, -1, 1, 1]], dtype=float)


def okamoto_dual(params: DarbouxParams) -> DarbouxParams:
    """Apply the Okamoto involution to the exponents; the twist is reset by
    the Fuchs relation so the result is again consistent."""
    a = OKAMOTO_MATRIX @ np.array(params.a)
    return DarbouxParams.from_exponents(tuple(a), params.x)


class Reducibility(Enum):
    ALWAYS_IRREDUCIBLE = "AlwaysIrreducible"
    POSSIBLY_REDUCIBLE = "PossiblyReducible"


@dataclass(frozen=True)
class ReducibilityResult:
    kind: Reducibility
    witness: Optional[Tuple[int, int, int, int]] = None
    half_sum: Optional[int] = None
    all_witnesses: Tuple[Tuple[Tuple[int, int, int, int], int], ...] = ()


def reducibility_locus(params: DarbouxParams, tol: float = INTEGER_TOL) -> ReducibilityResult:
    """Scan the 16 sign vectors for a half-sum that is a positive integer.

    The returned witness is the one with the largest half-sum, ties broken
    by lexicographic order with ``+1`` before ``-1``.
    """
    found = []
    for eps in itertools.product((1, -1), repeat=4):
        h = 0.5 * sum(e * v for e, v in zip(eps, params.a))
        n = round(h.real)
        if n >= 1 and abs(h.real - n) <= tol and abs(h.imag) <= tol:
            found.append((eps, int(n)))
    if not found:
        return ReducibilityResult(Reducibility.ALWAYS_IRREDUCIBLE)
    best = max(found, key=lambda t: t[1])
    return ReducibilityResult(Reducibility.POSSIBLY_REDUCIBLE, best[0], best[1],
                              tuple(found))


# ---------------------------------------------------------------------------
# classification of symbols
# ---------------------------------------------------------------------------

class DarbouxKind(Enum):
    REDUCIBLE = "Reducible"
    TRIGONOMETRIC = "Trigonometric"
    ELLIPTIC = "Elliptic"
    CONFLUENT = "Confluent"


def root_multiplicities(P, tol: float = 1e-7):
    """Distinct roots of ``P`` with multiplicities, plus the order at infinity
    of the symbol regarded as a quartic section."""
    P = _trim(P)
    deg = len(P) - 1
    if deg < 0 or (deg == 0 and P[0] == 0):
        return [], 4
    roots = np.roots(P[::-1]) if deg > 0 else np.array([])
    clusters = []
    for r in roots:
        for c in clusters:
            if abs(r - c[0]) <= tol * max(1.0, abs(r)):
                c[1] += 1
                break
        else:
            clusters.append([r, 1])
    return [(complex(c[0]), c[1]) for c in clusters], 4 - deg


def classify(P) -> DarbouxKind:
    """Classify a symbol ``P`` of degree at most 3 up to Möbius symmetry.

    The zeros of ``P`` together with infinity (of order ``4 - deg P``) form
    a divisor of degree four on the projective line.  Four simple zeros give
    the elliptic case, a double zero with two simple zeros the trigonometric
    case, two double zeros the reducible case; anything of higher
    multiplicity is confluent.
    """
    P = _trim(P)
    if len(P) > 4:
        return DarbouxKind.CONFLUENT
    if np.all(P == 0):
        return DarbouxKind.CONFLUENT
    fin, minf = root_multiplicities(P)
    mults = sorted([m for _, m in fin] + ([minf] if minf > 0 else []), reverse=True)
    if mults == [1, 1, 1, 1]:
        return DarbouxKind.ELLIPTIC
    if mults == [2, 1, 1]:
        return DarbouxKind.TRIGONOMETRIC
    if mults == [2, 2]:
        return DarbouxKind.REDUCIBLE
    return DarbouxKind.CONFLUENT


# ---------------------------------------------------------------------------
# Gaudin model with three finite points and one at infinity
# ---------------------------------------------------------------------------

# a = GAUDIN_MATRIX @ a_star, rows ordered as exponents at (x, 1, 0, inf),
# where a_star_i = lambda_i + 1.
GAUDIN_MATRIX = 0.5 * np.array([[1, 1, 1, 1],
                                [1, 1, -1, -1],
                                [1, -1, 1, -1],
                                [-1, 1, 1, -1]], dtype=float)


@dataclass(frozen=True)
class GaudinData:
    """sl(2) Gaudin data at positions ``(x, 1, 0, inf)``.

    Parameters
    ----------
    lam : 4 complex
        Weights ``(lambda_1, lambda_2, lambda_3, lambda_inf)``.
    mu1 : complex
        Eigenvalue of the Hamiltonian at ``z_1 = x``; ``mu2`` and ``mu3`` are
        determined by the two linear constraints.
    x : complex
        Position of the first marked point.
    mu : optional 3 complex
        Full eigenvalue triple; if given it is checked against the
        constraints instead of being derived.
    """

    lam: Tuple[complex, complex, complex, complex]
    mu1: complex
    x: complex
    mu: Optional[Tuple[complex, complex, complex]] = None

    def __post_init__(self):
        lam = tuple(complex(v) for v in self.lam)
        if len(lam) != 4:
            raise ConfigError("lambda must have four entries")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu1", complex(self.mu1))
        object.__setattr__(self, "x", complex(self.x))
        if self.mu is not None:
            mu = tuple(complex(v) for v in self.mu)
            object.__setattr__(self, "mu", mu)

    @property
    def positions(self) -> Tuple[complex, complex, complex]:
        return (self.x, 1 + 0j, 0j)

    @property
    def beta(self) -> complex:
        return (sum(self.lam[:3]) - self.lam[3]) / 2

    @property
    def kappa(self) -> Tuple[complex, ...]:
        """Double-pole coefficients ``lambda (lambda + 2) / 4``."""
        return tuple(v * (v + 2) / 4 for v in self.lam)

    @property
    def moment_constant(self) -> complex:
        """``sum z_i mu_i`` forced by the leading behaviour at infinity."""
        k = self.kappa
        return k[3] - (k[0] + k[1] + k[2])

    def eigenvalues(self) -> Tuple[complex, complex, complex]:
        """``(mu_1, mu_2, mu_3)``, derived or validated."""
        K = self.moment_constant
        mu2 = K - self.x * self.mu1
        mu3 = -self.mu1 - mu2
        derived = (self.mu1, mu2, mu3)
        if self.mu is not None:
            scale = max(1.0, *(abs(v) for v in self.mu))
            if abs(sum(self.mu)) > 1e-10 * scale:
                raise ConstraintViolated("mu_1 + mu_2 + mu_3 != 0")
            if abs(sum(z * m for z, m in zip(self.positions, self.mu)) - K) > 1e-10 * scale:
                raise ConstraintViolated("sum z_i mu_i != kappa_inf - sum kappa_i")
            if abs(self.mu[0] - self.mu1) > 1e-10 * scale:
                raise ConstraintViolated("mu[0] disagrees with mu1")
            return self.mu
        return derived

    def with_mu1(self, mu1: complex) -> "GaudinData":
        return GaudinData(self.lam, mu1, self.x)

    def a_star(self) -> np.ndarray:
        return np.array(self.lam) + 1


def gaudin_exponents(g: GaudinData) -> DarbouxParams:
    """Exponent data of the reduced Darboux operator (independent of mu)."""
    ax, a1, a0, ainf = GAUDIN_MATRIX @ g.a_star()
    return DarbouxParams((a0, ax, a1, ainf), g.beta, g.x)


def gaudin_accessory(g: GaudinData) -> complex:
    """Accessory parameter of the reduced operator as a function of ``mu1``.

    ``Lambda = x (x - 1) mu1 + lambda_1 (x (2 beta - lambda_2) - (x - 1) lambda_3) / 2``.
    """
    l1, l2, l3, _ = g.lam
    x, b = g.x, g.beta
    return x * (x - 1) * g.mu1 + 0.5 * l1 * (x * (2 * b - l2) - (x - 1) * l3)


def mu1_from_accessory(g: GaudinData, lam: complex) -> complex:
    """Inverse of :func:`gaudin_accessory` with respect to ``mu1``."""
    base = gaudin_accessory(g.with_mu1(0))
    return (lam - base) / (g.x * (g.x - 1))


def gaudin_to_darboux(g: GaudinData) -> Tuple[DarbouxParams, complex]:
    """Reduce the Gaudin eigenproblem at ``z_1 = x`` to a Darboux operator.

    Returns
    -------
    params : DarbouxParams
        Exponents from the half-sum pattern, twist ``s = beta``.
    lam : complex
        The accessory parameter.
    """
    g.eigenvalues()  # validates supplied constraints
    params = gaudin_exponents(g)
    params.check_fuchs()
    return params, gaudin_accessory(g)


def gaudin_oper(g: GaudinData) -> FuchsianOperator:
    """The projective connection ``d_t^2 - q(t)`` as a polynomial operator.

    ``q = sum kappa_i / (t - z_i)^2 + sum mu_i / (t - z_i)``.  Multiplying by
    ``D = prod (t - z_i)^2`` gives ``D d^2 - q D`` with polynomial
    coefficients; the eigenvalue slot is zero.
    """
    z = g.positions
    mu = g.eigenvalues()
    kap = g.kappa[:3]
    D = npoly.polyfromroots([z[0], z[0], z[1], z[1], z[2], z[2]]).astype(complex)
    qD = np.zeros(1, dtype=complex)
    for i in range(3):
        others = [z[j] for j in range(3) if j != i for _ in range(2)]
        base = npoly.polyfromroots(others)
        qD = npoly.polyadd(qD, kap[i] * base)
        qD = npoly.polyadd(qD, mu[i] * npoly.polysub(npoly.polymulx(base), z[i] * base))
    R = -np.asarray(qD, dtype=complex)
    if len(R) > 5:
        R = R[:5]  # the t^5 coefficient is sum(mu) = 0
    exps = {}
    for lb, lv in zip(("x", "1", "0"), g.lam[:3]):
        exps[lb] = (-lv / 2, 1 + lv / 2)
    return FuchsianOperator(D, np.zeros(1, dtype=complex), R, s=0j,
                            points=z, labels=("x", "1", "0"), exponents=exps,
                            kind="oper", lam=0j)


# ---------------------------------------------------------------------------
# JSON parameter files
# ---------------------------------------------------------------------------

def parse_complex(v, path: str = "value") -> complex:
    """Accept ``[re, im]``, a number, or a string understood by ``complex``."""
    try:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValueError
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: cannot parse complex number from {v!r}") from None


def params_from_json(d: dict):
    """Parse a parameter block.

    Returns ``(DarbouxParams, lam_or_None, GaudinData_or_None)``.
    """
    if not isinstance(d, dict):
        raise ConfigError("params: expected an object")
    if "gaudin" in d:
        gd = d["gaudin"]
        if "lambda" not in gd:
            raise ConfigError("params.gaudin.lambda: missing field")
        lam = [parse_complex(v, f"params.gaudin.lambda[{i}]") for i, v in enumerate(gd["lambda"])]
        if len(lam) != 4:
            raise ConfigError("params.gaudin.lambda: need four weights")
        mu1 = parse_complex(gd.get("mu1", 0), "params.gaudin.mu1")
        if "positions" in gd:
            pos = [parse_complex(v, f"params.gaudin.positions[{i}]")
                   for i, v in enumerate(gd["positions"])]
            if len(pos) != 3 or abs(pos[1] - 1) > 1e-14 or abs(pos[2]) > 1e-14:
                raise ConfigError("params.gaudin.positions: expected [x, 1, 0]")
            x = pos[0]
        elif "x" in gd:
            x = parse_complex(gd["x"], "params.gaudin.x")
        else:
            raise ConfigError("params.gaudin.positions: missing field")
        g = GaudinData(tuple(lam), mu1, x)
        p, L = gaudin_to_darboux(g)
        return p, L, g
    for key in ("a", "x"):
        if key not in d:
            raise ConfigError(f"params.{key}: missing field")
    a = [parse_complex(v, f"params.a[{i}]") for i, v in enumerate(d["a"])]
    if len(a) != 4:
        raise ConfigError("params.a: need four exponent differences")
    x = parse_complex(d["x"], "params.x")
    if "s" in d:
        s = parse_complex(d["s"], "params.s")
        p = DarbouxParams(tuple(a), s, x)
        try:
            p.check_fuchs()
        except ConstraintViolated as exc:
            raise ConfigError(f"params.s: {exc}") from None
    else:
        p = DarbouxParams.from_exponents(a, x)
    lam = parse_complex(d["lambda"], "params.lambda") if "lambda" in d else None
    return p, lam, None
