"""Rank-one case on an elliptic curve ``E = C / (Z + tau Z)``.

A ``GL_1`` oper is the connection ``d - a dz`` on the trivial bundle.  Its
monodromy together with that of the antiholomorphic partner ``d - b dzbar``
is real exactly when the periods of ``a dz - conj(a) dzbar`` over the basis
cycles ``1`` and ``tau`` lie in ``2 pi i Z``.  The single-valued joint
eigenfunctions are the Fourier harmonics

    f_{m,n}(z) = exp(2 pi i m (z conj(tau) - conj(z) tau) / (conj(tau) - tau))
               * exp(2 pi i n (z - conj(z)) / (tau - conj(tau))),

which in the lattice coordinates ``z = u + v tau`` are simply
``exp(2 pi i (m u + n v))``.  Everything here is closed form, and serves as
an exact check of the detection logic at rank one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError

PERIOD_TOL = 1e-10


def _check_tau(tau: complex) -> complex:
    tau = complex(tau)
    if not tau.imag > 0:
        raise ConfigError(f"tau must lie in the upper half plane, got {tau}")
    return tau


@dataclass(frozen=True)
class GL1Oper:
    """The connection ``d - a dz`` on ``C / (Z + tau Z)``."""

    a: complex
    tau: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "tau", _check_tau(self.tau))

    @property
    def partner(self) -> complex:
        """Coefficient ``b = -conj(a)`` of the antiholomorphic partner."""
        return -self.a.conjugate()

    def periods(self) -> Tuple[complex, complex]:
        """Periods of ``a dz - conj(a) dzbar`` over the cycles ``1`` and ``tau``."""
        a, t = self.a, self.tau
        return (a - a.conjugate(), a * t - (a * t).conjugate())

    def lattice_coordinates(self) -> Tuple[float, float]:
        """Real ``(m, n)`` with ``periods = 2 pi i (m, n)``.

        Integer values mean real monodromy; they coincide with the labels of
        the harmonic :func:`harmonic_oper` maps to ``a``.
        """
        p1, p2 = self.periods()
        return (p1.imag / (2 * math.pi), p2.imag / (2 * math.pi))


@dataclass(frozen=True)
class FourierHarmonic:
    """The harmonic ``f_{m,n}`` on ``C / (Z + tau Z)``."""

    m: int
    n: int
    tau: complex

    def __post_init__(self):
        object.__setattr__(self, "tau", _check_tau(self.tau))

    @property
    def a(self) -> complex:
        """Eigenvalue of ``d/dz``."""
        t = self.tau
        return 2j * math.pi * (self.n - self.m * t.conjugate()) / (t - t.conjugate())

    @property
    def b(self) -> complex:
        """Eigenvalue of ``d/dzbar``."""
        t = self.tau
        return -2j * math.pi * (self.n - self.m * t) / (t - t.conjugate())

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        t = self.tau
        tb = t.conjugate()
        zb = np.conj(z)
        ph = (self.m * (z * tb - zb * t) / (tb - t)
              + self.n * (z - zb) / (t - tb))
        # the phase is real up to rounding; dropping the imaginary part keeps |f| = 1
        return np.exp(2j * math.pi * ph.real)

    def on_lattice(self, u, v) -> np.ndarray:
        """``f(u + v tau) = exp(2 pi i (m u + n v))``."""
        return np.exp(2j * math.pi * (self.m * np.asarray(u) + self.n * np.asarray(v)))


def harmonic_oper(tau: complex, m: int, n: int) -> GL1Oper:
    """Oper whose horizontal section is the harmonic ``f_{m,n}``.

    ``a = 2 pi i (n - m conj(tau)) / (tau - conj(tau))``; at ``tau = i`` this
    is ``pi (n + i m)``.
    """
    tau = _check_tau(tau)
    return GL1Oper(2j * math.pi * (n - m * tau.conjugate()) / (tau - tau.conjugate()), tau)


def real_monodromy_gl1(oper: GL1Oper, tol: float = PERIOD_TOL) -> bool:
    """Both periods of ``a dz - conj(a) dzbar`` in ``2 pi i Z`` within ``tol``.

    The tolerance applies to the periods divided by ``2 pi``.
    """
    p1, p2 = oper.periods()
    for p in (p1, p2):
        if abs(p.real) > tol:
            return False
        k = p.imag / (2 * math.pi)
        if abs(k - round(k)) > tol:
            return False
    return True


@dataclass(frozen=True)
class GL1Point:
    """One point of the rank-one spectrum."""

    m: int
    n: int
    a: complex
    b: complex
    tau: complex

    @property
    def harmonic(self) -> FourierHarmonic:
        return FourierHarmonic(self.m, self.n, self.tau)

    def row(self) -> dict:
        return {"m": self.m, "n": self.n, "a_re": self.a.real, "a_im": self.a.imag,
                "b_re": self.b.real, "b_im": self.b.imag}


Box = Union[int, Tuple[Tuple[int, int], Tuple[int, int]]]


def _ranges(box: Box) -> Tuple[range, range]:
    if isinstance(box, (int, np.integer)):
        if box < 0:
            raise ConfigError("box must be non-negative")
        return range(-box, box + 1), range(-box, box + 1)
    try:
        (m0, m1), (n0, n1) = box
    except (TypeError, ValueError):
        raise ConfigError("box must be an integer or ((m_min, m_max), (n_min, n_max))") from None
    return range(int(m0), int(m1) + 1), range(int(n0), int(n1) + 1)


def enumerate_gl1_spectrum(tau: complex, box: Box, tol: float = PERIOD_TOL) -> List[GL1Point]:
    """Rank-one spectrum with lattice labels in ``box``.

    Each candidate harmonic is kept only if its oper passes the period test,
    its lattice coordinates reproduce the labels and the ``d/dzbar``
    eigenvalue equals ``-conj(a)``.  A failure of the last two would be an
    internal inconsistency and raises ``ArithmeticError``.

    Parameters
    ----------
    tau : complex
        Modular parameter, ``Im tau > 0``.
    box : int or ((m_min, m_max), (n_min, n_max))
        An integer ``N`` means ``|m|, |n| <= N``.
    """
    tau = _check_tau(tau)
    ms, ns = _ranges(box)
    out: List[GL1Point] = []
    for m in ms:
        for n in ns:
            op = harmonic_oper(tau, m, n)
            if not real_monodromy_gl1(op, tol):
                continue
            um, un = op.lattice_coordinates()
            h = FourierHarmonic(m, n, tau)
            scale = 1 + abs(op.a)
            if abs(um - m) > tol * scale or abs(un - n) > tol * scale:
                raise ArithmeticError(f"lattice coordinates of ({m}, {n}) do not round-trip")
            if abs(h.b + op.a.conjugate()) > tol * scale:
                raise ArithmeticError(f"b != -conj(a) at ({m}, {n})")
            out.append(GL1Point(m, n, op.a, h.b, tau))
    return out


def eigen_defect(h: FourierHarmonic, z: Optional[np.ndarray] = None) -> float:
    """Defect of ``d f = a f`` and ``dbar f = b f`` relative to ``1 + |a|``.

    The derivatives come from the chain rule through the lattice
    coordinates ``u = x - y Re(tau) / Im(tau)``, ``v = y / Im(tau)``, which
    does not use the closed forms of ``a`` and ``b``.
    """
    if z is None:
        u, v = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 7))
        z = (u + v * h.tau).ravel()
    z = np.asarray(z, dtype=complex)
    t = h.tau
    f = h(z)
    fx = 2j * math.pi * h.m * f
    fy = 2j * math.pi * (h.n - h.m * t.real) / t.imag * f
    dz = 0.5 * (fx - 1j * fy)
    dzb = 0.5 * (fx + 1j * fy)
    scale = 1 + abs(h.a)
    return float(max(np.max(np.abs(dz - h.a * f)), np.max(np.abs(dzb - h.b * f))) / scale)


def periodicity_defect(h: FourierHarmonic, z: Optional[np.ndarray] = None) -> float:
    """``max |f(z+1) - f(z)|, |f(z+tau) - f(z)|`` on sample points."""
    if z is None:
        rng = np.random.default_rng(0)
        z = rng.uniform(-1, 1, 16) + 1j * rng.uniform(-1, 1, 16)
    z = np.asarray(z, dtype=complex)
    f = h(z)
    return float(max(np.max(np.abs(h(z + 1) - f)), np.max(np.abs(h(z + h.tau) - f))))


def gram_matrix(harmonics: Iterable[FourierHarmonic], n_quad: Optional[int] = None) -> np.ndarray:
    """``<f_i, f_j>`` over the fundamental domain with unit total area.

    The integrand is a trigonometric polynomial in the lattice coordinates,
    so the periodic trapezoid rule with more nodes than twice the largest
    label is exact.
    """
    hs = list(harmonics)
    if not hs:
        return np.zeros((0, 0), dtype=complex)
    tau = hs[0].tau
    kmax = max(max(abs(h.m), abs(h.n)) for h in hs)
    n_quad = n_quad or 2 * kmax + 4
    u = np.arange(n_quad) / n_quad
    U, V = np.meshgrid(u, u, indexing="ij")
    Z = (U + V * tau).ravel()
    F = np.stack([h(Z) for h in hs])
    return F @ F.conj().T / Z.size
