"""Local series solutions and analytic continuation of solution frames.

A *frame* is the 2x2 matrix whose columns are ``(psi, psi')`` for two
solutions of ``P psi'' + Q psi' + (R - lam) psi = 0``.  Continuation uses a
Taylor-series method in double-double arithmetic: at each step the recurrence
of the operator produces the local Taylor coefficients, which are summed at a
step length bounded by a fixed fraction of the distance to the nearest
singular point.  The truncation order adapts to the requested tolerance and
the step is halved if the series does not converge within the order cap.

Frobenius series at simple zeros of ``P`` follow the usual case split for the
exponent difference ``alpha = 1 - Q(p)/P'(p)``:

* ``alpha`` not an integer: ``psi_1 = f_1``, ``psi_2 = w^alpha f_2``.
* ``alpha`` a negative integer: ``psi_1 = f_1``,
  ``psi_2 = kappa psi_1 log w + w^alpha f_2``.
* ``alpha`` a nonnegative integer: ``psi_1 = w^alpha f_1``,
  ``psi_2 = kappa psi_1 log w + f_2``.

Here ``f_1(0) = 1``; ``f_2(0) = 1`` except for ``alpha = 0``, where
``f_2(0) = 0`` and ``kappa = 1`` (the constant in ``f_2`` would only add a
multiple of ``psi_1``).  For positive integer gaps ``kappa`` is whatever the
resonance equation forces, possibly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from . import _dd
from .darboux import FuchsianOperator
from .errors import (ResonanceUnhandled, SeriesDiverged,
                     SingularityTooClose, StepUnderflow)

#: local truncation tolerance of one continuation step (relative)
DEFAULT_RTOL = 1e-30
#: step length as a fraction of the distance to the nearest singularity
DEFAULT_STEP_FRACTION = 0.4
#: paths closer than this to a singular point are refused
CLEARANCE_FLOOR = 1e-6
#: truncation tolerance for Frobenius series
SERIES_TOL = 1e-13
SERIES_KMAX = 200
TAYLOR_KMAX = 400

_MP_DPS = 34


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

def segment_distance(a: complex, b: complex, p: complex) -> float:
    """Euclidean distance from ``p`` to the segment ``[a, b]``."""
    d = b - a
    if d == 0:
        return abs(p - a)
    t = ((p - a) * np.conj(d)).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


def polyline_clearance(points: Sequence[complex], singular: Sequence[complex]) -> float:
    pts = [complex(z) for z in points]
    if not singular:
        return np.inf
    if len(pts) == 1:
        return min(abs(pts[0] - s) for s in singular)
    return min(segment_distance(pts[i], pts[i + 1], s)
               for i in range(len(pts) - 1) for s in singular)


@dataclass(frozen=True)
class PathSpec:
    """Polyline in the plane avoiding the singular points.

    Parameters
    ----------
    waypoints : tuple of complex
        Consecutive points; repeated consecutive points are dropped.
    min_clearance : float
        Required distance from each segment to each finite singularity.
    """

    waypoints: Tuple[complex, ...]
    min_clearance: float = CLEARANCE_FLOOR

    def __post_init__(self):
        pts = []
        for z in self.waypoints:
            z = complex(z)
            if not pts or z != pts[-1]:
                pts.append(z)
        if not pts:
            raise ValueError("a path needs at least one point")
        object.__setattr__(self, "waypoints", tuple(pts))
        if not self.min_clearance > 0:
            raise ValueError("min_clearance must be positive")

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]

    def reversed(self) -> "PathSpec":
        return PathSpec(self.waypoints[::-1], self.min_clearance)

    def __add__(self, other: "PathSpec") -> "PathSpec":
        if abs(self.end - other.start) > 1e-14 * max(1.0, abs(self.end)):
            raise ValueError("paths do not connect")
        return PathSpec(self.waypoints + other.waypoints[1:],
                        min(self.min_clearance, other.min_clearance))

    def clearance(self, singular: Sequence[complex]) -> float:
        return polyline_clearance(self.waypoints, singular)

    def check(self, singular: Sequence[complex], floor: float = CLEARANCE_FLOOR) -> float:
        c = self.clearance(singular)
        need = max(floor, self.min_clearance)
        if c < need:
            raise SingularityTooClose(
                f"path clearance {c:.3e} below required {need:.3e}")
        return c


def polygon(center: complex, radius: float, n: int = 16, start_angle: float = 0.0,
            clockwise: bool = False) -> Tuple[complex, ...]:
    """Closed regular polygon; first and last vertex coincide."""
    sgn = -1.0 if clockwise else 1.0
    ang = start_angle + sgn * 2 * np.pi * np.arange(n + 1) / n
    pts = center + radius * np.exp(1j * ang)
    pts[-1] = pts[0]
    return tuple(complex(z) for z in pts)


# ---------------------------------------------------------------------------
# transfer matrices
# ---------------------------------------------------------------------------

@dataclass
class TransferMatrix:
    """Linear map taking the frame ``(psi, psi')`` at ``from_pt`` to ``to_pt``.

    ``m`` is the rounded double-precision matrix; ``m_lo`` holds the
    double-double correction so that ``m + m_lo`` carries about 31 digits.
    """

    m: np.ndarray
    from_pt: complex
    to_pt: complex
    m_lo: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), complex))
    nsteps: int = 0

    @property
    def det(self) -> complex:
        h, l = _dd.mat_det(self.m, self.m_lo)
        return complex(h + l)

    def then(self, other: "TransferMatrix") -> "TransferMatrix":
        """Transfer along this path followed by ``other``."""
        h, l = _dd.mat_mul(other.m, other.m_lo, self.m, self.m_lo)
        return TransferMatrix(h, self.from_pt, other.to_pt, l,
                              self.nsteps + other.nsteps)

    def inverse(self) -> "TransferMatrix":
        h, l = _dd.mat_inv(self.m, self.m_lo)
        return TransferMatrix(h, self.to_pt, self.from_pt, l, self.nsteps)

    @classmethod
    def identity(cls, z: complex) -> "TransferMatrix":
        return cls(np.eye(2, dtype=complex), complex(z), complex(z))


def _op_arrays(op: FuchsianOperator):
    return (np.ascontiguousarray(op.P, dtype=np.complex128),
            np.ascontiguousarray(op.Q, dtype=np.complex128),
            np.ascontiguousarray(op.R, dtype=np.complex128),
            np.asarray(op.points if op.points else [complex(np.inf)], dtype=np.complex128))


def continue_frame(op: FuchsianOperator, lam: complex, path: PathSpec,
                   Yh: np.ndarray, Yl: Optional[np.ndarray] = None,
                   rtol: float = DEFAULT_RTOL,
                   step_fraction: float = DEFAULT_STEP_FRACTION,
                   check: bool = True):
    """Continue an arbitrary frame (double-double) along ``path``.

    Returns ``(Yh, Yl, nsteps)``.
    """
    P, Q, R, sing = _op_arrays(op)
    if check:
        path.check(op.points)
    Yh = np.ascontiguousarray(Yh, dtype=np.complex128)
    Yl = np.zeros_like(Yh) if Yl is None else np.ascontiguousarray(Yl, dtype=np.complex128)
    pts = np.asarray(path.waypoints, dtype=np.complex128)
    if len(pts) == 1:
        return Yh.copy(), Yl.copy(), 0
    Yh2, Yl2, n, st = _dd.continue_path(P, Q, R, complex(lam), sing, pts, Yh, Yl,
                                        float(step_fraction), float(rtol), TAYLOR_KMAX)
    if st != 0:
        raise StepUnderflow("continuation step size underflowed")
    return Yh2, Yl2, int(n)


def transfer_along(op: FuchsianOperator, lam: complex, path: PathSpec,
                   rtol: float = DEFAULT_RTOL,
                   step_fraction: float = DEFAULT_STEP_FRACTION) -> TransferMatrix:
    """Transfer matrix of ``L psi = lam psi`` along a polyline.

    Parameters
    ----------
    op : FuchsianOperator
    lam : complex
        Eigenvalue.
    path : PathSpec
    rtol : float
        Relative truncation tolerance of each Taylor step.  Values down to
        about ``1e-31`` are meaningful since the arithmetic is double-double.
    step_fraction : float
        Step length relative to the distance to the nearest singularity.

    Raises
    ------
    SingularityTooClose
        If the path clearance is below its ``min_clearance`` or the floor.
    StepUnderflow
        If the adaptive step control stalls.
    """
    I = np.eye(2, dtype=complex)
    Yh, Yl, n = continue_frame(op, lam, path, I, None, rtol, step_fraction)
    return TransferMatrix(Yh, path.start, path.end, Yl, n)


def transfer_batch(op: FuchsianOperator, lams: np.ndarray, path: PathSpec,
                   rtol: float = DEFAULT_RTOL,
                   step_fraction: float = DEFAULT_STEP_FRACTION):
    """Transfer matrices for many eigenvalues along the same path.

    Returns ``(hi, lo)`` arrays of shape ``(n, 2, 2)``.
    """
    P, Q, R, sing = _op_arrays(op)
    path.check(op.points)
    pts = np.asarray(path.waypoints, dtype=np.complex128)
    lams = np.ascontiguousarray(np.atleast_1d(lams), dtype=np.complex128)
    h, l, st = _dd.continue_batch(P, Q, R, lams, sing, pts, float(step_fraction),
                                  float(rtol), TAYLOR_KMAX)
    if np.any(st != 0):
        raise StepUnderflow("continuation step size underflowed")
    return h, l


def wronskian_ratio(op: FuchsianOperator, path: PathSpec, n: int = 4000) -> complex:
    """``exp(-int Q/P dz)`` along ``path`` by composite Gauss-Legendre
    quadrature; an independent check of the frame determinant."""
    xg, wg = np.polynomial.legendre.leggauss(20)
    total = 0j
    pts = path.waypoints
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(np.ceil(n * abs(b - a) / max(1e-300, sum(abs(pts[i + 1] - pts[i]) for i in range(len(pts) - 1))))))
        edges = a + (b - a) * np.linspace(0, 1, m + 1)
        for u, v in zip(edges[:-1], edges[1:]):
            z = 0.5 * (u + v) + 0.5 * (v - u) * xg
            p, q, _ = op.coefficients(z)
            total += 0.5 * (v - u) * np.sum(wg * q / p)
    return complex(np.exp(-total))


# ---------------------------------------------------------------------------
# double-double helpers around mpmath for transcendental prefactors
# ---------------------------------------------------------------------------

def _mp(h, l=0j):
    return mpmath.mpc(h.real, h.imag) + mpmath.mpc(l.real, l.imag)


def _split(v) -> Tuple[complex, complex]:
    re = mpmath.re(v)
    im = mpmath.im(v)
    rh = float(re)
    ih = float(im)
    return complex(rh, ih), complex(float(re - rh), float(im - ih))


# ---------------------------------------------------------------------------
# Frobenius series
# ---------------------------------------------------------------------------

def _is_integer(alpha: complex, tol: float = 1e-12) -> Optional[int]:
    n = round(alpha.real)
    if abs(alpha.real - n) <= tol and abs(alpha.imag) <= tol:
        return int(n)
    return None


@dataclass
class SeriesSolution:
    """Local solution ``w^exponent * sum c_m w^m (+ kappa * partner * log w)``.

    Attributes
    ----------
    center : complex
        The singular point (``w = z - center``).
    exponent : complex
        Exponent of the power series part.
    coefficients : ndarray
        ``c_0 .. c_K`` (double; ``coefficients_lo`` holds corrections).
    log_partner : SeriesSolution or None
        The solution multiplying ``log w``, when present.
    log_coeff : complex
        The factor ``kappa`` in front of ``partner * log w``.
    radius : float
        Radius of convergence (distance to the nearest other singularity).
    """

    center: complex
    exponent: complex
    coefficients: np.ndarray
    radius: float
    coefficients_lo: Optional[np.ndarray] = None
    log_partner: Optional["SeriesSolution"] = None
    log_coeff: complex = 0j

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def _series(self, w):
        w = np.asarray(w, dtype=complex)
        c = self.coefficients
        k = np.arange(len(c)) + self.exponent
        pv = np.polynomial.polynomial.polyval
        return pv(w, c), pv(w, c * k), pv(w, c * k * (k - 1))

    def evaluate(self, w, arg_ref: float = 0.0, second: bool = False):
        """Value and ``d/dw`` (and ``d^2/dw^2`` if ``second``) in double
        precision, vectorized over ``w``.

        ``arg_ref`` selects the branch ``arg w in (arg_ref - pi, arg_ref + pi]``
        for ``w^exponent`` and ``log w``.
        """
        w = np.asarray(w, dtype=complex)
        logw = _branch_log(w, arg_ref)
        S, T, U = self._series(w)
        pw = np.exp(self.exponent * logw)
        val = pw * S
        der = pw * T / w
        der2 = pw * U / w ** 2
        if self.log_partner is not None and self.log_coeff != 0:
            pv, pd, pdd = self.log_partner.evaluate(w, arg_ref, second=True)
            k = self.log_coeff
            val = val + k * pv * logw
            der = der + k * (pd * logw + pv / w)
            der2 = der2 + k * (pdd * logw + 2 * pd / w - pv / w ** 2)
        if second:
            return val, der, der2
        return val, der

    def evaluate_dd(self, w: complex, arg: Optional[float] = None):
        """Value and derivative at a single point in double-double.

        Returns ``((vh, vl), (dh, dl))``.
        """
        w = complex(w)
        mpmath.mp.dps = _MP_DPS
        ch = np.ascontiguousarray(self.coefficients)
        cl = (np.zeros_like(ch) if self.coefficients_lo is None
              else np.ascontiguousarray(self.coefficients_lo))
        Sh, Sl, Th, Tl = _dd.eval_power_series(ch, cl, len(ch), w, 0j,
                                               complex(self.exponent))
        wm = mpmath.mpc(w.real, w.imag)
        if arg is None:
            logw = mpmath.log(wm)
        else:
            logw = mpmath.log(abs(wm)) + 1j * mpmath.mpf(arg)
        pw = mpmath.exp(mpmath.mpc(self.exponent.real, self.exponent.imag) * logw)
        val = pw * _mp(Sh, Sl)
        der = pw * _mp(Th, Tl) / wm
        if self.log_partner is not None and self.log_coeff != 0:
            (pvh, pvl), (pdh, pdl) = self.log_partner.evaluate_dd(w, arg)
            pv = _mp(pvh, pvl)
            pd = _mp(pdh, pdl)
            kap = mpmath.mpc(self.log_coeff.real, self.log_coeff.imag)
            val += kap * pv * logw
            der += kap * (pd * logw + pv / wm)
        return _split(val), _split(der)

    def tail_estimate(self, r: float) -> float:
        """Size of the last three terms at ``|w| = r`` relative to the largest."""
        c = np.abs(self.coefficients)
        k = np.arange(len(c))
        with np.errstate(over="ignore", divide="ignore"):
            terms = c * float(r) ** k
        big = max(np.max(terms), 1e-300)
        return float(np.max(terms[-3:]) / big)


def _branch_log(w, arg_ref: float):
    lw = np.log(w)
    if arg_ref != 0.0:
        im = np.angle(w * np.exp(-1j * arg_ref)) + arg_ref
        lw = np.log(np.abs(w)) + 1j * im
    return lw


def _local_radius(op: FuchsianOperator, p: complex) -> float:
    others = [abs(q - p) for q in op.points if abs(q - p) > 1e-14]
    return float(min(others)) if others else np.inf


def _frob_series(op, p, lam, rho, c0, kappa, partner, k0, rho_b, rmag, tol, kmax):
    ph, pl = _dd.shift_poly(np.ascontiguousarray(op.P), complex(p))
    qh, ql = _dd.shift_poly(np.ascontiguousarray(op.Q), complex(p))
    rh, rl = _dd.shift_poly(np.ascontiguousarray(op.R), complex(p))
    ch = np.zeros(kmax + 1, dtype=complex)
    cl = np.zeros(kmax + 1, dtype=complex)
    if partner is None:
        y1h = np.zeros(1, dtype=complex)
        y1l = np.zeros(1, dtype=complex)
    else:
        y1h = np.ascontiguousarray(partner.coefficients)
        y1l = (np.zeros_like(y1h) if partner.coefficients_lo is None
               else np.ascontiguousarray(partner.coefficients_lo))
    kend, kh, kl = _dd.frobenius_coefficients(
        ph, pl, qh, ql, rh, rl, complex(lam), complex(rho), complex(c0),
        complex(kappa), 0j, y1h, y1l, int(k0), complex(rho_b), float(rmag),
        float(tol), kmax + 1, ch, cl)
    return ch[:kend].copy(), cl[:kend].copy(), complex(kh + kl)


def frobenius_solutions(op: FuchsianOperator, p: Union[complex, str], lam: complex,
                        K: Optional[int] = None, *, series_tol: float = SERIES_TOL,
                        r: Optional[float] = None, log_branch: bool = True
                        ) -> Tuple[SeriesSolution, SeriesSolution]:
    """Frobenius pair at a simple zero ``p`` of ``P``.

    Parameters
    ----------
    op : FuchsianOperator
    p : complex or str
        Singular point or its label.
    lam : complex
    K : int, optional
        Fixed truncation order (at least 8).  If omitted the order adapts so
        that the last three terms at radius ``r`` fall below ``series_tol``,
        up to a cap of 200.
    r : float, optional
        Radius used by the adaptive truncation; defaults to half the distance
        to the nearest other singularity.
    log_branch : bool
        Must be true when the exponent difference is an integer.

    Returns
    -------
    (psi_1, psi_2) : SeriesSolution
    """
    if isinstance(p, str):
        p = op.point(p)
    p = complex(p)
    alpha = op.exponent_difference(p)  # raises NotSingular
    R = _local_radius(op, p)
    if r is None:
        r = 0.5 * R if np.isfinite(R) else 1.0
    if K is not None:
        if K < 8:
            raise ValueError("K must be at least 8")
        kmax, tol = int(K), 0.0
    else:
        kmax, tol = SERIES_KMAX, float(series_tol)
    n = _is_integer(alpha)
    if n is None:
        c1h, c1l, _ = _frob_series(op, p, lam, 0j, 1.0, 0j, None, 0, 0j, r, tol, kmax)
        c2h, c2l, _ = _frob_series(op, p, lam, alpha, 1.0, 0j, None, 0, 0j, r, tol, kmax)
        if K is not None:
            c1h, c1l, c2h, c2l = c1h[:K + 1], c1l[:K + 1], c2h[:K + 1], c2l[:K + 1]
        s1 = SeriesSolution(p, 0j, c1h, R, c1l)
        s2 = SeriesSolution(p, alpha, c2h, R, c2l)
        return s1, s2
    if not log_branch:
        raise ResonanceUnhandled(f"integer exponent difference {n} at {p}")
    rho_b, rho_s = (float(n), 0.0) if n >= 0 else (0.0, float(n))
    k0 = abs(n)
    c1h, c1l, _ = _frob_series(op, p, lam, rho_b, 1.0, 0j, None, 0, 0j, r, tol, kmax)
    if K is not None:
        c1h, c1l = c1h[:K + 1], c1l[:K + 1]
    s1 = SeriesSolution(p, complex(rho_b), c1h, R, c1l)
    if k0 == 0:
        c2h, c2l, kap = _frob_series(op, p, lam, 0j, 0.0, 1.0 + 0j, s1, 0, rho_b, r, tol, kmax)
    else:
        c2h, c2l, kap = _frob_series(op, p, lam, rho_s, 1.0, 0j, s1, k0, rho_b, r, tol, kmax)
    if K is not None:
        c2h, c2l = c2h[:K + 1], c2l[:K + 1]
    s2 = SeriesSolution(p, complex(rho_s), c2h, R, c2l, log_partner=s1, log_coeff=kap)
    return s1, s2


def match_at_singularity(op: FuchsianOperator, p: Union[complex, str], lam: complex,
                         K: Optional[int] = None, r: Optional[float] = None,
                         *, series_tol: float = SERIES_TOL, angle: float = 0.0,
                         pair: Optional[Tuple[SeriesSolution, SeriesSolution]] = None
                         ) -> TransferMatrix:
    """Frames of the Frobenius pair at the point ``p + r e^{i angle}``.

    The columns are ``(psi_j, psi_j')``; the branch of ``w^alpha`` and
    ``log w`` is the one with ``arg w = angle``.  The default radius is
    ``min(0.1, half the distance to the nearest other singularity)``.

    Raises
    ------
    SeriesDiverged
        If ``r`` is outside the convergence disk or the tail at ``r`` exceeds
        ``series_tol``.
    """
    if isinstance(p, str):
        p = op.point(p)
    p = complex(p)
    Rc = _local_radius(op, p)
    if r is None:
        r = min(0.1, 0.5 * Rc)
    if r >= Rc:
        raise SeriesDiverged(f"r = {r} outside the convergence radius {Rc}")
    if pair is None:
        pair = frobenius_solutions(op, p, lam, K, series_tol=series_tol, r=r)
    for s in pair:
        if s.tail_estimate(r) > max(series_tol, 1e-30) * 10:
            raise SeriesDiverged(f"series tail {s.tail_estimate(r):.2e} at r = {r}")
    w = complex(r * np.exp(1j * angle))
    Mh = np.zeros((2, 2), dtype=complex)
    Ml = np.zeros((2, 2), dtype=complex)
    for j, s in enumerate(pair):
        (vh, vl), (dh, dl) = s.evaluate_dd(w, angle)
        Mh[0, j], Ml[0, j] = vh, vl
        Mh[1, j], Ml[1, j] = dh, dl
    return TransferMatrix(Mh, p + w, p + w, Ml)


def local_monodromy(pair: Tuple[SeriesSolution, SeriesSolution]) -> np.ndarray:
    """Counterclockwise monodromy of the Frobenius pair (columns map)."""
    s1, s2 = pair
    e1 = np.exp(2j * np.pi * s1.exponent)
    e2 = np.exp(2j * np.pi * s2.exponent)
    M = np.diag([e1, e2]).astype(complex)
    if s2.log_partner is not None and s2.log_coeff != 0:
        M[0, 1] = e2 * 2j * np.pi * s2.log_coeff
    return M


def recurrence_residual(op: FuchsianOperator, sol: SeriesSolution, lam: complex,
                        r: float, n: int = 16) -> float:
    """Relative size of ``(L - lam) y`` on the circle ``|w| = r``.

    The three terms of the operator are evaluated from the truncated series
    and the residual is divided by the sum of their magnitudes.
    """
    ang = 2 * np.pi * (np.arange(n) + 0.5) / n
    w = r * np.exp(1j * ang)
    z = sol.center + w
    v, d, d2 = sol.evaluate(w, second=True)
    P, Q, R = op.coefficients(z)
    res = P * d2 + Q * d + (R - lam) * v
    scale = np.abs(P * d2) + np.abs(Q * d) + np.abs((R - lam) * v) + 1e-300
    return float(np.max(np.abs(res) / scale))


def infinity_frame(op: FuchsianOperator, lam: complex, r: float,
                   angle: float = 0.0, K: Optional[int] = None,
                   series_tol: float = SERIES_TOL) -> Tuple[TransferMatrix, Tuple[SeriesSolution, SeriesSolution], FuchsianOperator]:
    """Frames in the ``z`` chart of the Frobenius pair at infinity.

    The pair is computed for the twisted operator in ``w = 1/z`` and mapped
    back through ``psi = w^{-s} phi``, ``psi_z = -w^{1-s} (w phi_w - s phi)``,
    evaluated at ``w = r e^{i angle}`` (so ``z = 1/w``).
    """
    opw = op.chart_at_infinity()
    pair = frobenius_solutions(opw, 0j, lam, K, series_tol=series_tol, r=r)
    m = match_at_singularity(opw, 0j, lam, K, r, series_tol=series_tol, angle=angle,
                             pair=pair)
    mpmath.mp.dps = _MP_DPS
    w = mpmath.mpc(r * np.cos(angle), r * np.sin(angle))
    logw = mpmath.log(r) + 1j * mpmath.mpf(angle)
    s = mpmath.mpc(op.s.real, op.s.imag)
    fac = mpmath.exp(-s * logw)            # w^{-s}
    Mh = np.zeros((2, 2), dtype=complex)
    Ml = np.zeros((2, 2), dtype=complex)
    for j in range(2):
        phi = _mp(m.m[0, j], m.m_lo[0, j])
        dphi = _mp(m.m[1, j], m.m_lo[1, j])
        psi = fac * phi
        dpsi = -fac * w * (w * dphi - s * phi)
        Mh[0, j], Ml[0, j] = _split(psi)
        Mh[1, j], Ml[1, j] = _split(dpsi)
    z = complex(1 / complex(w))
    return TransferMatrix(Mh, z, z, Ml), pair, opw
