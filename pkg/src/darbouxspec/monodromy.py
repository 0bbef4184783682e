"""Monodromy representation of ``L psi = lam psi`` on the punctured sphere.

Conventions
-----------
* The fundamental frame at the base point ``z0`` is the identity frame: the
  columns of the 2x2 frame are ``(psi_j(z0), psi_j'(z0))`` and start as the
  unit vectors.  Continuing the frame along a closed loop ``gamma`` gives a
  matrix ``M_gamma`` with ``Phi -> Phi M_gamma`` for the row of basis
  solutions.  With this convention the matrix of "``gamma`` then ``delta``"
  is ``M_delta M_gamma``.
* Each finite puncture gets a counterclockwise 16-gon loop of radius half the
  smallest distance between punctures, joined to ``z0`` by a straight spoke.
  The spoke hits the polygon at the vertex facing ``z0``.
* ``z0`` lies above all punctures, so the spokes are ordered by
  ``arg(p - z0)``.  Writing the punctures in that order as ``p1, p2, p3``,
  the group relation is ``M_inf M_p3 M_p2 M_p1 = I``.  For the standard
  configuration ``0, x, 1`` with ``0 < Re x < 1`` this reads
  ``M_inf M_1 M_x M_0 = I``.
* ``M_inf`` is computed independently by continuing along a large clockwise
  circle enclosing every finite puncture, so the relation residual is a
  genuine consistency check rather than a definition.
* The normalized matrices are ``c_p M_p`` with ``c_p = exp(-i pi (rho_1 +
  rho_2))`` for the local exponents ``rho`` at ``p``, and
  ``c_inf = 1 / prod c_p`` so that the normalized relation still holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import _dd
from .darboux import FuchsianOperator
from .errors import ResidualTooLarge, SingularityTooClose
from .odecore import (DEFAULT_RTOL, DEFAULT_STEP_FRACTION, PathSpec,
                      polygon, transfer_batch)

RESIDUAL_MAX = 1e-6

ORDER_CONVENTION = "M_inf * M_p3 * M_p2 * M_p1 = I, punctures sorted by arg(p - base)"
LOOP_CONVENTION = ("counterclockwise 16-gon around each puncture, straight spoke from "
                   "the base point; M_inf from a clockwise circle enclosing all punctures")
NORMALIZATION_CONVENTION = "M_p -> exp(-i pi (rho1 + rho2)) M_p, c_inf = 1/prod(c_p)"


@dataclass(frozen=True)
class MonodromyConfig:
    """Loop geometry and integration settings.

    Parameters
    ----------
    base : complex, optional
        Base point.  Default: above the punctures (see :func:`default_base`).
    n_vertices : int
        Vertices of each small loop polygon.
    radius_factor : float
        Loop radius as a fraction of the smallest distance between punctures.
    vertex_offset : int
        Rotates the polygons so the spoke meets vertex ``k`` positions away
        from the one facing the base point.  The loop classes do not change.
    rtol, step_fraction : float
        Passed to the continuation routine.
    normalize : bool
        Rescale the local matrices into SL(2).
    balance : bool
        Also compute a well-conditioned conjugate of the normalized matrices.
    residual_max : float
        Raise :class:`ResidualTooLarge` above this relation residual.
    independent_infinity : bool
        Continue along the loop around infinity.  When off, ``M_inf`` is
        defined by the relation and the residual is ``nan``; this saves a
        third of the work where only the finite generators matter.
    """

    base: Optional[complex] = None
    n_vertices: int = 16
    radius_factor: float = 0.5
    vertex_offset: int = 0
    rtol: float = DEFAULT_RTOL
    step_fraction: float = DEFAULT_STEP_FRACTION
    normalize: bool = True
    balance: bool = True
    residual_max: float = RESIDUAL_MAX
    independent_infinity: bool = True


def default_base(points: Sequence[complex]) -> complex:
    """Base point above all punctures.

    The real part is the centroid; the height above the highest puncture is
    ``max(0.3 * diameter, 0.6 * min gap)`` so that the base point lies
    outside every small loop.
    """
    pts = np.asarray(points, dtype=complex)
    if len(pts) == 0:
        return 0j
    if len(pts) == 1:
        return complex(pts[0] + 0.5j)
    gaps = np.abs(pts[:, None] - pts[None, :])[np.triu_indices(len(pts), 1)]
    h = max(0.3 * float(gaps.max()), 0.6 * float(gaps.min()))
    return complex(pts.real.mean() + 1j * (pts.imag.max() + h))


def _base_candidates(points):
    """``default_base`` followed by fallbacks, all above the punctures.

    A straight spoke from the default base can graze a puncture that sits
    almost vertically above another one; the fallbacks shift the base
    sideways and upward in a fixed order, so the choice is deterministic.
    """
    b0 = default_base(points)
    yield b0
    pts = np.asarray(points, dtype=complex)
    diam = float(np.abs(pts[:, None] - pts[None, :]).max())
    for lift in (0.0, 0.5):
        for dx in (0.25, -0.25, 0.5, -0.5, 1.0, -1.0):
            yield complex(b0 + diam * (dx + 1j * lift))


def _pin(pts, z):
    # The spoke endpoint and the first polygon vertex must agree bitwise:
    # transfers along separate segments are composed without re-checking the
    # junction, and a one-ulp gap shows up as a 1e-16 relative defect.
    return (z,) + tuple(pts[1:-1]) + (z,)


@dataclass(frozen=True)
class LoopGeometry:
    """Closed loops generating the fundamental group at ``base``."""

    base: complex
    labels: Tuple[str, ...]
    points: Tuple[complex, ...]
    radius: float
    n_vertices: int = 16
    vertex_offset: int = 0
    inf_center: complex = 0j
    inf_radius: float = 1.0

    @classmethod
    def build(cls, op: FuchsianOperator, cfg: MonodromyConfig = MonodromyConfig()):
        pts = np.asarray(op.points, dtype=complex)
        if len(pts) < 2:
            raise ValueError("at least two finite punctures are required")
        gaps = np.abs(pts[:, None] - pts[None, :])[np.triu_indices(len(pts), 1)]
        r = cfg.radius_factor * float(gaps.min())
        c = complex(pts.mean())
        if cfg.base is not None:
            return cls._assemble(op, cfg, complex(cfg.base), r, c)
        err = None
        for base in _base_candidates(pts):
            try:
                return cls._assemble(op, cfg, base, r, c)
            except SingularityTooClose as exc:
                err = exc
        raise err

    @classmethod
    def _assemble(cls, op, cfg, base: complex, r: float, c: complex):
        pts = np.asarray(op.points, dtype=complex)
        if op.clearance(base) <= 1.1 * r:
            raise SingularityTooClose(f"base point {base} lies within a loop")
        R = 2.0 * float(np.abs(pts - c).max()) + r
        R = max(R, 1.1 * abs(base - c) + r)
        geo = cls(base, tuple(op.labels), tuple(complex(p) for p in pts), r,
                  cfg.n_vertices, cfg.vertex_offset, c, R)
        for lb in geo.labels:
            geo.spoke(lb).check(op.points)
        return geo

    # -- small loops -----------------------------------------------------------
    def _angle(self, label: str) -> float:
        p = self.points[self.labels.index(label)]
        return float(np.angle(self.base - p)) + 2 * np.pi * self.vertex_offset / self.n_vertices

    def entry(self, label: str) -> complex:
        p = self.points[self.labels.index(label)]
        return complex(p + self.radius * np.exp(1j * self._angle(label)))

    def spoke(self, label: str) -> PathSpec:
        return PathSpec((self.base, self.entry(label)), 0.25 * self.radius)

    def circle(self, label: str) -> PathSpec:
        p = self.points[self.labels.index(label)]
        pts = polygon(p, self.radius, self.n_vertices, self._angle(label))
        return PathSpec(_pin(pts, self.entry(label)), 0.5 * self.radius)

    def loop(self, label: str) -> PathSpec:
        s = self.spoke(label)
        return s + self.circle(label) + s.reversed()

    # -- loop around infinity ----------------------------------------------------
    def infinity_entry(self) -> complex:
        d = self.base - self.inf_center
        u = d / abs(d) if abs(d) > 0 else 1j
        return complex(self.inf_center + self.inf_radius * u)

    def infinity_spoke(self) -> PathSpec:
        return PathSpec((self.base, self.infinity_entry()), 0.25 * self.radius)

    def infinity_circle(self) -> PathSpec:
        ang = float(np.angle(self.infinity_entry() - self.inf_center))
        n = max(self.n_vertices, 32)
        pts = polygon(self.inf_center, self.inf_radius, n, ang, clockwise=True)
        return PathSpec(_pin(pts, self.infinity_entry()), 0.5 * self.radius)

    @property
    def order(self) -> Tuple[str, ...]:
        """Labels sorted by ``arg(p - base)``."""
        ang = [np.angle(p - self.base) for p in self.points]
        return tuple(self.labels[i] for i in np.argsort(ang, kind="stable"))


# ---------------------------------------------------------------------------
# balancing
# ---------------------------------------------------------------------------

def _hermitian_exp(u: float, v: float, w: float, scale: float = 1.0) -> np.ndarray:
    """``exp(scale * X)`` for the traceless Hermitian ``X`` with parameters u, v, w."""
    X = np.array([[u, v + 1j * w], [v - 1j * w, -u]], dtype=complex)
    t = np.sqrt(u * u + v * v + w * w) * scale
    sh = np.sinh(t) / t if abs(t) > 1e-12 else 1.0
    return np.cosh(t) * np.eye(2) + sh * scale * X


def balance(mats: Sequence[np.ndarray], maxiter: int = 8, gtol: float = 1e-3) -> np.ndarray:
    """Hermitian ``S`` with ``det S = 1`` minimizing ``sum ||S^-1 M S||_F^2``.

    The objective is geodesically convex on positive matrices (Kempf-Ness).
    Its gradient at the current frame is the traceless part of the moment
    map ``K = sum (M^dagger M - M M^dagger)``, so the search recentres after
    every step: the matrices are conjugated by ``exp(-t K / 2F)`` and the
    step ``t`` is adapted by backtracking.  Large monodromy entries often
    come from a badly scaled base frame, which this removes; when the
    traces themselves are large the entries stay large in every frame.

    Only a well-conditioned frame is needed, not the exact minimizer: the
    first few steps remove almost all of the excess and the default
    iteration cap keeps the cost per representation small.
    """
    cur = [np.asarray(M, dtype=complex) for M in mats]
    S = np.eye(2, dtype=complex)

    def total(ms):
        return sum(float(np.vdot(M, M).real) for M in ms)

    F = total(cur)
    t = 1.0
    for _ in range(maxiter):
        K = sum(M.conj().T @ M - M @ M.conj().T for M in cur)
        K = 0.5 * (K + K.conj().T)
        K -= 0.5 * np.trace(K).real * np.eye(2)
        g = float(np.linalg.norm(K)) / max(F, 1e-300)
        if g < gtol:
            break
        u, v, w = K[0, 0].real, K[0, 1].real, K[0, 1].imag
        while t > 1e-8:
            E = _hermitian_exp(u, v, w, scale=-0.5 * t / F)
            Ei = _hermitian_exp(u, v, w, scale=0.5 * t / F)
            trial = [Ei @ M @ E for M in cur]
            Ft = total(trial)
            if Ft < F:
                break
            t *= 0.5
        else:
            break
        cur, F, S = trial, Ft, S @ E
        t = min(4.0 * t, 16.0)
    # S is a product of Hermitian factors; its polar part would only add a
    # unitary conjugation, which leaves the objective unchanged.
    return S


# ---------------------------------------------------------------------------
# representation
# ---------------------------------------------------------------------------

@dataclass
class MonodromyRep:
    """Monodromy matrices in a fixed frame at ``base``.

    Attributes
    ----------
    matrices : dict
        Label -> 2x2 matrix (normalized if ``normalized``), including ``"inf"``.
    raw : dict
        Unnormalized matrices (rounded from double-double).
    raw_lo : dict
        Double-double low parts of ``raw``.
    factors : dict
        Normalization scalars ``c_p``.
    balanced : dict
        ``S^-1 M_p S`` for the normalized matrices, with ``conjugator = S``.
    order : tuple
        Finite labels in relation order (see module docstring).
    relation_residual : float
        ``||M_inf M_p3 M_p2 M_p1 - I||_F`` in double-double, evaluated for
        the balanced matrices when they are available.  The traces of
        products grow like ``exp(c sqrt|lam|)``, and the balanced frame is
        the one in which this residual is not dominated by the conditioning
        of an arbitrary base frame.
    raw_relation_residual : float
        The same residual for the unnormalized matrices in the base frame.
    matrices_lo, balanced_lo : dict
        Double-double low parts.
    """

    base: complex
    lam: complex
    labels: Tuple[str, ...]
    matrices: Dict[str, np.ndarray]
    raw: Dict[str, np.ndarray]
    normalized: bool
    relation_residual: float
    order: Tuple[str, ...]
    factors: Dict[str, complex] = field(default_factory=dict)
    raw_lo: Dict[str, np.ndarray] = field(default_factory=dict)
    balanced: Dict[str, np.ndarray] = field(default_factory=dict)
    matrices_lo: Dict[str, np.ndarray] = field(default_factory=dict)
    balanced_lo: Dict[str, np.ndarray] = field(default_factory=dict)
    raw_relation_residual: float = 0.0
    conjugator: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.matrices[label]

    def _get(self, label):
        return self.matrices[label] if label in self.matrices else None

    @property
    def M0(self):
        return self._get("0")

    @property
    def Mx(self):
        return self._get("x")

    @property
    def M1(self):
        return self._get("1")

    @property
    def Minf(self):
        return self.matrices["inf"]

    def generators(self, which: str = "matrices"):
        """Finite matrices in relation order (``which`` selects the dict)."""
        d = getattr(self, which)
        return [d[lb] for lb in self.order]

    def local_eigenvalues(self, label: str) -> np.ndarray:
        """Eigenvalues of the unnormalized matrix, sorted by argument."""
        h, l = self.raw[label], self.raw_lo.get(label, np.zeros((2, 2), dtype=complex))
        t = _dd_trace(h, l)
        dh, dl = _dd.mat_det(np.ascontiguousarray(h), np.ascontiguousarray(l))
        disc = np.sqrt(complex(t * t - 4 * (dh + dl)))
        ev = np.array([(t + disc) / 2, (t - disc) / 2])
        # the smaller root suffers cancellation; recover it from the product
        big = int(np.argmax(np.abs(ev)))
        ev[1 - big] = complex(dh + dl) / ev[big]
        return ev[np.argsort(np.angle(ev))]

    def to_json(self) -> dict:
        def enc(M):
            return [[[float(z.real), float(z.imag)] for z in row] for row in M]
        return {
            "base": [self.base.real, self.base.imag],
            "lambda": [self.lam.real, self.lam.imag],
            "order": list(self.order),
            "normalized": self.normalized,
            "relation_residual": self.relation_residual,
            "matrices": {k: enc(v) for k, v in self.matrices.items()},
            "conventions": {"order": ORDER_CONVENTION, "loops": LOOP_CONVENTION,
                            "normalization": NORMALIZATION_CONVENTION},
        }


def from_matrices(mats: Dict[str, np.ndarray], order: Sequence[str],
                  base: complex = 0j, lam: complex = 0j, balance_: bool = True) -> MonodromyRep:
    """Representation from explicit finite matrices.

    ``M_inf`` is defined by the relation ``M_inf = (M_pn ... M_p1)^-1``.
    Useful for the closed-form examples and as a test fixture.
    """
    order = tuple(order)
    mats = {k: np.asarray(v, dtype=complex) for k, v in mats.items()}
    prod = np.eye(2, dtype=complex)
    for lb in order:
        prod = mats[lb] @ prod
    mats = dict(mats)
    mats["inf"] = np.linalg.inv(prod)
    zero = {k: np.zeros((2, 2), dtype=complex) for k in mats}
    rep = MonodromyRep(complex(base), complex(lam), order, mats, dict(mats), True,
                       0.0, order, {k: 1 + 0j for k in mats}, dict(zero),
                       matrices_lo=dict(zero))
    if balance_:
        _attach_balance(rep, rep.matrices_lo)
    return rep


def _attach_balance(rep: MonodromyRep, lo: Optional[Dict[str, np.ndarray]] = None):
    S = balance(rep.generators())
    Sh = np.ascontiguousarray(S)
    Sl = np.zeros((2, 2), dtype=complex)
    Sih, Sil = _dd.mat_inv(Sh, Sl)
    out, out_lo = {}, {}
    for lb, M in rep.matrices.items():
        Ml = np.zeros((2, 2), dtype=complex) if lo is None else lo[lb]
        Th, Tl = _dd.mat_mul(np.ascontiguousarray(M), Ml, Sh, Sl)
        out[lb], out_lo[lb] = _dd.mat_mul(Sih, Sil, Th, Tl)
    rep.balanced = out
    rep.balanced_lo = out_lo
    rep.conjugator = S


def _dd_trace(h, l) -> complex:
    a, b = _dd.cadd(h[0, 0], l[0, 0], h[1, 1], l[1, 1])
    return complex(a + b)


def _dd_product(pairs):
    """Product ``A_1 A_2 ... A_n`` of double-double matrices."""
    h, l = pairs[0]
    h, l = np.ascontiguousarray(h), np.ascontiguousarray(l)
    for h2, l2 in pairs[1:]:
        h, l = _dd.mat_mul(h, l, np.ascontiguousarray(h2), np.ascontiguousarray(l2))
    return h, l


def _relation_residual(mats, lo, order) -> float:
    seq = [(mats["inf"], lo["inf"])] + [(mats[lb], lo[lb]) for lb in reversed(order)]
    h, l = _dd_product(seq)
    d00 = _dd.cadd(h[0, 0], l[0, 0], -1.0 + 0j, 0j)
    d11 = _dd.cadd(h[1, 1], l[1, 1], -1.0 + 0j, 0j)
    e = np.array([d00[0] + d00[1], h[0, 1] + l[0, 1], h[1, 0] + l[1, 0], d11[0] + d11[1]])
    return float(np.linalg.norm(e))


def _path_transfers(op, lams, path, cfg):
    h, l = transfer_batch(op, lams, path, cfg.rtol, cfg.step_fraction)
    return h, l


def monodromy_batch(op: FuchsianOperator, lams, cfg: MonodromyConfig = MonodromyConfig(),
                    geometry: Optional[LoopGeometry] = None):
    """Monodromy representations for an array of eigenvalues.

    The continuation of each path is done for all eigenvalues in one
    compiled loop, which is the fast path used by the spectrum scanner.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    geo = LoopGeometry.build(op, cfg) if geometry is None else geometry
    segs = {}
    for lb in geo.labels:
        segs[lb] = (_path_transfers(op, lams, geo.spoke(lb), cfg),
                    _path_transfers(op, lams, geo.circle(lb), cfg))
    if cfg.independent_infinity:
        segs["inf"] = (_path_transfers(op, lams, geo.infinity_spoke(), cfg),
                       _path_transfers(op, lams, geo.infinity_circle(), cfg))
    order = geo.order
    factors = {lb: op.normalization_factor(lb) for lb in geo.labels}
    cinf = 1.0 / np.prod([factors[lb] for lb in geo.labels])
    factors["inf"] = complex(cinf)
    reps = []
    for k, lam in enumerate(lams):
        raw, raw_lo = {}, {}
        for lb, ((sh, sl), (ch, cl)) in segs.items():
            Sh, Sl = np.ascontiguousarray(sh[k]), np.ascontiguousarray(sl[k])
            Ch, Cl = np.ascontiguousarray(ch[k]), np.ascontiguousarray(cl[k])
            Th, Tl = _dd.mat_mul(Ch, Cl, Sh, Sl)
            Ih, Il = _dd.mat_inv(Sh, Sl)
            Mh, Ml = _dd.mat_mul(Ih, Il, Th, Tl)
            raw[lb], raw_lo[lb] = Mh, Ml
        if cfg.independent_infinity:
            raw_resid = _relation_residual(raw, raw_lo, order)
        else:
            h, l = _dd_product([(raw[lb], raw_lo[lb]) for lb in reversed(order)])
            raw["inf"], raw_lo["inf"] = _dd.mat_inv(h, l)
            raw_resid = float("nan")
        if cfg.normalize:
            mats, mats_lo = {}, {}
            for lb in raw:
                h, l = _dd.mat_scale(raw[lb], raw_lo[lb], factors[lb], 0j)
                mats[lb], mats_lo[lb] = h, l
        else:
            mats, mats_lo = dict(raw), dict(raw_lo)
        rep = MonodromyRep(geo.base, complex(lam), geo.labels,
                           {k2: v.copy() for k2, v in mats.items()}, raw, cfg.normalize,
                           raw_resid, order, dict(factors), raw_lo, matrices_lo=mats_lo,
                           raw_relation_residual=raw_resid,
                           metadata={"order": ORDER_CONVENTION, "loops": LOOP_CONVENTION,
                                     "normalization": NORMALIZATION_CONVENTION,
                                     "loop_radius": geo.radius,
                                     "infinity_radius": geo.inf_radius})
        if cfg.balance:
            _attach_balance(rep, mats_lo)
            if cfg.independent_infinity:
                rep.relation_residual = _relation_residual(rep.balanced, rep.balanced_lo, order)
        reps.append(rep)
    return reps


def compute_monodromy(op: FuchsianOperator, lam: complex,
                      cfg: MonodromyConfig = MonodromyConfig(),
                      geometry: Optional[LoopGeometry] = None) -> MonodromyRep:
    """Monodromy of ``L psi = lam psi`` at a single eigenvalue.

    Raises
    ------
    ResidualTooLarge
        If the independently computed ``M_inf`` violates the group relation
        by more than ``cfg.residual_max``.
    """
    rep = monodromy_batch(op, [lam], cfg, geometry)[0]
    if cfg.independent_infinity and not rep.relation_residual <= cfg.residual_max:
        raise ResidualTooLarge(f"relation residual {rep.relation_residual:.3e}")
    return rep


# ---------------------------------------------------------------------------
# trace coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceCoordinates:
    """The seven traces of a 4-punctured-sphere representation."""

    t0: complex
    tx: complex
    t1: complex
    tinf: complex
    t0x: complex
    tx1: complex
    t01: complex

    def as_tuple(self):
        return (self.t0, self.tx, self.t1, self.tinf, self.t0x, self.tx1, self.t01)

    def cubic_residual(self) -> float:
        """Residual of the character-variety cubic, scaled by its terms.

        For ``A B C D = I`` with ``X = tr AB``, ``Y = tr BC``, ``Z = tr AC``:
        ``XYZ + X^2 + Y^2 + Z^2 - (tA tB + tC tD) X - (tB tC + tA tD) Y
        - (tA tC + tB tD) Z + tA^2 + tB^2 + tC^2 + tD^2 + tA tB tC tD - 4 = 0``.
        Here ``(A, B, C, D) = (M_1, M_x, M_0, M_inf)``.
        """
        return cubic_relation(self.t1, self.tx, self.t0, self.tinf,
                              self.tx1, self.t0x, self.t01)


def cubic_relation(tA, tB, tC, tD, X, Y, Z) -> float:
    """Scaled residual of the cubic for ``ABCD = I`` (see
    :meth:`TraceCoordinates.cubic_residual`)."""
    terms = [X * Y * Z, X * X, Y * Y, Z * Z,
             -(tA * tB + tC * tD) * X, -(tB * tC + tA * tD) * Y, -(tA * tC + tB * tD) * Z,
             tA * tA, tB * tB, tC * tC, tD * tD, tA * tB * tC * tD, -4.0]
    return float(abs(sum(terms)) / max(1.0, sum(abs(t) for t in terms)))


def trace_coordinates(rep: MonodromyRep) -> TraceCoordinates:
    """Traces of the normalized matrices, computed in double-double.

    The balanced conjugate is used when present.  Products of matrices with
    large entries have traces of moderate size, so the cancellation has to
    happen before rounding.
    """
    if rep.balanced:
        m, lo = rep.balanced, rep.balanced_lo
    else:
        m = rep.matrices
        lo = rep.matrices_lo or {k: np.zeros((2, 2), dtype=complex) for k in m}

    def tr(*labels):
        return _dd_trace(*_dd_product([(m[k], lo[k]) for k in labels]))

    return TraceCoordinates(tr("0"), tr("x"), tr("1"), tr("inf"),
                            tr("0", "x"), tr("x", "1"), tr("0", "1"))


def cauchy_riemann_defect(op: FuchsianOperator, lam: complex, h: Optional[float] = None,
                          cfg: MonodromyConfig = MonodromyConfig(balance=False)) -> float:
    """Relative violation of ``dM/d(Re lam) = -i dM/d(Im lam)``.

    Central differences with step ``1e-5 max(1, |lam|)`` by default.  The
    raw matrices are used since they are holomorphic in ``lam`` (the
    frame at the base point does not depend on ``lam``).
    """
    if h is None:
        h = 1e-5 * max(1.0, abs(lam))
    lams = lam + np.array([h, -h, 1j * h, -1j * h])
    reps = monodromy_batch(op, lams, cfg)
    worst = 0.0
    for lb in reps[0].raw:
        dx = (reps[0].raw[lb] - reps[1].raw[lb]) / (2 * h)
        dy = (reps[2].raw[lb] - reps[3].raw[lb]) / (2 * h)
        scale = max(np.abs(dx).max(), 1e-300)
        worst = max(worst, float(np.abs(dx + 1j * dy).max() / scale))
    return worst
