"""Single-valued joint eigenfunctions and their L2 data.

Let ``phi = (phi_1, phi_2)`` be the solutions of ``L phi = lam phi`` and
``chi = (chi_1, chi_2)`` those of ``L* chi = lam chi``, where ``L*`` is the
formal adjoint.  Both frames equal the identity at the base point used by
:mod:`darbouxspec.monodromy`.  The candidate eigenfunction is

    psi(z, zbar) = sum_ij G_ij phi_i(z) conj(chi_j(z)).

It solves ``L psi = lam psi`` in ``z`` and ``L^dagger psi = conj(lam) psi``
in ``zbar``.  Continuing around the loop at ``p`` replaces ``phi`` by
``phi M_p`` and ``chi`` by ``chi N_p``, so ``psi`` is single valued exactly
when ``M_p G N_p^dagger = G`` for the three finite loops.  For a formally
self-adjoint operator ``N_p = M_p`` and ``G`` is the inverse of the form ``H``
with ``M^dagger H M = H`` returned by :func:`darbouxspec.reality.invariant_form`.

Evaluation uses an atlas:

* Frobenius series near each finite singular point and near infinity (in
  ``w = 1/z`` with the twist ``psi = w^{-s} phi``);
* Taylor patches on a square grid elsewhere, whose frames are obtained by
  continuing from the base point along a breadth-first spanning tree.

Because ``psi`` is single valued the patches must agree on their overlaps.
This is the single-valuedness test, and it involves a loop around every
puncture.

The L2 inner product is ``int psi_1 conj(psi_2) d^2 z`` in the affine chart.
With ``s = -1 + i sigma`` this is the chart-independent pairing:
``|psi_z|^2 d^2 z = |psi_w|^2 d^2 w``.  The quadrature is a smooth partition of
unity:

* a radial bump around each finite point, integrated in polar
  coordinates with radial panels graded geometrically (ratio 1/2) down to
  ``r_min``;
* a bump around infinity, treated the same way in ``w``;
* a tensor Gauss-Legendre rule for the smooth remainder.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from . import _dd
from .darboux import FuchsianOperator
from .errors import NotSingleValued, QuadratureNotConverged
from .monodromy import MonodromyConfig, LoopGeometry, compute_monodromy
from .odecore import (PathSpec, _branch_log, continue_frame,
                      frobenius_solutions, infinity_frame, match_at_singularity)

#: agreement required between two continuation routes (relative)
PATH_TOL = 1e-7
#: agreement required between two quadrature levels (relative, on ||psi||^2)
QUAD_TOL = 1e-6

_ATLAS_MONODROMY = MonodromyConfig(balance=False, independent_infinity=False)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtlasConfig:
    """Geometry of the evaluation atlas.

    Lengths are relative to ``gap``, the smallest distance between two finite
    singular points.  A Taylor cell of side ``h = cell_factor * gap`` is only
    used if its centre is at least ``1.77 h`` away from every singular point.
    That keeps the evaluation radius below 0.4 of the convergence radius.
    """

    cell_factor: float = 0.2
    cell_max: float = 0.25
    frob_ratio: float = 0.6
    inf_ratio: float = 1.6
    taylor_tol: float = 1e-17
    taylor_kmax: int = 200


@dataclass(frozen=True)
class QuadratureConfig:
    """Partition of unity and node counts for the L2 quadrature.

    ``levels`` lists ``(n_gauss, n_r, n_theta)`` per refinement level: Gauss
    points per direction in each remainder cell, Gauss points per radial
    panel, and trapezoid points in angle.
    """

    bump_inner: float = 0.15
    bump_outer: float = 0.45
    inf_outer: float = 1.5
    cells_per_width: float = 3.0
    grading: float = 0.5
    r_min: float = 1e-8
    transition_panels: int = 4
    levels: Tuple[Tuple[int, int, int], ...] = ((6, 8, 48), (9, 12, 72))
    quad_tol: float = QUAD_TOL


DEFAULT_ATLAS = AtlasConfig()
DEFAULT_QUADRATURE = QuadratureConfig()


def _gaps(points: Sequence[complex]) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    d = np.abs(pts[:, None] - pts[None, :])
    d[np.diag_indices(len(pts))] = np.inf
    return d.min(axis=1)


def _min_dist(z: np.ndarray, points: Sequence[complex]) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    return np.min(np.abs(np.asarray(z)[..., None] - pts), axis=-1)


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0) & (t < 1)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


# ---------------------------------------------------------------------------
# atlas
# ---------------------------------------------------------------------------

def _horner(coef: np.ndarray, dz: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_k coef[n, k, j] dz[n]^k`` for every node ``n``."""
    out = np.zeros((coef.shape[0], coef.shape[2]), dtype=complex)
    for k in range(coef.shape[1] - 1, -1, -1):
        out = out * dz[:, None] + coef[:, k, :]
    return out


@dataclass
class _LocalPatch:
    """Frobenius pair at a singular point together with its connection."""

    pair: Tuple
    kinv: np.ndarray        # phi_global = phi_local @ kinv
    arg_ref: float
    twist: complex = 0j     # only used at infinity


class Atlas:
    """Solution frames of ``L`` and ``L*`` at ``lam`` on the whole plane.

    Parameters
    ----------
    op : FuchsianOperator
    lam : complex
    base : complex, optional
        Base point at which both frames are the identity.  Defaults to the
        base point of the monodromy loops.
    cfg : AtlasConfig
    """

    def __init__(self, op: FuchsianOperator, lam: complex,
                 base: Optional[complex] = None, cfg: AtlasConfig = DEFAULT_ATLAS):
        self.op = op
        self.adj = op.formal_adjoint()
        self.lam = complex(lam)
        self.cfg = cfg
        pts = np.asarray(op.points, dtype=complex)
        self.points = pts
        self.gaps = _gaps(pts)
        gmin = float(self.gaps.min())
        self.h = min(cfg.cell_max, cfg.cell_factor * gmin)
        self.mx = float(np.max(np.abs(pts)))
        self.r_inf = cfg.inf_ratio * self.mx
        if base is None:
            base = LoopGeometry.build(op, _ATLAS_MONODROMY).base
        self.base = complex(base)
        B = self.r_inf + 2 * self.h
        self.n = int(math.ceil(2 * B / self.h))
        self.origin = complex(-B, -B)
        idx = np.arange(self.n)
        cx = self.origin.real + (idx + 0.5) * self.h
        cy = self.origin.imag + (idx + 0.5) * self.h
        self.centers = cx[:, None] + 1j * cy[None, :]
        self.valid = _min_dist(self.centers, pts) >= 1.77 * self.h
        self._build_frames()
        self._build_taylor()
        self.local: Dict[str, Tuple[_LocalPatch, _LocalPatch]] = {}
        for lb, p, g in zip(op.labels, pts, self.gaps):
            self.local[lb] = self._finite_patch(p, g)
        self.local["inf"] = self._infinity_patch()

    # -- frames on the grid --------------------------------------------------
    def _continue(self, a: complex, b: complex, frames, clearance: float):
        path = PathSpec((complex(a), complex(b)), clearance)
        out = []
        for o, (Yh, Yl) in zip((self.op, self.adj), frames):
            h, l, _ = continue_frame(o, self.lam, path, Yh, Yl)
            out.append((h, l))
        return out

    def _build_frames(self):
        vi, vj = np.nonzero(self.valid)
        d = np.abs(self.centers[vi, vj] - self.base)
        k = int(np.argmin(d))
        start = (int(vi[k]), int(vj[k]))
        I = np.eye(2, dtype=complex)
        Z = np.zeros((2, 2), dtype=complex)
        clear = min(0.5 * self.h, 0.5 * float(_min_dist(np.array([self.base]), self.points)[0]))
        frames = {start: self._continue(self.base, self.centers[start], [(I, Z), (I, Z)],
                                        clear)}
        q = deque([start])
        while q:
            i, j = q.popleft()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < self.n and 0 <= b < self.n and self.valid[a, b] \
                        and (a, b) not in frames:
                    frames[(a, b)] = self._continue(self.centers[i, j], self.centers[a, b],
                                                    frames[(i, j)], 0.5 * self.h)
                    q.append((a, b))
        self.frames = frames

    def _build_taylor(self):
        cells = sorted(self.frames)
        self.cell_index = -np.ones((self.n, self.n), dtype=int)
        coefs = [[], []]
        for c, (i, j) in enumerate(cells):
            self.cell_index[i, j] = c
            for s, o in enumerate((self.op, self.adj)):
                T = _dd.local_taylor(np.ascontiguousarray(o.P, complex),
                                     np.ascontiguousarray(o.Q, complex),
                                     np.ascontiguousarray(o.R, complex),
                                     self.lam, complex(self.centers[i, j]),
                                     0.75 * self.h, self.cfg.taylor_tol,
                                     self.cfg.taylor_kmax)
                Y = self.frames[(i, j)][s][0] + self.frames[(i, j)][s][1]
                coefs[s].append(T.T @ Y)     # (K, 2): coefficients of phi_j
        kmax = max(c.shape[0] for s in coefs for c in s)
        self.taylor = []
        for s in range(2):
            arr = np.zeros((len(cells), kmax, 2), dtype=complex)
            for c, a in enumerate(coefs[s]):
                arr[c, :a.shape[0]] = a
            self.taylor.append(arr)
        self.cells = cells

    def _nearest_cell(self, z: complex) -> Tuple[int, int]:
        d = np.where(self.valid, np.abs(self.centers - z), np.inf)
        i, j = np.unravel_index(int(np.argmin(d)), d.shape)
        return int(i), int(j)

    def _finite_patch(self, p: complex, gap: float):
        cell = self._nearest_cell(p)
        c = self.centers[cell]
        u = (c - p) / abs(c - p)
        r = 0.5 * gap
        e = p + r * u
        ang = float(np.angle(u))
        out = []
        Ye = self._continue(c, e, self.frames[cell], 0.25 * self.h)
        for s, o in enumerate((self.op, self.adj)):
            pair = frobenius_solutions(o, p, self.lam, r=self.cfg.frob_ratio * gap)
            F = match_at_singularity(o, p, self.lam, r=r, angle=ang, pair=pair)
            Kh, Kl = _dd.mat_mul(*_dd.mat_inv(*Ye[s]), F.m, F.m_lo)
            out.append(_LocalPatch(pair, np.linalg.inv(Kh + Kl), ang))
        return tuple(out)

    def _infinity_patch(self):
        d = np.where(self.valid, np.abs(self.centers), -np.inf)
        i, j = np.unravel_index(int(np.argmax(d)), d.shape)
        cell = (int(i), int(j))
        c = self.centers[cell]
        e = c * (self.r_inf / abs(c))
        we = 1.0 / e
        ang = float(np.angle(we))
        out = []
        Ye = self._continue(c, e, self.frames[cell], 0.25 * self.h)
        for s, o in enumerate((self.op, self.adj)):
            F, pair, _ = infinity_frame(o, self.lam, abs(we), ang)
            Kh, Kl = _dd.mat_mul(*_dd.mat_inv(*Ye[s]), F.m, F.m_lo)
            out.append(_LocalPatch(pair, np.linalg.inv(Kh + Kl), ang, o.s))
        return tuple(out)

    # -- evaluation ------------------------------------------------------------
    def zones(self, z: np.ndarray) -> np.ndarray:
        """Zone index per point: ``k`` for the k-th finite point, ``-1`` for
        infinity, ``-2`` for the Taylor grid."""
        z = np.asarray(z, dtype=complex)
        zone = np.full(z.shape, -2, dtype=int)
        d = np.abs(z[..., None] - self.points)
        k = np.argmin(d, axis=-1)
        near = np.take_along_axis(d, k[..., None], -1)[..., 0] < \
            self.cfg.frob_ratio * self.gaps[k]
        zone[near] = k[near]
        zone[(~near) & (np.abs(z) > self.r_inf)] = -1
        return zone

    def _local_rows(self, patch: _LocalPatch, w: np.ndarray, at_inf: bool) -> np.ndarray:
        cols = [s.evaluate(w, patch.arg_ref)[0] for s in patch.pair]
        loc = np.stack(cols, axis=-1)
        if at_inf:
            loc = loc * np.exp(-patch.twist * _branch_log(w, patch.arg_ref))[:, None]
        return loc @ patch.kinv

    def rows(self, z, force: Optional[str] = None,
             anchor: Optional[complex] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Global rows ``phi(z)`` and ``chi(z)``, each of shape ``(n, 2)``.

        ``force`` may be ``"taylor"`` or a patch label to bypass the zone
        selection (used by the overlap tests).  With ``anchor`` every point
        is evaluated in the patch that contains ``anchor``, so that a finite
        difference stencil never mixes two patches.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        out = [np.zeros((z.size, 2), dtype=complex) for _ in range(2)]
        cells = None
        if anchor is not None:
            zone = np.full(z.size, int(self.zones(np.array([anchor]))[0]))
            fi = int(np.floor((anchor.real - self.origin.real) / self.h))
            fj = int(np.floor((anchor.imag - self.origin.imag) / self.h))
            cells = (np.full(z.size, fi), np.full(z.size, fj))
        elif force is None:
            zone = self.zones(z)
        elif force == "taylor":
            zone = np.full(z.size, -2)
        else:
            k = -1 if force == "inf" else list(self.op.labels).index(force)
            zone = np.full(z.size, k)
        labels = list(self.op.labels)
        for k in np.unique(zone):
            m = zone == k
            zz = z[m]
            if k == -2:
                if cells is None:
                    fi = np.floor((zz.real - self.origin.real) / self.h).astype(int)
                    fj = np.floor((zz.imag - self.origin.imag) / self.h).astype(int)
                else:
                    fi, fj = cells[0][m], cells[1][m]
                if np.any((fi < 0) | (fj < 0) | (fi >= self.n) | (fj >= self.n)):
                    raise ValueError("point outside the Taylor grid")
                cell = self.cell_index[fi, fj]
                if np.any(cell < 0):
                    raise ValueError("point in an invalid Taylor cell")
                dz = zz - self.centers[fi, fj]
                for s in range(2):
                    out[s][m] = _horner(self.taylor[s][cell], dz)
            else:
                lb = "inf" if k == -1 else labels[k]
                w = 1.0 / zz if k == -1 else zz - self.points[k]
                for s in range(2):
                    out[s][m] = self._local_rows(self.local[lb][s], w, k == -1)
        return out[0], out[1]


# ---------------------------------------------------------------------------
# the coefficient matrix
# ---------------------------------------------------------------------------

def gluing_matrix(M: Sequence[np.ndarray], N: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
    """Solve ``M_p G N_p^dagger = G`` for all ``p`` in the least-squares sense.

    Returns ``G`` with Frobenius norm one and the relative residual
    ``max_p ||M_p G N_p^dagger - G|| / (||M_p|| ||N_p||)``.
    """
    blocks = []
    I4 = np.eye(4)
    for m, n in zip(M, N):
        A = np.kron(np.conj(n), m) - I4
        blocks.append(A / (1.0 + np.linalg.norm(m) * np.linalg.norm(n)))
    A = np.vstack(blocks)
    _, _, vh = np.linalg.svd(A)
    g = np.conj(vh[-1])
    G = g.reshape(2, 2, order="F")
    G = G / np.linalg.norm(G)
    res = max(np.linalg.norm(m @ G @ n.conj().T - G) / (np.linalg.norm(m) * np.linalg.norm(n))
              for m, n in zip(M, N))
    return G, float(res)


# ---------------------------------------------------------------------------
# eigen-sections
# ---------------------------------------------------------------------------

@dataclass
class EigenSection:
    """A single-valued eigenfunction ``psi = sum G_ij phi_i conj(chi_j)``.

    Attributes
    ----------
    lam : complex
    form : HermitianForm or None
        The detector's form, when one was supplied.
    atlas : Atlas
        Frame data: Frobenius patches and Taylor patches.
    G : ndarray
        Coefficient matrix in the base frame (already divided by ``norm``).
    norm : float
        L2 norm of the section before normalization (with ``||G|| = 1``).
    """

    lam: complex
    form: object
    atlas: Atlas
    G: np.ndarray
    norm: float = float("nan")
    gluing_residual: float = float("nan")
    overlap_defect: Dict[str, float] = field(default_factory=dict)
    loop_defect: Dict[str, float] = field(default_factory=dict)
    quadrature: Dict[str, float] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def op(self) -> FuchsianOperator:
        return self.atlas.op

    def __call__(self, z, force: Optional[str] = None,
                 anchor: Optional[complex] = None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        phi, chi = self.atlas.rows(z, force, anchor)
        val = np.einsum("ni,ij,nj->n", phi, self.G, np.conj(chi))
        return val.reshape(z.shape)

    def local_values(self, label: str, w) -> np.ndarray:
        """``psi`` in the local coordinate ``w`` at ``label``.

        At infinity ``w = 1/z`` and the chart change of the twisted bundle
        is undone: ``psi_w = psi_z w^s conj(w^{s*})`` with ``s* = -2 - s``,
        which is ``|w|^{2 s}`` on the main regime.
        """
        w = np.asarray(w, dtype=complex)
        if label == "inf":
            s = self.op.s
            sa = self.atlas.adj.s
            lw = np.log(w)
            fac = np.exp(s * lw + np.conj(sa * lw))
            return self(1.0 / w) * fac
        return self(self.op.point(label) + w)

    def is_real(self) -> float:
        """Largest ``|Im psi| / max |psi|`` on a sample around the base point."""
        z = self.atlas.base + 0.1 * np.exp(2j * np.pi * np.arange(16) / 16)
        v = self(z)
        return float(np.max(np.abs(v.imag)) / max(np.max(np.abs(v)), 1e-300))


def _phase_fix(G: np.ndarray, sample: Callable[[], np.ndarray]) -> np.ndarray:
    g11 = G[0, 0]
    if abs(g11) > 1e-8 * np.linalg.norm(G):
        return G * (np.conj(g11) / abs(g11))
    for v in sample():
        if abs(v) > 1e-12:
            return G * (np.conj(v) / abs(v))
    return G


def _overlap_points(atlas: Atlas) -> Dict[str, np.ndarray]:
    th = 2 * np.pi * (np.arange(32) + 0.5) / 32
    out = {}
    for lb, p, g in zip(atlas.op.labels, atlas.points, atlas.gaps):
        out[lb] = p + 0.55 * g * np.exp(1j * th)
    out["inf"] = (atlas.r_inf + 0.5 * atlas.h) * np.exp(1j * th)
    return out


def single_valuedness(sec: EigenSection, rep=None, rep_adj=None) -> Tuple[Dict[str, float], Dict[str, float]]:
    """Route-dependence of ``psi``.

    Returns two dictionaries keyed by puncture label.  ``overlap`` compares
    the local series patch with the Taylor patches on a circle around the
    puncture; the Taylor frames reach that circle along routes that wind
    differently around the puncture.  ``loop`` compares ``psi`` continued
    directly with ``psi`` continued after one extra loop, using the
    monodromy matrices at sample points near the base point.
    """
    overlap = {}
    for lb, z in _overlap_points(sec.atlas).items():
        a = sec(z, force=lb)
        b = sec(z, force="taylor")
        overlap[lb] = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
    loop = {}
    if rep is not None and rep_adj is not None:
        z = sec.atlas.base + 0.05 * np.exp(2j * np.pi * np.arange(8) / 8)
        phi, chi = sec.atlas.rows(z)
        ref = np.einsum("ni,ij,nj->n", phi, sec.G, np.conj(chi))
        for lb in rep.order:
            M, N = rep.raw[lb], rep_adj.raw[lb]
            G2 = M @ sec.G @ N.conj().T
            alt = np.einsum("ni,ij,nj->n", phi, G2, np.conj(chi))
            loop[lb] = float(np.max(np.abs(alt - ref)) / max(np.max(np.abs(ref)), 1e-300))
    return overlap, loop


def assemble(op: FuchsianOperator, lam: complex, form=None, *,
             atlas_cfg: AtlasConfig = DEFAULT_ATLAS,
             quad_cfg: QuadratureConfig = DEFAULT_QUADRATURE,
             path_tol: float = PATH_TOL, normalize: bool = True) -> EigenSection:
    """Assemble the normalized single-valued eigenfunction at ``lam``.

    Parameters
    ----------
    op : FuchsianOperator
    lam : complex
        A point of the spectrum, typically a refined scanner output.
    form : HermitianForm, optional
        The detector's invariant form.  For a formally self-adjoint operator
        the coefficient matrix is compared with its inverse and the
        discrepancy is stored in ``metadata["form_defect"]``.
    normalize : bool
        Divide by the L2 norm (raises ``QuadratureNotConverged`` if the two
        quadrature levels disagree).

    Raises
    ------
    NotSingleValued
        If any overlap or loop defect exceeds ``path_tol``.
    """
    lam = complex(lam)
    geo = LoopGeometry.build(op, _ATLAS_MONODROMY)
    adj = op.formal_adjoint()
    rep = compute_monodromy(op, lam, _ATLAS_MONODROMY, geo)
    rep_adj = compute_monodromy(adj, lam, _ATLAS_MONODROMY, geo)
    M = [rep.raw[lb] for lb in rep.order]
    N = [rep_adj.raw[lb] for lb in rep.order]
    G, gres = gluing_matrix(M, N)
    atlas = Atlas(op, lam, geo.base, atlas_cfg)
    sec = EigenSection(lam, form, atlas, G, gluing_residual=gres)
    sec.G = _phase_fix(G, lambda: sec(atlas.centers[atlas.valid][:64]))
    meta = {"base": [atlas.base.real, atlas.base.imag], "cell": atlas.h,
            "phase": "psi(base) real positive"}
    if form is not None and _self_adjoint(op, adj):
        H = np.asarray(getattr(form, "h", form), dtype=complex)
        Gi = np.linalg.inv(H)
        Gi = Gi / np.linalg.norm(Gi)
        ph = np.vdot(Gi, sec.G)
        meta["form_defect"] = float(np.linalg.norm(sec.G - Gi * ph / abs(ph)))
    sec.metadata = meta
    sec.overlap_defect, sec.loop_defect = single_valuedness(sec, rep, rep_adj)
    worst = max(list(sec.overlap_defect.values()) + list(sec.loop_defect.values()))
    if not worst <= path_tol:
        raise NotSingleValued(f"psi depends on the continuation route: defect {worst:.2e} "
                              f"at lam = {lam}")
    if normalize:
        n2, info = _norm_squared(sec, quad_cfg)
        sec.quadrature = info
        sec.norm = math.sqrt(n2)
        sec.G = sec.G / sec.norm
        sec._values = {}
    return sec


def _self_adjoint(op: FuchsianOperator, adj: FuchsianOperator, tol: float = 1e-12) -> bool:
    def same(a, b):
        n = max(len(a), len(b))
        a = np.pad(a, (0, n - len(a)))
        b = np.pad(b, (0, n - len(b)))
        return np.max(np.abs(a - b)) <= tol * max(1.0, np.max(np.abs(a)))
    return same(op.P, adj.P) and same(op.Q, adj.Q) and same(op.R, adj.R) \
        and abs(op.s - adj.s) <= tol


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights with ``int f d^2 z ~ sum(weights * f(nodes))``."""

    nodes: np.ndarray
    weights: np.ndarray
    parts: Tuple[Tuple[str, int, int], ...] = ()

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights * values))


def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def graded_radial_rule(r_outer: float, r_inner: float, n_r: int, grading: float = 0.5,
                       r_min: float = 1e-8, transition_panels: int = 4):
    """Radial nodes and weights on ``[0, r_outer]`` (without the ``r`` factor).

    ``[r_inner, r_outer]`` is split into equal panels and ``[0, r_inner]``
    into geometric panels of ratio ``grading`` down to ``r_min``, with one
    final panel ``[0, r_min]``.
    """
    x, w = _gauss(n_r)
    edges = list(np.linspace(r_outer, r_inner, transition_panels + 1))
    r = r_inner
    while r > r_min:
        r *= grading
        edges.append(max(r, 0.0))
    edges.append(0.0)
    edges = np.array(edges[::-1])
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    nodes = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
    weights = ((b - a)[:, None] * w[None, :]).ravel()
    return nodes, weights


def polar_patch_rule(radius: float, n_r: int = 12, n_theta: int = 72,
                     grading: float = 0.5, r_min: float = 1e-8,
                     inner: Optional[float] = None, transition_panels: int = 4):
    """Polar rule on the disk ``|w| < radius`` graded toward ``w = 0``.

    Returns ``(r, theta, weight)`` arrays including the Jacobian ``r``.
    """
    inner = 0.5 * radius if inner is None else inner
    rn, rw = graded_radial_rule(radius, inner, n_r, grading, r_min, transition_panels)
    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    R, T = np.meshgrid(rn, th, indexing="ij")
    W = (rw * rn)[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None, :]
    return R.ravel(), T.ravel(), W.ravel()


def _partition(points: np.ndarray, gaps: np.ndarray, r1: float, r2: float,
               cfg: QuadratureConfig, z: np.ndarray):
    """Bump values ``chi_p`` (one row per finite point) and ``chi_inf``."""
    chis = []
    for p, g in zip(points, gaps):
        a, b = cfg.bump_inner * g, cfg.bump_outer * g
        chis.append(1.0 - smooth_step((np.abs(z - p) - a) / (b - a)))
    cinf = smooth_step((np.abs(z) - r1) / (r2 - r1))
    return np.array(chis), cinf


@lru_cache(maxsize=16)
def _rule_cached(points: Tuple[complex, ...], level: int, cfg: QuadratureConfig,
                 r_inf_base: float) -> QuadratureRule:
    pts = np.asarray(points, dtype=complex)
    gaps = _gaps(pts)
    n_g, n_r, n_t = cfg.levels[level]
    r1 = max(r_inf_base, float(np.max(np.abs(pts) + cfg.bump_outer * gaps)))
    r2 = cfg.inf_outer * r1
    nodes, weights, parts = [], [], []
    # polar patches around finite points
    for lb, (p, g) in enumerate(zip(pts, gaps)):
        a, b = cfg.bump_inner * g, cfg.bump_outer * g
        r, t, w = polar_patch_rule(b, n_r, n_t, cfg.grading, cfg.r_min, a,
                                   cfg.transition_panels)
        z = p + r * np.exp(1j * t)
        w = w * (1.0 - smooth_step((r - a) / (b - a)))
        parts.append(("p%d" % lb, sum(len(v) for v in nodes), len(z)))
        nodes.append(z)
        weights.append(w)
    # infinity, in w = 1/z: int chi f d^2z = int chi f(1/w) |w|^-4 d^2w
    r, t, w = polar_patch_rule(1.0 / r1, n_r, n_t, cfg.grading, cfg.r_min, 1.0 / r2,
                               cfg.transition_panels)
    z = 1.0 / (r * np.exp(1j * t))
    w = w * smooth_step((1.0 / r - r1) / (r2 - r1)) / r ** 4
    parts.append(("inf", sum(len(v) for v in nodes), len(z)))
    nodes.append(z)
    weights.append(w)
    # smooth remainder on a square grid of Gauss cells
    width = (cfg.bump_outer - cfg.bump_inner) * float(gaps.min())
    hq = width / cfg.cells_per_width
    m = int(math.ceil(2 * r2 / hq))
    hq = 2 * r2 / m
    x, wx = _gauss(n_g)
    ax = -r2 + (np.arange(m)[:, None] + x[None, :]) * hq
    ax = ax.ravel()
    aw = np.tile(wx * hq, m)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    WX = np.outer(aw, aw)
    z = (X + 1j * Y).ravel()
    wz = WX.ravel()
    chis, cinf = _partition(pts, gaps, r1, r2, cfg, z)
    rest = 1.0 - chis.sum(axis=0) - cinf
    keep = rest > 1e-300
    parts.append(("rest", sum(len(v) for v in nodes), int(keep.sum())))
    nodes.append(z[keep])
    weights.append(wz[keep] * rest[keep])
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), tuple(parts))


def quadrature_rule(op: FuchsianOperator, level: int = 1,
                    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                    atlas_cfg: AtlasConfig = DEFAULT_ATLAS) -> QuadratureRule:
    """Quadrature rule for ``int f d^2 z`` adapted to the singular points of ``op``."""
    pts = tuple(complex(p) for p in op.points)
    r_inf = atlas_cfg.inf_ratio * float(np.max(np.abs(pts)))
    return _rule_cached(pts, int(level), cfg, r_inf)


def _values(sec: EigenSection, rule: QuadratureRule, key) -> np.ndarray:
    cache = sec.__dict__.setdefault("_values", {})
    if key not in cache:
        cache[key] = sec(rule.nodes)
    return cache[key]


def _norm_squared(sec: EigenSection, cfg: QuadratureConfig) -> Tuple[float, dict]:
    vals = []
    for lev in range(len(cfg.levels)):
        rule = quadrature_rule(sec.op, lev, cfg)
        v = _values(sec, rule, (lev, cfg))
        vals.append(float(np.real(rule.integrate(np.abs(v) ** 2))))
    rel = abs(vals[-1] - vals[-2]) / max(abs(vals[-1]), 1e-300)
    info = {"levels": vals, "relative_change": rel, "nodes":
            int(quadrature_rule(sec.op, len(cfg.levels) - 1, cfg).nodes.size)}
    if not rel <= cfg.quad_tol:
        raise QuadratureNotConverged(f"quadrature levels disagree by {rel:.2e}")
    return vals[-1], info


def l2_norm(psi: EigenSection, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """L2 norm of a section (raises ``QuadratureNotConverged``)."""
    n2, _ = _norm_squared(psi, cfg)
    return math.sqrt(n2)


def inner_product(a: EigenSection, b: EigenSection,
                  cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> complex:
    """``int a conj(b) d^2 z`` on the finest quadrature level."""
    if tuple(a.op.points) != tuple(b.op.points):
        raise ValueError("sections live on different operators")
    lev = len(cfg.levels) - 1
    rule = quadrature_rule(a.op, lev, cfg)
    return rule.integrate(_values(a, rule, (lev, cfg)) * np.conj(_values(b, rule, (lev, cfg))))


def gram_matrix(sections: Sequence[EigenSection],
                cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Matrix of inner products ``<psi_i, psi_j>``."""
    n = len(sections)
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            out[i, j] = inner_product(sections[i], sections[j], cfg)
            out[j, i] = np.conj(out[i, j])
    return out


# ---------------------------------------------------------------------------
# residuals by finite differences
# ---------------------------------------------------------------------------

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.arange(-2, 3)


def wirtinger_derivatives(f: Callable[..., np.ndarray], z: np.ndarray, h: float,
                          anchored: bool = False):
    """Fourth-order finite-difference Wirtinger derivatives of ``f``.

    Returns ``(f, d_z f, d_z^2 f, d_zbar f, d_zbar^2 f)`` at the points ``z``.
    With ``anchored`` the function is called once per point as
    ``f(stencil, anchor=z_k)``.
    """
    z = np.asarray(z, dtype=complex).ravel()
    ox, oy = np.meshgrid(_OFF, _OFF, indexing="ij")
    stencil = (ox + 1j * oy).ravel() * h
    if anchored:
        vals = np.stack([f(zk + stencil, anchor=zk) for zk in z])
    else:
        vals = f((z[:, None] + stencil[None, :]).ravel())
    vals = vals.reshape(z.size, 5, 5)
    f0 = vals[:, 2, 2]
    fx = np.einsum("k,nk->n", _D1, vals[:, :, 2]) / h
    fy = np.einsum("k,nk->n", _D1, vals[:, 2, :]) / h
    fxx = np.einsum("k,nk->n", _D2, vals[:, :, 2]) / h ** 2
    fyy = np.einsum("k,nk->n", _D2, vals[:, 2, :]) / h ** 2
    fxy = np.einsum("i,j,nij->n", _D1, _D1, vals) / h ** 2
    dz = 0.5 * (fx - 1j * fy)
    dzb = 0.5 * (fx + 1j * fy)
    dzz = 0.25 * (fxx - fyy - 2j * fxy)
    dzbzb = 0.25 * (fxx - fyy + 2j * fxy)
    return f0, dz, dzz, dzb, dzbzb


def residual_points(atlas: Atlas, n: int = 48, seed: int = 7) -> np.ndarray:
    """Deterministic test points in the Taylor zone of the atlas.

    Points keep a margin from the local-series zones so that every stencil
    lies in one Taylor patch.
    """
    rng = np.random.default_rng(seed)
    lim = atlas.r_inf - atlas.h
    out = []
    while len(out) < n:
        z = complex(rng.uniform(-lim, lim), rng.uniform(-lim, lim))
        if abs(z) < lim and np.all(np.abs(z - atlas.points) >
                                   atlas.cfg.frob_ratio * atlas.gaps + atlas.h):
            out.append(z)
    return np.array(out)


def _fd_step(atlas: Atlas) -> float:
    return 0.02 * atlas.h


def _fd_data(psi: EigenSection, points):
    z = residual_points(psi.atlas) if points is None else np.asarray(points, dtype=complex)
    return z, wirtinger_derivatives(psi, z, _fd_step(psi.atlas), anchored=True)


def eigen_residual(op: FuchsianOperator, psi: EigenSection, lam: complex,
                   points: Optional[np.ndarray] = None) -> float:
    """``max |L psi - lam psi| / (1 + |psi|)`` over test points.

    ``L`` acts on the holomorphic variable.  Derivatives are fourth-order
    finite differences of the assembled section, each stencil evaluated in
    a single Taylor patch, so the check does not reuse the frame
    derivatives from which ``psi`` was built.
    """
    z, (f, dz, dzz, _, _) = _fd_data(psi, points)
    P, Q, R = op.coefficients(z)
    res = P * dzz + Q * dz + (R - lam) * f
    return float(np.max(np.abs(res) / (1.0 + np.abs(f))))


def conjugate_residual(op: FuchsianOperator, psi: EigenSection, lam: complex,
                       points: Optional[np.ndarray] = None) -> float:
    """``max |L^dagger psi - conj(lam) psi| / (1 + |psi|)``.

    ``L^dagger`` is the formal adjoint with complex-conjugated coefficients,
    acting on the antiholomorphic variable.
    """
    adj = op.formal_adjoint()
    z, (f, _, _, dzb, dzbzb) = _fd_data(psi, points)
    P, Q, R = adj.coefficients(z)
    res = np.conj(P) * dzbzb + np.conj(Q) * dzb + (np.conj(R) - np.conj(lam)) * f
    return float(np.max(np.abs(res) / (1.0 + np.abs(f))))


# ---------------------------------------------------------------------------
# local expansions
# ---------------------------------------------------------------------------

@dataclass
class LocalFit:
    """Least-squares fit ``psi ~ c1 B(|w|) + c2`` on shrinking annuli.

    ``B(r) = (r^{2 alpha} - 1) / (2 alpha)``, or ``log r`` for ``alpha = 0``.
    ``passed`` means the relative residual either vanishes to ``exact_tol``
    or decays as the annulus shrinks (fitted log-log slope at least
    ``min_slope``) and ends below ``final_tol``.
    """

    label: str
    alpha: complex
    radii: np.ndarray
    coefficients: np.ndarray
    residuals: np.ndarray
    slope: float
    passed: bool

    def to_json(self) -> dict:
        return {"label": self.label, "alpha": [self.alpha.real, self.alpha.imag],
                "radii": self.radii.tolist(), "residuals": self.residuals.tolist(),
                "c1": [[c.real, c.imag] for c in self.coefficients[:, 0]],
                "c2": [[c.real, c.imag] for c in self.coefficients[:, 1]],
                "slope": self.slope, "passed": self.passed}


def expansion_basis(r: np.ndarray, alpha: complex) -> np.ndarray:
    """``(|w|^{2 alpha} - 1) / (2 alpha)`` with the ``log |w|`` limit at 0."""
    alpha = complex(alpha)
    r = np.asarray(r, dtype=float)
    if abs(alpha) < 1e-12:
        return np.log(r).astype(complex)
    return np.expm1(2 * alpha * np.log(r)) / (2 * alpha)


def local_expansion_check(psi: Union[EigenSection, Callable], p: Union[str, complex],
                          alpha: complex, *, r0: Optional[float] = None,
                          n_annuli: int = 6, shrink: float = 4.0,
                          n_r: int = 4, n_theta: int = 16,
                          exact_tol: float = 1e-10, final_tol: float = 1e-2,
                          min_slope: float = 0.5) -> LocalFit:
    """Fit ``psi`` near ``p`` by the constant-term truncation of the
    admissible local form and watch the residual as the annulus shrinks.

    Parameters
    ----------
    psi : EigenSection or callable
        A section (evaluated through :meth:`EigenSection.local_values`, which
        also handles ``p = "inf"``) or a function of the local coordinate.
    p : str or complex
        Puncture label (for a section) or a tag used in the report.
    alpha : complex
        Exponent difference at ``p``.
    """
    if isinstance(psi, EigenSection):
        label = p if isinstance(p, str) else psi.op.labels[
            int(np.argmin(np.abs(np.asarray(psi.op.points) - complex(p))))]
        f = lambda w: psi.local_values(label, w)
        if r0 is None:
            if label == "inf":
                r0 = 0.25 / psi.atlas.mx
            else:
                r0 = 0.25 * float(psi.atlas.gaps[list(psi.op.labels).index(label)])
    else:
        label = str(p)
        f = psi
        r0 = 0.25 if r0 is None else r0
    radii, coefs, resid = [], [], []
    x, _ = _gauss(n_r)
    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    r = r0
    for _ in range(n_annuli):
        rr = r / 2 + (r / 2) * x
        R, T = np.meshgrid(rr, th, indexing="ij")
        w = (R * np.exp(1j * T)).ravel()
        v = f(w)
        A = np.stack([expansion_basis(np.abs(w), alpha), np.ones(w.size)], axis=1)
        c, *_ = np.linalg.lstsq(A, v, rcond=None)
        res = np.linalg.norm(A @ c - v) / max(np.linalg.norm(v), 1e-300)
        radii.append(r)
        coefs.append(c)
        resid.append(res)
        r /= shrink
    radii = np.array(radii)
    resid = np.array(resid)
    if np.all(resid <= exact_tol):
        slope, passed = float("inf"), True
    else:
        lr = np.log(np.maximum(resid, 1e-300))
        slope = float(np.polyfit(np.log(radii), lr, 1)[0])
        passed = bool(slope >= min_slope and resid[-1] <= final_tol)
    return LocalFit(label, complex(alpha), radii, np.array(coefs), resid, slope, passed)


def local_exponent(op: FuchsianOperator, label: str) -> complex:
    """Exponent difference ``a_p`` stored on the operator."""
    r1, r2 = op.exponents[label]
    return complex(r2 - r1)


def characterize(sec: EigenSection) -> dict:
    """Residuals, single-valuedness and local fits of one section.

    Returns a JSON-ready dictionary; complex values are ``[re, im]``.
    """
    op = sec.op
    fits = {lb: local_expansion_check(sec, lb, local_exponent(op, lb))
            for lb in tuple(op.labels) + ("inf",)}
    return {"lambda": [sec.lam.real, sec.lam.imag],
            "l2_norm_raw": sec.norm,
            "overlap_defect": dict(sec.overlap_defect),
            "loop_defect": dict(sec.loop_defect),
            "gluing_residual": sec.gluing_residual,
            "eigen_residual": eigen_residual(op, sec, sec.lam),
            "conjugate_residual": conjugate_residual(op, sec, sec.lam),
            "imaginary_part": sec.is_real(),
            "quadrature": dict(sec.quadrature),
            "local_fits": {lb: f.to_json() for lb, f in fits.items()},
            "local_fits_passed": all(f.passed for f in fits.values()),
            "metadata": dict(sec.metadata)}


def sample_grid(sec: EigenSection, box: Tuple[float, float, float, float],
                n: Tuple[int, int] = (80, 80)) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``|psi|^2`` at cell centres of a regular grid over ``box``.

    Cell centres keep the grid off the singular points in the usual
    configurations.  Returns ``(re, im, values)`` with ``values[i, j]`` at
    ``re[j] + 1j * im[i]``.
    """
    x0, x1, y0, y1 = box
    nx, ny = n
    re = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    im = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    Z = re[None, :] + 1j * im[:, None]
    vals = np.abs(sec(Z.ravel())) ** 2
    return re, im, vals.reshape(Z.shape)
