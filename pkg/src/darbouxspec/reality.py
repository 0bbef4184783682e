"""Real-monodromy detector and spectrum scanner.

The monodromy of ``L psi = lam psi`` is real when the normalized generators
preserve a common nonzero Hermitian form ``H``: ``M_p^dagger H M_p = H``.
For each generator the map ``H -> M_p^dagger H M_p - H`` is real-linear on
the 4-dimensional space of Hermitian matrices, and in the main regime
(imaginary exponent differences, real local traces) its kernel is
2-dimensional.  The forms invariant under the whole group are the common
kernel.

Raw invariance blocks are poorly scaled: their nonzero singular values are
of order ``|M_p|^2`` and ``1`` at once, and ``|M_p|`` grows like
``exp(c sqrt|lam|)``.  The detector therefore replaces each 4x4 block by the
orthogonal projector onto its row space and stacks the three projectors into
a 12x4 real system.  Its smallest singular value ``dmin`` lies in
``[0, sqrt 3]`` and vanishes exactly when the kernels share a direction,
i.e. when an invariant form exists.  The blocks are built from the
balanced conjugate of the generators (see :func:`monodromy.balance`) and
the recovered form is transported back to the frame of the representation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from .darboux import (DarbouxParams, FuchsianOperator, GaudinData, build_operator,
                      gaudin_exponents, gaudin_oper, mu1_from_accessory)
from .errors import NumericalFailure
from .monodromy import (LoopGeometry, MonodromyConfig, MonodromyRep, _dd_product,
                        _dd_trace, compute_monodromy, monodromy_batch)

_S2 = math.sqrt(0.5)
#: orthonormal basis of 2x2 Hermitian matrices for the Frobenius product
HERMITIAN_BASIS = np.array([
    [[1, 0], [0, 0]],
    [[0, 0], [0, 1]],
    [[0, _S2], [_S2, 0]],
    [[0, 1j * _S2], [-1j * _S2, 0]],
], dtype=complex)


@dataclass(frozen=True)
class DetectorTolerances:
    """Thresholds of the detector and the scanner.

    Attributes
    ----------
    accept_tol : float
        ``dmin`` below which a refined point is spectral.
    seed_tol : float
        Grid local minima below this value are refined.
    merge_radius : float
        Relative dedupe radius: points closer than ``merge_radius (1 + |lam|)``
        are merged.
    degeneracy_tol : float
        Singular values below ``max(degeneracy_tol, accept_tol)`` count toward
        ``kernel_dim``.
    rank_tol : float
        A generator block has rank 2 when its third singular value is below
        ``rank_tol`` times its largest one, and rank 4 otherwise.
    det_gate : float
        Minimum ``|det H|`` of the normalized balanced form.
    """

    accept_tol: float = 1e-7
    seed_tol: float = 0.5
    merge_radius: float = 1e-5
    degeneracy_tol: float = 1e-9
    rank_tol: float = 1e-9
    det_gate: float = 1e-6

    @property
    def kernel_tol(self) -> float:
        return max(self.degeneracy_tol, self.accept_tol)

    def to_json(self) -> dict:
        return {"accept_tol": self.accept_tol, "seed_tol": self.seed_tol,
                "merge_radius": self.merge_radius, "degeneracy_tol": self.degeneracy_tol,
                "rank_tol": self.rank_tol, "det_gate": self.det_gate}


DEFAULT_TOLERANCES = DetectorTolerances()
#: the detector only needs the finite generators
SCAN_CONFIG = MonodromyConfig(independent_infinity=False)


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------

def _signature(h: np.ndarray, tol: float = 1e-12) -> Tuple[int, int]:
    ev = np.linalg.eigvalsh(h)
    scale = max(np.abs(ev).max(), 1e-300)
    return int(np.sum(ev > tol * scale)), int(np.sum(ev < -tol * scale))


def _normalize_form(h: np.ndarray) -> np.ndarray:
    h = 0.5 * (h + h.conj().T)
    n = np.linalg.norm(h)
    if n == 0:
        return h
    h = h / n
    ev = np.linalg.eigvalsh(h)
    if ev[np.argmax(np.abs(ev))] < 0:
        h = -h
    return h


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """A 2x2 Hermitian matrix with unit Frobenius norm.

    The sign is fixed so that the eigenvalue of largest modulus is positive.
    """

    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", _normalize_form(np.asarray(self.h, dtype=complex)))

    @property
    def signature(self) -> Tuple[int, int]:
        return _signature(self.h)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.h).real)

    def preserved_by(self, M: np.ndarray) -> float:
        """``||M^dagger h M - h||_F / ||M||_F^2``."""
        M = np.asarray(M, dtype=complex)
        return float(np.linalg.norm(M.conj().T @ self.h @ M - self.h) / np.linalg.norm(M) ** 2)

    def congruent_to(self, other: Union["HermitianForm", np.ndarray]) -> bool:
        """Hermitian forms are congruent iff their signatures agree."""
        o = other if isinstance(other, HermitianForm) else HermitianForm(other)
        return self.signature == o.signature

    def to_json(self) -> list:
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.h]


def hermitian_from_vector(v: np.ndarray) -> np.ndarray:
    return np.tensordot(np.asarray(v, dtype=float), HERMITIAN_BASIS, axes=1)


def invariance_block(M: np.ndarray, trace: Optional[complex] = None) -> np.ndarray:
    """Real 8x4 matrix whose kernel is the space of forms preserved by ``M``.

    For ``det M = 1`` the condition ``M^dagger H M = H`` is equivalent to

        H M + M^dagger H - conj(tr M) H = 0,

    because ``M^{-1} = tr(M) I - M``.  This linear version is used whenever
    ``det M`` is one up to rounding.  Its singular values stay comparable
    for large ``M``.  The quadratic map has singular values of order
    ``|M|^2`` next to others of order one, and rounding ``M`` to double
    tilts its row space by ``eps |M|^2``.  ``trace`` may carry a more
    accurate value of ``tr M`` (from double-double data).  Matrices with
    ``|det M| = 1`` are first scaled into ``SL(2)``.  Otherwise the
    quadratic map ``H -> M^dagger H M - H`` is used.

    Columns correspond to :data:`HERMITIAN_BASIS`; rows are the real and
    imaginary parts of the four entries of the image.
    """
    M = np.asarray(M, dtype=complex)
    d = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    scale = max(1.0, float(np.sum(np.abs(M) ** 2)))
    B = HERMITIAN_BASIS
    if abs(d - 1) <= 1e-9 * scale or abs(abs(d) - 1) <= 1e-9 * scale:
        if abs(d - 1) > 1e-9 * scale:
            M = M / np.sqrt(d)
            trace = None
        t = np.trace(M) if trace is None else complex(trace)
        X = (np.einsum("kij,jl->kil", B, M) + np.einsum("ji,kjl->kil", M.conj(), B)
             - np.conj(t) * B)
    else:
        X = np.einsum("ji,kjl,lm->kim", M.conj(), B, M) - B
    flat = X.reshape(4, 4).T
    return np.vstack([flat.real, flat.imag])


def block_projector(block: np.ndarray, rank_tol: float = DEFAULT_TOLERANCES.rank_tol):
    """Projector onto the row space of an invariance block.

    Returns ``(projector, rank, singular_values)``.  The rank is 0 for a
    vanishing block, otherwise 2 plus the number of trailing singular values
    above ``rank_tol`` times the largest.  (An ``SL(2)`` matrix with real
    trace, other than ``+-I``, preserves exactly a 2-dimensional family of
    Hermitian forms, so rank 2 is the generic case in the main regime.)
    """
    _, s, vt = np.linalg.svd(block)
    if s[0] <= 1e-14:
        return np.zeros((4, 4)), 0, s
    r = 2 + int(np.sum(s[2:] > rank_tol * s[0]))
    V = vt[:r]
    return V.T @ V, r, s


@dataclass(frozen=True, eq=False)
class DetectorResult:
    """Outcome of the invariant-form search at one representation.

    Attributes
    ----------
    dmin : float
        Smallest singular value of the stacked projector system.
    form : HermitianForm
        Minimizing form in the frame of the representation's ``matrices``.
    kernel_dim : int
        Number of singular values below the kernel tolerance.
    signature : tuple
        Signature of the balanced form (congruent to ``form``).
    singular_values : ndarray
        All four singular values, descending.
    nondegenerate : bool
        ``|det|`` of the normalized balanced form exceeds ``det_gate``.
    balanced_form : ndarray
        The form in the balanced frame.
    lam : complex
    """

    dmin: float
    form: HermitianForm
    kernel_dim: int
    signature: Tuple[int, int]
    singular_values: np.ndarray
    nondegenerate: bool
    balanced_form: np.ndarray
    lam: complex = 0j
    block_ranks: Tuple[int, ...] = ()

    def accepted(self, tols: DetectorTolerances = DEFAULT_TOLERANCES) -> bool:
        return (self.dmin < tols.accept_tol and self.kernel_dim == 1
                and self.signature == (1, 1) and self.nondegenerate)

    def to_json(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "dmin": self.dmin,
                "form": self.form.to_json(), "kernel_dim": self.kernel_dim,
                "signature": list(self.signature), "nondegenerate": self.nondegenerate}


def invariant_form(rep: Union[MonodromyRep, Sequence[np.ndarray]],
                   tols: DetectorTolerances = DEFAULT_TOLERANCES) -> DetectorResult:
    """Search for a Hermitian form preserved by all finite generators.

    Parameters
    ----------
    rep : MonodromyRep or sequence of 2x2 arrays
        A representation (its balanced generators are used when present) or
        explicit generator matrices.  ``M_inf`` is implied by the relation and
        is not part of the system.

    Returns
    -------
    DetectorResult
    """
    if isinstance(rep, MonodromyRep):
        if rep.balanced:
            gens = rep.generators("balanced")
            lo = [rep.balanced_lo.get(lb) for lb in rep.order]
            S = np.asarray(rep.conjugator, dtype=complex)
        else:
            gens = rep.generators()
            lo = [rep.matrices_lo.get(lb) for lb in rep.order]
            S = np.eye(2, dtype=complex)
        traces = [None if l is None else _dd_trace(M, l) for M, l in zip(gens, lo)]
        lam = rep.lam
    else:
        gens = [np.asarray(M, dtype=complex) for M in rep]
        traces = [None] * len(gens)
        S = np.eye(2, dtype=complex)
        lam = 0j
    projs, ranks = [], []
    for M, t in zip(gens, traces):
        P, r, _ = block_projector(invariance_block(M, t), tols.rank_tol)
        projs.append(P)
        ranks.append(r)
    A = np.vstack(projs)
    _, sv, vt = np.linalg.svd(A)
    hb = _normalize_form(hermitian_from_vector(vt[-1]))
    Si = np.linalg.inv(S)
    h = Si.conj().T @ hb @ Si
    kdim = int(np.sum(sv < tols.kernel_tol))
    sig = _signature(hb)
    nondeg = abs(np.linalg.det(hb).real) > tols.det_gate
    return DetectorResult(float(sv[-1]), HermitianForm(h), kdim, sig, sv, bool(nondeg),
                          hb, complex(lam), tuple(ranks))


# ---------------------------------------------------------------------------
# detection on an operator
# ---------------------------------------------------------------------------

class Detector:
    """Evaluates ``dmin`` on a fixed operator with a shared loop geometry.

    Results are memoized per eigenvalue.
    """

    def __init__(self, op: FuchsianOperator, cfg: MonodromyConfig = SCAN_CONFIG,
                 tols: DetectorTolerances = DEFAULT_TOLERANCES, cache_size: int = 4096):
        self.op = op
        self.cfg = cfg
        self.tols = tols
        self.geometry = LoopGeometry.build(op, cfg)
        self.evaluations = 0
        self._cached = lru_cache(maxsize=cache_size)(self._evaluate)

    def _evaluate(self, lam: complex) -> DetectorResult:
        self.evaluations += 1
        rep = monodromy_batch(self.op, [lam], self.cfg, self.geometry)[0]
        return invariant_form(rep, self.tols)

    def __call__(self, lam: complex) -> DetectorResult:
        return self._cached(complex(lam))

    def monodromy(self, lam: complex) -> MonodromyRep:
        return monodromy_batch(self.op, [lam], self.cfg, self.geometry)[0]

    def dmin_many(self, lams: Sequence[complex], chunk: int = 64,
                  with_traces: bool = False):
        """``dmin`` at many eigenvalues (batched continuation, not cached).

        With ``with_traces`` also returns the traces of all products
        ``g_i g_j`` (``i < j``) of the finite generators, shape ``(n, k)``.
        """
        lams = np.asarray(lams, dtype=complex).ravel()
        out = np.empty(len(lams))
        traces = []
        for i in range(0, len(lams), chunk):
            reps = monodromy_batch(self.op, lams[i:i + chunk], self.cfg, self.geometry)
            self.evaluations += len(reps)
            out[i:i + chunk] = [invariant_form(r, self.tols).dmin for r in reps]
            if with_traces:
                traces.extend(pair_traces(r) for r in reps)
        if with_traces:
            return out, np.array(traces)
        return out


def pair_traces(rep: MonodromyRep) -> np.ndarray:
    """Traces of ``g_i g_j`` for the finite generators in relation order."""
    m = rep.balanced if rep.balanced else rep.matrices
    lo = rep.balanced_lo if rep.balanced else rep.matrices_lo
    gens = rep.order
    out = []
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            h, l = _dd_product([(m[gens[a]], lo[gens[a]]), (m[gens[b]], lo[gens[b]])])
            out.append(_dd_trace(h, l))
    return np.array(out)


@lru_cache(maxsize=32)
def _detector_for(params: DarbouxParams, cfg: MonodromyConfig,
                  tols: DetectorTolerances) -> Detector:
    return Detector(build_operator(params), cfg, tols)


def detect(params: Union[DarbouxParams, FuchsianOperator], lam: complex,
           cfg: MonodromyConfig = SCAN_CONFIG,
           tols: DetectorTolerances = DEFAULT_TOLERANCES) -> DetectorResult:
    """Monodromy at ``lam`` followed by :func:`invariant_form` (memoized)."""
    if isinstance(params, FuchsianOperator):
        return Detector(params, cfg, tols)(lam)
    return _detector_for(params, cfg, tols)(lam)


# ---------------------------------------------------------------------------
# spectrum scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralPoint:
    """An accepted point of the real-monodromy spectrum."""

    lam: complex
    dmin: float
    form: HermitianForm
    kernel_dim: int
    signature: Tuple[int, int]
    eig_residual: float = float("nan")
    l2_norm: float = float("nan")
    multiplicity: int = 1
    tolerances: Optional[DetectorTolerances] = None
    relation_residual: float = float("nan")

    def to_json(self) -> dict:
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)
        out = {"lambda": [self.lam.real, self.lam.imag], "dmin": self.dmin,
               "form": self.form.to_json(), "signature": list(self.signature),
               "kernel_dim": self.kernel_dim, "multiplicity": self.multiplicity,
               "l2_norm": num(self.l2_norm), "residual": num(self.eig_residual),
               "relation_residual": num(self.relation_residual)}
        if self.tolerances is not None:
            out["tolerances"] = self.tolerances.to_json()
        return out


@dataclass(frozen=True)
class Window:
    """Axis-parallel rectangle ``[re_min, re_max] x [im_min, im_max]``."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("empty window")
        if not all(np.isfinite([self.re_min, self.re_max, self.im_min, self.im_max])):
            raise ValueError("window must be bounded")

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= z.real <= self.re_max + pad
                and self.im_min - pad <= z.imag <= self.im_max + pad)

    @classmethod
    def coerce(cls, w) -> "Window":
        return w if isinstance(w, Window) else cls(*map(float, w))


def _sort_key(z: complex):
    # refined points carry errors near 1e-11, so rounding to 8 digits keeps
    # conjugate pairs (equal modulus) ordered by argument
    return (round(abs(z), 8), round(float(np.angle(z)), 8))


def _grid_minima(vals: np.ndarray, seed_tol: float):
    """Indices of 8-neighbour local minima below ``seed_tol``."""
    n_im, n_re = vals.shape
    pad = np.pad(vals, 1, constant_values=np.inf)
    out = []
    for i in range(n_im):
        for j in range(n_re):
            v = vals[i, j]
            if not v < seed_tol:
                continue
            nb = pad[i:i + 3, j:j + 3]
            if v <= nb.min():
                out.append((v, i, j))
    out.sort()
    return [(i, j) for _, i, j in out]


def _sign_change_cells(signs: np.ndarray):
    """Cells whose four corners see both signs of every component.

    ``signs`` has shape ``(n_im, n_re, k)``.  Returns ``(i, j)`` of the lower
    left corner of each such cell.
    """
    n_im, n_re, k = signs.shape
    out = []
    for i in range(n_im - 1):
        for j in range(n_re - 1):
            c = signs[i:i + 2, j:j + 2, :].reshape(4, k)
            if np.all(c.min(axis=0) < 0) and np.all(c.max(axis=0) > 0):
                out.append((i, j))
    return out


def _grid_chunk(args):
    op, cfg, tols, lams = args
    return Detector(op, cfg, tols).dmin_many(lams, with_traces=True)


def refine(det: Detector, lam0: complex, step: float, stop: float = 1e-10,
           xatol: float = 1e-11, maxiter: int = 600) -> Tuple[complex, float]:
    """Nelder-Mead minimization of ``dmin`` from a fixed simplex.

    The initial simplex is ``lam0, lam0 + step, lam0 + i step``, which keeps
    runs reproducible.  The search ends when the simplex is smaller than
    ``xatol (1 + |lam0|)`` or as soon as some vertex has ``dmin < stop``.
    """
    x0 = np.array([lam0.real, lam0.imag])
    best = [np.inf, x0]

    def f(x):
        try:
            d = det(complex(x[0], x[1])).dmin
        except NumericalFailure:
            d = 10.0
        if d < best[0]:
            best[0], best[1] = d, np.array(x, dtype=float)
        return d

    def cb(_xk):
        if best[0] < stop:
            raise StopIteration

    simplex = np.array([x0, x0 + [step, 0.0], x0 + [0.0, step]])
    minimize(f, x0, method="Nelder-Mead", callback=cb,
             options={"initial_simplex": simplex, "xatol": xatol * (1 + abs(lam0)),
                      "fatol": 0.0, "maxiter": maxiter})
    x = best[1]
    return complex(x[0], x[1]), float(best[0])


def scan_grid(op: FuchsianOperator, window, grid: Tuple[int, int],
              cfg: MonodromyConfig = SCAN_CONFIG,
              tols: DetectorTolerances = DEFAULT_TOLERANCES, workers: int = 1,
              with_traces: bool = False):
    """``dmin`` on the nodes of an ``n_re x n_im`` grid.

    Returns ``(re, im, vals)`` with ``vals[i, j]`` at ``re[j] + i im[i]``, and
    the pair traces of shape ``(n_im, n_re, k)`` as a fourth item when
    ``with_traces`` is set.
    """
    w = Window.coerce(window)
    n_re, n_im = grid
    re = np.linspace(w.re_min, w.re_max, n_re)
    im = np.linspace(w.im_min, w.im_max, n_im)
    lams = (re[None, :] + 1j * im[:, None]).ravel()
    if workers > 1:
        chunks = np.array_split(lams, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_grid_chunk, [(op, cfg, tols, c) for c in chunks]))
        vals = np.concatenate([p[0] for p in parts])
        traces = np.concatenate([p[1] for p in parts])
    else:
        vals, traces = Detector(op, cfg, tols).dmin_many(lams, with_traces=True)
    vals = vals.reshape(n_im, n_re)
    if with_traces:
        return re, im, vals, traces.reshape(n_im, n_re, -1)
    return re, im, vals


def _seeds(re, im, vals, traces, seed_tol):
    """Grid local minima of ``dmin`` below ``seed_tol``, then centres of
    cells where the imaginary part of every pair trace changes sign."""
    seeds = [complex(re[j], im[i]) for i, j in _grid_minima(vals, seed_tol)]
    if traces.shape[-1] >= 3:
        for i, j in _sign_change_cells(np.sign(traces.imag)):
            seeds.append(complex(0.5 * (re[j] + re[j + 1]), 0.5 * (im[i] + im[i + 1])))
    return seeds


def scan_spectrum(params: Union[DarbouxParams, FuchsianOperator], window,
                  grid: Tuple[int, int] = (64, 64),
                  tols: DetectorTolerances = DEFAULT_TOLERANCES,
                  cfg: MonodromyConfig = SCAN_CONFIG, workers: int = 1,
                  return_grid: bool = False):
    """Real-monodromy points inside ``window``.

    ``dmin`` is evaluated on the grid nodes.  Refinement seeds are the grid
    local minima below ``seed_tol`` together with the cells in which the
    imaginary parts of all pair traces ``tr(g_i g_j)`` change sign (a real
    character needs all of them real, and the valleys of ``dmin`` can be
    narrower than the grid spacing).  Each seed is refined by Nelder-Mead;
    results are merged within the merge radius and accepted if
    ``dmin < accept_tol``, ``kernel_dim == 1``, the form has signature
    (1, 1) and passes the determinant gate.  Output is sorted by
    ``(|lam|, arg lam)``.

    Parameters
    ----------
    params : DarbouxParams or FuchsianOperator
    window : Window or (re_min, re_max, im_min, im_max)
    grid : (n_re, n_im)
        At least 16 x 16.
    workers : int
        Processes for the grid evaluation.
    return_grid : bool
        Also return ``(re, im, vals)``.
    """
    w = Window.coerce(window)
    if min(grid) < 16:
        raise ValueError("grid must be at least 16 x 16")
    op = params if isinstance(params, FuchsianOperator) else build_operator(params)
    re, im, vals, traces = scan_grid(op, w, grid, cfg, tols, workers, with_traces=True)
    det = Detector(op, cfg, tols)
    step = 0.5 * min(re[1] - re[0], im[1] - im[0])
    found: List[Tuple[complex, DetectorResult]] = []
    for seed in _seeds(re, im, vals, traces, tols.seed_tol):
        lam, f = refine(det, seed, step, stop=1e-3 * tols.accept_tol)
        if not (f < tols.accept_tol and w.contains(lam)):
            continue
        res = det(lam)
        rad = tols.merge_radius * (1 + abs(lam))
        k = next((k for k, (z, _) in enumerate(found) if abs(lam - z) < rad), None)
        if k is None:
            found.append((lam, res))
        elif res.dmin < found[k][1].dmin:
            found[k] = (lam, res)
    full = replace(cfg, independent_infinity=True)
    points = [SpectralPoint(lam, r.dmin, r.form, r.kernel_dim, r.signature,
                            multiplicity=r.kernel_dim, tolerances=tols,
                            relation_residual=compute_monodromy(op, lam, full).relation_residual)
              for lam, r in found if r.accepted(tols)]
    points.sort(key=lambda p: _sort_key(p.lam))
    if return_grid:
        return points, (re, im, vals)
    return points


def weyl_count(points: Sequence[Union[SpectralPoint, complex]], radii: Sequence[float]) -> np.ndarray:
    """``|{lam : |lam| <= N}|`` for each ``N`` in ``radii``."""
    mods = np.array([abs(p.lam if isinstance(p, SpectralPoint) else p) for p in points])
    return np.array([int(np.sum(mods <= N)) for N in radii], dtype=int)


def weyl_ratios(counts: Sequence[int]) -> List[float]:
    """Successive ratios ``count[k+1] / count[k]`` (nan where undefined)."""
    return [float(b) / a if a else float("nan") for a, b in zip(counts[:-1], counts[1:])]


# ---------------------------------------------------------------------------
# Okamoto cross-check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OkamotoSample:
    mu1: complex
    lam: complex
    darboux_flag: bool
    oper_flag: bool
    darboux_dmin: float
    oper_dmin: float
    spectral: bool

    @property
    def agree(self) -> bool:
        return self.darboux_flag == self.oper_flag


@dataclass
class OkamotoReport:
    samples: List[OkamotoSample] = field(default_factory=list)

    @property
    def agreement_rate(self) -> float:
        return float(np.mean([s.agree for s in self.samples])) if self.samples else float("nan")

    @property
    def n_spectral(self) -> int:
        return sum(s.spectral for s in self.samples)

    def to_json(self) -> dict:
        return {"agreement_rate": self.agreement_rate, "n_spectral": self.n_spectral,
                "samples": [{"mu1": [s.mu1.real, s.mu1.imag], "lambda": [s.lam.real, s.lam.imag],
                             "darboux": s.darboux_flag, "oper": s.oper_flag,
                             "darboux_dmin": s.darboux_dmin, "oper_dmin": s.oper_dmin,
                             "spectral": s.spectral} for s in self.samples]}


def _flag(res: DetectorResult, tols: DetectorTolerances) -> bool:
    """Reality flag: an invariant form exists (signature not required)."""
    return bool(res.dmin < tols.accept_tol and res.kernel_dim >= 1)


def okamoto_reality_check(g: GaudinData, window, grid: Tuple[int, int] = (32, 32),
                          tols: DetectorTolerances = DEFAULT_TOLERANCES,
                          cfg: MonodromyConfig = SCAN_CONFIG, n_off: int = 10,
                          workers: int = 1, points: Optional[Sequence[SpectralPoint]] = None
                          ) -> OkamotoReport:
    """Compare reality flags of the reduced operator and the oper.

    The reduced Darboux operator is scanned in the accessory-parameter
    ``window`` (unless ``points`` are supplied); each spectral point is
    mapped to ``mu1`` and the oper ``d_t^2 - q(t)`` with that eigenvalue is
    run through the same detector.  ``n_off`` grid nodes far from the
    spectrum are added as negative controls.
    """
    params = gaudin_exponents(g)
    op = build_operator(params)
    if points is None:
        points, (re, im, vals) = scan_spectrum(op, window, grid, tols, cfg, workers,
                                               return_grid=True)
    else:
        re, im, vals = scan_grid(op, window, grid, cfg, tols, workers)
    ddet = Detector(op, cfg, tols)
    report = OkamotoReport()
    lams = [(p.lam, True) for p in points]
    flat = np.argsort(-vals.ravel(), kind="stable")
    for idx in flat[:n_off]:
        i, j = np.unravel_index(idx, vals.shape)
        lams.append((complex(re[j], im[i]), False))
    for lam, spectral in lams:
        mu1 = mu1_from_accessory(g, lam)
        rd = ddet(lam)
        gop = gaudin_oper(g.with_mu1(mu1))
        ro = Detector(gop, cfg, tols)(0j)
        report.samples.append(OkamotoSample(complex(mu1), complex(lam), _flag(rd, tols),
                                            _flag(ro, tols), rd.dmin, ro.dmin, spectral))
    return report
