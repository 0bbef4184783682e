"""Command line driver.

Every subcommand reads an optional JSON config, writes its results to the
output directory and finishes with ``manifest.json``.  Result files contain
no timing or version data, so identical configs give byte-identical JSON
and CSV; the manifest carries the tolerances, conventions, versions and
wall time.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
failures (the message names the error class).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import importlib.metadata
import json
import math
import platform
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import abelian, degenerate, eigenfn, monodromy, reality, slcheck
from .darboux import DarbouxParams, build_operator, params_from_json, parse_complex
from .errors import ConfigError, NotSpectral, NumericalFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SUBCOMMANDS = ("spectrum", "eigenfn", "abelian", "degenerate", "gaudin", "slcheck",
               "weyl", "selftest")

_DETECTOR_KEYS = tuple(f.name for f in dataclasses.fields(reality.DetectorTolerances))
#: tolerances that ``--tol-override`` may set, with their defaults
OTHER_TOLERANCES = {
    "path_tol": eigenfn.PATH_TOL,
    "quad_tol": eigenfn.QUAD_TOL,
    "period_tol": abelian.PERIOD_TOL,
    "trace_tol": degenerate.TRACE_TOL,
    "membership_tol": degenerate.MEMBERSHIP_TOL,
    "root_xtol": slcheck.ROOT_XTOL,
    "match_tol": 1e-6,
}


# ---------------------------------------------------------------------------
# config helpers
# ---------------------------------------------------------------------------

def _req(cfg: dict, key: str, path: str):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in cfg:
        raise ConfigError(f"{path}.{key}: missing field" if path else f"{key}: missing field")
    return cfg[key]


def _number(v, path: str) -> float:
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {v!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{path}: must be finite")
    return out


def _window(v, path: str) -> Tuple[float, float, float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ConfigError(f"{path}: expected [re_min, re_max, im_min, im_max]")
    w = tuple(_number(t, f"{path}[{i}]") for i, t in enumerate(v))
    if not (w[0] < w[1] and w[2] < w[3]):
        raise ConfigError(f"{path}: empty window")
    return w


def _grid(v, path: str) -> Tuple[int, int]:
    if isinstance(v, int):
        v = [v, v]
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"{path}: expected [n_re, n_im]")
    g = tuple(int(_number(t, f"{path}[{i}]")) for i, t in enumerate(v))
    if min(g) < 16:
        raise ConfigError(f"{path}: grid must be at least 16 x 16")
    return g


def _params(cfg: dict, path: str = "params"):
    try:
        return params_from_json(_req(cfg, "params", ""))
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(path) else f"{path}: {msg}") from None


def parse_overrides(items: Sequence[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for it in items or ():
        if "=" not in it:
            raise ConfigError(f"--tol-override: expected KEY=VAL, got {it!r}")
        k, v = it.split("=", 1)
        k = k.strip()
        if k not in _DETECTOR_KEYS and k not in OTHER_TOLERANCES:
            known = ", ".join(sorted(_DETECTOR_KEYS + tuple(OTHER_TOLERANCES)))
            raise ConfigError(f"--tol-override: unknown key {k!r} (known: {known})")
        out[k] = _number(v, f"--tol-override {k}")
    return out


@dataclasses.dataclass
class Context:
    config: dict
    out: Path
    workers: int
    detector: reality.DetectorTolerances
    tolerances: Dict[str, float]
    outputs: List[str] = dataclasses.field(default_factory=list)

    def tol(self, key: str) -> float:
        return self.tolerances[key]

    def all_tolerances(self) -> dict:
        d = self.detector.to_json()
        d.update(self.tolerances)
        return d


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(ctx: Context, name: str, data) -> None:
    p = ctx.out / name
    p.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n")
    ctx.outputs.append(name)


def write_csv(ctx: Context, name: str, header: Sequence[str], rows) -> None:
    p = ctx.out / name
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    ctx.outputs.append(name)


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "darbouxspec"
    return plt


def _save_svg(ctx: Context, fig, name: str) -> None:
    fig.savefig(ctx.out / name, format="svg", metadata={"Date": None})
    ctx.outputs.append(name)


def spectrum_svg(ctx: Context, lams: Sequence[complex], name: str = "spectrum.svg",
                 window=None) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 5))
    z = np.asarray(lams, dtype=complex)
    ax.plot(z.real, z.imag, "o", ms=3)
    if window is not None:
        ax.set_xlim(window[0], window[1])
        ax.set_ylim(window[2], window[3])
    ax.set_xlabel("Re Lambda")
    ax.set_ylabel("Im Lambda")
    ax.set_aspect("equal")
    fig.tight_layout()
    _save_svg(ctx, fig, name)
    plt.close(fig)


def heatmap_svg(ctx: Context, re, im, vals, name: str, title: str) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 4.5))
    m = ax.pcolormesh(re, im, np.log10(np.maximum(vals, 1e-300)), shading="nearest")
    fig.colorbar(m, ax=ax, label="log10 |psi|^2")
    ax.set_title(title)
    ax.set_aspect("equal")
    fig.tight_layout()
    _save_svg(ctx, fig, name)
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _spectrum_points(ctx: Context, params: DarbouxParams):
    cfg = ctx.config
    window = _window(_req(cfg, "window", ""), "window")
    grid = _grid(cfg.get("grid", [64, 64]), "grid")
    pts = reality.scan_spectrum(params, window, grid, ctx.detector, workers=ctx.workers)
    return pts, window, grid


def _point_rows(pts, tols: dict):
    out = []
    for p in pts:
        d = p.to_json()
        d["tolerances"] = tols
        out.append(d)
    return out


def cmd_spectrum(ctx: Context) -> int:
    params, _, _ = _params(ctx.config)
    pts, window, grid = _spectrum_points(ctx, params)
    if ctx.config.get("eigenfunctions", False):
        op = build_operator(params)
        done = []
        for p in pts:
            sec = eigenfn.assemble(op, p.lam, p.form, path_tol=ctx.tol("path_tol"))
            res = eigenfn.eigen_residual(op, sec, p.lam)
            done.append(dataclasses.replace(p, l2_norm=sec.norm, eig_residual=res))
        pts = done
    tols = ctx.all_tolerances()
    write_json(ctx, "spectrum.json", _point_rows(pts, tols))
    write_csv(ctx, "spectrum.csv", ["re", "im", "dmin", "kernel_dim", "sig_pos", "sig_neg"],
              [(p.lam.real, p.lam.imag, p.dmin, p.kernel_dim, *p.signature) for p in pts])
    if ctx.config.get("svg", True):
        spectrum_svg(ctx, [p.lam for p in pts], window=window)
    print(f"{len(pts)} spectral points in window {list(window)} on a {grid[0]}x{grid[1]} grid")
    return EXIT_OK


def cmd_weyl(ctx: Context) -> int:
    params, _, _ = _params(ctx.config)
    radii = [_number(r, f"radii[{i}]") for i, r in enumerate(_req(ctx.config, "radii", ""))]
    pts, window, grid = _spectrum_points(ctx, params)
    cover = min(abs(window[0]), abs(window[1]), abs(window[2]), abs(window[3]))
    if max(radii) > cover:
        raise ConfigError(f"radii: largest radius {max(radii)} exceeds the window half-width {cover}")
    counts = reality.weyl_count(pts, radii)
    ratios = reality.weyl_ratios(counts)
    write_json(ctx, "weyl.json", {"radii": radii, "counts": counts.tolist(), "ratios": ratios,
                                  "n_points": len(pts), "tolerances": ctx.all_tolerances()})
    for N, c in zip(radii, counts):
        print(f"N = {N:g}: {c}")
    for (a, b), q in zip(zip(radii[:-1], radii[1:]), ratios):
        print(f"count({b:g}) / count({a:g}) = {q:.3f}")
    return EXIT_OK


def cmd_eigenfn(ctx: Context) -> int:
    cfg = ctx.config
    params, lam0, _ = _params(cfg)
    raw = cfg.get("lambdas")
    if raw is None:
        if lam0 is None:
            raise ConfigError("lambdas: missing field")
        raw = [[lam0.real, lam0.imag]]
    lams = [parse_complex(v, f"lambdas[{i}]") for i, v in enumerate(raw)]
    op = build_operator(params)
    det = reality.Detector(op, tols=ctx.detector)
    box = _window(cfg.get("box", [-1.5, 2.5, -2.0, 2.0]), "box")
    n = int(_number(cfg.get("heatmap_size", 80), "heatmap_size"))
    reports, sections = [], []
    for k, lam in enumerate(lams):
        if cfg.get("refine", True):
            lam, _ = reality.refine(det, lam, 0.05, stop=1e-3 * ctx.detector.accept_tol)
        res = det(lam)
        if not res.accepted(ctx.detector):
            raise NotSpectral(f"lambda = {lam} is not an accepted spectral point "
                                      f"(dmin = {res.dmin:.2e})")
        sec = eigenfn.assemble(op, lam, res.form, path_tol=ctx.tol("path_tol"))
        rep = eigenfn.characterize(sec)
        rep["dmin"] = res.dmin
        rep["tolerances"] = ctx.all_tolerances()
        rep["normalization"] = {"norm": "unit L2 norm", "phase": sec.metadata["phase"]}
        reports.append(rep)
        sections.append(sec)
        re, im, vals = eigenfn.sample_grid(sec, box, (n, n))
        write_csv(ctx, f"psi_{k}.csv", ["re", "im", "abs_psi_sq"],
                  [(re[j], im[i], vals[i, j]) for i in range(len(im)) for j in range(len(re))])
        if cfg.get("svg", True):
            heatmap_svg(ctx, re, im, vals, f"psi_{k}.svg", f"|psi|^2 at Lambda = {lam:.6g}")
    out = {"points": reports}
    if len(sections) > 1 and cfg.get("gram", True):
        G = eigenfn.gram_matrix(sections)
        out["gram"] = [[[v.real, v.imag] for v in row] for row in G]
        out["gram_error"] = float(np.max(np.abs(G - np.eye(len(sections)))))
    write_json(ctx, "eigenfn.json", out)
    for r in reports:
        lam = complex(*r["lambda"])
        print(f"Lambda = {lam:.10g}: residual {r['eigen_residual']:.2e}, "
              f"local fits {'ok' if r['local_fits_passed'] else 'FAILED'}")
    return EXIT_OK


def cmd_abelian(ctx: Context) -> int:
    cfg = ctx.config
    tau = parse_complex(cfg.get("tau", [0, 1]), "tau")
    box = cfg.get("box", 5)
    pts = abelian.enumerate_gl1_spectrum(tau, box, ctx.tol("period_tol"))
    write_csv(ctx, "abelian.csv", ["m", "n", "a_re", "a_im", "b_re", "b_im"],
              [(p.m, p.n, p.a.real, p.a.imag, p.b.real, p.b.imag) for p in pts])
    write_json(ctx, "abelian.json", {"tau": tau, "box": box, "count": len(pts),
                                     "tolerances": {"period_tol": ctx.tol("period_tol")}})
    print(f"{len(pts)} lattice points")
    return EXIT_OK


def cmd_degenerate(ctx: Context) -> int:
    cfg = ctx.config
    out: Dict[str, Any] = {"multiplicity": {"reducible": degenerate.REDUCIBLE_MULTIPLICITY,
                                            "trigonometric": degenerate.TRIGONOMETRIC_MULTIPLICITY}}
    trig = cfg.get("trigonometric", {"mu": [[0, 0.3], [0.25, 0], [0.1, 0.2]]})
    mus = [parse_complex(v, f"trigonometric.mu[{i}]")
           for i, v in enumerate(_req(trig, "mu", "trigonometric"))]
    checks = [degenerate.trig_monodromy_crosscheck(mu, ctx.detector,
                                                   trace_tol=ctx.tol("trace_tol")) for mu in mus]
    out["trigonometric"] = [c.to_json() for c in checks]
    if "reducible" in cfg:
        red = cfg["reducible"]
        c = parse_complex(_req(red, "c", "reducible"), "reducible.c")
        lams = [parse_complex(v, f"reducible.lambda[{i}]")
                for i, v in enumerate(_req(red, "lambda", "reducible"))]
        out["reducible"] = [degenerate.reducible_row(c, lam, ctx.tol("membership_tol"))
                            for lam in lams]
    write_json(ctx, "degenerate.json", out)
    bad = [c for c in checks if not c.consistent]
    for c in checks:
        print(f"mu = {c.mu:.6g}: trace error {c.trace_error:.1e}, form {c.form_exists}, "
              f"spectral {c.spectral_point}")
    if bad:
        raise degenerate.CrossCheckFailed(f"{len(bad)} trigonometric checks inconsistent")
    return EXIT_OK


def cmd_gaudin(ctx: Context) -> int:
    cfg = ctx.config
    _, _, g = _params(cfg)
    if g is None:
        raise ConfigError("params.gaudin: missing field")
    window = _window(_req(cfg, "window", ""), "window")
    grid = _grid(cfg.get("grid", [32, 32]), "grid")
    n_off = int(_number(cfg.get("n_off", 10), "n_off"))
    rep = reality.okamoto_reality_check(g, window, grid, ctx.detector, n_off=n_off,
                                        workers=ctx.workers)
    data = rep.to_json()
    data["tolerances"] = ctx.all_tolerances()
    write_json(ctx, "okamoto.json", data)
    print(f"{len(rep.samples)} samples, {rep.n_spectral} spectral, "
          f"agreement {100 * rep.agreement_rate:.1f}%")
    return EXIT_OK


def cmd_slcheck(ctx: Context) -> int:
    cfg = ctx.config
    x = _number(cfg.get("x", 0.5), "x")
    win = cfg.get("window", [-8, 8])
    if not isinstance(win, (list, tuple)) or len(win) != 2:
        raise ConfigError("window: expected [lo, hi]")
    window = (_number(win[0], "window[0]"), _number(win[1], "window[1]"))
    problems = cfg.get("problems", list(slcheck.PROBLEMS))
    step = _number(cfg.get("step", 0.05), "step")
    rows, data = [], {}
    for prob in problems:
        if prob not in slcheck.PROBLEMS:
            raise ConfigError(f"problems: unknown problem {prob!r}")
        roots = slcheck.real_spectrum(prob, x, window, step, ctx.tol("root_xtol"))
        data[prob] = [r.to_json() for r in roots]
        rows += [(prob, r.lam, r.mismatch) for r in roots]
    write_csv(ctx, "slcheck.csv", ["problem", "lambda", "mismatch"], rows)
    write_json(ctx, "slcheck.json", {"x": x, "window": list(window), "step": step,
                                     "roots": data, "tolerances": ctx.all_tolerances()})
    for prob in problems:
        print(f"{prob}: {len(data[prob])} real eigenvalues")
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _selftest_checks() -> List[Tuple[str, Callable[[], Tuple[bool, str]]]]:
    def abel():
        pts = abelian.enumerate_gl1_spectrum(1j, 5)
        exact = all(abs(p.a - math.pi * (p.n + 1j * p.m)) < 1e-10 for p in pts)
        rej = not any(abelian.real_monodromy_gl1(abelian.GL1Oper(math.pi * (2 + 1j) + e, 1j))
                      for e in (0.05, 0.05j))
        return len(pts) == 121 and exact and rej, f"{len(pts)} points"

    def trig():
        errs = [degenerate.trig_monodromy_crosscheck(mu).trace_error
                for mu in (0.3j, 0.1 + 0.2j, 0.7 - 0.35j)]
        return max(errs) < 1e-8, f"max trace error {max(errs):.1e}"

    def det_sanity():
        beta = 1.7
        r = reality.invariant_form([np.array([[1, 1j], [0, 1]]), np.array([[1, 0], [1j * beta, 1]])])
        ok = r.dmin < 1e-12 and r.signature == (1, 1) and r.form.congruent_to(np.array([[0, 1], [1, 0]]))
        return ok, f"dmin {r.dmin:.1e}"

    def reducible():
        ok = (degenerate.reducible_spectrum_membership(0, -1) == (0, 1.0)
              and degenerate.reducible_spectrum_membership(0, 0.25) == (1, 0.0)
              and degenerate.reducible_spectrum_membership(0, 0.3) is None)
        return ok, "membership examples"

    def relation():
        p = DarbouxParams.from_exponents((0.3j, -0.2j, 0.1j, 0.25j), 0.4 + 0.2j)
        rep = monodromy.compute_monodromy(build_operator(p), 1.3 - 0.7j)
        return rep.relation_residual < 1e-7, f"residual {rep.relation_residual:.1e}"

    def sl_vs_detector():
        roots = slcheck.real_spectrum("P1", 0.5, (0.0, 0.5))
        if not roots:
            return False, "no root"
        d = reality.detect(DarbouxParams.from_exponents((0, 0, 0, 0), 0.5), roots[0].lam)
        return d.dmin < 1e-7, f"Lambda {roots[0].lam:.10f}, dmin {d.dmin:.1e}"

    return [("abelian lattice", abel), ("trigonometric trace", trig),
            ("detector sanity", det_sanity), ("reducible membership", reducible),
            ("monodromy relation", relation), ("shooting vs detector", sl_vs_detector)]


def cmd_selftest(ctx: Context) -> int:
    rows = []
    for name, fn in _selftest_checks():
        try:
            ok, info = fn()
        except NumericalFailure as exc:
            ok, info = False, f"{type(exc).__name__}: {exc}"
        rows.append({"check": name, "passed": bool(ok), "info": info})
        print(f"{'PASS' if ok else 'FAIL'}  {name:<24s} {info}")
    write_json(ctx, "selftest.json", rows)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_NUMERICAL


COMMANDS = {"spectrum": cmd_spectrum, "eigenfn": cmd_eigenfn, "abelian": cmd_abelian,
            "degenerate": cmd_degenerate, "gaudin": cmd_gaudin, "slcheck": cmd_slcheck,
            "weyl": cmd_weyl, "selftest": cmd_selftest}
NEEDS_CONFIG = {"spectrum", "eigenfn", "gaudin", "weyl"}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "numba", "mpmath", "matplotlib"):
        try:
            out[dist] = importlib.metadata.version(dist)
        except importlib.metadata.PackageNotFoundError:
            out[dist] = None
    return out


def write_manifest(ctx: Context, command: str, argv: Sequence[str], wall: float, status: int,
                   error: Optional[str] = None) -> None:
    data = {"command": command, "argv": list(argv), "config": ctx.config,
            "tolerances": ctx.all_tolerances(), "workers": ctx.workers,
            "conventions": {"loop_orientation": monodromy.LOOP_CONVENTION,
                            "ordering": monodromy.ORDER_CONVENTION,
                            "normalization": monodromy.NORMALIZATION_CONVENTION,
                            "complex_numbers": "[re, im]",
                            "spectrum_sort": "(|Lambda|, arg Lambda)"},
            "versions": _versions(), "wall_time_s": wall, "exit_code": status,
            "error": error, "outputs": sorted(ctx.outputs)}
    (ctx.out / "manifest.json").write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="darbouxspec",
                                 description="Real-monodromy spectra of Darboux operators.")
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="JSON config file")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="processes for grid scans")
    ap.add_argument("--tol-override", action="append", default=[], metavar="KEY=VAL",
                    help="override a tolerance (repeatable)")
    return ap


def _load_config(path: Optional[Path], command: str) -> dict:
    if path is None:
        if command in NEEDS_CONFIG:
            raise ConfigError(f"{command} requires --config")
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    return data


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    ctx = None
    t0 = time.perf_counter()
    try:
        config = _load_config(ns.config, ns.command)
        over = parse_overrides(ns.tol_override)
        if ns.workers < 1:
            raise ConfigError("--workers must be at least 1")
        det = reality.DetectorTolerances(**{k: v for k, v in over.items() if k in _DETECTOR_KEYS})
        tols = dict(OTHER_TOLERANCES)
        tols.update({k: v for k, v in over.items() if k in OTHER_TOLERANCES})
        ns.out.mkdir(parents=True, exist_ok=True)
        ctx = Context(config, ns.out, ns.workers, det, tols)
        status = COMMANDS[ns.command](ctx)
        write_manifest(ctx, ns.command, argv, time.perf_counter() - t0, status)
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if ctx is not None:
            write_manifest(ctx, ns.command, argv, time.perf_counter() - t0, EXIT_CONFIG, str(exc))
        return EXIT_CONFIG
    except NumericalFailure as exc:
        msg = f"{type(exc).__name__}: {exc}"
        print(f"numerical failure: {msg}", file=sys.stderr)
        if ctx is not None:
            write_manifest(ctx, ns.command, argv, time.perf_counter() - t0, EXIT_NUMERICAL, msg)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())
