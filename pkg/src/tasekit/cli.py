"""Command-line driver.

CSV goes to ``--out`` (or stdout); a short human summary goes to stderr.
Exit codes: 0 completed (a diverged run still counts), 2 bad
configuration, 3 numerical failure inside the library.
"""

from __future__ import annotations

import argparse
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, numkit, schemes, stability
from .integrators import NewtonConvergenceError, StepPlan, integrate
from .problems import (
    DomainError,
    ProblemCase,
    UnknownCaseError,
    case_names,
    error_report,
    fit_order,
    get_case,
)
from .tase import PoleError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("run-case", "converge", "stability-map", "imag-scan", "alpha-table")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    case: Optional[str] = None
    scheme: Optional[str] = None
    tase: Optional[int] = None
    alpha: Optional[float] = None
    dt: Optional[float] = None
    dt_ratio: Optional[float] = None
    steps: Optional[int] = None
    out: Optional[str] = None
    grid: int = 201
    window: str = "cartesian"
    ymax: Optional[float] = None
    samples: Optional[int] = None
    seed: int = 0
    split_mode: Optional[str] = None
    bc_mode: str = "correct"
    N: Optional[int] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        given = [k for k in ("dt", "dt_ratio", "steps") if getattr(self, k) is not None]
        if len(given) > 1:
            raise ConfigError(f"give at most one of --dt, --dt-ratio, --steps (got {', '.join(given)})")
        for k in ("dt", "dt_ratio", "alpha", "ymax"):
            v = getattr(self, k)
            if v is not None and not v > 0:
                raise ConfigError(f"--{k.replace('_', '-')} must be positive")
        if self.steps is not None and self.steps < 1:
            raise ConfigError("--steps must be >= 1")
        if self.tase is not None and not 0 <= self.tase <= 4:
            raise ConfigError("--tase must be between 0 and 4")
        if self.command in ("run-case", "converge") and not self.case:
            raise ConfigError(f"{self.command} needs --case")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _header(meta: dict) -> str:
    return "".join(f"# {k}={_fmt(v)}\n" for k, v in meta.items())


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# ----------------------------------------------------------------- cases

@dataclass
class _Setup:
    case: ProblemCase
    plan: StepPlan
    system: object
    meta: dict


def _setup(cfg: RunConfig) -> _Setup:
    scheme = cfg.scheme
    explicit = scheme is None or schemes.get_tableau(scheme).explicit
    try:
        case = get_case(cfg.case, N=cfg.N, beta=cfg.beta, scheme=scheme if explicit else None)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    rec = case.recommended
    scheme = scheme or rec["scheme"]
    p = rec.get("p", 0) if cfg.tase is None else cfg.tase
    nonlinear = not case.system.is_linear
    system = case.system
    if cfg.bc_mode == "wrong":
        if "wrong" not in case.variants:
            raise ConfigError(f"case {case.name!r} has no inconsistent boundary variant")
        if not p:
            raise ConfigError("--bc-mode wrong only makes sense with TASE enabled")
        system = case.variants["wrong"]
        mode = "tase-split"
    elif nonlinear:
        if cfg.split_mode == "split":
            raise ConfigError("split preconditioning is for linear cases only")
        mode = "tase-nonlinear"
    elif cfg.split_mode == "split" or (cfg.split_mode is None and rec.get("mode") == "tase-split"):
        if not system.splits:
            raise ConfigError(f"case {case.name!r} has no operator splitting")
        mode = "tase-split"
    else:
        mode = "tase-combined"
    groups = sum(g.precondition for g in system.splits) if mode == "tase-split" else 1
    plan = StepPlan.create(scheme, p, cfg.alpha, mode if p else None, groups=max(1, groups))
    meta = {
        "case": case.name, "scheme": plan.scheme, "p": p, "mode": plan.mode,
        "alpha": plan.tase.alpha if plan.tase else "none", "bc_mode": cfg.bc_mode,
        "t_final": float(case.t_final), "dt_stability": float(case.dt_stability), "seed": cfg.seed,
    }
    meta.update({f"param.{k}": v for k, v in case.params.items()})
    return _Setup(case, plan, system, meta)


def _steps(case: ProblemCase, cfg: RunConfig) -> int:
    if cfg.steps is not None:
        return cfg.steps
    if cfg.dt is not None:
        return max(1, int(round(case.t_final / cfg.dt)))
    if cfg.dt_ratio is not None:
        return case.steps_for_ratio(cfg.dt_ratio)
    return case.default_steps


def _target(case: ProblemCase) -> tuple[np.ndarray, str]:
    if case.has_solution:
        return case.solution(case.t_final), "exact" if case.exact is not None else "reference"
    return case.explicit_reference(), "explicit-ERK4"


def _run(s: _Setup, n: int, target):
    tr = integrate(s.plan, s.system, 0.0, s.case.initial_state, s.case.t_final, n, keep="final")
    rep = error_report(tr.final, target, s.case.weights, tr.diverged)
    return tr, rep


RUN_COLUMNS = ("n_steps", "dt", "dt_ratio", "diverged", "diverged_step", "l2_rel", "linf_rel",
               "max_norm", "newton_iterations", "factorizations")


def cmd_run_case(cfg: RunConfig) -> int:
    s = _setup(cfg)
    n = _steps(s.case, cfg)
    target, kind = _target(s.case)
    tr, rep = _run(s, n, target)
    d = tr.diagnostics
    dt = s.case.t_final / n
    row = (n, dt, dt / s.case.dt_stability, rep.diverged, d.diverged_step if d.diverged else "",
           rep.l2_rel, rep.linf_rel, max(d.max_norms), sum(d.newton_iterations), d.factorizations)
    buf = io.StringIO()
    buf.write(_header({"command": "run-case", **s.meta, "target": kind}))
    buf.write(",".join(RUN_COLUMNS) + "\n")
    buf.write(",".join(_fmt(v) for v in row) + "\n")
    _emit(buf.getvalue(), cfg.out)
    if cfg.out:
        prof = Path(cfg.out).with_name(Path(cfg.out).stem + "_profile.csv")
        lines = [_header({"command": "run-case", **s.meta}), "index,point,initial,final,target\n"]
        pts = s.case.mesh.points
        if len(pts) != len(target):
            pts = np.arange(len(target), dtype=float)
        for i, (x, a, b, c) in enumerate(zip(pts, s.case.initial_state, tr.final, target)):
            lines.append(f"{i},{_fmt(x)},{_fmt(a)},{_fmt(b)},{_fmt(c)}\n")
        prof.write_text("".join(lines))
    status = "DIVERGED" if rep.diverged else "ok"
    _note(f"{s.case.name} {s.plan.scheme} p={s.meta['p']} mode={s.plan.mode} steps={n} "
          f"dt/dt_stab={dt / s.case.dt_stability:.4g} l2={rep.l2_rel:.3e} linf={rep.linf_rel:.3e} "
          f"[{status}] wall={d.wall_time:.3f}s")
    return EXIT_OK


CONVERGE_COLUMNS = ("dt", "dt_ratio", "n_steps", "l2_rel", "linf_rel", "diverged")


def cmd_converge(cfg: RunConfig) -> int:
    s = _setup(cfg)
    samples = 4 if cfg.samples is None else cfg.samples
    if samples < 4:
        raise ConfigError("a convergence study needs at least 4 step sizes")
    n0 = _steps(s.case, cfg)
    counts = [n0 * 2**i for i in range(samples)]
    target, kind = _target(s.case)
    with ThreadPoolExecutor(max_workers=stability._threads()) as pool:
        results = list(pool.map(lambda n: _run(s, n, target)[1], counts))
    buf = io.StringIO()
    buf.write(_header({"command": "converge", **s.meta, "target": kind, "samples": samples}))
    buf.write(",".join(CONVERGE_COLUMNS) + "\n")
    dts = [s.case.t_final / n for n in counts]
    for n, dt, rep in zip(counts, dts, results):
        buf.write(",".join(_fmt(v) for v in (dt, dt / s.case.dt_stability, n, rep.l2_rel, rep.linf_rel,
                                               rep.diverged)) + "\n")
    orders = {}
    for norm in ("l2_rel", "linf_rel"):
        fit = fit_order([getattr(r, norm) for r in results], dts)
        orders[norm] = fit.slope
        buf.write(f"# observed_order_{norm.split('_')[0]}={_fmt(fit.slope)}\n")
    _emit(buf.getvalue(), cfg.out)
    _note(f"{s.case.name} {s.plan.scheme} p={s.meta['p']}: observed order "
          f"l2={orders['l2_rel']:.3f} linf={orders['linf_rel']:.3f}")
    return EXIT_OK


# ------------------------------------------------------------- stability

def _stability_plan(cfg: RunConfig) -> tuple[str, int, float]:
    scheme = schemes.canonical_name(cfg.scheme or "ERK4")
    info = schemes.scheme_info(scheme)
    p = info.order if cfg.tase is None else cfg.tase
    alpha = cfg.alpha if cfg.alpha is not None else (info.alpha_min(p) if p else 0.0)
    return scheme, p, alpha


def cmd_stability_map(cfg: RunConfig) -> int:
    scheme, p, alpha = _stability_plan(cfg)
    if cfg.grid < 2:
        raise ConfigError("--grid must be >= 2")
    if cfg.window == "cartesian":
        y = cfg.ymax or 6.0
        scan = stability.scan_region(scheme, p, alpha, "cartesian", cfg.grid, (-y, 0.25 * y), (-y, y))
    else:
        scan = stability.scan_region(scheme, p, alpha, cfg.window, cfg.grid, r_range=(1e-8, cfg.ymax or 1e8))
    scan.metadata.update(command="stability-map", seed=cfg.seed)
    _emit(scan.to_csv(), cfg.out)
    _note(f"{scheme} p={p} alpha={alpha:.6g}: max|sigma| (Re z<=0) = {scan.max_left_half():.6f}, "
          f"unstable left-half cells = {scan.unstable_cells()}")
    return EXIT_OK


def cmd_imag_scan(cfg: RunConfig) -> int:
    scheme, p, alpha = _stability_plan(cfg)
    ymax = cfg.ymax or 1e10
    samples = cfg.samples or 10**6
    if samples < 2:
        raise ConfigError("--samples must be >= 2")
    y, vals = stability.imag_axis_scan(scheme, p, alpha, ymax, samples)
    meta = {"command": "imag-scan", "scheme": scheme, "p": p, "alpha": _fmt(alpha), "ymax": _fmt(ymax),
            "samples": samples, "max_abs_sigma": _fmt(float(vals.max())), "seed": cfg.seed}
    _emit(stability.imag_scan_csv(y, vals, meta), cfg.out)
    k = int(np.argmax(vals))
    _note(f"{scheme} p={p} alpha={alpha:.6g}: max|sigma(iy)| = {vals[k]:.6f} at y = {y[k]:.4g}")
    return EXIT_OK


def cmd_alpha_table(cfg: RunConfig) -> int:
    rows = stability.alpha_table()
    text = io.StringIO()
    text.write(f"{'scheme':<7}{'C':>6}   alpha_min for p = 1..s\n")
    for name, C, vals in rows:
        text.write(f"{name:<7}{C:>6.2f}   " + "  ".join(f"{v:.2f}" for v in vals) + "\n")
    print(text.getvalue(), end="")
    if cfg.out:
        lines = ["# command=alpha-table\nscheme,C,p,alpha_min\n"]
        for name, C, vals in rows:
            lines += [f"{name},{C:.2f},{p},{v:.2f}\n" for p, v in enumerate(vals, 1)]
        Path(cfg.out).write_text("".join(lines))
    return EXIT_OK


HANDLERS = {
    "run-case": cmd_run_case, "converge": cmd_converge, "stability-map": cmd_stability_map,
    "imag-scan": cmd_imag_scan, "alpha-table": cmd_alpha_table,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tasekit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tasekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scheme", help="ERK1..ERK4, SDIRK1..SDIRK4, CN (aliases accepted)")
    common.add_argument("--tase", type=int, help="TASE order p; 0 disables preconditioning")
    common.add_argument("--alpha", type=float, help="override the default alpha")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="recorded in the CSV metadata")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--case", required=True, help=", ".join(case_names()))
    g = runs.add_mutually_exclusive_group()
    g.add_argument("--dt", type=float)
    g.add_argument("--dt-ratio", type=float, help="dt / dt_stability, rounded to whole steps")
    g.add_argument("--steps", type=int)
    runs.add_argument("--split-mode", choices=("combined", "split"))
    runs.add_argument("--bc-mode", choices=("correct", "wrong"), default="correct")
    runs.add_argument("--N", type=int, help="grid size for cases that take one")
    runs.add_argument("--beta", type=float, help="power-law or ODE exponent")

    sub.add_parser("run-case", parents=[common, runs], help="run one benchmark case")
    conv = sub.add_parser("converge", parents=[common, runs], help="step-halving convergence study")
    conv.add_argument("--samples", type=int, help="number of step sizes (>= 4)")

    smap = sub.add_parser("stability-map", parents=[common], help="|sigma| over a complex window")
    smap.add_argument("--grid", type=int, default=201)
    smap.add_argument("--window", choices=("cartesian", "log-radial", "log-radial-full"), default="cartesian")
    smap.add_argument("--ymax", type=float, help="half-width (cartesian) or largest radius (log-radial)")

    imag = sub.add_parser("imag-scan", parents=[common], help="|sigma| along the imaginary axis")
    imag.add_argument("--ymax", type=float)
    imag.add_argument("--samples", type=int)

    sub.add_parser("alpha-table", help="alpha_min table for ERK1..ERK4").add_argument("--out")
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in ns.items() if k in fields and v is not None})


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ConfigError as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG
    try:
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, UnknownCaseError, schemes.UnknownSchemeError) as exc:
        _note(f"error: {exc.args[0] if exc.args else exc}")
        return EXIT_CONFIG
    except (numkit.SingularMatrixError, NewtonConvergenceError, PoleError, DomainError) as exc:
        _note(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except ValueError as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG
