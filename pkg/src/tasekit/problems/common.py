"""Shared pieces of the benchmark catalog: meshes, cases, error norms."""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .. import numkit, schemes
from ..integrators import SemiDiscreteSystem, StepPlan

MESH_KINDS = ("periodic-nodes", "bounded-nodes", "bounded-cells", "stretched-cells", "polar-cells")


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Nodes or cell centers with per-point widths (cell sizes or node spacing)."""

    points: np.ndarray
    widths: np.ndarray
    kind: str
    domain: tuple[float, float]
    edges: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in MESH_KINDS:
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        pts = np.asarray(self.points, dtype=float)
        w = np.broadcast_to(np.asarray(self.widths, dtype=float), pts.shape).copy()
        if pts.ndim != 1 or pts.size < 2 or np.any(np.diff(pts) <= 0):
            raise ValueError("mesh points must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("mesh widths must be positive")
        if self.kind in ("bounded-cells", "stretched-cells"):
            length = self.domain[1] - self.domain[0]
            if abs(w.sum() - length) > 1e-12 * max(1.0, abs(length)):
                raise ValueError("cell widths do not sum to the domain length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "widths", w)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def spacing(self):
        """Scalar spacing for uniform meshes, the width array otherwise."""
        w = self.widths
        return float(w[0]) if np.allclose(w, w[0], rtol=1e-13, atol=0) else w

    @property
    def min_spacing(self) -> float:
        return float(self.widths.min())

    @classmethod
    def periodic(cls, a: float, b: float, n: int) -> "Mesh1D":
        h = (b - a) / n
        return cls(a + h * np.arange(n), np.full(n, h), "periodic-nodes", (a, b))

    @classmethod
    def cells(cls, edges, kind: str = "bounded-cells") -> "Mesh1D":
        edges = np.asarray(edges, dtype=float)
        return cls(0.5 * (edges[1:] + edges[:-1]), np.diff(edges), kind,
                   (float(edges[0]), float(edges[-1])), edges)


@dataclass(frozen=True)
class ErrorReport:
    l2_rel: float
    linf_rel: float
    diverged: bool = False

    @classmethod
    def blown_up(cls) -> "ErrorReport":
        return cls(math.inf, math.inf, True)


def error_report(y, exact, weights=None, diverged: bool = False) -> ErrorReport:
    """Relative L2 (optionally width-weighted) and max-norm errors."""
    if diverged:
        return ErrorReport.blown_up()
    y = np.asarray(y, dtype=float)
    e = np.asarray(exact, dtype=float)
    if y.shape != e.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {e.shape}")
    if not np.all(np.isfinite(y)):
        return ErrorReport.blown_up()
    w = np.ones_like(e) if weights is None else np.broadcast_to(np.asarray(weights, float), e.shape)
    den2 = float(np.sqrt(np.sum(w * e**2)))
    deninf = float(np.abs(e).max())
    if den2 == 0 or deninf == 0:
        raise ZeroDivisionError("exact solution has zero norm")
    d = y - e
    return ErrorReport(float(np.sqrt(np.sum(w * d**2))) / den2, float(np.abs(d).max()) / deninf)


@dataclass(frozen=True)
class OrderFit:
    slope: float
    used: tuple[int, ...]
    excluded: tuple[int, ...]


def fit_order(errors: Sequence[float], dts: Sequence[float]) -> OrderFit:
    """Least-squares slope of ``log(error)`` against ``log(dt)``.

    Nonpositive or non-finite errors are skipped and listed in ``excluded``.
    """
    errors = np.asarray(errors, dtype=float)
    dts = np.asarray(dts, dtype=float)
    if errors.shape != dts.shape:
        raise ValueError("errors and dts must have equal length")
    ok = np.isfinite(errors) & (errors > 0) & (dts > 0)
    used = tuple(int(i) for i in np.flatnonzero(ok))
    excluded = tuple(int(i) for i in np.flatnonzero(~ok))
    if len(used) < 3:
        raise ValueError("need at least three positive (dt, error) pairs")
    slope = np.polyfit(np.log(dts[ok]), np.log(errors[ok]), 1)[0]
    return OrderFit(float(slope), used, excluded)


def observed_order(errors: Sequence[float], dts: Sequence[float]) -> float:
    fit = fit_order(errors, dts)
    if fit.excluded:
        warnings.warn(f"points {list(fit.excluded)} excluded from the order fit", RuntimeWarning, stacklevel=2)
    return fit.slope


_J2_TERMS_MAX = 200


def bessel_j2(x):
    """Bessel J_2 on ``[0, 20]`` from its ascending series."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 20):
        raise ValueError("bessel_j2 is validated on 0 <= x <= 20 only")
    half = x / 2.0
    term = half**2 / 2.0  # m = 0: (x/2)^2 / (0! 2!)
    total = term.copy()
    for m in range(1, _J2_TERMS_MAX):
        term = -term * half**2 / (m * (m + 2))
        total = total + term
        if np.all(np.abs(term) < 1e-16):
            break
    return total if total.ndim else float(total)


def bessel_j2_root(lo: float = 5.0, hi: float = 5.3) -> float:
    """First positive zero of J_2 by bisection on a sign-changing bracket."""
    flo, fhi = bessel_j2(lo), bessel_j2(hi)
    if flo * fhi > 0:
        raise ValueError("bracket does not enclose a sign change")
    while hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        fm = bessel_j2(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stability_dt_diffusion(C: float, dx: float, D: float, coeff: float = 1.0) -> float:
    """``C * dx**2 / (D * coeff)``."""
    return C * dx**2 / (D * coeff)


def table_C(scheme: str) -> float:
    return schemes.scheme_info(scheme).C


@dataclass(frozen=True, eq=False)
class ProblemCase:
    name: str
    system: SemiDiscreteSystem
    mesh: Mesh1D
    initial_state: np.ndarray
    t_final: float
    exact: Optional[Callable[[float], np.ndarray]] = None
    reference: Optional[Callable[[float], np.ndarray]] = None
    stability_dt: dict = field(default_factory=dict)
    recommended: dict = field(default_factory=dict)
    variants: dict = field(default_factory=dict)
    weights: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    default_steps: int = 20

    def __post_init__(self):
        y0 = np.asarray(self.initial_state, dtype=float)
        if y0.shape != (self.system.dimension,):
            raise ValueError("initial state does not match the system dimension")
        if self.exact is not None:
            e0 = self.exact(0.0)
            if np.abs(e0 - y0).max() > 1e-12 * max(1.0, np.abs(y0).max()):
                raise ValueError("exact(0) differs from the initial state")
        object.__setattr__(self, "initial_state", y0)

    @property
    def dt_stability(self) -> float:
        """Governing (smallest) explicit stability limit."""
        return min(self.stability_dt.values())

    def solution(self, t: float) -> np.ndarray:
        if self.exact is not None:
            return self.exact(t)
        if self.reference is not None:
            return self.reference(t)
        raise ValueError(f"case {self.name!r} has no exact or reference solution")

    @property
    def has_solution(self) -> bool:
        return self.exact is not None or self.reference is not None

    def steps_for_ratio(self, ratio: float, key: Optional[str] = None) -> int:
        """Integer step count whose dt is closest to ``ratio * dt_stability``.

        Follows the rounding rule: dt is adjusted so that an integer
        number of steps lands exactly on ``t_final``.
        """
        if not ratio > 0:
            raise ValueError("dt ratio must be positive")
        base = self.stability_dt[key] if key else self.dt_stability
        return max(1, int(round(self.t_final / (ratio * base))))

    def recommended_plan(self, **override) -> StepPlan:
        kw = dict(self.recommended)
        kw.update(override)
        mode = kw.pop("mode", None)
        p = kw.pop("p", 0)
        groups = 1
        if mode == "tase-split" and p:
            groups = sum(g.precondition for g in self.system.splits)
        return StepPlan.create(kw.pop("scheme"), p, kw.pop("alpha", None), mode if p else None, groups=groups)

    def explicit_reference(self, ratio: float = 0.25, scheme: str = "ERK4") -> np.ndarray:
        """Final state of a plain explicit run well inside its stability limit."""
        from ..integrators import integrate

        info = schemes.scheme_info(scheme)
        base = self.dt_stability * info.C / table_C(self.recommended.get("scheme", scheme))
        n = max(1, int(np.ceil(self.t_final / (ratio * base))))
        tr = integrate(StepPlan(scheme), self.system, 0.0, self.initial_state, self.t_final, n, keep="final")
        if tr.diverged:
            raise FloatingPointError("explicit reference run diverged")
        return tr.final

    def errors(self, y, t: Optional[float] = None, diverged: bool = False) -> ErrorReport:
        t = self.t_final if t is None else t
        return error_report(y, self.solution(t), self.weights, diverged)

    def dump_csv(self, directory) -> list[str]:
        """Write mesh and operator matrices as CSV files; return the paths."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        mesh_path = os.path.join(directory, f"{self.name}_mesh.csv")
        with open(mesh_path, "w", newline="") as fh:
            w = csv.writer(fh)
            fh.write(f"# case={self.name} kind={self.mesh.kind}\n")
            for k, v in self.params.items():
                fh.write(f"# {k}={v}\n")
            w.writerow(["point", "width"])
            for p, h in zip(self.mesh.points, self.mesh.widths):
                w.writerow([f"{p:.17g}", f"{h:.17g}"])
        paths.append(mesh_path)
        mats = {}
        if self.system.linear is not None:
            mats["linear"] = self.system.linear
        for i, g in enumerate(self.system.splits):
            mats[f"group{i}_{g.label or 'op'}"] = g.linear
        for label, m in mats.items():
            dense = m.to_dense() if isinstance(m, numkit.BandedMatrix) else np.asarray(m)
            path = os.path.join(directory, f"{self.name}_{label}.csv")
            np.savetxt(path, dense, delimiter=",", fmt="%.17g")
            paths.append(path)
        return paths
