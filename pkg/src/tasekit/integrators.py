"""Time steppers: explicit RK, TASE-preconditioned RK and SDIRK baselines.

Every stepper works in Butcher form. Stage times are ``t + c_i * dt``.
Shift factorizations are built once per ``(operator, dt)`` and held in a
``StepContext`` so that repeated steps reuse them.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import numkit, schemes
from .tase import ShiftSet, TaseConfig, apply_operator, apply_preconditioner, build_shift_set, materialize

Vector = np.ndarray
SourceFn = Callable[[float], Vector]
RhsFn = Callable[[Vector, float], Vector]

DIVERGENCE_NORM = 1e10
MODES = ("plain", "tase-combined", "tase-split", "tase-nonlinear")


class DivergenceError(FloatingPointError):
    def __init__(self, stage: int, t: float):
        self.stage = stage
        self.t = t
        super().__init__(f"non-finite value in stage {stage} at t={t:.6g}")


class NewtonConvergenceError(RuntimeError):
    def __init__(self, stage: int, residuals: Sequence[float]):
        self.stage = stage
        self.residuals = list(residuals)
        super().__init__(
            f"Newton iteration for stage {stage} did not converge after "
            f"{len(residuals)} iterations (last residual {residuals[-1]:.3e})"
        )


@dataclass(frozen=True, eq=False)
class OperatorGroup:
    """One additive piece ``L_i Y + S_i(t)`` of a split right-hand side.

    ``precondition=False`` marks a group that is always advanced plainly,
    e.g. the radial operator of the polar case.
    """

    linear: numkit.Matrix
    source: Optional[SourceFn] = None
    precondition: bool = True
    label: str = ""

    def rhs(self, y, t):
        out = numkit.matvec(self.linear, y)
        if self.source is not None:
            out = out + self.source(t)
        return out


@dataclass(frozen=True, eq=False)
class SemiDiscreteSystem:
    """``dY/dt = L Y + S(t) + N(Y, t)`` with optional split groups."""

    dimension: int
    linear: Optional[numkit.Matrix] = None
    source: Optional[SourceFn] = None
    nonlinear: Optional[RhsFn] = None
    linearization: Optional[Callable[[Vector], numkit.Matrix]] = None
    splits: tuple[OperatorGroup, ...] = ()

    def __post_init__(self):
        if self.linear is None and self.nonlinear is None:
            raise ValueError("a system needs a linear part or a nonlinear right-hand side")
        if self.linear is not None:
            lin = numkit.as_matrix(self.linear)
            if lin.shape != (self.dimension, self.dimension):
                raise ValueError(f"linear part has shape {lin.shape}, expected order {self.dimension}")
            object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "splits", tuple(self.splits))
        if self.splits:
            self._check_splits()

    def _check_splits(self):
        rng = np.random.default_rng(12345)
        for _ in range(3):
            y = rng.standard_normal(self.dimension)
            t = float(rng.uniform(0, 1))
            full = self.rhs(y, t)
            parts = sum(g.rhs(y, t) for g in self.splits)
            scale = max(1.0, np.abs(full).max())
            if np.abs(full - parts).max() > 1e-12 * scale:
                raise ValueError("split groups do not reproduce the full right-hand side")

    def rhs(self, y, t) -> Vector:
        out = np.zeros(self.dimension, dtype=np.result_type(np.asarray(y).dtype, float))
        if self.linear is not None:
            out = out + numkit.matvec(self.linear, y)
        if self.source is not None:
            out = out + self.source(t)
        if self.nonlinear is not None:
            out = out + self.nonlinear(y, t)
        return out

    @property
    def is_linear(self) -> bool:
        return self.nonlinear is None

    def jacobian(self, y, t) -> numkit.Matrix:
        if self.linearization is not None:
            return self.linearization(y)
        if self.nonlinear is None:
            return self.linear
        return jacobian_fd(self.rhs, y, t)


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-12
    max_iter: int = 50
    # refresh the Jacobian every iteration (full Newton) or only per stage
    refresh: bool = True
    # "auto" uses the system linearization when present, "fd" always differences
    jacobian: str = "auto"

    def __post_init__(self):
        if self.jacobian not in ("auto", "fd"):
            raise ValueError("jacobian must be 'auto' or 'fd'")


@dataclass(frozen=True)
class StepPlan:
    scheme: str
    mode: str = "plain"
    tase: Optional[TaseConfig] = None
    newton: NewtonOptions = field(default_factory=NewtonOptions)
    # linear problems only: store dense inverses instead of LU factors
    precompute: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", schemes.canonical_name(self.scheme))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if (self.tase is None) != (self.mode == "plain"):
            raise ValueError("a TASE configuration is required exactly when mode is not 'plain'")
        if self.tase is not None and not self.tableau.explicit:
            raise ValueError("TASE preconditioning pairs with explicit schemes only")

    @property
    def tableau(self) -> schemes.ButcherTableau:
        return schemes.get_tableau(self.scheme)

    @classmethod
    def create(cls, scheme: str, p: int = 0, alpha: Optional[float] = None,
               mode: Optional[str] = None, groups: int = 1, **kw) -> "StepPlan":
        """Plan with the default ``alpha = groups * alpha_min(p, C)``.

        ``groups`` is the number of separately preconditioned operator
        groups. Their large-step modified eigenvalues add up on shared
        modes, so each group gets ``1/groups`` of the stability interval.
        ``p = 0`` gives a plain plan. An explicit ``alpha`` below the
        threshold is accepted with a ``TaseAlphaWarning``.
        """
        if p == 0:
            return cls(scheme, "plain", None, **kw)
        if groups < 1:
            raise ValueError("groups must be >= 1")
        info = schemes.scheme_info(scheme)
        cfg = TaseConfig(p, groups * info.alpha_min(p) if alpha is None else float(alpha))
        cfg.check_against(info.safe_C)
        return cls(scheme, mode or "tase-combined", cfg, **kw)


@dataclass
class Diagnostics:
    max_norms: list[float] = field(default_factory=list)
    newton_iterations: list[int] = field(default_factory=list)
    newton_residuals: list[float] = field(default_factory=list)
    factorizations: int = 0
    steps: int = 0
    setup_time: float = 0.0
    wall_time: float = 0.0
    diverged: bool = False
    diverged_step: Optional[int] = None


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[Vector]
    diagnostics: Diagnostics

    @property
    def final(self) -> Vector:
        return self.states[-1]

    @property
    def diverged(self) -> bool:
        return self.diagnostics.diverged

    def time_per_step(self) -> float:
        """Marching time per step, excluding the one-off factorization setup."""
        d = self.diagnostics
        return (d.wall_time - d.setup_time) / max(1, d.steps)


class StepContext:
    """Per-run cache of factorizations tied to one ``dt``."""

    def __init__(self, plan: StepPlan, system: SemiDiscreteSystem, dt: float):
        self.plan, self.system, self.dt = plan, system, float(dt)
        self.combined: Optional[ShiftSet] = None
        self.groups: list[Optional[ShiftSet]] = []
        self.implicit: dict[float, numkit.Factorization] = {}
        self.dense: dict = {}
        self.factorizations = 0
        cfg = plan.tase
        if plan.mode == "tase-combined":
            if system.linear is None:
                raise ValueError("tase-combined mode needs a linear part")
            if system.nonlinear is not None:
                raise ValueError("use tase-nonlinear mode for systems with a nonlinear rhs")
            self.combined = self._shift(system.linear, cfg)
            if plan.precompute:
                self.dense["operator"] = materialize(self.combined, "operator")
                if system.source is not None:
                    self.dense["preconditioner"] = materialize(self.combined, "preconditioner")
        elif plan.mode == "tase-split":
            if not system.splits:
                raise ValueError("tase-split mode needs a system with split groups")
            if system.nonlinear is not None:
                raise ValueError("split mode supports linear systems only")
            self.groups = [self._shift(g.linear, cfg) if g.precondition else None for g in system.splits]
        elif plan.mode == "tase-nonlinear" and system.nonlinear is None and system.linear is None:
            raise ValueError("tase-nonlinear mode needs a right-hand side")

    def _shift(self, L, cfg) -> ShiftSet:
        self.factorizations += cfg.order
        return build_shift_set(L, cfg, self.dt)

    def freeze(self, y, t) -> ShiftSet:
        """Shift set of the linearization at the start of a step."""
        return self._shift(self.system.jacobian(y, t), self.plan.tase)

    def implicit_dense(self, gamma: float):
        """``(M L, M)`` with ``M = (I - dt*gamma*L)^{-1}`` formed explicitly."""
        key = ("implicit", gamma)
        if key not in self.dense:
            f = self.implicit_factor(gamma)
            L = self.system.linear
            Ld = L.to_dense() if isinstance(L, numkit.BandedMatrix) else np.asarray(L)
            inv = numkit.solve(f, np.eye(self.system.dimension))
            self.dense[key] = (inv @ Ld, inv)
        return self.dense[key]

    def implicit_factor(self, gamma: float) -> numkit.Factorization:
        f = self.implicit.get(gamma)
        if f is None:
            f = numkit.lu_factor(numkit.shifted(self.system.linear, 1.0, self.dt * gamma))
            self.implicit[gamma] = f
            self.factorizations += 1
        return f


def jacobian_fd(N: RhsFn, y, t) -> np.ndarray:
    """Forward-difference Jacobian, ``h_j = sqrt(eps) * (1 + |y_j|)``."""
    y = np.asarray(y, dtype=float)
    f0 = np.asarray(N(y, t), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise FloatingPointError("non-finite rhs at the linearization point")
    n = y.size
    jac = np.empty((f0.size, n))
    hs = np.sqrt(np.finfo(float).eps) * (1.0 + np.abs(y))
    for j in range(n):
        yp = y.copy()
        yp[j] += hs[j]
        # the actually representable increment
        h = yp[j] - y[j]
        col = (np.asarray(N(yp, t), dtype=float) - f0) / h
        if not np.all(np.isfinite(col)):
            raise FloatingPointError(f"non-finite rhs when perturbing component {j}")
        jac[:, j] = col
    return jac


def _explicit_rk(tab: schemes.ButcherTableau, f: RhsFn, t: float, y: Vector, dt: float) -> Vector:
    ks: list[Vector] = []
    for i in range(tab.stages):
        yi = y
        for j in range(i):
            if tab.a[i, j] != 0.0:
                yi = yi + dt * tab.a[i, j] * ks[j]
        k = f(yi, t + tab.c[i] * dt)
        if not np.all(np.isfinite(k)):
            raise DivergenceError(i, t)
        ks.append(k)
    out = y
    for bi, k in zip(tab.b, ks):
        if bi != 0.0:
            out = out + dt * bi * k
    return out


def erk_step(tableau, system: SemiDiscreteSystem, t, y, dt) -> Vector:
    tab = tableau if isinstance(tableau, schemes.ButcherTableau) else schemes.get_tableau(tableau)
    if not tab.explicit:
        raise ValueError(f"{tab.name} is not explicit")
    return _explicit_rk(tab, system.rhs, t, np.asarray(y), dt)


def _ctx(plan, system, dt, ctx):
    if ctx is None or ctx.dt != float(dt) or ctx.system is not system:
        ctx = StepContext(plan, system, dt)
    return ctx


def erk_tase_step_linear(plan: StepPlan, system: SemiDiscreteSystem, t, y, dt,
                         ctx: Optional[StepContext] = None) -> Vector:
    ctx = _ctx(plan, system, dt, ctx)
    s = ctx.combined
    use_operator = system.source is None and plan.tase.form == "operator"
    if "operator" in ctx.dense:
        op, pre = ctx.dense["operator"], ctx.dense.get("preconditioner")

        def f(yi, ti):
            out = op @ yi
            if pre is not None:
                out = out + pre @ system.source(ti)
            return out

        return _explicit_rk(plan.tableau, f, t, np.asarray(y), dt)

    def f(yi, ti):
        if use_operator:
            return apply_operator(s, yi)
        return apply_preconditioner(s, system.rhs(yi, ti))

    return _explicit_rk(plan.tableau, f, t, np.asarray(y), dt)


def erk_tase_step_split(plan: StepPlan, system: SemiDiscreteSystem, t, y, dt,
                        ctx: Optional[StepContext] = None) -> Vector:
    ctx = _ctx(plan, system, dt, ctx)

    def f(yi, ti):
        out = np.zeros_like(yi, dtype=float)
        for g, s in zip(system.splits, ctx.groups):
            r = g.rhs(yi, ti)
            out = out + (r if s is None else apply_preconditioner(s, r))
        return out

    return _explicit_rk(plan.tableau, f, t, np.asarray(y), dt)


def erk_tase_step_nonlinear(plan: StepPlan, system: SemiDiscreteSystem, t, y, dt,
                            ctx: Optional[StepContext] = None) -> Vector:
    ctx = _ctx(plan, system, dt, ctx)
    y = np.asarray(y)
    s = ctx.freeze(y, t)
    return _explicit_rk(plan.tableau, lambda yi, ti: apply_preconditioner(s, system.rhs(yi, ti)), t, y, dt)


def sdirk_step(tableau, system: SemiDiscreteSystem, t, y, dt,
               newton: NewtonOptions = NewtonOptions(),
               ctx: Optional[StepContext] = None,
               diag: Optional[Diagnostics] = None) -> Vector:
    """One diagonally implicit RK step.

    Linear systems solve each stage directly with a cached factorization of
    ``I - dt*a_ii*L``; nonlinear systems run Newton on the stage value.
    Stages with ``a_ii = 0`` are explicit.
    """
    tab = tableau if isinstance(tableau, schemes.ButcherTableau) else schemes.get_tableau(tableau)
    y = np.asarray(y, dtype=float)
    if ctx is None:
        ctx = StepContext(StepPlan(tab.name), system, dt)
    ks: list[Vector] = []
    prev = y
    for i in range(tab.stages):
        ti = t + tab.c[i] * dt
        base = y
        for j in range(i):
            if tab.a[i, j] != 0.0:
                base = base + dt * tab.a[i, j] * ks[j]
        g = tab.a[i, i]
        if g == 0.0:
            k = system.rhs(base, ti)
        elif system.is_linear and ctx.plan.precompute:
            ML, M = ctx.implicit_dense(float(g))
            k = ML @ base
            if system.source is not None:
                k = k + M @ system.source(ti)
        elif system.is_linear:
            f = ctx.implicit_factor(float(g))
            k = numkit.solve(f, system.rhs(base, ti))
        else:
            u = _newton_stage(system, base, prev, ti, dt * g, newton, i, ctx, diag)
            k = (u - base) / (dt * g)
            prev = u
        if not np.all(np.isfinite(k)):
            raise DivergenceError(i, t)
        ks.append(k)
        if g == 0.0 or system.is_linear:
            prev = base + dt * g * k
    out = y
    for bi, k in zip(tab.b, ks):
        out = out + dt * bi * k
    return out


def _newton_stage(system, base, guess, t, h, opts: NewtonOptions, stage, ctx, diag) -> Vector:
    """Solve ``u - base - h F(u, t) = 0`` for the stage value ``u``."""
    u = np.array(guess, dtype=float)
    history: list[float] = []
    fact = None
    for it in range(opts.max_iter + 1):
        r = u - base - h * system.rhs(u, t)
        res = float(np.abs(r).max())
        history.append(res)
        if not np.isfinite(res):
            break
        if res < opts.tol:
            if diag is not None:
                diag.newton_iterations.append(it)
                diag.newton_residuals.append(res)
            return u
        if it == opts.max_iter:
            break
        if fact is None or opts.refresh:
            jac = jacobian_fd(system.rhs, u, t) if opts.jacobian == "fd" else system.jacobian(u, t)
            fact = numkit.lu_factor(numkit.shifted(numkit.as_matrix(jac), 1.0, h))
            ctx.factorizations += 1
        u = u - numkit.solve(fact, r)
    raise NewtonConvergenceError(stage, history)


def step(plan: StepPlan, system: SemiDiscreteSystem, t, y, dt,
         ctx: Optional[StepContext] = None, diag: Optional[Diagnostics] = None) -> Vector:
    if plan.mode == "plain":
        if plan.tableau.explicit:
            return erk_step(plan.tableau, system, t, y, dt)
        return sdirk_step(plan.tableau, system, t, y, dt, plan.newton, _ctx(plan, system, dt, ctx), diag)
    if plan.mode == "tase-combined":
        return erk_tase_step_linear(plan, system, t, y, dt, ctx)
    if plan.mode == "tase-split":
        return erk_tase_step_split(plan, system, t, y, dt, ctx)
    return erk_tase_step_nonlinear(plan, system, t, y, dt, ctx)


def integrate(plan: StepPlan, system: SemiDiscreteSystem, t0: float, y0, t_final: float,
              n_steps: int, keep: str = "all") -> Trajectory:
    """March ``n_steps`` equal steps from ``t0`` to exactly ``t_final``.

    Divergence (non-finite stage or max-norm above 1e10) stops the run and
    is recorded in the diagnostics instead of being raised. ``keep='final'``
    stores only the initial and last states.
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")
    if not t_final > t0:
        raise ValueError("t_final must exceed t0")
    if keep not in ("all", "final"):
        raise ValueError("keep must be 'all' or 'final'")
    n_steps = int(n_steps)
    y = np.array(y0, dtype=float)
    if y.shape != (system.dimension,):
        raise ValueError(f"initial state has shape {y.shape}, system dimension is {system.dimension}")
    dt = (t_final - t0) / n_steps
    diag = Diagnostics()
    start = time.perf_counter()
    ctx = StepContext(plan, system, dt)
    diag.setup_time = time.perf_counter() - start
    times = [t0]
    states = [y.copy()]
    diag.max_norms.append(float(np.abs(y).max()))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for n in range(n_steps):
            t = t0 + n * dt
            try:
                y = step(plan, system, t, y, dt, ctx, diag)
                norm = float(np.abs(y).max())
            except DivergenceError:
                norm = np.inf
            t_next = t_final if n == n_steps - 1 else t0 + (n + 1) * dt
            diag.steps = n + 1
            diag.max_norms.append(norm)
            if not norm <= DIVERGENCE_NORM:
                diag.diverged, diag.diverged_step = True, n + 1
                times.append(t_next)
                states.append(np.asarray(y, dtype=float))
                break
            if keep == "all" or n == n_steps - 1:
                times.append(t_next)
                states.append(y)
    diag.wall_time = time.perf_counter() - start
    diag.factorizations = ctx.factorizations
    return Trajectory(np.array(times), states, diag)
