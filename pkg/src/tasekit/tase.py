"""TASE preconditioners and operators of order 1-4.

The order-p preconditioner is the Richardson-extrapolated combination

    T(p) = sum_k beta[p][k] * (2**k I - alpha*dt*L)^{-1},   k = 0..p-1,

and the fused operator T(p) L is

    (1/(alpha*dt)) * (-(2**p - 1) I + sum_k gamma[p][k] * (2**k I - alpha*dt*L)^{-1}).

Only the p shifted factorizations are ever formed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction as F
from typing import Literal

import numpy as np

from . import numkit

_BETA = {
    1: (F(1),),
    2: (F(-1), F(4)),
    3: (F(1, 3), F(-4), F(32, 3)),
    4: (F(-1, 21), F(4, 3), F(-32, 3), F(512, 21)),
}

_GAMMA = {
    1: (F(1),),
    2: (F(-1), F(8)),
    3: (F(1, 3), F(-8), F(128, 3)),
    4: (F(-1, 21), F(8, 3), F(-128, 3), F(4096, 21)),
}

#: closest allowed approach to a pole 2**k / alpha in scalar evaluations
POLE_TOL = 1e-300


class TaseAlphaWarning(UserWarning):
    """alpha is below the asymptotic-stability threshold for the paired scheme."""


class PoleError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class CoefficientRow:
    p: int
    values: tuple[F, ...]

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def weighted_sum(self) -> F:
        """``sum_k values[k] / 2**k`` in exact arithmetic."""
        return sum((v / 2**k for k, v in enumerate(self.values)), F(0))


def _check_order(p: int) -> int:
    if int(p) != p or not 1 <= p <= 4:
        raise ValueError(f"TASE order must be 1, 2, 3 or 4, got {p!r}")
    return int(p)


def beta_coefficients(p: int) -> CoefficientRow:
    p = _check_order(p)
    return CoefficientRow(p, _BETA[p])


def gamma_coefficients(p: int) -> CoefficientRow:
    p = _check_order(p)
    return CoefficientRow(p, _GAMMA[p])


def alpha_min(p: int, C: float) -> float:
    """Smallest alpha keeping the large-dt modified eigenvalue inside ``[-C, 0)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if C <= 0:
        raise ValueError("C must be positive")
    return (2**p - 1) / C


@dataclass(frozen=True)
class TaseConfig:
    order: int
    alpha: float
    form: Literal["preconditioner", "operator"] = "preconditioner"

    def __post_init__(self):
        _check_order(self.order)
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        if self.form not in ("preconditioner", "operator"):
            raise ValueError(f"unknown form {self.form!r}")

    def check_against(self, C: float) -> bool:
        """Warn (``TaseAlphaWarning``) when alpha < alpha_min for intercept ``C``."""
        amin = alpha_min(self.order, C)
        if self.alpha < amin * (1 - 1e-12):
            warnings.warn(
                f"alpha={self.alpha:.4g} is below alpha_min={amin:.4g} "
                f"for p={self.order}, C={C:.4g}; large time steps may be unstable",
                TaseAlphaWarning,
                stacklevel=2,
            )
            return False
        return True


@dataclass(frozen=True, eq=False)
class ShiftSet:
    """Factorizations of ``2**k I - alpha*dt*L`` for ``k = 0..p-1``."""

    config: TaseConfig
    dt: float
    operator: numkit.Matrix
    factorizations: tuple[numkit.Factorization, ...]

    @property
    def order(self) -> int:
        return self.operator.shape[0]

    def _check(self, v):
        v = np.asarray(v)
        if v.shape[0] != self.order:
            raise ValueError(f"vector has length {v.shape[0]}, operator order is {self.order}")
        return v

    def solves(self, v) -> list[np.ndarray]:
        return [numkit.solve(f, v) for f in self.factorizations]


def build_shift_set(L, config: TaseConfig, dt: float) -> ShiftSet:
    if not dt > 0:
        raise ValueError("dt must be positive")
    L = numkit.as_matrix(L)
    scale = config.alpha * dt
    facts = tuple(
        numkit.lu_factor(numkit.shifted(L, float(2**k), scale)) for k in range(config.order)
    )
    return ShiftSet(config, float(dt), L, facts)


def apply_preconditioner(s: ShiftSet, v) -> np.ndarray:
    v = s._check(v)
    beta = beta_coefficients(s.config.order).as_float()
    out = beta[0] * numkit.solve(s.factorizations[0], v)
    for b, f in zip(beta[1:], s.factorizations[1:]):
        out = out + b * numkit.solve(f, v)
    return out


def apply_operator(s: ShiftSet, v) -> np.ndarray:
    """Fused ``T(p) L v`` without a product with L."""
    v = s._check(v)
    p = s.config.order
    gamma = gamma_coefficients(p).as_float()
    acc = -(2**p - 1) * v
    for g, f in zip(gamma, s.factorizations):
        acc = acc + g * numkit.solve(f, v)
    return acc / (s.config.alpha * s.dt)


def materialize(s: ShiftSet, form: str = "operator") -> np.ndarray:
    """Dense matrix of the preconditioner or the fused operator.

    Meant for small linear problems where one matrix-vector product per
    stage beats ``p`` triangular solves; the inverse is formed once.
    """
    n = s.order
    eye = np.eye(n)
    if form == "operator":
        return apply_operator(s, eye)
    if form == "preconditioner":
        return apply_preconditioner(s, eye)
    raise ValueError(f"unknown form {form!r}")


def modified_eigenvalue(z, p: int, alpha: float):
    """``dt * T(p) lambda`` as a function of ``z = lambda*dt``, elementwise."""
    z = np.asarray(z, dtype=complex)
    beta = beta_coefficients(p).as_float()
    out = np.zeros_like(z)
    for k, b in enumerate(beta):
        out = out + b * z / (2.0**k - alpha * z)
    return out


def scalar_tase(lam, config: TaseConfig, dt: float) -> complex:
    """Scaled modified eigenvalue ``dt * T(p)_lambda * lambda`` for a scalar."""
    z = complex(lam) * dt
    for k in range(config.order):
        if abs(2.0**k - config.alpha * z) < POLE_TOL:
            raise PoleError(f"z = {z} hits the pole 2**{k}/alpha")
    return complex(modified_eigenvalue(z, config.order, config.alpha))


def recursive_preconditioner(z, p: int, alpha: float):
    """Scalar ``T(p)(alpha)`` at ``z = lambda*dt`` via the Richardson recursion."""
    if p == 1:
        return 1.0 / (1.0 - alpha * np.asarray(z, dtype=complex))
    q = 2 ** (p - 1)
    return (q * recursive_preconditioner(z, p - 1, alpha / 2) - recursive_preconditioner(z, p - 1, alpha)) / (q - 1)
