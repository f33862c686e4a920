"""Runge-Kutta scheme registry.

Butcher tableaux for the explicit RK1-RK4 schemes and the implicit
baselines (SDIRK1-4, Crank-Nicolson), Shu-Osher forms of the linear SSP
family, and the negative-real-axis stability intercepts ``C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

#: Table values of C used for alpha_min (two decimals).
TABLE_INTERCEPTS = {"ERK1": 2.00, "ERK2": 2.00, "ERK3": 2.50, "ERK4": 2.79}

ALIASES = {
    "RK1": "ERK1",
    "EULER": "ERK1",
    "FORWARD-EULER": "ERK1",
    "RK2": "ERK2",
    "MIDPOINT": "ERK2",
    "RK3": "ERK3",
    "RALSTON3": "ERK3",
    "RK4": "ERK4",
    "IMPLICIT-EULER": "SDIRK1",
    "BACKWARD-EULER": "SDIRK1",
    "CRANK-NICOLSON": "CN",
    "TRAPEZOIDAL": "CN",
}

_SDIRK3_GAMMA = 0.43586652150845899941601945
_SDIRK4_GAMMA = 1.06858


class UnknownSchemeError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    kind: str = "explicit"

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        c = np.array(self.c, dtype=float)
        s = len(b)
        if a.shape != (s, s) or c.shape != (s,):
            raise ValueError(f"inconsistent tableau shapes for {self.name}")
        if np.any(np.triu(a, 1) != 0):
            raise ValueError("only lower-triangular tableaux are supported")
        if self.kind == "explicit" and np.any(np.diag(a) != 0):
            raise ValueError("explicit tableau must be strictly lower triangular")
        if self.kind not in ("explicit", "diagonally-implicit"):
            raise ValueError(f"unknown tableau kind {self.kind!r}")
        if abs(b.sum() - 1.0) > 1e-14:
            raise ValueError(f"weights of {self.name} do not sum to one")
        if np.max(np.abs(a.sum(axis=1) - c)) > 1e-14:
            raise ValueError(f"nodes of {self.name} are not the row sums of a")
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def explicit(self) -> bool:
        return self.kind == "explicit"

    def amplification(self, w):
        """One-step factor on ``y' = lambda y`` with ``w = lambda*dt`` (array-valued).

        Runs the stage recursion; implicit diagonals divide by ``1 - a_ii w``.
        """
        w = np.asarray(w, dtype=complex)
        stages = []
        for i in range(self.stages):
            acc = np.ones_like(w)
            for j in range(i):
                if self.a[i, j]:
                    acc = acc + self.a[i, j] * w * stages[j]
            if self.a[i, i]:
                acc = acc / (1.0 - self.a[i, i] * w)
            stages.append(acc)
        out = np.ones_like(w)
        for i, y in enumerate(stages):
            if self.b[i]:
                out = out + self.b[i] * w * y
        return out


@dataclass(frozen=True, eq=False)
class ShuOsherScheme:
    """Shu-Osher form: ``y(i) = sum_k a[i,k] y(k) + dt b[i,k] f(y(k))``.

    Row ``i`` (0-based) builds stage ``i+1`` from stages ``0..i``.
    """

    name: str
    a: np.ndarray
    b: np.ndarray
    order: int

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.shape != b.shape or a.shape[0] != a.shape[1]:
            raise ValueError("a and b must be square and of equal shape")
        if np.any(np.triu(a, 1)) or np.any(np.triu(b, 1)):
            raise ValueError("row i may only reference stages 0..i")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("Shu-Osher coefficients must be nonnegative")
        if np.any(a.sum(axis=1) != 1.0):
            raise ValueError("rows of a must sum to one")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def stages(self) -> int:
        return self.a.shape[0]

    def max_ratio(self) -> float:
        mask = self.b > 0
        if np.any(self.a[mask] == 0):
            raise ValueError(f"{self.name}: b > 0 paired with a = 0, ratio undefined")
        return float(np.max(self.b[mask] / self.a[mask]))

    def amplification(self, w):
        w = np.asarray(w, dtype=complex)
        ys = [np.ones_like(w)]
        for i in range(self.stages):
            acc = np.zeros_like(w)
            for k in range(i + 1):
                if self.a[i, k] or self.b[i, k]:
                    acc = acc + (self.a[i, k] + self.b[i, k] * w) * ys[k]
            ys.append(acc)
        return ys[-1]


@dataclass(frozen=True)
class SchemeInfo:
    name: str
    order: int
    C: float
    exact_C: float
    max_ratio: float | None = None

    @property
    def safe_C(self) -> float:
        """The smaller of the tabulated and the bisected intercept."""
        return min(self.C, self.exact_C)

    def alpha_min(self, p: int) -> float:
        """Default TASE parameter: ``(2**p - 1) / safe_C``."""
        return (2**p - 1) / self.safe_C


def canonical_name(name: str) -> str:
    key = str(name).strip().upper().replace("_", "-")
    key = ALIASES.get(key, key)
    if key not in _TABLEAU_BUILDERS and key not in _SHU_OSHER:
        raise UnknownSchemeError(f"unknown scheme {name!r}")
    return key


def _erk1():
    return ButcherTableau("ERK1", [[0.0]], [1.0], [0.0], 1)


def _erk2():
    return ButcherTableau("ERK2", [[0, 0], [0.5, 0]], [0, 1], [0, 0.5], 2)


def _erk3():
    # Ralston's third-order method
    return ButcherTableau(
        "ERK3",
        [[0, 0, 0], [1 / 2, 0, 0], [0, 3 / 4, 0]],
        [2 / 9, 1 / 3, 4 / 9],
        [0, 1 / 2, 3 / 4],
        3,
    )


def _erk4():
    return ButcherTableau(
        "ERK4",
        [[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
        [1 / 6, 1 / 3, 1 / 3, 1 / 6],
        [0, 0.5, 0.5, 1],
        4,
    )


def _sdirk1():
    return ButcherTableau("SDIRK1", [[1.0]], [1.0], [1.0], 1, "diagonally-implicit")


def _cn():
    return ButcherTableau("CN", [[0, 0], [0.5, 0.5]], [0.5, 0.5], [0, 1], 2, "diagonally-implicit")


def _sdirk2():
    g = 1 - 1 / math.sqrt(2)
    return ButcherTableau(
        "SDIRK2", [[g, 0], [1 - 2 * g, g]], [0.5, 0.5], [g, 1 - g], 2, "diagonally-implicit"
    )


def _sdirk3():
    g = _SDIRK3_GAMMA
    b1 = -3 * g**2 / 2 + 4 * g - 1 / 4
    b2 = 3 * g**2 / 2 - 5 * g + 5 / 4
    # the last node is 1 in exact arithmetic; use the row sum so c_i = sum_k a_ik holds
    return ButcherTableau(
        "SDIRK3",
        [[g, 0, 0], [(1 - g) / 2, g, 0], [b1, b2, g]],
        [b1, b2, g],
        [g, (1 - g) / 2 + g, b1 + b2 + g],
        3,
        "diagonally-implicit",
    )


def _sdirk4():
    # Norsett's three-stage fourth-order SDIRK
    g = _SDIRK4_GAMMA
    q = (1 - 2 * g) ** 2
    return ButcherTableau(
        "SDIRK4",
        [[g, 0, 0], [0.5 - g, g, 0], [2 * g, 1 - 4 * g, g]],
        [1 / (6 * q), (3 * q - 1) / (3 * q), 1 / (6 * q)],
        [g, 0.5, 1 - g],
        4,
        "diagonally-implicit",
    )


_TABLEAU_BUILDERS = {
    "ERK1": _erk1,
    "ERK2": _erk2,
    "ERK3": _erk3,
    "ERK4": _erk4,
    "SDIRK1": _sdirk1,
    "CN": _cn,
    "SDIRK2": _sdirk2,
    "SDIRK3": _sdirk3,
    "SDIRK4": _sdirk4,
}


def _linear_ssp(s: int):
    """Optimal linear SSP s-stage, order-s forms (Euler chain plus a convex final stage)."""
    final = {1: [1.0]}
    for m in range(2, s + 1):
        prev = final[m - 1]
        row = [0.0] * m
        for k in range(1, m - 1):
            row[k] = prev[k - 1] / k
        row[m - 1] = 1.0 / math.factorial(m)
        row[0] = 1.0 - sum(row[1:])
        final[m] = row
    a = np.zeros((s, s))
    b = np.zeros((s, s))
    for i in range(s - 1):
        a[i, i] = 1.0
        b[i, i] = 1.0
    a[s - 1, :] = final[s]
    b[s - 1, s - 1] = final[s][s - 1]
    return ShuOsherScheme(f"SSP-RK{s}", a, b, s)


_SHU_OSHER = {f"SSP-RK{s}": (lambda s=s: _linear_ssp(s)) for s in range(1, 5)}


@lru_cache(maxsize=None)
def get_tableau(name: str) -> ButcherTableau:
    key = canonical_name(name)
    if key not in _TABLEAU_BUILDERS:
        raise UnknownSchemeError(f"no Butcher tableau registered for {name!r}")
    return _TABLEAU_BUILDERS[key]()


@lru_cache(maxsize=None)
def get_shu_osher(name: str) -> ShuOsherScheme:
    key = canonical_name(name)
    if key not in _SHU_OSHER:
        raise UnknownSchemeError(f"no Shu-Osher form registered for {name!r}")
    return _SHU_OSHER[key]()


def tableau_names() -> list[str]:
    return list(_TABLEAU_BUILDERS)


def bisect_intercept(amplification, x_max: float = 100.0, tol: float = 1e-15) -> float:
    """Largest ``x`` such that ``|R(-t)| <= 1`` on ``(0, x]``, found by bisection."""
    eps = 1e-8
    if np.abs(amplification(-eps)) > 1.0:
        raise ValueError("empty stability interval on the negative real axis")
    grid = np.linspace(eps, x_max, 20001)
    vals = np.abs(amplification(-grid))
    out = np.flatnonzero(vals > 1.0)
    if out.size == 0:
        raise ValueError(f"no stability boundary found on (0, {x_max}]")
    lo, hi = grid[out[0] - 1], grid[out[0]]
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if np.abs(amplification(-mid)) <= 1.0:
            lo = mid
        else:
            hi = mid
    return float(lo)


def stability_intercept(name) -> float:
    """Tabulated C for the registered explicit schemes, bisection otherwise.

    ``name`` may also be an explicit ``ButcherTableau``.
    """
    if isinstance(name, ButcherTableau):
        tab = name
    else:
        key = canonical_name(name)
        if key in TABLE_INTERCEPTS:
            return TABLE_INTERCEPTS[key]
        tab = get_tableau(key)
    if not tab.explicit:
        raise ValueError(f"{tab.name} is not an explicit scheme")
    return exact_intercept(tab)


def exact_intercept(name) -> float:
    tab = name if isinstance(name, ButcherTableau) else get_tableau(name)
    if not tab.explicit:
        raise ValueError(f"{tab.name} is not an explicit scheme")
    return bisect_intercept(tab.amplification)


@lru_cache(maxsize=None)
def scheme_info(name: str) -> SchemeInfo:
    key = canonical_name(name)
    if key in _SHU_OSHER:
        so = get_shu_osher(key)
        c = bisect_intercept(so.amplification)
        return SchemeInfo(key, so.order, c, c, so.max_ratio())
    tab = get_tableau(key)
    if not tab.explicit:
        raise ValueError(f"{key} is implicit; stability intercepts apply to explicit schemes")
    return SchemeInfo(key, tab.order, stability_intercept(key), exact_intercept(key))
