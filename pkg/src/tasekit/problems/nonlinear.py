"""Nonlinear benchmarks: power-law diffusion and the stiff scalar ODE."""

from __future__ import annotations

import numpy as np

from .. import numkit
from ..integrators import SemiDiscreteSystem
from .common import Mesh1D, ProblemCase, stability_dt_diffusion, table_C

STATE_FLOOR = 1e-12


class DomainError(ValueError):
    pass


class PowerLaw:
    """Finite-volume ``d/dx((y/2)**beta dy/dx)`` with zero-flux ends.

    Face coefficients use the mean of the two adjacent cells.
    """

    def __init__(self, N: int, beta: float, a: float = -5.0, b: float = 5.0):
        self.N, self.beta = N, float(beta)
        self.h = (b - a) / N
        self.fractional = not float(self.beta).is_integer()

    def _faces(self, y):
        y = np.asarray(y, dtype=float)
        if self.fractional:
            if np.any(y < 0):
                raise DomainError("negative state with a fractional power-law exponent")
            y = np.maximum(y, STATE_FLOOR)
        m = 0.5 * (y[1:] + y[:-1])
        return y, m, np.diff(y) / self.h

    def coeff(self, m):
        return (m / 2.0) ** self.beta

    def dcoeff(self, m):
        if self.beta == 0:
            return np.zeros_like(m)
        return 0.5 * self.beta * (m / 2.0) ** (self.beta - 1.0)

    def rhs(self, y, t=0.0):
        y, m, grad = self._faces(y)
        flux = np.zeros(self.N + 1)
        flux[1:-1] = self.coeff(m) * grad
        return np.diff(flux) / self.h

    def linearization(self, y) -> numkit.BandedMatrix:
        """Tridiagonal Jacobian: coefficient term plus the product-rule term."""
        y, m, grad = self._faces(y)
        a = self.coeff(m) / self.h
        da = 0.5 * self.dcoeff(m) * grad  # d(face coeff)/d(y_side) * gradient
        # dF_f/dy_left and dF_f/dy_right for each interior face f
        dl = -a + da
        dr = a + da
        n, h = self.N, self.h
        main = np.zeros(n)
        upper = np.zeros(n - 1)
        lower = np.zeros(n - 1)
        # cell i gains +F_{i+1/2} (face i) and loses F_{i-1/2} (face i-1)
        main[:-1] += dl
        upper += dr
        main[1:] -= dr
        lower -= dl
        return numkit.BandedMatrix.from_diagonals({-1: lower / h, 0: main / h, 1: upper / h}, n)


def power_law_diffusion(N: int = 200, beta: float = 4.0, t_final: float = 1.0,
                        scheme: str = "ERK4", p: int = 4) -> ProblemCase:
    if int(N) != N or N < 10:
        raise ValueError("N must be an integer >= 10")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    N = int(N)
    op = PowerLaw(N, beta)
    mesh = Mesh1D.cells(np.linspace(-5.0, 5.0, N + 1))
    y0 = 1.0 + np.exp(-0.25 * mesh.points**2)
    system = SemiDiscreteSystem(N, nonlinear=op.rhs, linearization=op.linearization)
    # the initial peak value 2 makes the diffusion coefficient (2/2)**beta = 1
    dts = {"diffusion": stability_dt_diffusion(table_C(scheme), op.h, 4.0)}
    return ProblemCase(
        "power-law", system, mesh, y0, t_final, stability_dt=dts,
        recommended={"scheme": scheme, "p": p, "mode": "tase-nonlinear"}, weights=mesh.widths,
        params={"N": N, "beta": beta, "bc": "neumann", "domain": "-5:5"}, default_steps=60,
    )


def stiff_scalar_ode(beta: float = 10.0, t_final: float = 2e4, scheme: str = "ERK2", p: int = 2) -> ProblemCase:
    """``y' = -y**beta`` with ``y(0) = 1``."""
    if not beta > 1:
        raise ValueError("beta must exceed 1")

    def rhs(y, t):
        return -np.power(y, beta)

    def lin(y):
        return np.array([[-beta * float(y[0]) ** (beta - 1)]])

    def exact(t):
        return np.array([(1.0 + (beta - 1.0) * t) ** (1.0 / (1.0 - beta))])

    system = SemiDiscreteSystem(1, nonlinear=rhs, linearization=lin)
    mesh = Mesh1D(np.array([0.0, 1.0]), np.array([1.0, 1.0]), "bounded-nodes", (0.0, 1.0))
    # single unknown: the mesh is a placeholder for uniform bookkeeping
    return _ScalarCase(
        "ode-stiff", system, mesh, np.array([1.0]), t_final, exact=exact,
        stability_dt={"reaction": table_C(scheme) / beta},
        recommended={"scheme": scheme, "p": p, "mode": "tase-nonlinear"},
        params={"beta": beta}, default_steps=10,
    )


def linear_ode(lam: float = -1.0, t_final: float = 1.0, scheme: str = "ERK1", p: int = 1) -> ProblemCase:
    """``y' = lam * y`` for order checks."""
    system = SemiDiscreteSystem(1, linear=np.array([[lam]]))
    mesh = Mesh1D(np.array([0.0, 1.0]), np.array([1.0, 1.0]), "bounded-nodes", (0.0, 1.0))
    return _ScalarCase(
        "ode-linear", system, mesh, np.array([1.0]), t_final,
        exact=lambda t: np.array([np.exp(lam * t)]),
        stability_dt={"linear": table_C(scheme) / abs(lam)},
        recommended={"scheme": scheme, "p": p}, params={"lambda": lam}, default_steps=10,
    )


class _ScalarCase(ProblemCase):
    """Scalar ODE case; its mesh has two placeholder points for a single unknown."""

    def dump_csv(self, directory):
        import os

        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, f"{self.name}_params.csv")
        with open(path, "w") as fh:
            fh.write("key,value\n")
            for k, v in self.params.items():
                fh.write(f"{k},{v}\n")
        return [path]
