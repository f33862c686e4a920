"""1D diffusion with an oscillating source, periodic and Dirichlet variants."""

from __future__ import annotations

import numpy as np

from ..integrators import OperatorGroup, SemiDiscreteSystem
from .common import Mesh1D, ProblemCase, stability_dt_diffusion, table_C

#: largest |eigenvalue| of each second-derivative stencil, in units of 1/dx^2
DIFFERENCING_D = {"fd2": 4.0, "fd4": 16.0 / 3.0, "fourier": np.pi**2}
TAU_S = 50.0


def _circulant(stencil: dict[int, float], n: int) -> np.ndarray:
    m = np.zeros((n, n))
    idx = np.arange(n)
    for off, v in stencil.items():
        m[idx, (idx + off) % n] += v
    return m


def fourier_d2(n: int, length: float = 2 * np.pi) -> np.ndarray:
    """Dense spectral second-derivative matrix on ``n`` periodic nodes (``n`` even)."""
    if n % 2:
        raise ValueError("Fourier differentiation needs an even number of points")
    k = np.fft.fftfreq(n, d=1.0 / n) * (2 * np.pi / length)
    # Nyquist mode carries |k| = n/2 so that D = pi^2 is the spectral radius
    k[n // 2] = n / 2 * (2 * np.pi / length)
    symbol = -(k**2)
    return np.real(np.fft.ifft(symbol[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0))


def periodic_d2(n: int, differencing: str, length: float = 2 * np.pi) -> np.ndarray:
    h = length / n
    if differencing == "fd2":
        return _circulant({-1: 1, 0: -2, 1: 1}, n) / h**2
    if differencing == "fd4":
        return _circulant({-2: -1, -1: 16, 0: -30, 1: 16, 2: -1}, n) / (12 * h**2)
    if differencing == "fourier":
        return fourier_d2(n, length)
    raise ValueError(f"unknown differencing {differencing!r}")


def _exact_periodic(x, A, tau_s):
    def exact(t):
        return 1.0 - np.cos(x) * np.exp(-t) - A * tau_s * (np.cos(t / tau_s) - 1.0)
    return exact


def diffusion_periodic(N: int = 600, differencing: str = "fd4", A: float = 0.0, tau_s: float = TAU_S,
                       t_final: float = 5.0, scheme: str = "ERK2", p: int = 2,
                       name: str = "diffusion-periodic", default_steps: int = 20) -> ProblemCase:
    """``y_t = y_xx + A sin(t/tau_s)`` on ``[0, 2pi)`` from ``1 - cos x``."""
    if int(N) != N or N < 4:
        raise ValueError("N must be an integer >= 4")
    if differencing not in DIFFERENCING_D:
        raise ValueError(f"unknown differencing {differencing!r}")
    if differencing == "fourier" and N % 2:
        raise ValueError("Fourier differencing requires even N")
    N = int(N)
    mesh = Mesh1D.periodic(0.0, 2 * np.pi, N)
    L = periodic_d2(N, differencing)
    ones = np.ones(N)
    source = (lambda t: A * np.sin(t / tau_s) * ones) if A else None
    system = SemiDiscreteSystem(N, linear=L, source=source)
    exact = _exact_periodic(mesh.points, A, tau_s)
    dts = {"diffusion": stability_dt_diffusion(table_C(scheme), mesh.spacing, DIFFERENCING_D[differencing])}
    return ProblemCase(
        name, system, mesh, exact(0.0), t_final, exact=exact, stability_dt=dts,
        recommended={"scheme": scheme, "p": p},
        params={"N": N, "differencing": differencing, "A": A, "tau_s": tau_s, "D": DIFFERENCING_D[differencing]},
        default_steps=default_steps,
    )


def diffusion_dirichlet(N: int = 30, t_final: float = 5.0, scheme: str = "ERK2", p: int = 2) -> ProblemCase:
    """The periodic case restricted to ``[pi/2, 3pi/2]`` with ``y = 1`` at both ends.

    Unknowns are the ``N - 1`` interior nodes of a uniform grid with
    spacing ``pi/N``. Interior rows use the five-point fourth-order
    stencil; the two rows next to the boundary use the three-point
    second-order one. Boundary data enter through a constant source.

    ``variants['wrong']`` is the deliberately inconsistent system in
    which only ``L Y`` is preconditioned and the boundary source is not.
    """
    if int(N) != N or N < 6:
        raise ValueError("N must be an integer >= 6")
    N = int(N)
    a, b = np.pi / 2, 3 * np.pi / 2
    h = (b - a) / N
    x = a + h * np.arange(1, N)
    n = N - 1
    L = np.zeros((n, n))
    S = np.zeros(n)
    yb = 1.0
    for i in range(n):
        node = i + 1
        if node in (1, N - 1):
            stencil = {-1: 1.0, 0: -2.0, 1: 1.0}
            scale = 1.0 / h**2
        else:
            stencil = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
            scale = 1.0 / (12 * h**2)
        for off, c in stencil.items():
            j = node + off
            if j in (0, N):
                S[i] += scale * c * yb
            else:
                L[i, j - 1] += scale * c
    S.setflags(write=False)
    system = SemiDiscreteSystem(n, linear=L, source=lambda t: S)
    wrong = SemiDiscreteSystem(
        n, linear=L, source=lambda t: S,
        splits=(OperatorGroup(L, None, True, "diffusion"),
                OperatorGroup(np.zeros((n, n)), lambda t: S, False, "boundary-source")),
    )
    edges = np.concatenate([[a], 0.5 * (x[1:] + x[:-1]), [b]])
    mesh = Mesh1D(x, np.full(n, h), "bounded-nodes", (a, b), edges)

    def exact(t):
        return 1.0 - np.cos(x) * np.exp(-t)

    dts = {"diffusion": stability_dt_diffusion(table_C(scheme), h, DIFFERENCING_D["fd4"])}
    return ProblemCase(
        "diffusion-dirichlet", system, mesh, exact(0.0), t_final, exact=exact, stability_dt=dts,
        recommended={"scheme": scheme, "p": p}, variants={"wrong": wrong},
        params={"N": N, "differencing": "fd4+fd2-boundary", "boundary_value": yb}, default_steps=20,
    )
