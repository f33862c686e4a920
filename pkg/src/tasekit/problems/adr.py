"""Two-species advection-diffusion-reaction on a stretched finite-volume mesh."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from ..integrators import OperatorGroup, SemiDiscreteSystem
from .common import Mesh1D, ProblemCase, table_C

STRETCH_EXPONENT = 2.0
BC_CASES = {
    # right boundary values and the y2 initial-profile factor
    "equal": ((1.0, 1.0), 1.0),
    "incompatible": ((1.0, 0.1), 0.1),
}


def stretched_edges(N: int, g: float = STRETCH_EXPONENT) -> np.ndarray:
    """Edges ``x_j = 1 - (1 - j/N)**g`` clustered toward ``x = 1``."""
    j = np.arange(N + 1)
    x = 1.0 - (1.0 - j / N) ** g
    x[0], x[-1] = 0.0, 1.0
    return x


def convection_diffusion(mesh: Mesh1D, U: float, D: float, left: float, right: float):
    """Cell-averaged ``-U y_x + D y_xx`` with Dirichlet data at both ends.

    Face values are linear interpolants between neighboring centers and
    face gradients are two-point differences; at a boundary face the
    Dirichlet value is used directly with the half-cell distance.
    Returns the convection and diffusion matrices and their sources.
    """
    xc, w, e = mesh.points, mesh.widths, mesh.edges
    n = xc.size
    Lc, Ld = np.zeros((n, n)), np.zeros((n, n))
    Sc, Sd = np.zeros(n), np.zeros(n)
    for f in range(n + 1):
        # face f separates cell f-1 (left) and cell f (right)
        xf = e[f]
        if f == 0:
            Sc[0] += U * left / w[0]
            Sd[0] += D * left / ((xc[0] - xf) * w[0])
            Ld[0, 0] -= D / ((xc[0] - xf) * w[0])
            continue
        if f == n:
            Sc[-1] -= U * right / w[-1]
            Sd[-1] += D * right / ((xf - xc[-1]) * w[-1])
            Ld[-1, -1] -= D / ((xf - xc[-1]) * w[-1])
            continue
        l, r = f - 1, f
        theta = (xf - xc[l]) / (xc[r] - xc[l])
        flux_c = {l: U * (1 - theta), r: U * theta}  # U * y_face
        g = D / (xc[r] - xc[l])
        for k, v in flux_c.items():
            Lc[l, k] -= v / w[l]
            Lc[r, k] += v / w[r]
        Ld[l, r] += g / w[l]
        Ld[l, l] -= g / w[l]
        Ld[r, l] += g / w[r]
        Ld[r, r] -= g / w[r]
    return Lc, Ld, Sc, Sd


def two_species_adr(N: int = 50, U: float = 100.0, D: float = 100.0, K: float = 1e4,
                    bc_right: str = "equal", t_final: float = 1e-2, scheme: str = "ERK3",
                    p: int = 3, g: float = STRETCH_EXPONENT) -> ProblemCase:
    """State ``[y1; y2]``; split groups are convection+diffusion and reaction.

    The reference solution is the exact time integral of the semi-discrete
    linear system (matrix exponential), so errors isolate time stepping.
    """
    if int(N) != N or N < 10:
        raise ValueError("N must be an integer >= 10")
    if min(U, D, K) <= 0:
        raise ValueError("U, D and K must be positive")
    if bc_right not in BC_CASES:
        raise ValueError(f"bc_right must be one of {sorted(BC_CASES)}")
    N = int(N)
    (r1, r2), f2 = BC_CASES[bc_right]
    mesh = Mesh1D.cells(stretched_edges(N, g), "stretched-cells")
    x = mesh.points
    Lc1, Ld1, Sc1, Sd1 = convection_diffusion(mesh, U, D, 0.0, r1)
    _, _, Sc2, Sd2 = convection_diffusion(mesh, U, D, 0.0, r2)
    Z = np.zeros((N, N))
    Lcd_block = Lc1 + Ld1
    Lcd = np.block([[Lcd_block, Z], [Z, Lcd_block]])
    I = np.eye(N)
    Lr = K * np.block([[-I, I], [I, -I]])
    L = Lcd + Lr
    S = np.concatenate([Sc1 + Sd1, Sc2 + Sd2])
    S.setflags(write=False)
    src = lambda t: S  # noqa: E731
    system = SemiDiscreteSystem(
        2 * N, linear=L, source=src,
        splits=(OperatorGroup(Lcd, src, True, "convection-diffusion"),
                OperatorGroup(Lr, None, True, "reaction")),
    )
    y0 = np.concatenate([x, f2 * x**2])
    steady = -np.linalg.solve(L, S)

    def reference(t):
        return steady + sla.expm(L * t) @ (y0 - steady)

    C = table_C(scheme)
    hmin = mesh.min_spacing
    dts = {"convection": C * hmin / U, "diffusion": C * hmin**2 / (4 * D), "reaction": C / (2 * K)}
    return ProblemCase(
        f"adr-{bc_right}", system, mesh, y0, t_final, reference=reference, stability_dt=dts,
        recommended={"scheme": scheme, "p": p}, weights=np.concatenate([mesh.widths, mesh.widths]),
        params={"N": N, "U": U, "D": D, "K": K, "bc_right": bc_right, "stretch": f"x_j=1-(1-j/N)^{g:g}"},
    )
