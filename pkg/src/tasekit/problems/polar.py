"""2D diffusion on the unit disk in polar coordinates (finite volume)."""

from __future__ import annotations

import numpy as np

from ..integrators import OperatorGroup, SemiDiscreteSystem
from .common import Mesh1D, ProblemCase, bessel_j2, bessel_j2_root, table_C


def polar_operators(Nr: int, Ntheta: int, boundary_value: float = 0.0):
    """Azimuthal and radial operators on cell-centered unknowns.

    Unknown ``(j, k)`` (ring ``j``, sector ``k``) sits at index
    ``j * Ntheta + k``. The innermost ring has a zero-length inner face,
    so no value at ``r = 0`` is ever needed. The outer face carries a
    Dirichlet value through the source ``S_r``.
    """
    dr = 1.0 / Nr
    dth = 2 * np.pi / Ntheta
    rc = (np.arange(Nr) + 0.5) * dr
    n = Nr * Ntheta
    Lt = np.zeros((n, n))
    Lr = np.zeros((n, n))
    Sr = np.zeros(n)
    for j in range(Nr):
        area = rc[j] * dr * dth
        ct = dr / (rc[j] * dth) / area  # theta-face flux coefficient per unit area
        r_in, r_out = j * dr, (j + 1) * dr
        for k in range(Ntheta):
            i = j * Ntheta + k
            for kk in ((k + 1) % Ntheta, (k - 1) % Ntheta):
                Lt[i, j * Ntheta + kk] += ct
                Lt[i, i] -= ct
            if j + 1 < Nr:
                c = r_out * dth / dr / area
                Lr[i, i + Ntheta] += c
                Lr[i, i] -= c
            else:
                c = r_out * dth / (0.5 * dr) / area
                Lr[i, i] -= c
                Sr[i] += c * boundary_value
            if j > 0:
                c = r_in * dth / dr / area
                Lr[i, i - Ntheta] += c
                Lr[i, i] -= c
    return Lt, Lr, Sr, rc


def polar_diffusion(Nr: int = 10, Ntheta: int = 40, t_final: float = 0.1,
                    scheme: str = "ERK2", p: int = 2) -> ProblemCase:
    """Decaying mode ``cos(2 theta) J2(lambda1 r) exp(-lambda1**2 t)``.

    The azimuthal operator is the stiff group (preconditioned); the radial
    operator and its boundary source are advanced explicitly.
    """
    if int(Nr) != Nr or Nr < 4:
        raise ValueError("Nr must be an integer >= 4")
    if int(Ntheta) != Ntheta or Ntheta < 8 or Ntheta % 2:
        raise ValueError("Ntheta must be an even integer >= 8")
    Nr, Ntheta = int(Nr), int(Ntheta)
    Lt, Lr, Sr, rc = polar_operators(Nr, Ntheta)
    lam1 = bessel_j2_root()
    theta = (np.arange(Ntheta) + 0.5) * 2 * np.pi / Ntheta
    R, TH = np.meshgrid(rc, theta, indexing="ij")
    shape = (np.cos(2 * TH) * bessel_j2(lam1 * R)).ravel()
    Sr.setflags(write=False)
    src = lambda t: Sr  # noqa: E731
    system = SemiDiscreteSystem(
        Nr * Ntheta, linear=Lt + Lr, source=src,
        splits=(OperatorGroup(Lt, None, True, "theta"), OperatorGroup(Lr, src, False, "radial")),
    )

    def exact(t):
        return shape * np.exp(-lam1**2 * t)

    dr, dth = 1.0 / Nr, 2 * np.pi / Ntheta
    C = table_C(scheme)
    # innermost arc length for theta; radial spacing for r; D = 4 for both
    dts = {"r": C * dr**2 / 4.0, "theta": C * (rc[0] * dth) ** 2 / 4.0}
    cell_area = np.repeat(rc * dr * dth, Ntheta)
    mesh = Mesh1D.cells(np.linspace(0.0, 1.0, Nr + 1), "polar-cells")
    return ProblemCase(
        "polar", system, mesh, exact(0.0), t_final, exact=exact, stability_dt=dts,
        recommended={"scheme": scheme, "p": p, "mode": "tase-split"}, weights=cell_area,
        params={"Nr": Nr, "Ntheta": Ntheta, "lambda1": lam1}, default_steps=50,
    )
