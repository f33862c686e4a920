"""Benchmark catalog addressable by name."""

from __future__ import annotations

import inspect
from functools import partial

from .adr import two_species_adr
from .common import (
    ErrorReport,
    Mesh1D,
    OrderFit,
    ProblemCase,
    bessel_j2,
    bessel_j2_root,
    error_report,
    fit_order,
    observed_order,
)
from .diffusion import diffusion_dirichlet, diffusion_periodic, fourier_d2, periodic_d2
from .nonlinear import DomainError, linear_ode, power_law_diffusion, stiff_scalar_ode
from .polar import polar_diffusion

CASES = {
    "diffusion-periodic": partial(diffusion_periodic, N=600, differencing="fd4", A=0.0, t_final=5.0,
                                  scheme="ERK2", p=2),
    "diffusion-steady": partial(diffusion_periodic, N=6, differencing="fourier", A=0.0, t_final=15.0,
                                scheme="ERK4", p=4, name="diffusion-steady", default_steps=6),
    "diffusion-quasi-steady": partial(diffusion_periodic, N=6, differencing="fourier", A=0.01,
                                      t_final=100.0, scheme="ERK2", p=2, name="diffusion-quasi-steady",
                                      default_steps=60),
    "diffusion-dirichlet": diffusion_dirichlet,
    "adr-equal": partial(two_species_adr, bc_right="equal"),
    "adr-incompatible": partial(two_species_adr, bc_right="incompatible"),
    "power-law": power_law_diffusion,
    "ode-stiff": stiff_scalar_ode,
    "ode-linear": linear_ode,
    "polar": polar_diffusion,
}


class UnknownCaseError(KeyError):
    pass


def case_names() -> list[str]:
    return list(CASES)


def get_case(name: str, **params) -> ProblemCase:
    """Build a registered case. ``None`` values and parameters the builder
    does not accept are ignored, so CLI flags can be passed through."""
    try:
        builder = CASES[name]
    except KeyError:
        raise UnknownCaseError(f"unknown case {name!r}; choose from {', '.join(CASES)}") from None
    accepted = inspect.signature(builder).parameters
    kw = {k: v for k, v in params.items() if v is not None and k in accepted}
    return builder(**kw)


__all__ = [
    "CASES", "DomainError", "ErrorReport", "Mesh1D", "OrderFit", "ProblemCase", "UnknownCaseError",
    "bessel_j2", "bessel_j2_root", "case_names", "diffusion_dirichlet", "diffusion_periodic",
    "error_report", "fit_order", "fourier_d2", "get_case", "linear_ode", "observed_order",
    "periodic_d2", "polar_diffusion", "power_law_diffusion", "stiff_scalar_ode", "two_species_adr",
]
