"""Amplification factors of RK + TASE pairings on ``y' = lambda y``.

``sigma(z)`` composes the modified eigenvalue ``w(z)`` with the stage
recursion of the scheme, so no stability polynomial is expanded by hand.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import schemes
from .tase import POLE_TOL, PoleError, alpha_min, modified_eigenvalue

#: cells within this distance of a pole are masked in scans
POLE_MASK = 1e-8
UNSTABLE_TOL = 1e-10


def _amplifier(scheme):
    """Return a vectorized ``R(w)`` for a scheme name, tableau or Shu-Osher form."""
    if isinstance(scheme, (schemes.ButcherTableau, schemes.ShuOsherScheme)):
        return scheme.amplification
    key = schemes.canonical_name(scheme)
    try:
        return schemes.get_tableau(key).amplification
    except schemes.UnknownSchemeError:
        return schemes.get_shu_osher(key).amplification


def _scheme_name(scheme) -> str:
    return scheme.name if hasattr(scheme, "name") else schemes.canonical_name(scheme)


@dataclass(frozen=True)
class StabilityQuery:
    scheme: str
    p: int
    alpha: float
    z: complex

    def __post_init__(self):
        if self.p not in range(5):
            raise ValueError("p must be 0 (no TASE) or 1..4")
        if self.p and not self.alpha > 0:
            raise ValueError("alpha must be positive")


def sigma_array(scheme, p: int, alpha: float, z) -> np.ndarray:
    """Elementwise amplification; values at poles come back as nan."""
    z = np.asarray(z, dtype=complex)
    R = _amplifier(scheme)
    if p == 0:
        return np.asarray(R(z))
    with np.errstate(divide="ignore", invalid="ignore"):
        w = modified_eigenvalue(z, p, alpha)
        return np.asarray(R(w))


def sigma(query: StabilityQuery) -> complex:
    z = complex(query.z)
    if query.p:
        for k in range(query.p):
            if abs(2.0**k - query.alpha * z) < POLE_TOL:
                raise PoleError(f"z = {z} is a pole of the TASE map")
    return complex(sigma_array(query.scheme, query.p, query.alpha, z))


def _threads() -> int:
    env = os.environ.get("TASE_KIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"TASE_KIT_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def _parallel_rows(fn, rows: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Apply ``fn`` to row blocks of ``rows`` on a thread pool, preserving order."""
    blocks = [rows[i : i + chunk] for i in range(0, rows.shape[0], chunk)]
    n = _threads()
    if n == 1 or len(blocks) == 1:
        return np.concatenate([fn(b) for b in blocks])
    with ThreadPoolExecutor(max_workers=n) as pool:
        return np.concatenate(list(pool.map(fn, blocks)))


@dataclass
class StabilityScan:
    re: np.ndarray
    im: np.ndarray
    values: np.ndarray
    pole_mask: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.re.shape or self.re.shape != self.im.shape:
            raise ValueError("grid arrays must share one shape")

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.values.shape

    def left_half(self) -> np.ndarray:
        return (self.re <= 0) & ~self.pole_mask

    def max_left_half(self) -> float:
        sel = self.left_half()
        return float(self.values[sel].max()) if sel.any() else 0.0

    def unstable_cells(self, tol: float = UNSTABLE_TOL, left_only: bool = True) -> int:
        sel = self.left_half() if left_only else ~self.pole_mask
        return int(np.count_nonzero(self.values[sel] > 1 + tol))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for k, v in self.metadata.items():
            buf.write(f"# {k}={v}\n")
        buf.write("re,im,abs_sigma\n")
        keep = ~self.pole_mask
        for r, i, a in zip(self.re[keep].ravel(), self.im[keep].ravel(), self.values[keep].ravel()):
            buf.write(f"{r:.17g},{i:.17g},{a:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def cartesian_window(re_range, im_range, resolution) -> tuple[np.ndarray, np.ndarray]:
    nr, ni = (resolution, resolution) if np.isscalar(resolution) else resolution
    re, im = np.meshgrid(np.linspace(*re_range, int(nr)), np.linspace(*im_range, int(ni)), indexing="ij")
    return re, im


def log_radial_window(r_min: float, r_max: float, resolution, half: str = "left"):
    """Geometric radii times uniform angles.

    ``half='left'`` covers the closed left half-plane (angles pi/2..3pi/2).
    """
    nr, na = (resolution, resolution) if np.isscalar(resolution) else resolution
    radii = np.geomspace(r_min, r_max, int(nr))
    if half == "left":
        ang = np.linspace(np.pi / 2, 3 * np.pi / 2, int(na))
    elif half == "full":
        ang = np.linspace(0.0, 2 * np.pi, int(na), endpoint=False)
    else:
        raise ValueError("half must be 'left' or 'full'")
    z = radii[:, None] * np.exp(1j * ang[None, :])
    re, im = z.real, z.imag
    # exact zero real part on the imaginary axis
    for col in np.flatnonzero(np.isclose(np.abs(np.cos(ang)), 0.0, atol=1e-15)):
        re[:, col] = 0.0
    return re, im


def scan_region(scheme, p: int, alpha: float, window: str = "cartesian", resolution=201,
                re_range=(-6.0, 2.0), im_range=(-4.0, 4.0), r_range=(1e-8, 1e8)) -> StabilityScan:
    """Grid of ``|sigma|`` over a Cartesian or log-radial window."""
    if window == "cartesian":
        re, im = cartesian_window(re_range, im_range, resolution)
    elif window in ("log-radial", "log-radial-full"):
        re, im = log_radial_window(*r_range, resolution, half="left" if window == "log-radial" else "full")
    else:
        raise ValueError(f"unknown window {window!r}")
    z = re + 1j * im
    mask = np.zeros(z.shape, dtype=bool)
    if p:
        for k in range(p):
            mask |= np.abs(2.0**k - alpha * z) < POLE_MASK
    R = _amplifier(scheme)

    def block(zb):
        with np.errstate(all="ignore"):
            w = modified_eigenvalue(zb, p, alpha) if p else zb
            return np.abs(np.asarray(R(w)))

    vals = _parallel_rows(block, z)
    vals = np.where(mask, np.nan, vals)
    meta = {"scheme": _scheme_name(scheme), "p": p, "alpha": repr(float(alpha)), "window": window,
            "resolution": "x".join(str(s) for s in z.shape)}
    if window == "cartesian":
        meta.update(re_range=f"{re_range[0]}:{re_range[1]}", im_range=f"{im_range[0]}:{im_range[1]}")
    else:
        meta.update(r_range=f"{r_range[0]:g}:{r_range[1]:g}")
    return StabilityScan(re, im, vals, mask, meta)


def imag_axis_samples(y_max: float, samples: int) -> np.ndarray:
    if samples < 2:
        raise ValueError("need at least two samples")
    return np.concatenate([[0.0], np.geomspace(1e-6, y_max, samples - 1)])


def imag_axis_scan(scheme, p: int, alpha: float, y_max: float = 1e10, samples: int = 10**6):
    y = imag_axis_samples(y_max, samples)
    R = _amplifier(scheme)

    def block(yb):
        z = 1j * yb
        w = modified_eigenvalue(z, p, alpha) if p else z
        return np.abs(np.asarray(R(w)))

    return y, _parallel_rows(block, y, chunk=65536)


def imag_axis_max(scheme, p: int, alpha: float, y_max: float = 1e10, samples: int = 10**6) -> float:
    return float(imag_axis_scan(scheme, p, alpha, y_max, samples)[1].max())


def imag_scan_csv(y, values, metadata: dict, path=None) -> str:
    lines = [f"# {k}={v}" for k, v in metadata.items()] + ["y,abs_sigma"]
    lines += [f"{a:.17g},{b:.17g}" for a, b in zip(y, values)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def asymptotic_limit(p: int, alpha: float) -> float:
    """Large-step limit of the modified eigenvalue: ``-(2**p - 1) / alpha``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return -(2**p - 1) / alpha


def sufficient_alpha(scheme) -> float:
    """Sufficient first-order TASE parameter ``0.5 * max(b/a)`` of a Shu-Osher form."""
    so = scheme if isinstance(scheme, schemes.ShuOsherScheme) else schemes.get_shu_osher(scheme)
    return 0.5 * so.max_ratio()


def alpha_table(names: Sequence[str] = ("ERK1", "ERK2", "ERK3", "ERK4"), digits: Optional[int] = 2):
    """Rows ``(scheme, C, [alpha_min for p = 1..s])`` using the tabulated intercepts."""
    rows = []
    for name in names:
        info = schemes.scheme_info(name)
        vals = [alpha_min(p, info.C) for p in range(1, info.order + 1)]
        if digits is not None:
            vals = [round(v, digits) for v in vals]
        rows.append((info.name, info.C, vals))
    return rows
