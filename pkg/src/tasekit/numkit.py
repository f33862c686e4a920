"""Small linear-algebra kernel: dense and banded LU with partial pivoting.

Dense matrices are plain 2-D numpy arrays. Banded matrices use the LAPACK
``ab`` layout (the same one ``scipy.linalg.solve_banded`` takes): row
``upper + i - j`` of ``bands`` holds entry ``(i, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.linalg as sla

#: relative pivot threshold, scaled by the max absolute row sum of the source
PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a pivot falls below working precision."""

    def __init__(self, pivot_index: int, pivot: float, scale: float):
        self.pivot_index = pivot_index
        self.pivot = pivot
        self.scale = scale
        super().__init__(
            f"matrix is singular to working precision at pivot {pivot_index} "
            f"(|u_kk| = {abs(pivot):.3e}, row-norm scale = {scale:.3e})"
        )


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Square banded matrix in LAPACK band storage."""

    lower: int
    upper: int
    bands: np.ndarray

    def __post_init__(self):
        bands = np.asarray(self.bands)
        if bands.ndim != 2:
            raise ValueError("bands must be a 2-D array")
        if bands.shape[0] != self.lower + self.upper + 1:
            raise ValueError(
                f"expected {self.lower + self.upper + 1} band rows, got {bands.shape[0]}"
            )
        n = bands.shape[1]
        if self.lower < 0 or self.upper < 0 or (n > 1 and max(self.lower, self.upper) >= n):
            raise ValueError("bandwidths must satisfy 0 <= bandwidth < order")
        if not np.all(np.isfinite(bands)):
            raise ValueError("band entries must be finite")
        bands = bands.copy()
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    @property
    def order(self) -> int:
        return self.bands.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.order, self.order)

    @property
    def dtype(self):
        return self.bands.dtype

    @classmethod
    def from_dense(cls, a, lower: int, upper: int) -> "BandedMatrix":
        a = np.asarray(a)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("matrix must be square")
        off = np.abs(np.tril(a, -lower - 1)).max(initial=0.0) + np.abs(
            np.triu(a, upper + 1)
        ).max(initial=0.0)
        if off > 0:
            raise ValueError("matrix has entries outside the declared band")
        ab = np.zeros((lower + upper + 1, n), dtype=a.dtype)
        for d in range(-lower, upper + 1):
            diag = np.diagonal(a, d)
            row = upper - d
            if d >= 0:
                ab[row, d:] = diag
            else:
                ab[row, : n + d] = diag
        return cls(lower, upper, ab)

    @classmethod
    def from_diagonals(cls, diagonals: dict[int, np.ndarray], n: int) -> "BandedMatrix":
        """Build from ``{offset: values}``; ``values`` has length ``n - |offset|``."""
        lower = max([-d for d in diagonals if d < 0], default=0)
        upper = max([d for d in diagonals if d > 0], default=0)
        dtype = np.result_type(*[np.asarray(v) for v in diagonals.values()], float)
        ab = np.zeros((lower + upper + 1, n), dtype=dtype)
        for d, vals in diagonals.items():
            vals = np.asarray(vals)
            if len(vals) != n - abs(d):
                raise ValueError(f"diagonal {d} should have {n - abs(d)} entries")
            row = upper - d
            if d >= 0:
                ab[row, d:] = vals
            else:
                ab[row, : n + d] = vals
        return cls(lower, upper, ab)

    def to_dense(self) -> np.ndarray:
        n = self.order
        a = np.zeros((n, n), dtype=self.bands.dtype)
        for d in range(-self.lower, self.upper + 1):
            row = self.upper - d
            if d >= 0:
                vals = self.bands[row, d:]
            else:
                vals = self.bands[row, : n + d]
            a += np.diag(vals, d)
        return a

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x)
        n = self.order
        dtype = np.result_type(self.bands.dtype, x.dtype)
        out = np.zeros(x.shape, dtype=dtype)
        bands = self.bands if x.ndim == 1 else self.bands[:, :, None]
        for d in range(-self.lower, self.upper + 1):
            row = self.upper - d
            if d >= 0:
                out[: n - d] += bands[row, d:] * x[d:]
            else:
                out[-d:] += bands[row, : n + d] * x[: n + d]
        return out

    def __matmul__(self, x):
        return self.matvec(x)

    def shifted(self, shift, scale) -> "BandedMatrix":
        """Return ``shift * I - scale * self``."""
        dtype = np.result_type(self.bands.dtype, np.asarray(shift).dtype, np.asarray(scale).dtype)
        ab = -scale * self.bands.astype(dtype)
        ab[self.upper] += shift
        return BandedMatrix(self.lower, self.upper, ab)

    def norm_inf(self) -> float:
        return float(np.abs(self.to_dense()).sum(axis=1).max()) if self.order else 0.0


Matrix = Union[np.ndarray, BandedMatrix]


@dataclass(frozen=True, eq=False)
class Factorization:
    """Pivoted LU factors of a dense or banded square matrix."""

    source: Matrix
    kind: str
    lu: np.ndarray
    piv: np.ndarray
    lower: int = 0
    upper: int = 0
    _solver: object = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.lu.shape[1]


def as_matrix(m) -> Matrix:
    """Coerce scalars and nested sequences to a square dense array."""
    if isinstance(m, BandedMatrix):
        return m
    a = np.asarray(m)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def matvec(m: Matrix, x) -> np.ndarray:
    if isinstance(m, BandedMatrix):
        return m.matvec(x)
    return m @ x


def shifted(m: Matrix, shift, scale) -> Matrix:
    """Return ``shift * I - scale * m`` in the same storage as ``m``."""
    if isinstance(m, BandedMatrix):
        return m.shifted(shift, scale)
    m = np.asarray(m)
    out = -scale * m
    out[np.diag_indices_from(out)] += shift
    return out


def _row_norm(m: Matrix) -> float:
    if isinstance(m, BandedMatrix):
        return float(np.abs(m.bands).sum(axis=0).max()) if m.order else 0.0
    return float(np.abs(m).sum(axis=1).max()) if m.size else 0.0


def _check_pivots(diag: np.ndarray, scale: float) -> None:
    tol = PIVOT_RTOL * scale
    bad = np.flatnonzero(~(np.abs(diag) >= tol) | (np.abs(diag) == 0))
    if bad.size:
        k = int(bad[0])
        raise SingularMatrixError(k, complex(diag[k]) if np.iscomplexobj(diag) else float(diag[k]), scale)


def lu_factor(m) -> Factorization:
    """LU-factorize a dense or banded square matrix with partial pivoting.

    Banded inputs are factored in band storage with ``lower`` extra
    superdiagonals reserved for pivoting fill.
    """
    m = as_matrix(m)
    if isinstance(m, BandedMatrix):
        n, kl, ku = m.order, m.lower, m.upper
        ab = np.zeros((2 * kl + ku + 1, n), dtype=np.result_type(m.bands.dtype, float))
        ab[kl:] = m.bands
        gbtrf, gbtrs = sla.get_lapack_funcs(("gbtrf", "gbtrs"), (ab,))
        lu, piv, info = gbtrf(ab, kl, ku)
        if info < 0:
            raise ValueError(f"illegal argument {-info} in gbtrf")
        _check_pivots(lu[kl + ku], _row_norm(m))
        return Factorization(m, "banded", lu, piv, kl, ku, gbtrs)

    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    a = np.asarray(m, dtype=np.result_type(m.dtype, float))
    getrf, getrs = sla.get_lapack_funcs(("getrf", "getrs"), (a,))
    lu, piv, info = getrf(a)
    if info < 0:
        raise ValueError(f"illegal argument {-info} in getrf")
    _check_pivots(np.diagonal(lu), _row_norm(a))
    return Factorization(m, "dense", lu, piv, 0, 0, getrs)


def solve(f: Factorization, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` using a precomputed factorization."""
    b = np.asarray(rhs)
    if b.shape[0] != f.order:
        raise ValueError(f"rhs has length {b.shape[0]}, factorization order is {f.order}")
    if np.iscomplexobj(b) and not np.iscomplexobj(f.lu):
        return solve(f, b.real) + 1j * solve(f, b.imag)
    b = b.astype(f.lu.dtype, copy=False)
    if f.kind == "banded":
        x, info = f._solver(f.lu, f.lower, f.upper, b, f.piv)
    else:
        x, info = f._solver(f.lu, f.piv, b)
    if info != 0:
        raise ValueError(f"LAPACK solve failed with info={info}")
    return x


def complex_solve(shift, scale, m, rhs) -> np.ndarray:
    """Solve ``(shift * I - scale * m) x = rhs`` over the complex numbers."""
    m = as_matrix(m)
    shift, scale = complex(shift), complex(scale)
    if isinstance(m, BandedMatrix):
        a = BandedMatrix(m.lower, m.upper, m.bands.astype(complex)).shifted(shift, scale)
    else:
        a = shifted(m.astype(complex), shift, scale)
    return solve(lu_factor(a), np.asarray(rhs, dtype=complex))
