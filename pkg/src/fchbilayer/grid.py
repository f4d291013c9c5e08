"""Uniform half-line grids and parity-aware finite-difference operators.

Grid functions are arrays of length ``n`` on nodes ``r_j = j h``.  Even
functions use a reflected ghost at r = 0; odd functions vanish there.  The
last node r = R is a far-field node where the profile is flat, so the
discrete Laplacian is set to zero there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, TruncationError

EVEN = "even"
ODD = "odd"


@dataclass(frozen=True)
class HalfLineGrid:
    R: float = 20.0
    n: int = 2001

    def __post_init__(self):
        if self.n < 64:
            raise InvalidArgumentError(f"grid needs n >= 64 nodes, got {self.n}")
        if not self.R > 0:
            raise InvalidArgumentError(f"truncation radius must be positive, got {self.R}")

    @cached_property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, self.R, self.n)

    @property
    def h(self) -> float:
        return self.R / (self.n - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights on [0, R]."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def check_truncation(self, w2_origin: float, tol: float = 1e-10) -> None:
        decay = np.exp(-np.sqrt(w2_origin) * self.R)
        if decay >= tol:
            need = -np.log(tol) / np.sqrt(w2_origin)
            raise TruncationError(
                f"R = {self.R} leaves exp(-sqrt(W''(0)) R) = {decay:.2e}; need R > {need:.2f}"
            )

    def refined(self) -> "HalfLineGrid":
        """Same domain, half the spacing."""
        return HalfLineGrid(self.R, 2 * self.n - 1)

    def to_dict(self) -> dict:
        return {"R": self.R, "n": self.n}


def inner(grid: HalfLineGrid, f, g) -> float:
    """L2(R) inner product of two functions of equal parity, from their half-line samples."""
    return float(2.0 * np.sum(grid.weights * f * g))


def norm(grid: HalfLineGrid, f) -> float:
    return np.sqrt(inner(grid, f, f))


def lap(f: np.ndarray, h: float, parity: str = EVEN) -> np.ndarray:
    """Second r-derivative along the last axis (flat at the far-field node)."""
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., :-2] - 2.0 * f[..., 1:-1] + f[..., 2:]) / (h * h)
    if parity == EVEN:
        out[..., 0] = 2.0 * (f[..., 1] - f[..., 0]) / (h * h)
    else:
        out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def dr(f: np.ndarray, h: float, parity: str = EVEN) -> np.ndarray:
    """Central first derivative; the result has the opposite parity."""
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * h)
    if parity == EVEN:
        out[..., 0] = 0.0
    else:
        out[..., 0] = (f[..., 1] - 0.0) / h  # odd: f(-h) = -f(h)
    out[..., -1] = 0.0
    return out


def laplacian_matrix(grid: HalfLineGrid, parity: str = EVEN) -> sp.csr_matrix:
    """Sparse form of :func:`lap` on the unknowns of the given parity.

    Even unknowns are nodes 0..n-1; odd unknowns are nodes 1..n-1.
    """
    n, h2 = grid.n, grid.h ** 2
    if parity == EVEN:
        m = n
        main = np.full(m, -2.0)
        upper = np.ones(m - 1)
        lower = np.ones(m - 1)
        upper[0] = 2.0
    elif parity == ODD:
        m = n - 1
        main = np.full(m, -2.0)
        upper = np.ones(m - 1)
        lower = np.ones(m - 1)
    else:
        raise InvalidArgumentError(f"unknown parity {parity!r}")
    main[-1] = 0.0
    lower[-1] = 0.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / h2


def restrict(f: np.ndarray, parity: str) -> np.ndarray:
    return f if parity == EVEN else f[1:]


def extend(x: np.ndarray, parity: str) -> np.ndarray:
    return x if parity == EVEN else np.concatenate([[0.0], x])


def tridiagonal_symmetrized(grid: HalfLineGrid, potential: np.ndarray, parity: str = EVEN):
    """Symmetric tridiagonal (diag, offdiag) similar to the Dirichlet-at-R block
    of d^2/dr^2 - potential, plus the scaling that maps eigenvectors back.

    For the even block the similarity transform is diag(sqrt(weights)), which
    makes the operator self-adjoint for the trapezoid inner product.
    """
    h2 = grid.h ** 2
    if parity == EVEN:
        d = -2.0 / h2 - potential[: grid.n - 1]
        e = np.full(grid.n - 2, 1.0 / h2)
        e[0] = np.sqrt(2.0) / h2
        scale = np.ones(grid.n - 1)
        scale[0] = np.sqrt(2.0)  # eigvec of original = scale * symmetric eigvec
    else:
        d = -2.0 / h2 - potential[1 : grid.n - 1]
        e = np.full(grid.n - 3, 1.0 / h2)
        scale = np.ones(grid.n - 2)
    return d, e, scale


def to_banded(A: sp.spmatrix, lower: int, upper: int) -> np.ndarray:
    """LAPACK banded storage of a sparse matrix for scipy.linalg.solve_banded."""
    A = sp.dia_matrix(A)
    n = A.shape[0]
    ab = np.zeros((lower + upper + 1, n))
    for offset, data in zip(A.offsets, A.data):
        if offset > upper or -offset > lower:
            if np.any(data):
                raise InvalidArgumentError("matrix exceeds requested bandwidth")
            continue
        row = upper - offset
        if offset >= 0:
            ab[row, offset:] = data[offset:]
        else:
            ab[row, : n + offset] = data[: n + offset]
    return ab
