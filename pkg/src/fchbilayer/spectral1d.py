"""Discrete Schrodinger operators L = d_r^2 - W''(u) about a bilayer profile."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from . import grid as g
from .errors import ConditioningError, FredholmError, InvalidArgumentError
from .potential import PotentialSpec
from .profile1d import BilayerProfile

FREDHOLM_TOL = 1e-6
COND_LIMIT = 1e12


@dataclass
class SpectralData:
    profile: BilayerProfile
    spec: PotentialSpec
    lam0: float
    psi0: np.ndarray
    lam1: float  # exact kernel for u0, numerical otherwise
    psi1: np.ndarray  # normalized
    du0: np.ndarray | None  # unnormalized u0' (analytic pair, u0 only)
    odd_numeric: tuple[float, np.ndarray] = field(repr=False, default=None)

    @property
    def grid(self) -> g.HalfLineGrid:
        return self.profile.grid

    @property
    def potential(self) -> np.ndarray:
        return self.spec(self.profile.values, 2)

    @property
    def essential_edge(self) -> float:
        return -self.spec(self.profile.u_inf, 2)

    @cached_property
    def matrix_even(self) -> sp.csc_matrix:
        """Full even operator on nodes 0..n-1; the far-field row is -W''(u(R))."""
        return (g.laplacian_matrix(self.grid, g.EVEN) - sp.diags(self.potential)).tocsc()

    @cached_property
    def matrix_odd(self) -> sp.csc_matrix:
        return (g.laplacian_matrix(self.grid, g.ODD) - sp.diags(self.potential[1:])).tocsc()

    def apply(self, f: np.ndarray, parity: str = g.EVEN) -> np.ndarray:
        out = g.lap(f, self.grid.h, parity) - self.potential * f
        if parity == g.ODD:
            out[0] = 0.0
        return out

    @cached_property
    def _even_lu(self):
        return spla.splu(self.matrix_even)

    @cached_property
    def even_spectrum(self) -> np.ndarray:
        """All eigenvalues of the Dirichlet-at-R even block, descending."""
        d, e, _ = g.tridiagonal_symmetrized(self.grid, self.potential, g.EVEN)
        return eigvalsh_tridiagonal(d, e)[::-1]

    @cached_property
    def odd_spectrum(self) -> np.ndarray:
        d, e, _ = g.tridiagonal_symmetrized(self.grid, self.potential, g.ODD)
        return eigvalsh_tridiagonal(d, e)[::-1]

    @cached_property
    def even_eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Full even eigendecomposition; columns weighted-orthonormal, value 0 at R."""
        return _eig_block(self.grid, self.potential, g.EVEN, None)

    def condition_estimate(self) -> float:
        ev = self.even_spectrum
        smallest = min(np.min(np.abs(ev)), abs(self.essential_edge))
        return float(np.max(np.abs(ev)) / smallest)

    def solve_even(self, f: np.ndarray) -> np.ndarray:
        """L^{-1} f on even functions (far-field value -f(R)/W''(u(R)))."""
        cond = self.condition_estimate()
        if cond > COND_LIMIT:
            raise ConditioningError(f"even block condition estimate {cond:.3g}")
        return self._even_lu.solve(np.asarray(f, dtype=float))

    def inner(self, f, gfun) -> float:
        return g.inner(self.grid, f, gfun)

    def project_center(self, f_even: np.ndarray, f_odd: np.ndarray):
        """Coefficients of f = f_even + f_odd on psi0 and psi1."""
        return self.inner(self.psi0, f_even), self.inner(self.psi1, f_odd)

    def shifted_pseudo_inverse(self, f: np.ndarray, power: int = 1, parity: str = g.EVEN) -> np.ndarray:
        """(L - lam0)^{-power} f on the complement of psi0."""
        if power not in (1, 2):
            raise InvalidArgumentError(f"power must be 1 or 2, got {power}")
        f = np.asarray(f, dtype=float)
        if parity == g.ODD:
            A = (self.matrix_odd - self.lam0 * sp.identity(self.grid.n - 1)).tocsc()
            lu = spla.splu(A)
            x = f[1:]
            for _ in range(power):
                x = lu.solve(x)
            return g.extend(x, g.ODD)
        proj = self.inner(self.psi0, f)
        scale = max(np.sqrt(self.inner(f, f)), 1e-300)
        if abs(proj) > FREDHOLM_TOL * scale:
            raise FredholmError(proj, FREDHOLM_TOL * scale)
        x = f
        for _ in range(power):
            x = self._bordered.solve(np.append(x - self.inner(self.psi0, x) * self.psi0, 0.0))[:-1]
        return x

    @cached_property
    def _bordered(self):
        n = self.grid.n
        A = self.matrix_even - self.lam0 * sp.identity(n)
        wpsi = 2.0 * self.grid.weights * self.psi0
        M = sp.bmat([[A, sp.csc_matrix(self.psi0[:, None])],
                     [sp.csr_matrix(wpsi[None, :]), None]], format="csc")
        return spla.splu(M)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["r", "psi0", "psi1"])
            for row in zip(self.grid.r, self.psi0, self.psi1):
                out.writerow([repr(float(x)) for x in row])


def _eig_block(grid: g.HalfLineGrid, potential: np.ndarray, parity: str, select):
    d, e, scale = g.tridiagonal_symmetrized(grid, potential, parity)
    if select is None:
        vals, vecs = eigh_tridiagonal(d, e)
    else:
        vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=select)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    # symmetric vector y = S x with S = diag(sqrt(w)); unit 2-norm of y <-> half-line norm 1
    sqrt_w = np.sqrt(grid.weights[: grid.n - 1] if parity == g.EVEN else grid.weights[1 : grid.n - 1])
    x = vecs / sqrt_w[:, None] / np.sqrt(2.0)
    del scale
    pad_lo = 0 if parity == g.EVEN else 1
    full = np.zeros((grid.n, x.shape[1]))
    full[pad_lo : pad_lo + x.shape[0]] = x
    return vals, full


def _normalize(grid, f):
    return f / g.norm(grid, f)


def build_operator(profile: BilayerProfile, spec: PotentialSpec) -> SpectralData:
    grid = profile.grid
    pot = spec(profile.values, 2)
    m_even = grid.n - 1
    vals, vecs = _eig_block(grid, pot, g.EVEN, (m_even - 2, m_even - 1))
    lam0, psi0 = float(vals[0]), vecs[:, 0]
    if psi0[0] < 0:
        psi0 = -psi0
    m_odd = grid.n - 2
    ovals, ovecs = _eig_block(grid, pot, g.ODD, (m_odd - 1, m_odd - 1))
    lam1_num, psi1_num = float(ovals[0]), ovecs[:, 0]
    if profile.kind == "u0" and profile.du is not None:
        du0 = profile.du.copy()
        du0[0] = 0.0
        lam1, psi1 = 0.0, _normalize(grid, du0)
        if g.inner(grid, psi1_num, psi1) < 0:
            psi1_num = -psi1_num
    else:
        du0 = None
        lam1, psi1 = lam1_num, psi1_num
    return SpectralData(profile=profile, spec=spec, lam0=lam0, psi0=psi0, lam1=lam1, psi1=psi1,
                        du0=du0, odd_numeric=(lam1_num, psi1_num))


def cosine_similarity(grid: g.HalfLineGrid, f, h) -> float:
    return abs(g.inner(grid, f, h)) / (g.norm(grid, f) * g.norm(grid, h))


def richardson(values, order: float = 2.0, ratio: float = 2.0) -> float:
    """Extrapolate the last two entries of a sequence computed at h, h/ratio."""
    coarse, fine = values[-2], values[-1]
    k = ratio ** order
    return (k * fine - coarse) / (k - 1.0)
