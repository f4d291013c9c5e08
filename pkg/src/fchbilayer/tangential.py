"""Tangential problem: inhomogeneity xi, its first Fourier pair, the constant
coefficient operator (1 + d_t^2)^2 + eps c1 (1 + d_t^2) - 4 eps alpha0, its
Green's function and the leading-order undulation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.interpolate import make_interp_spline

from .errors import InvalidArgumentError, RegimeError, TruncationError

TRUNCATION_RATE = 12.0


# ---------------------------------------------------------------------------
# bump algebra: b(x) = exp(-1/(1-x^2)) on |x| < 1


def _bump_polys(order: int) -> list[Polynomial]:
    """P_k with b^(k)(x) = P_k(x) (1 - x^2)^(-2k) b(x)."""
    one_m_x2 = Polynomial([1.0, 0.0, -1.0])
    x = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for k in range(order):
        P = polys[-1]
        polys.append(P.deriv() * one_m_x2 ** 2 + 4 * k * x * P * one_m_x2 - 2 * x * P)
    return polys


_BUMP_POLYS = _bump_polys(5)


def bump(x, k: int = 0) -> np.ndarray:
    """k-th derivative of exp(-1/(1-x^2)), zero for |x| >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    q = 1.0 - xi * xi
    out[inside] = _BUMP_POLYS[k](xi) * q ** (-2 * k) * np.exp(-1.0 / q)
    return out


_BUMP_MASS = quad(lambda s: float(bump(s)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]


@dataclass(frozen=True)
class Inhomogeneity:
    """Profile xi(t) with xi' supported in [-T, T]."""

    kind: str  # bump-transitional | dbump-localized | tabulated
    T: float
    amplitude: float = 1.0
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidArgumentError(f"support half-width must be positive, got {self.T}")
        if self.kind not in ("bump-transitional", "dbump-localized", "tabulated"):
            raise InvalidArgumentError(f"unknown inhomogeneity kind {self.kind!r}")

    @classmethod
    def bump_transitional(cls, T: float, mass: float = 1.0) -> "Inhomogeneity":
        return cls("bump-transitional", float(T), float(mass) / (float(T) * _BUMP_MASS))

    @classmethod
    def dbump_localized(cls, T: float, amplitude: float = 1.0) -> "Inhomogeneity":
        return cls("dbump-localized", float(T), float(amplitude))

    @classmethod
    def tabulated(cls, t, xi) -> "Inhomogeneity":
        t, xi = np.asarray(t, float), np.asarray(xi, float)
        T = float(max(abs(t[0]), abs(t[-1])))
        return cls("tabulated", T, 1.0, (tuple(t), tuple(xi)))

    @cached_property
    def _spline(self):
        t, xi = (np.asarray(a) for a in self.table)
        return make_interp_spline(t, xi, k=5)

    def derivative(self, t, k: int = 0) -> np.ndarray:
        """k-th derivative of xi (k = 0..4)."""
        t = np.asarray(t, dtype=float)
        a, T = self.amplitude, self.T
        if self.kind == "dbump-localized":
            return a * bump(t / T, k) / T ** k
        if self.kind == "bump-transitional":
            if k > 0:
                return a * bump(t / T, k - 1) / T ** (k - 1)
            return a * T * _bump_primitive(t / T)
        t0, t1 = self.table[0][0], self.table[0][-1]
        out = self._spline(np.clip(t, t0, t1), k)
        if k > 0:
            out = np.where((t < t0) | (t > t1), 0.0, out)
        return out

    def __call__(self, t):
        return self.derivative(t, 0)

    @property
    def mass(self) -> float:
        """Integral of xi' = xi(+inf) - xi(-inf)."""
        if self.kind == "dbump-localized":
            return 0.0
        if self.kind == "bump-transitional":
            return self.amplitude * self.T * _BUMP_MASS
        return float(self.table[1][-1] - self.table[1][0])

    def limits(self) -> tuple[float, float]:
        lo = float(self.derivative(np.array([-self.T - 1.0]))[0])
        hi = float(self.derivative(np.array([self.T + 1.0]))[0])
        return lo, hi

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "T": self.T, "amplitude": self.amplitude}
        return d


def _bump_primitive(x: np.ndarray) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    for i, xv in enumerate(x):
        if xv <= -1.0:
            out[i] = 0.0
        elif xv >= 1.0:
            out[i] = _BUMP_MASS
        else:
            out[i] = quad(lambda s: float(bump(s)), -1.0, xv, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return out


# ---------------------------------------------------------------------------
# Fourier pair


@dataclass(frozen=True)
class FourierPair:
    xi_e1: float
    xi_o1: float

    @property
    def magnitude(self) -> float:
        return float(np.hypot(self.xi_e1, self.xi_o1))

    @property
    def theta1(self) -> float:
        """phi with xi_e1 cos(At) + xi_o1 sin(At) = |Xi1| cos(At - phi)."""
        return float(np.arctan2(self.xi_o1, self.xi_e1))

    def to_dict(self) -> dict:
        return {"xi_e1": self.xi_e1, "xi_o1": self.xi_o1, "magnitude": self.magnitude,
                "theta1": self.theta1}


def xi_fourier(xi: Inhomogeneity, nodes: int = 400) -> FourierPair:
    if not xi.T > 0:
        raise InvalidArgumentError("support half-width must be positive")
    x, wts = np.polynomial.legendre.leggauss(nodes)
    t = xi.T * x
    w = xi.T * wts
    d1 = xi.derivative(t, 1)
    xo = float(np.sum(w * d1 * np.cos(t)))
    xe = float(-np.sum(w * d1 * np.sin(t)))
    if xi.kind == "bump-transitional" and xi.table is None:
        xe = 0.0  # xi' even: odd integrand
    return FourierPair(xe, xo)


# ---------------------------------------------------------------------------
# Green's function


@dataclass(frozen=True)
class GreensParams:
    eps: float
    c1: float
    alpha0: float
    A: float
    B: float

    @property
    def prefactor(self) -> float:
        return 1.0 / (4.0 * self.A * self.B * (self.A ** 2 + self.B ** 2))

    def symbol(self, k):
        """Fourier symbol of the operator at frequency k."""
        s = 1.0 - np.asarray(k) ** 2
        return s * s + self.eps * self.c1 * s - 4.0 * self.eps * self.alpha0

    def to_dict(self) -> dict:
        return {"eps": self.eps, "c1": self.c1, "alpha0": self.alpha0, "A": self.A, "B": self.B}


def greens_params(eps: float, c1: float, alpha0: float) -> GreensParams:
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be positive, got {eps}")
    D = 1.0 + eps * c1 - 4.0 * eps * alpha0
    if not D > 0:
        raise InvalidArgumentError(f"1 + eps c1 - 4 eps alpha0 = {D:.3g} must be positive")
    half = np.sqrt(D) / 2.0
    quarter = (2.0 + eps * c1) / 4.0
    B2 = (-16.0 * eps * alpha0 - (eps * c1) ** 2) / 16.0 / (half + quarter)
    if not B2 > 0:
        raise RegimeError(
            f"B^2 = {B2:.3g} <= 0: alpha0 = {alpha0:.6g} puts the configuration in the "
            "pearling regime, where the Green's function does not decay"
        )
    return GreensParams(eps, c1, alpha0, float(np.sqrt(half + quarter)), float(np.sqrt(B2)))


def greens_eval(p: GreensParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    A, B = p.A, p.B
    return np.exp(-B * np.abs(t)) * (A * np.cos(A * t) + B * np.sign(t) * np.sin(A * t)) * p.prefactor


def apply_operator(p: GreensParams, f: np.ndarray, h: float) -> np.ndarray:
    """Finite-difference (1 + D2)^2 + eps c1 (1 + D2) - 4 eps alpha0 on the interior
    (two nodes lost at each end)."""
    d2 = (f[:-2] - 2.0 * f[1:-1] + f[2:]) / (h * h)
    s = f[1:-1] + d2
    ds = (s[:-2] - 2.0 * s[1:-1] + s[2:]) / (h * h)
    inner = s[1:-1]
    return inner + ds + p.eps * p.c1 * inner - 4.0 * p.eps * p.alpha0 * f[2:-2]


def required_half_length(p: GreensParams) -> float:
    return TRUNCATION_RATE / p.B


def uniform_grid(p: GreensParams, kappa: float = 14.0, h: float = 2 * np.pi / 200) -> np.ndarray:
    """Symmetric t-grid with half-length kappa / B through t = 0."""
    L = kappa / p.B
    m = int(np.ceil(L / h))
    return h * np.arange(-m, m + 1)


def convolve_G(p: GreensParams, t: np.ndarray, f: np.ndarray, check: bool = True) -> np.ndarray:
    """(G * f)(t_i) by trapezoid quadrature on a uniform grid over the support of f."""
    t = np.asarray(t, float)
    f = np.asarray(f, float)
    if t.shape != f.shape:
        raise InvalidArgumentError("t and f must have the same shape")
    h = t[1] - t[0]
    if check:
        need = required_half_length(p)
        half = min(-t[0], t[-1])
        if half < need * (1 - 1e-12):
            raise TruncationError(f"t-domain half-length {half:.4g} < required {need:.4g} (12/B)")
    nz = np.flatnonzero(f)
    if nz.size == 0:
        return np.zeros_like(f)
    j0, j1 = nz[0], nz[-1]
    n = t.size
    lags = h * np.arange(-j1, n - j0)
    G = greens_eval(p, lags)
    w = np.full(j1 - j0 + 1, h)
    if j0 == 0:
        w[0] *= 0.5
    if j1 == n - 1:
        w[-1] *= 0.5
    return np.convolve(w * f[j0 : j1 + 1], G, mode="valid")


def kbar0(beta0: float, xi: Inhomogeneity, t) -> np.ndarray:
    """Leading projected residual beta0 (xi'''' + 2 xi'')."""
    return beta0 * (xi.derivative(t, 4) + 2.0 * xi.derivative(t, 2))


def gk0(p: GreensParams, beta0: float, xi: Inhomogeneity, t, h_fine: float = 0.005,
        check: bool = True) -> np.ndarray:
    """(G * kbar0)(t) with kbar0 sampled on a fine grid over [-T, T].

    The fourth derivative of a narrow bump needs h of order 1e-2 or below;
    this keeps the output grid ``t`` free to be coarse.
    """
    t = np.asarray(t, float)
    if check:
        need = required_half_length(p)
        half = min(-t[0], t[-1])
        if half < need * (1 - 1e-12):
            raise TruncationError(f"t-domain half-length {half:.4g} < required {need:.4g} (12/B)")
    m = int(np.ceil(xi.T / h_fine))
    hs = xi.T / m
    s = hs * np.arange(-m, m + 1)
    f = kbar0(beta0, xi, s) * hs
    out = np.empty_like(t)
    chunk = max(1, 2_000_000 // s.size)
    for i in range(0, t.size, chunk):
        out[i : i + chunk] = greens_eval(p, t[i : i + chunk, None] - s[None, :]) @ f
    return out


def closed_form_gk0(p: GreensParams, beta0: float, fp: FourierPair, t) -> np.ndarray:
    """Leading-order G * kbar0: decaying envelope times the first harmonic of xi'.

    The cosine and sine moments of xi'''' + 2 xi'' are -Xi_e1 and -Xi_o1
    (two integrations by parts), which fixes the overall sign.
    """
    if not p.alpha0 < 0:
        raise RegimeError("closed form requires alpha0 < 0")
    t = np.asarray(t, float)
    b = np.sqrt(-p.alpha0 * p.eps)
    return -beta0 / (4.0 * b) * np.exp(-b * np.abs(t)) * (
        fp.xi_e1 * np.cos(p.A * t) + fp.xi_o1 * np.sin(p.A * t))


def envelope(p: GreensParams, beta0: float, fp: FourierPair, t) -> np.ndarray:
    b = np.sqrt(-p.alpha0 * p.eps)
    return abs(beta0) * fp.magnitude / (4.0 * b) * np.exp(-b * np.abs(np.asarray(t, float)))


def write_greens_csv(path, p: GreensParams, t, gk0, closed) -> None:
    G = greens_eval(p, t)
    env = np.exp(-p.B * np.abs(t))
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "G", "G_conv_kbar0", "closed_form", "envelope"])
        for row in zip(t, G, gk0, closed, env):
            out.writerow([repr(float(x)) for x in row])
