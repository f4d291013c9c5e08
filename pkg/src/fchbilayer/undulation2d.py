"""Undulated bilayers on a tensor (t, r) grid.

Assembles u_n = u_{h,delta} + psi0 phi0 + v_h, evaluates the full residual of
the stationary equation in inner coordinates

    (d_r^2 - W''(u) + lam0 d_t^2 + eps eta1)(d_r^2 u - W'(u) + lam0 d_t^2 u)
        + eps eta_d(t) W'(u) = eps gamma,

relative to the t-modulated family of flat bilayers, and refines phi0 by the
fixed-point map built on the Green's function of the tangential operator.
Arrays are indexed [t, r].
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import grid as g
from . import tangential as tg
from .errors import ContractionError, DimensionError, ResolutionError, SolverError
from .pearling import alpha_coefficients, compute_alpha0, compute_beta0, compute_c1
from .potential import PotentialSpec
from .profile1d import BilayerProfile, solve_bilayer_eps, solve_homoclinic, solve_u1
from .spectral1d import SpectralData, build_operator

MIN_POINTS_PER_PERIOD = 16


@dataclass
class UndulationSetup:
    """Everything the 2D construction needs, computed once on one r-grid."""

    spec: PotentialSpec
    grid: g.HalfLineGrid
    eps: float
    delta: float
    gamma: float
    eta1: float
    eta2_0: float
    xi: tg.Inhomogeneity
    kappa: float = 14.0
    points_per_period: int = 64

    @property
    def eta_d0(self) -> float:
        return self.eta1 - self.eta2_0

    def eta_d(self, t) -> np.ndarray:
        """eta1 - eta2(t) with eta2 = eta2_0 + delta xi(t)."""
        return self.eta_d0 - self.delta * self.xi(t)

    @cached_property
    def u0(self) -> BilayerProfile:
        return solve_homoclinic(self.spec, self.grid)

    @cached_property
    def S(self) -> SpectralData:
        return build_operator(self.u0, self.spec)

    @property
    def lam0(self) -> float:
        return self.S.lam0

    @property
    def psi0(self) -> np.ndarray:
        return self.S.psi0

    @cached_property
    def u1(self) -> BilayerProfile:
        return solve_u1(self.S, self.gamma, self.eta_d0)

    @cached_property
    def beta0(self) -> float:
        return compute_beta0(self.S)[0]

    @cached_property
    def alpha0(self) -> float:
        return compute_alpha0(self.S, self.u1, self.eta_d0)

    @cached_property
    def c1(self) -> float:
        return compute_c1(self.S, self.u1, self.eta1)

    @cached_property
    def greens(self) -> tg.GreensParams:
        return tg.greens_params(self.eps, self.c1, self.alpha0)

    @cached_property
    def fourier(self) -> tg.FourierPair:
        return tg.xi_fourier(self.xi)

    @cached_property
    def t(self) -> np.ndarray:
        h = 2.0 * np.pi / (self.greens.A * self.points_per_period)
        half = max(self.kappa / self.greens.B, self.xi.T + 10 * h)
        m = int(np.ceil(half / h))
        return h * np.arange(-m, m + 1)

    @property
    def ht(self) -> float:
        return float(self.t[1] - self.t[0])

    @cached_property
    def uh(self) -> BilayerProfile:
        return solve_bilayer_eps(self.spec, self.grid, self.eps, self.gamma, self.eta1,
                                 self.eta_d0, self.u0)

    def check_resolution(self, t=None) -> None:
        t = self.t if t is None else t
        per = 2.0 * np.pi / (self.greens.A * (t[1] - t[0]))
        if per < MIN_POINTS_PER_PERIOD:
            raise ResolutionError(
                f"{per:.1f} points per oscillation period; need at least {MIN_POINTS_PER_PERIOD}"
            )

    def metadata(self) -> dict:
        return {
            "eps": self.eps, "delta": self.delta, "gamma": self.gamma, "eta1": self.eta1,
            "eta2_0": self.eta2_0, "eta_d0": self.eta_d0, "xi": self.xi.to_dict(),
            "fourier": self.fourier.to_dict(), "greens": self.greens.to_dict(),
            "lam0": self.lam0, "beta0": self.beta0, "alpha0": self.alpha0, "c1": self.c1,
            "grid": self.grid.to_dict(), "t": {"n": int(self.t.size), "h": self.ht,
                                               "half_length": float(self.t[-1])},
        }


# ---------------------------------------------------------------------------
# modulated bilayer


@dataclass
class ModulatedBilayer:
    U: np.ndarray  # u_{h,delta}(t_i, r_j)
    N: np.ndarray  # d_r^2 U - W'(U) = eps w_{h,delta}
    eta_d: np.ndarray
    solves: int
    max_newton_residual: float


def modulated_bilayer(setup: UndulationSetup, t: np.ndarray | None = None) -> ModulatedBilayer:
    """One bilayer slice per distinct eta_d(t_i); repeated values reuse the same solve."""
    t = setup.t if t is None else t
    eta = setup.eta_d(t)
    cache: dict[float, BilayerProfile] = {}
    base = setup.uh
    cache[float(setup.eta_d0)] = base
    n = setup.grid.n
    U = np.empty((t.size, n))
    N = np.empty((t.size, n))
    worst = base.params.get("newton_residual", 0.0)
    order = np.argsort(np.abs(eta - setup.eta_d0), kind="stable")
    for i in order:
        key = float(eta[i])
        prof = cache.get(key)
        if prof is None:
            try:
                prof = solve_bilayer_eps(setup.spec, setup.grid, setup.eps, setup.gamma,
                                         setup.eta1, key, base)
            except SolverError as exc:
                raise SolverError(f"slice t={t[i]:.6g}: {exc}", exc.residual) from exc
            cache[key] = prof
            worst = max(worst, prof.params["newton_residual"])
        U[i] = prof.values
        N[i] = setup.eps * prof.w
    return ModulatedBilayer(U, N, eta, len(cache), worst)


# ---------------------------------------------------------------------------
# residual


def d2t(f: np.ndarray, ht: float) -> np.ndarray:
    out = np.zeros_like(f)
    out[1:-1] = (f[:-2] - 2.0 * f[1:-1] + f[2:]) / (ht * ht)
    return out


def _lap_r(f, hr):
    return g.lap(f, hr, g.EVEN)


def residual_field(setup: UndulationSetup, mb: ModulatedBilayer, v: np.ndarray,
                   t: np.ndarray | None = None) -> np.ndarray:
    """F(v; delta, eps) term by term; rows within two nodes of the t-ends are invalid."""
    t = setup.t if t is None else t
    spec, lam0, eps = setup.spec, setup.lam0, setup.eps
    hr, ht = setup.grid.h, float(t[1] - t[0])
    U = mb.U
    a = U + v
    W1a, W1U = spec(a, 1), spec(U, 1)
    W2a, W2U = spec(a, 2), spec(U, 2)
    dW1 = W1a - W1U
    X = _lap_r(v, hr) - dW1 + lam0 * d2t(a, ht)
    F = _lap_r(X, hr) - W2a * X + lam0 * d2t(X, ht) + eps * setup.eta1 * X
    F += -(W2a - W2U) * mb.N + lam0 * d2t(mb.N, ht)
    F += eps * mb.eta_d[:, None] * dW1
    return F


def full_equation_residual(setup: UndulationSetup, mb: ModulatedBilayer, v: np.ndarray,
                           t: np.ndarray | None = None) -> np.ndarray:
    """Cross-check: LHS(u_n) - eps gamma minus the slice-ODE residual of u_{h,delta}."""
    t = setup.t if t is None else t
    spec, lam0, eps = setup.spec, setup.lam0, setup.eps
    hr, ht = setup.grid.h, float(t[1] - t[0])

    def lhs(u, with_t):
        Nu = _lap_r(u, hr) - spec(u, 1)
        if with_t:
            Nu = Nu + lam0 * d2t(u, ht)
        out = _lap_r(Nu, hr) - spec(u, 2) * Nu + eps * setup.eta1 * Nu
        if with_t:
            out = out + lam0 * d2t(Nu, ht)
        return out + eps * mb.eta_d[:, None] * spec(u, 1) - eps * setup.gamma

    return lhs(mb.U + v, True) - lhs(mb.U, False)


@dataclass
class ResidualReport:
    sup: float
    l2: float
    hr: float
    ht: float
    eps: float
    delta: float
    cross_check_sup: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _interior(F: np.ndarray) -> np.ndarray:
    return F[2:-2]


def residual_F(setup: UndulationSetup, mb: ModulatedBilayer, v: np.ndarray,
               t: np.ndarray | None = None, cross_check: bool = False) -> ResidualReport:
    t = setup.t if t is None else t
    setup.check_resolution(t)
    if v.shape != mb.U.shape:
        raise DimensionError(f"perturbation shape {v.shape} != field shape {mb.U.shape}")
    F = _interior(residual_field(setup, mb, v, t))
    ht = float(t[1] - t[0])
    w = 2.0 * setup.grid.weights
    l2 = float(np.sqrt(ht * np.sum(F * F * w[None, :])))
    rep = ResidualReport(float(np.max(np.abs(F))), l2, setup.grid.h, ht, setup.eps, setup.delta)
    if cross_check:
        G = _interior(full_equation_residual(setup, mb, v, t))
        rep.cross_check_sup = float(np.max(np.abs(G - F)))
    return rep


def project_psi0(setup: UndulationSetup, F: np.ndarray) -> np.ndarray:
    """<psi0, F(t, .)> for every t-row."""
    return 2.0 * F @ (setup.grid.weights * setup.psi0)


# ---------------------------------------------------------------------------
# hyperbolic correction


class HyperbolicSolver:
    """(Q L0 Q)^{-1} Q on even fields, L0 = (L_0 + lam0 d_t^2)^2 discretized exactly as
    in :func:`residual_field` (eigenbasis of the discrete L_0 in r, FFT in t with the
    three-point symbol)."""

    def __init__(self, setup: UndulationSetup, nt: int, ht: float):
        vals, vecs = setup.S.even_eigh
        self.vals = vals[1:]
        self.basis = vecs[:, 1:]  # drop psi0
        self.weighted = 2.0 * setup.grid.weights[:, None] * self.basis
        k = 2.0 * np.pi * np.fft.rfftfreq(nt, d=ht)
        kappa = (2.0 - 2.0 * np.cos(k * ht)) / ht ** 2
        self.denom = (self.vals[None, :] - setup.lam0 * kappa[:, None]) ** 2
        self.nt = nt

    def solve(self, F: np.ndarray) -> np.ndarray:
        coeff = F @ self.weighted  # [t, mode]
        chat = np.fft.rfft(coeff, axis=0) / self.denom
        coeff = np.fft.irfft(chat, n=self.nt, axis=0)
        return coeff @ self.basis.T


def hyperbolic_correction(setup: UndulationSetup, mb: ModulatedBilayer,
                          t: np.ndarray | None = None) -> np.ndarray:
    """Leading hyperbolic part v_h = -(Q L0 Q)^{-1} Q F(0)."""
    t = setup.t if t is None else t
    F0 = residual_field(setup, mb, np.zeros_like(mb.U), t)
    F0[:2] = F0[-2:] = 0.0
    return -HyperbolicSolver(setup, t.size, float(t[1] - t[0])).solve(F0)


# ---------------------------------------------------------------------------
# phi0


def phi0_linear_solve(setup: UndulationSetup, source: str = "analytic",
                      mb: ModulatedBilayer | None = None) -> np.ndarray:
    """Leading order phi0 = -delta eps lam0^-2 G * K0 (remainder dropped).

    ``source="analytic"`` uses beta0 (xi'''' + 2 xi''); ``"projected"`` uses the
    discrete <psi0, F(0)> / (delta eps).
    """
    t = setup.t
    if setup.delta == 0.0:
        return np.zeros_like(t)
    p = setup.greens
    if source == "analytic":
        return -setup.delta * setup.eps / setup.lam0 ** 2 * tg.gk0(p, setup.beta0, setup.xi, t)
    mb = modulated_bilayer(setup) if mb is None else mb
    F0 = residual_field(setup, mb, np.zeros_like(mb.U))
    F0[:2] = F0[-2:] = 0.0
    K = project_psi0(setup, F0)
    return -tg.convolve_G(p, t, K) / setup.lam0 ** 2


def phi0_closed_form(setup: UndulationSetup) -> np.ndarray:
    p = setup.greens
    return -setup.delta * setup.eps / setup.lam0 ** 2 * tg.closed_form_gk0(
        p, setup.beta0, setup.fourier, setup.t)


@dataclass
class PicardResult:
    phi0: np.ndarray
    vh: np.ndarray
    differences: list
    residuals: list
    converged: bool

    @property
    def ratios(self) -> list:
        d = self.differences
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]


def phi0_picard_refine(setup: UndulationSetup, mb: ModulatedBilayer, phi0: np.ndarray,
                       vh: np.ndarray | None = None, max_iters: int = 8, tol: float = 1e-12,
                       update_vh: bool = True) -> PicardResult:
    """Fixed-point iteration phi0 <- phi0 - lam0^-2 G * <psi0, F(psi0 phi0 + v_h)>.

    This is the map phi0 = G * (-delta eps lam0^-2 K0 + R) with K evaluated from
    the discrete residual.  The hyperbolic part is updated alongside with
    v_h <- v_h - (Q L0 Q)^{-1} Q F.
    """
    t = setup.t
    p = setup.greens
    psi0 = setup.psi0
    hyp = HyperbolicSolver(setup, t.size, setup.ht)
    phi = phi0.copy()
    vh = np.zeros_like(mb.U) if vh is None else vh.copy()
    diffs, residuals = [], []
    converged = False
    for _ in range(max_iters):
        F = residual_field(setup, mb, psi0[None, :] * phi[:, None] + vh, t)
        F[:2] = F[-2:] = 0.0
        residuals.append(float(np.max(np.abs(F[2:-2]))))
        K = project_psi0(setup, F)
        step = -tg.convolve_G(p, t, K) / setup.lam0 ** 2
        phi = phi + step
        if update_vh:
            vh = vh - hyp.solve(F)
        d = float(np.max(np.abs(step)))
        diffs.append(d)
        if len(diffs) >= 3 and diffs[-1] > 2.0 * diffs[0]:
            raise ContractionError(
                f"Picard iteration diverging at delta={setup.delta}, eps={setup.eps}")
        if d < tol:
            converged = True
            break
    F = residual_field(setup, mb, psi0[None, :] * phi[:, None] + vh, t)
    residuals.append(float(np.max(np.abs(F[2:-2]))))
    return PicardResult(phi, vh, diffs, residuals, converged)


# ---------------------------------------------------------------------------
# field


@dataclass
class UndulationField:
    t: np.ndarray
    r: np.ndarray
    U: np.ndarray
    phi0: np.ndarray
    psi0: np.ndarray
    vh: np.ndarray | None
    metadata: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        out = self.U + self.psi0[None, :] * self.phi0[:, None]
        if self.vh is not None:
            out = out + self.vh
        return out

    @property
    def perturbation(self) -> np.ndarray:
        return self.values - self.U

    def to_csv(self, path, stride_t: int = 1, stride_r: int = 1) -> None:
        vals = self.values
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "r", "u_n"])
            for i in range(0, self.t.size, stride_t):
                for j in range(0, self.r.size, stride_r):
                    out.writerow([repr(float(self.t[i])), repr(float(self.r[j])),
                                  repr(float(vals[i, j]))])

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def assemble_un(setup: UndulationSetup, mb: ModulatedBilayer, phi0: np.ndarray,
                vh: np.ndarray | None = None, label: str = "leading-order") -> UndulationField:
    if phi0.shape != (mb.U.shape[0],):
        raise DimensionError(f"phi0 has shape {phi0.shape}, expected ({mb.U.shape[0]},)")
    if vh is not None and vh.shape != mb.U.shape:
        raise DimensionError(f"v_h has shape {vh.shape}, expected {mb.U.shape}")
    meta = setup.metadata()
    meta["phi0"] = label
    meta["hyperbolic_correction"] = vh is not None
    return UndulationField(setup.t, setup.grid.r, mb.U, phi0, setup.psi0, vh, meta)


# ---------------------------------------------------------------------------
# diagnostics


def level_half_width(values: np.ndarray, r: np.ndarray, level: float) -> np.ndarray:
    """First r where each row drops below ``level`` (linear interpolation)."""
    below = values < level
    j = np.argmax(below, axis=1)
    if np.any(j == 0):
        raise SolverError("profile starts below the width level")
    rows = np.arange(values.shape[0])
    u_a, u_b = values[rows, j - 1], values[rows, j]
    return r[j - 1] + (u_a - level) / (u_a - u_b) * (r[j] - r[j - 1])


def envelope_rate(t: np.ndarray, signal: np.ndarray, t_min: float, t_max: float) -> float:
    """Decay rate of the local maxima of |signal| on t_min <= t <= t_max (log-linear fit)."""
    a = np.abs(signal)
    peak = (a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])
    idx = np.flatnonzero(peak) + 1
    idx = idx[(t[idx] >= t_min) & (t[idx] <= t_max)]
    if idx.size < 3:
        raise ResolutionError("too few envelope peaks for a fit")
    # refine each peak by a parabola through three samples
    y0, y1, y2 = np.log(a[idx - 1]), np.log(a[idx]), np.log(a[idx + 1])
    den = y0 - 2 * y1 + y2
    shift = np.where(den != 0, 0.5 * (y0 - y2) / den, 0.0)
    tp = t[idx] + shift * (t[1] - t[0])
    yp = y1 - 0.25 * (y0 - y2) * shift
    slope = np.polyfit(tp, yp, 1)[0]
    return float(-slope)


def amplitude_prediction(setup: UndulationSetup) -> float:
    return (abs(setup.beta0) * setup.fourier.magnitude * setup.delta * np.sqrt(setup.eps)
            / (4.0 * setup.lam0 ** 2 * np.sqrt(-setup.alpha0)))


@dataclass
class ScalingRow:
    eps: float
    delta: float
    bare_sup: float
    assembled_sup: float
    refined_sup: float | None
    phi0_peak: float

    def as_list(self):
        return [self.eps, self.delta, self.bare_sup, self.assembled_sup,
                self.refined_sup if self.refined_sup is not None else float("nan"), self.phi0_peak]


SCALING_HEADER = ["eps", "delta", "bare_sup", "assembled_sup", "refined_sup", "phi0_peak"]


def scaling_entry(setup: UndulationSetup, refine: bool = False) -> ScalingRow:
    mb = modulated_bilayer(setup)
    zero = np.zeros_like(mb.U)
    bare = residual_F(setup, mb, zero).sup
    phi = phi0_linear_solve(setup)
    vh = hyperbolic_correction(setup, mb)
    v = setup.psi0[None, :] * phi[:, None] + vh
    assembled = residual_F(setup, mb, v).sup
    refined = None
    if refine:
        res = phi0_picard_refine(setup, mb, phi, vh, max_iters=4)
        refined = res.residuals[-1]
    return ScalingRow(setup.eps, setup.delta, bare, assembled, refined,
                      float(np.max(np.abs(phi))))


def write_scaling_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(SCALING_HEADER)
        for row in sorted(rows, key=lambda r: (r.eps, r.delta)):
            out.writerow([repr(float(x)) for x in row.as_list()])


def alpha_decomposition(setup: UndulationSetup) -> tuple[float, float]:
    return alpha_coefficients(setup.S)
