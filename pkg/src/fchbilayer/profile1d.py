"""Radial bilayer profiles: the homoclinic u0, its first correction u1, the
far-field value u_inf and the eps > 0 bilayer u_h.

All profiles live on the even half-line grid.  The discrete problems use the
Laplacian of :mod:`fchbilayer.grid` (reflecting ghost at r = 0, flat far field
at r = R), so that u0 returned with ``polish=True`` is an exact zero of the
discrete equation u'' = W'(u) and the discrete linearization has an exact
translation mode up to round-off.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from . import grid as g
from .errors import InvalidArgumentError, RootFindError, SingularQuadratureError, SolverError
from .potential import PotentialSpec

NEWTON_TOL = 1e-10


@dataclass
class BilayerProfile:
    grid: g.HalfLineGrid
    values: np.ndarray
    kind: str  # "u0" | "u1" | "u_h"
    params: dict = field(default_factory=dict)
    u_inf: float = 0.0
    w: np.ndarray | None = None  # (u'' - W'(u))/eps for u_h, L0 u1 for u1
    du: np.ndarray | None = None
    continuum: np.ndarray | None = None
    residual: np.ndarray | None = None

    @property
    def r(self):
        return self.grid.r

    def derivative(self) -> np.ndarray:
        if self.du is not None:
            return self.du
        return g.dr(self.values, self.grid.h, g.EVEN)

    def to_csv(self, path) -> None:
        res = self.residual if self.residual is not None else np.zeros_like(self.values)
        du = self.derivative()
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["r", "u", "du_dr", "residual"])
            for row in zip(self.grid.r, self.values, du, res):
                out.writerow([repr(float(x)) for x in row])


# ---------------------------------------------------------------------------
# homoclinic


def _turning_quotient(spec: PotentialSpec, u_top: float) -> Polynomial:
    """Q with W(u_top - x) = x Q(x); exact deflation of the simple zero."""
    shifted = spec.poly(Polynomial([u_top, -1.0]))
    quo, rem = divmod(shifted, Polynomial([0.0, 1.0]))
    if abs(rem.coef[0]) > 1e-10 * max(1.0, np.max(np.abs(shifted.coef))):
        raise SingularQuadratureError("turning point is not a zero of W")
    return quo


def homoclinic_continuum(spec: PotentialSpec, r: np.ndarray, rtol: float = 1e-13):
    """u0 and u0' at the nodes ``r`` by inverting r(u) = int du / sqrt(2 W(u)).

    Near the turning point u = u_max the substitution u = u_max - s^2 turns the
    quadrature into ds/dr = sqrt(Q(s^2)/2), which has no singularity.  Once u
    has fallen to u_max/2 we continue in u itself, u' = -sqrt(2 W(u)), which
    keeps relative accuracy in the exponentially small tail.
    """
    u_top = spec.report.u_max_zero
    Q = _turning_quotient(spec, u_top)
    if not Q(0.0) > 0:
        raise SingularQuadratureError("W'(u_max) must be negative at the turning point")

    def ds(_, y):
        return [np.sqrt(max(Q(y[0] ** 2), 0.0) / 2.0)]

    s_switch = np.sqrt(0.5 * u_top)

    def hit(_, y):
        return y[0] - s_switch

    hit.terminal = True
    hit.direction = 1
    r = np.asarray(r, dtype=float)
    r_end = float(r[-1])
    first = solve_ivp(ds, [0.0, r_end], [0.0], method="DOP853", rtol=rtol, atol=1e-15,
                      dense_output=True, events=hit)
    if first.status < 0:
        raise SingularQuadratureError(f"turning-point quadrature failed: {first.message}")
    r_sw = first.t_events[0][0] if first.t_events[0].size else r_end
    u = np.empty_like(r)
    du = np.empty_like(r)
    inner = r <= r_sw
    s = first.sol(r[inner])[0]
    u[inner] = u_top - s * s
    du[inner] = -2.0 * s * np.sqrt(np.maximum(Q(s * s), 0.0) / 2.0)
    if np.any(~inner):
        W = spec.poly

        def du_dr(_, y):
            return [-np.sqrt(max(2.0 * W(y[0]), 0.0))]

        second = solve_ivp(du_dr, [r_sw, r_end], [u_top - s_switch ** 2], method="DOP853",
                           rtol=rtol, atol=1e-300, dense_output=True)
        if second.status < 0:
            raise SingularQuadratureError(f"tail quadrature failed: {second.message}")
        u[~inner] = second.sol(r[~inner])[0]
        du[~inner] = -np.sqrt(np.maximum(2.0 * W(u[~inner]), 0.0))
    return u, du


def homoclinic_shooting(spec: PotentialSpec, r: np.ndarray, rtol: float = 1e-13):
    """Cross-check: integrate u'' = W'(u) from (u_max, 0).  Unstable for large r."""
    u_top = spec.report.u_max_zero
    W1 = spec.derivatives[1]
    sol = solve_ivp(lambda _, y: [y[1], W1(y[0])], [0.0, float(r[-1])], [u_top, 0.0],
                    method="DOP853", rtol=rtol, atol=1e-14, t_eval=r)
    return sol.y[0], sol.y[1]


def _tridiag_solve(lower, diag, upper, rhs):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


def polish_discrete(spec: PotentialSpec, grid: g.HalfLineGrid, u: np.ndarray,
                    u_R: float = 0.0, tol: float = 1e-13, max_iter: int = 20) -> np.ndarray:
    """Newton-correct ``u`` onto the discrete equation lap(u) = W'(u), u(R) = u_R."""
    h2 = grid.h ** 2
    x = u[:-1].copy()
    m = x.size
    W1, W2 = spec.derivatives[1], spec.derivatives[2]
    lower = np.full(m - 1, 1.0 / h2)
    upper = np.full(m - 1, 1.0 / h2)
    upper[0] = 2.0 / h2
    for _ in range(max_iter):
        full = np.append(x, u_R)
        F = g.lap(full, grid.h)[:-1] - W1(x)
        if np.max(np.abs(F)) < tol:
            break
        step = _tridiag_solve(lower, -2.0 / h2 - W2(x), upper, -F)
        x += step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise SolverError("homoclinic polish did not converge", float(np.max(np.abs(F))))
    return np.append(x, u_R)


def solve_homoclinic(spec: PotentialSpec, grid: g.HalfLineGrid, polish: bool = True) -> BilayerProfile:
    grid.check_truncation(spec.w2_origin)
    u, du = homoclinic_continuum(spec, grid.r)
    values = polish_discrete(spec, grid, u) if polish else u.copy()
    res = g.lap(values, grid.h) - spec(values, 1)
    res[-1] = 0.0
    return BilayerProfile(grid=grid, values=values, kind="u0",
                          params={"eps": 0.0, "polished": polish},
                          du=du, continuum=u, residual=res)


def hamiltonian_defect(spec: PotentialSpec, u: np.ndarray, du: np.ndarray) -> np.ndarray:
    return 0.5 * du * du - spec(u, 0)


# ---------------------------------------------------------------------------
# far field


def far_field_root(spec: PotentialSpec, eps: float, eta2: float, gamma: float,
                   max_iter: int = 50) -> float:
    """Small root of (W''(u) - eps eta2) W'(u) = eps gamma, by Newton."""
    if eps < 0:
        raise InvalidArgumentError(f"eps must be nonnegative, got {eps}")
    W1, W2, W3 = (spec.derivatives[k] for k in (1, 2, 3))
    w2 = spec.w2_origin
    u = eps * gamma / (w2 * w2)

    def f(x):
        return (W2(x) - eps * eta2) * W1(x) - eps * gamma

    for _ in range(max_iter):
        fu = f(u)
        if fu == 0.0:
            return float(u)
        df = W3(u) * W1(u) + (W2(u) - eps * eta2) * W2(u)
        step = fu / df
        u -= step
        if abs(step) <= 4 * np.finfo(float).eps * max(abs(u), 1e-300):
            return float(u)
    if abs(f(u)) < 1e-15:
        return float(u)
    raise RootFindError(f"far-field Newton did not converge (eps={eps}, gamma={gamma})")


# ---------------------------------------------------------------------------
# first correction


def solve_u1(spectral, gamma: float, eta_d: float) -> BilayerProfile:
    """u1 with L0^2 u1 = gamma - eta_d W'(u0); ``w`` holds w0 = L0 u1."""
    u0 = spectral.profile.values
    rhs = gamma - eta_d * spectral.spec(u0, 1)
    w0 = spectral.solve_even(rhs)
    u1 = spectral.solve_even(w0)
    grid = spectral.grid
    return BilayerProfile(grid=grid, values=u1, kind="u1",
                          params={"gamma": gamma, "eta_d": eta_d},
                          u_inf=gamma / spectral.spec.w2_origin ** 2, w=w0)


# ---------------------------------------------------------------------------
# eps > 0 bilayer


def _bilayer_residual(spec, grid, u, w, eps, eta1, eta_d, gamma):
    W1, W2 = spec(u, 1), spec(u, 2)
    E1 = g.lap(u, grid.h) - W1 - w
    E2 = g.lap(w, grid.h) - W2 * w + eps * eta1 * w + eps * eta_d * W1 - eps * gamma
    return E1[:-1], E2[:-1]


def _bilayer_newton(spec, grid, u, w, eps, eta1, eta_d, gamma, tol, max_iter):
    """Newton on the interleaved (u, w) system, pentadiagonal in that ordering."""
    h2 = grid.h ** 2
    m = grid.n - 1
    N = 2 * m
    u, w = u.copy(), w.copy()
    for it in range(max_iter):
        E1, E2 = _bilayer_residual(spec, grid, u, w, eps, eta1, eta_d, gamma)
        res = max(np.max(np.abs(E1)), np.max(np.abs(E2)))
        if res < tol:
            return u, w, res, it
        x, y = u[:-1], w[:-1]
        W2, W3 = spec(x, 2), spec(x, 3)
        ab = np.zeros((5, N))  # ab[2 + i - j, j] = J[i, j]
        idx_u = 2 * np.arange(m)
        idx_w = idx_u + 1
        # E1 rows
        ab[2, idx_u] = -2.0 / h2 - W2
        ab[1, idx_w] = -1.0  # J[2j, 2j+1]
        cu = np.full(m - 1, 1.0 / h2)
        cu[0] = 2.0 / h2
        ab[0, idx_u[1:]] = cu  # J[2j, 2j+2]
        ab[4, idx_u[:-1]] = 1.0 / h2  # J[2j+2, 2j]
        # E2 rows
        ab[2, idx_w] = -2.0 / h2 - W2 + eps * eta1
        ab[3, idx_u] = -W3 * y + eps * eta_d * W2  # J[2j+1, 2j]
        ab[0, idx_w[1:]] = cu
        ab[4, idx_w[:-1]] = 1.0 / h2
        rhs = np.empty(N)
        rhs[0::2] = -E1
        rhs[1::2] = -E2
        step = solve_banded((2, 2), ab, rhs)
        u[:-1] += step[0::2]
        w[:-1] += step[1::2]
        if not np.all(np.isfinite(u)):
            break
    E1, E2 = _bilayer_residual(spec, grid, u, w, eps, eta1, eta_d, gamma)
    res = max(np.max(np.abs(E1)), np.max(np.abs(E2)))
    return u, w, res, max_iter


def _boundary_state(spec, eps, eta1, eta_d, gamma):
    u_inf = far_field_root(spec, eps, eta1 - eta_d, gamma)
    return u_inf, -spec(u_inf, 1)


def solve_bilayer_eps(spec: PotentialSpec, grid: g.HalfLineGrid, eps: float, gamma: float,
                      eta1: float, eta_d: float, seed: BilayerProfile, *,
                      tol: float = NEWTON_TOL, max_iter: int = 30,
                      max_halvings: int = 8) -> BilayerProfile:
    """Bilayer of (L_u + eps eta1)(u'' - W'(u)) + eps eta_d W'(u) = eps gamma.

    ``seed`` is either u0 (then u1 is not needed: continuation starts at eps=0)
    or an earlier u_h at nearby parameters.  Solved as the second-order system
    u'' - W'(u) = w, (d_r^2 - W''(u) + eps eta1) w + eps eta_d W'(u) = eps gamma
    with far-field Dirichlet data u(R) = u_inf, w(R) = -W'(u_inf).
    """
    if eps < 0:
        raise InvalidArgumentError(f"eps must be nonnegative, got {eps}")
    params = {"eps": eps, "gamma": gamma, "eta1": eta1, "eta_d": eta_d}
    if eps == 0.0:
        return replace(seed, kind="u_h", params=params, u_inf=0.0,
                       w=np.zeros_like(seed.values) if seed.kind == "u0" else seed.w)

    def attempt(e, u_seed, w_seed):
        u_inf, w_inf = _boundary_state(spec, e, eta1, eta_d, gamma)
        u_s, w_s = u_seed.copy(), w_seed.copy()
        u_s[-1], w_s[-1] = u_inf, w_inf
        u, w, res, it = _bilayer_newton(spec, grid, u_s, w_s, e, eta1, eta_d, gamma, tol, max_iter)
        return u, w, res, it < max_iter, u_inf

    seed_eps = seed.params.get("eps", 0.0) if seed.kind == "u_h" else 0.0
    u_cur = seed.values.copy()
    w_cur = (seed.w * seed_eps if seed.kind == "u_h" and seed.w is not None
             else g.lap(u_cur, grid.h) - spec(u_cur, 1))
    e_cur, step = seed_eps, eps - seed_eps
    halvings = 0
    while True:
        e_try = eps if abs(eps - e_cur) <= abs(step) * (1 + 1e-12) else e_cur + step
        u, w, res, ok, u_inf = attempt(e_try, u_cur, w_cur)
        last_res = res
        if ok:
            u_cur, w_cur, e_cur = u, w, e_try
            if e_cur == eps:
                break
            continue
        halvings += 1
        if halvings > max_halvings:
            raise SolverError(f"bilayer Newton failed at eps={e_try}", float(res))
        step *= 0.5
    prof = BilayerProfile(grid=grid, values=u_cur, kind="u_h", params=params, u_inf=u_inf,
                          w=w_cur / eps)
    E1, E2 = _bilayer_residual(spec, grid, u_cur, w_cur, eps, eta1, eta_d, gamma)
    prof.residual = np.append(E2, 0.0)
    prof.params["newton_residual"] = float(last_res)
    return prof


def fourth_order_residual(spec, profile: BilayerProfile) -> np.ndarray:
    """Direct evaluation of the bilayer ODE on the grid (zero at the far-field node)."""
    p = profile.params
    u, h = profile.values, profile.grid.h
    N = g.lap(u, h) - spec(u, 1)
    N[-1] = -spec(u[-1], 1)
    out = g.lap(N, h) - spec(u, 2) * N + p["eps"] * p["eta1"] * N \
        + p["eps"] * p["eta_d"] * spec(u, 1) - p["eps"] * p["gamma"]
    return out
