"""Pearling diagnostics: beta0, alpha0 and its decomposition, c1, Psi0 and the
eigenvalues of the quadratic pencil near the pearling modes."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import grid as g
from .errors import FredholmError, TrackingError
from .potential import PotentialSpec
from .profile1d import BilayerProfile, solve_homoclinic
from .spectral1d import SpectralData, build_operator, richardson

REGIME_TOL = 1e-8


# ---------------------------------------------------------------------------
# scalar coefficients


def beta0_forms(S: SpectralData) -> dict:
    """All four expressions for <psi0, W'(u0)>.

    Uses the unnormalized translation mode u0' in the derivative and Fredholm
    forms; the identities only hold for that normalization.
    """
    u0, h = S.profile.values, S.grid.h
    du0 = S.du0 if S.du0 is not None else g.dr(u0, h, g.EVEN)
    d2u0 = g.lap(u0, h)
    return {
        "direct": S.inner(S.psi0, S.spec(u0, 1)),
        "laplacian": S.inner(S.psi0, d2u0),
        "derivative": -S.inner(g.dr(S.psi0, h, g.EVEN), du0),
        "fredholm": S.inner(S.spec(u0, 3) * S.psi0, du0 * du0) / S.lam0,
    }


def compute_beta0(S: SpectralData) -> tuple[float, float]:
    f = beta0_forms(S)
    return f["direct"], f["fredholm"]


def beta0_extrapolated(spec: PotentialSpec, grid: g.HalfLineGrid) -> dict:
    """Richardson extrapolation (order h^2) of every beta0 form from ``grid`` and
    its refinement; removes the O(h^2) disagreement between the forms."""
    forms = []
    for gr in (grid, grid.refined()):
        S = build_operator(solve_homoclinic(spec, gr), spec)
        forms.append(beta0_forms(S))
    return {k: richardson([forms[0][k], forms[1][k]]) for k in forms[0]}


def compute_alpha0(S: SpectralData, u1: BilayerProfile, eta_d: float) -> float:
    u0 = S.profile.values
    w0 = u1.w
    integrand = (S.spec(u0, 3) * w0 - eta_d * S.spec(u0, 2)) * S.psi0
    return S.inner(integrand, S.psi0) / (4.0 * S.lam0 ** 2)


def alpha_coefficients(S: SpectralData) -> tuple[float, float]:
    """(alpha01, alpha02) with alpha0 = alpha01 gamma - alpha02 eta_d.

    alpha02 carries W''' on the L0^{-1} W'(u0) term; that is what linearity of
    alpha0 in (gamma, eta_d) requires.
    """
    u0 = S.profile.values
    W2, W3 = S.spec(u0, 2), S.spec(u0, 3)
    psi2 = S.psi0 ** 2
    pref = 1.0 / (4.0 * S.lam0 ** 2)
    a01 = pref * S.inner(W3 * S.solve_even(np.ones_like(u0)), psi2)
    a02 = pref * S.inner(W3 * S.solve_even(S.spec(u0, 1)) + W2, psi2)
    return a01, a02


def compute_c1(S: SpectralData, u1: BilayerProfile, eta1: float) -> float:
    u0 = S.profile.values
    return (eta1 - 2.0 * S.inner(S.psi0, S.spec(u0, 3) * u1.values * S.psi0)) / S.lam0


def compute_Psi0(S: SpectralData, u1: BilayerProfile, alpha0: float, eta_d: float) -> np.ndarray:
    u0 = S.profile.values
    W2, W3 = S.spec(u0, 2), S.spec(u0, 3)
    q = W3 * u1.values * S.psi0
    rhs = (-4.0 * S.lam0 ** 2 * alpha0 * S.psi0
           - (S.apply(q) - S.lam0 * q)
           + (W3 * u1.w - eta_d * W2) * S.psi0)
    proj = S.inner(rhs, S.psi0)
    tol = 1e-5 * np.sqrt(S.inner(rhs, rhs))
    if abs(proj) > tol and abs(proj) > 1e-14:
        raise FredholmError(proj, tol)
    if not np.any(rhs):
        return np.zeros_like(rhs)
    return S.shifted_pseudo_inverse(rhs - proj * S.psi0, power=2)


def classify(alpha0: float, tol: float = REGIME_TOL) -> str:
    if alpha0 > tol:
        return "pearling"
    if alpha0 < -tol:
        return "undulation"
    return "degenerate"


# ---------------------------------------------------------------------------
# pencil


def _interior(S: SpectralData, parity: str):
    """Dense Dirichlet-at-R block of L_h for the given parity, plus its node slice."""
    full = (S.matrix_even if parity == g.EVEN else S.matrix_odd).toarray()
    return full[:-1, :-1], (slice(0, S.grid.n - 1) if parity == g.EVEN else slice(1, S.grid.n - 1))


def pencil_mu(S_h: SpectralData, eps: float, eta1: float, eta_d: float,
              parity: str = g.EVEN, vectors: bool = False):
    """All mu = lam0 lambda^2 with L(eps, lambda) v = 0 on one parity block.

    First-order linearization with y = (L_h + mu) x:
        mu x = -L_h x + y,   mu y = -eps M x - (L_h + eps eta1) y,
    where M = eta_d W''(u_h) - W'''(u_h) w_h.
    """
    L, nodes = _interior(S_h, parity)
    m = L.shape[0]
    uh = S_h.profile.values[nodes]
    if eps > 0:
        wh = S_h.profile.w[nodes]
        M = eta_d * S_h.spec(uh, 2) - S_h.spec(uh, 3) * wh
    else:
        M = np.zeros(m)
    I = np.eye(m)
    big = np.block([[-L, I], [-eps * np.diag(M), -(L + eps * eta1 * I)]])
    if vectors:
        mu, V = sla.eig(big)
        return mu, V[:m]
    return sla.eigvals(big)


def pencil_eigenvalues(S_h: SpectralData, lam0: float, eps: float, eta1: float, eta_d: float,
                       count: int = 2) -> np.ndarray:
    """The four lambda = +-sqrt(mu/lam0) from the ``count`` mu nearest -lam0."""
    mu = pencil_mu(S_h, eps, eta1, eta_d)
    dist = np.abs(mu + lam0)
    order = np.argsort(dist, kind="stable")[:count]
    if dist[order[0]] > 0.5 * lam0:
        raise TrackingError(f"no pencil eigenvalue within lam0/2 of -lam0 at eps={eps}")
    lam = np.sqrt(mu[order].astype(complex) / lam0)
    out = np.concatenate([lam, -lam])
    return out[np.lexsort((out.imag, out.real))]


def cluster_count(mu: np.ndarray, center: float, radius: float = 1e-4) -> int:
    return int(np.sum(np.abs(mu - center) < radius))


def symmetry_defect(lams: np.ndarray) -> float:
    """Distance of the set from its images under lambda -> -lambda and conjugation."""
    def dist(a, b):
        return max(np.min(np.abs(b - x)) for x in a)
    return max(dist(lams, -lams), dist(lams, np.conj(lams)))


def projected_symbol(S_h: SpectralData, psi0: np.ndarray, lam0: float, eps: float,
                     eta1: float, eta_d: float) -> np.ndarray:
    """Coefficients (ascending powers of lambda) of <psi0, L(eps, lambda) psi0> / lam0^2."""
    uh = S_h.profile.values
    Lp = S_h.apply(psi0)
    M = (eta_d * S_h.spec(uh, 2) - S_h.spec(uh, 3) * S_h.profile.w) if eps > 0 else 0.0 * uh
    c0 = S_h.inner(psi0, S_h.apply(Lp) + eps * eta1 * Lp + eps * M * psi0)
    c2 = lam0 * S_h.inner(psi0, 2.0 * Lp + eps * eta1 * psi0)
    c4 = lam0 ** 2 * S_h.inner(psi0, psi0)
    return np.array([c0, 0.0, c2, 0.0, c4]) / lam0 ** 2


def tangential_symbol(eps: float, c1: float, alpha0: float) -> np.ndarray:
    """(1 + l^2)^2 + eps c1 (1 + l^2) - 4 eps alpha0, ascending powers of l."""
    return np.array([1.0 + eps * c1 - 4.0 * eps * alpha0, 0.0, 2.0 + eps * c1, 0.0, 1.0])


# ---------------------------------------------------------------------------
# report


@dataclass
class PearlingReport:
    beta0: dict
    alpha0: float
    alpha01: float
    alpha02: float
    c1: float
    regime: str
    lam0: float
    params: dict
    pencil_eigs: dict = field(default_factory=dict)  # eps -> array of 4 complex
    Psi0: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "lam0": self.lam0,
            "beta0": self.beta0,
            "alpha0": self.alpha0,
            "alpha01": self.alpha01,
            "alpha02": self.alpha02,
            "c1": self.c1,
            "regime": self.regime,
            "params": self.params,
            "pencil_eigs": {
                repr(float(e)): [[float(z.real), float(z.imag)] for z in lams]
                for e, lams in sorted(self.pencil_eigs.items())
            },
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def tracks_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["eps", "re_lambda", "im_lambda"])
            for e in sorted(self.pencil_eigs):
                for z in self.pencil_eigs[e]:
                    out.writerow([repr(float(e)), repr(float(z.real)), repr(float(z.imag))])


def pearling_report(S: SpectralData, u1: BilayerProfile, gamma: float, eta1: float,
                    eta_d: float, beta0: dict | None = None) -> PearlingReport:
    if beta0 is None:
        d, f = compute_beta0(S)
        beta0 = {"direct": d, "fredholm": f}
    a0 = compute_alpha0(S, u1, eta_d)
    a01, a02 = alpha_coefficients(S)
    return PearlingReport(
        beta0=beta0, alpha0=a0, alpha01=a01, alpha02=a02,
        c1=compute_c1(S, u1, eta1), regime=classify(a0), lam0=S.lam0,
        params={"gamma": gamma, "eta1": eta1, "eta_d": eta_d},
        Psi0=compute_Psi0(S, u1, a0, eta_d),
    )
