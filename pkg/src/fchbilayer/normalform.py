"""Truncated pearling normal form on the four-dimensional center manifold:

    C1' = i(1 + w1 eps) C1 + C2 + i C1 [a7 |C1|^2 + a8 K]
    C2' = i(1 + w1 eps) C2 + i C2 [a7 |C1|^2 + a8 K] + C1 [-a0 eps + a2 K]

with K = i(C1 conj(C2) - conj(C1) C2), which is real.  K is a first integral.
H = |C2|^2 - (-a0 eps + 2 a2 K)|C1|^2 has dH/dt = -2 a2 K Re(C1 conj(C2)), so it
is conserved on K = 0 (which contains both manifolds of the bilayer) or when
a2 = 0; off that set the conserved quantity is |C2|^2 - (-a0 eps + a2 K)|C1|^2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidArgumentError, RegimeError, SolverError


@dataclass(frozen=True)
class NormalFormParams:
    eps: float
    alpha0: float
    omega1: float = 1.0
    alpha2: float = 1.0
    alpha7: float = 1.0
    alpha8: float = 1.0

    @property
    def omega(self) -> float:
        return 1.0 + self.omega1 * self.eps

    @property
    def rate(self) -> float:
        """sqrt(-alpha0 eps); regime error outside the undulation regime."""
        if not (self.alpha0 < 0 and self.eps > 0):
            raise RegimeError(f"manifolds need alpha0 < 0 and eps > 0 (alpha0={self.alpha0})")
        return float(np.sqrt(-self.alpha0 * self.eps))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def first_integral_K(C1, C2):
    return np.real(1j * (C1 * np.conj(C2) - np.conj(C1) * C2))


def first_integral_H(p: NormalFormParams, C1, C2):
    K = first_integral_K(C1, C2)
    return np.abs(C2) ** 2 - (-p.alpha0 * p.eps + 2.0 * p.alpha2 * K) * np.abs(C1) ** 2


def conserved_H(p: NormalFormParams, C1, C2):
    """First integral valid for every K."""
    K = first_integral_K(C1, C2)
    return np.abs(C2) ** 2 - (-p.alpha0 * p.eps + p.alpha2 * K) * np.abs(C1) ** 2


def nf_rhs(p: NormalFormParams, C1, C2):
    K = first_integral_K(C1, C2)
    bracket = p.alpha7 * np.abs(C1) ** 2 + p.alpha8 * K
    d1 = 1j * p.omega * C1 + C2 + 1j * C1 * bracket
    d2 = 1j * p.omega * C2 + 1j * C2 * bracket + C1 * (-p.alpha0 * p.eps + p.alpha2 * K)
    return d1, d2


def _pack(C1, C2):
    return np.array([C1.real, C1.imag, C2.real, C2.imag])


def _unpack(y):
    return y[0] + 1j * y[1], y[2] + 1j * y[3]


@dataclass
class Trajectory:
    t: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    params: NormalFormParams

    @property
    def K(self):
        return first_integral_K(self.C1, self.C2)

    @property
    def H(self):
        return first_integral_H(self.params, self.C1, self.C2)

    def drift(self) -> tuple[float, float]:
        return float(np.max(np.abs(self.K - self.K[0]))), float(np.max(np.abs(self.H - self.H[0])))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "re_C1", "im_C1", "re_C2", "im_C2", "K", "H"])
            for row in zip(self.t, self.C1.real, self.C1.imag, self.C2.real, self.C2.imag,
                           self.K, self.H):
                out.writerow([repr(float(x)) for x in row])


def nf_integrate(p: NormalFormParams, C1_0: complex, C2_0: complex, t_span, tol: float = 1e-10,
                 t_eval=None, max_amplitude: float | None = None) -> Trajectory:
    """DOP853 on the four real components.

    rtol = tol and atol = tol * |state0| so that tiny starts (e.g. far down an
    unstable manifold) are resolved relatively.  ``max_amplitude`` stops the
    integration once |C1| + |C2| exceeds it.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise InvalidArgumentError(f"tol must lie in [1e-12, 1e-6], got {tol}")
    y0 = _pack(complex(C1_0), complex(C2_0))
    scale = float(np.linalg.norm(y0)) or 1.0

    def f(_, y):
        d1, d2 = nf_rhs(p, *_unpack(y))
        return _pack(d1, d2)

    events = None
    if max_amplitude is not None:
        def blowup(_, y):
            return np.hypot(y[0], y[1]) + np.hypot(y[2], y[3]) - max_amplitude
        blowup.terminal = True
        blowup.direction = 1
        events = blowup
    sol = solve_ivp(f, t_span, y0, method="DOP853", rtol=tol, atol=tol * scale,
                    t_eval=t_eval, events=events)
    if sol.status < 0:
        raise SolverError(f"normal form integration failed: {sol.message}")
    C1, C2 = _unpack(sol.y)
    return Trajectory(sol.t, C1, C2, p)


def manifold_point(p: NormalFormParams, branch: str, C: float, theta: float, t):
    """Closed-form stable (decaying as t -> +inf) or unstable (t -> -inf) solution."""
    b = p.rate
    t = np.asarray(t, float)
    if branch == "stable":
        phase = p.omega * t - p.alpha7 * C ** 2 / (2.0 * b) * np.exp(-2.0 * b * t) + theta
        C1 = C * np.exp(-b * t + 1j * phase)
        return C1, -b * C1
    if branch == "unstable":
        phase = p.omega * t + p.alpha7 * C ** 2 / (2.0 * b) * np.exp(2.0 * b * t) + theta
        C1 = C * np.exp(b * t + 1j * phase)
        return C1, b * C1
    raise InvalidArgumentError(f"branch must be 'stable' or 'unstable', got {branch!r}")


def manifold_derivative(p: NormalFormParams, branch: str, C: float, theta: float, t):
    """Analytic t-derivative of :func:`manifold_point`."""
    b = p.rate
    C1, C2 = manifold_point(p, branch, C, theta, t)
    sgn = -1.0 if branch == "stable" else 1.0
    growth = sgn * b + 1j * (p.omega + p.alpha7 * np.abs(C1) ** 2)
    d1 = growth * C1
    return d1, sgn * b * d1


def manifold_residual(p: NormalFormParams, branch: str, C: float, theta: float, t) -> float:
    C1, C2 = manifold_point(p, branch, C, theta, t)
    d1, d2 = manifold_derivative(p, branch, C, theta, t)
    r1, r2 = nf_rhs(p, C1, C2)
    return float(max(np.max(np.abs(d1 - r1)), np.max(np.abs(d2 - r2))))


def envelope_rate(t: np.ndarray, C1: np.ndarray) -> float:
    """Least-squares decay rate of log|C1|."""
    return float(-np.polyfit(t, np.log(np.abs(C1)), 1)[0])


def manifold_separation(p: NormalFormParams, Cs: float, theta_s: float, Cu: float,
                        theta_u: float, span: float, samples: int = 2001) -> float:
    """Minimum distance between the forward stable and backward unstable orbits."""
    s = np.linspace(0.0, span, samples)
    a1, a2 = manifold_point(p, "stable", Cs, theta_s, s)
    b1, b2 = manifold_point(p, "unstable", Cu, theta_u, -s)
    d = np.sqrt(np.abs(a1[:, None] - b1[None, :]) ** 2 + np.abs(a2[:, None] - b2[None, :]) ** 2)
    return float(d.min())


def manifold_trajectory(p: NormalFormParams, branch: str, C: float, theta: float, span: float,
                        tol: float = 1e-10, samples: int = 2001) -> Trajectory:
    """Integrate along a manifold in its well-conditioned direction.

    Forward integration along the stable manifold amplifies round-off like
    exp(rate t), so the stable branch is integrated backward from t = span/rate
    to 0 and the unstable branch forward from -span/rate to 0.  The returned
    samples are in increasing t.
    """
    b = p.rate
    T = span / b
    if branch == "stable":
        t0, t1 = T, 0.0
    elif branch == "unstable":
        t0, t1 = -T, 0.0
    else:
        raise InvalidArgumentError(f"branch must be 'stable' or 'unstable', got {branch!r}")
    C1, C2 = manifold_point(p, branch, C, theta, t0)
    t_eval = np.linspace(t0, t1, samples)
    tr = nf_integrate(p, complex(C1), complex(C2), (t0, t1), tol, t_eval=t_eval)
    order = np.argsort(tr.t, kind="stable")
    return Trajectory(tr.t[order], tr.C1[order], tr.C2[order], p)
