"""Double-well potentials W and their critical structure."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import InvalidArgumentError, WellShapeError

_SAMPLES_POSITIVITY = 2000
_SAMPLES_W3 = 10_000


@dataclass(frozen=True)
class PotentialSpec:
    """A polynomial double well.

    ``kind`` is ``"quartic"`` for W(u) = u^2 (u - u_max)(u - c u_max), or
    ``"polynomial"`` for an arbitrary coefficient list (ascending powers).
    """

    kind: str
    u_max: float | None = None
    c: float | None = None
    coefficients: tuple[float, ...] = field(default=())

    @classmethod
    def quartic(cls, u_max: float, c: float) -> "PotentialSpec":
        if not u_max > 0:
            raise InvalidArgumentError(f"u_max must be positive, got {u_max}")
        return cls(kind="quartic", u_max=float(u_max), c=float(c))

    @classmethod
    def polynomial(cls, coefficients) -> "PotentialSpec":
        coeffs = tuple(float(a) for a in coefficients)
        if len(coeffs) < 5:
            raise InvalidArgumentError("a double well needs degree >= 4")
        return cls(kind="polynomial", coefficients=coeffs)

    @cached_property
    def poly(self) -> Polynomial:
        if self.kind == "quartic":
            m, c = self.u_max, self.c
            return Polynomial([0.0, 0.0, c * m * m, -(1.0 + c) * m, 1.0])
        if self.kind == "polynomial":
            return Polynomial(self.coefficients).trim()
        raise InvalidArgumentError(f"unknown potential kind {self.kind!r}")

    @cached_property
    def derivatives(self) -> tuple[Polynomial, ...]:
        p = self.poly
        return tuple(p.deriv(k) if k else p for k in range(5))

    def __call__(self, u, order: int = 0):
        return eval_w(self, u, order)

    @cached_property
    def report(self) -> "WellReport":
        return validate_well(self)

    @property
    def w2_origin(self) -> float:
        return float(self.derivatives[2](0.0))

    def to_dict(self) -> dict:
        if self.kind == "quartic":
            return {"kind": "quartic", "u_max": self.u_max, "c": self.c}
        return {"kind": "polynomial", "coefficients": list(self.coefficients)}


def eval_w(spec: PotentialSpec, u, order: int = 0):
    """Return the ``order``-th derivative of W at ``u`` (scalar or array)."""
    if order not in (0, 1, 2, 3, 4) or isinstance(order, bool):
        raise InvalidArgumentError(f"unsupported derivative order {order!r}")
    out = spec.derivatives[order](np.asarray(u, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class WellReport:
    u_circ: float
    u_plus: float
    u_max_zero: float
    w3_negative_on_interval: bool
    w2_origin: float

    def to_dict(self) -> dict:
        return {
            "u_circ": self.u_circ,
            "u_plus": self.u_plus,
            "u_max_zero": self.u_max_zero,
            "w3_negative_on_interval": self.w3_negative_on_interval,
            "w2_origin": self.w2_origin,
        }


def _positive_roots(p: Polynomial, upper: float) -> list[float]:
    """Simple positive roots of ``p`` on (0, upper] by bracket scan plus Brent."""
    grid = np.linspace(0.0, upper, int(round(1e3)) + 1)[1:]
    vals = p(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(brentq(p, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def _critical_points(spec: PotentialSpec) -> tuple[float, float]:
    if spec.kind == "quartic":
        m, c = spec.u_max, spec.c
        # W'(u)/u = 4u^2 - 3(1+c) m u + 2 c m^2
        a, b, cc = 4.0, -3.0 * (1.0 + c) * m, 2.0 * c * m * m
        disc = b * b - 4.0 * a * cc
        if disc <= 0.0:
            raise WellShapeError("two positive critical points", f"discriminant {disc:.3g}")
        sq = np.sqrt(disc)
        # cancellation-free quadratic roots
        q = -0.5 * (b - sq) if b < 0 else -0.5 * (b + sq)
        r1, r2 = sorted((q / a, cc / q))
        return float(r1), float(r2)
    coeffs = spec.poly.coef
    bound = 1.0 + np.max(np.abs(coeffs[:-1] / coeffs[-1]))
    roots = [r for r in _positive_roots(spec.derivatives[1], bound) if r > 1e-9]
    if len(roots) != 2:
        raise WellShapeError("two positive critical points", f"found {len(roots)}")
    return roots[0], roots[1]


def _smallest_positive_zero(spec: PotentialSpec, u_circ: float, u_plus: float) -> float:
    if spec.kind == "quartic":
        return min(spec.u_max, spec.c * spec.u_max) if spec.c > 0 else spec.u_max
    W = spec.poly
    return float(brentq(W, u_circ, u_plus, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def validate_well(spec: PotentialSpec) -> WellReport:
    """Check the double-well conditions and return the critical structure."""
    W = spec.derivatives
    tol = 0.0 if spec.kind == "quartic" else 1e-12
    if spec.poly.degree() < 4 or spec.poly.coef[-1] <= 0 or spec.poly.degree() % 2:
        raise WellShapeError("even degree >= 4 with positive leading coefficient")
    if abs(W[0](0.0)) > tol:
        raise WellShapeError("W(0) = 0", f"W(0) = {W[0](0.0):.3g}")
    if abs(W[1](0.0)) > tol:
        raise WellShapeError("W'(0) = 0", f"W'(0) = {W[1](0.0):.3g}")
    if not W[2](0.0) > 0:
        raise WellShapeError("W''(0) > 0", f"W''(0) = {W[2](0.0):.3g}")

    u_circ, u_plus = _critical_points(spec)
    if not u_circ > 0:
        raise WellShapeError("u_circ > 0", f"u_circ = {u_circ:.6g}")
    if not W[2](u_circ) < 0:
        raise WellShapeError("W''(u_circ) < 0")
    if not W[2](u_plus) > 0:
        raise WellShapeError("W''(u_plus) > 0")
    if not W[0](u_plus) < 0:
        raise WellShapeError("W(u_plus) < 0", f"W(u_plus) = {W[0](u_plus):.6g}")

    u_zero = _smallest_positive_zero(spec, u_circ, u_plus)
    if not (u_circ < u_zero < u_plus):
        raise WellShapeError("u_circ < u_max_zero < u_plus")
    interior = np.linspace(0.0, u_zero, _SAMPLES_POSITIVITY + 2)[1:-1]
    if not np.all(W[0](interior) > 0):
        raise WellShapeError("W > 0 on (0, u_max_zero)")
    if not W[1](u_zero) < 0:
        raise WellShapeError("W'(u_max_zero) < 0 (simple zero)")

    # sign condition checked on the open interval only
    samples = np.linspace(0.0, u_zero, _SAMPLES_W3 + 2)[1:-1]
    w3_negative = bool(np.all(W[3](samples) < 0))
    return WellReport(
        u_circ=float(u_circ),
        u_plus=float(u_plus),
        u_max_zero=float(u_zero),
        w3_negative_on_interval=w3_negative,
        w2_origin=float(W[2](0.0)),
    )
