"""Run configuration: a TOML file with fixed sections and typed keys.

Unknown sections or keys are rejected.  Every field has a default, so an
empty file is a valid configuration.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .grid import HalfLineGrid
from .potential import PotentialSpec
from .tangential import Inhomogeneity

EPS_MAX = 0.05


@dataclass
class WellConfig:
    u_max: float = 1.0
    c: float = 3.5
    coefficients: list | None = None  # ascending; overrides (u_max, c)

    def spec(self) -> PotentialSpec:
        if self.coefficients is not None:
            return PotentialSpec.polynomial(self.coefficients)
        return PotentialSpec.quartic(self.u_max, self.c)


@dataclass
class PhysicsConfig:
    gamma: float = 1.0
    eta1: float = 1.0
    eta2_0: float = 3.0

    @property
    def eta_d(self) -> float:
        return self.eta1 - self.eta2_0


@dataclass
class EpsConfig:
    value: float = 1e-2  # single-run eps
    ladder: list = field(default_factory=lambda: [2e-2, 1e-2, 5e-3])
    pencil: list = field(default_factory=lambda: [1e-3, 2e-3, 4e-3])
    delta: float | None = None  # explicit delta ...
    q: float = 1.0  # ... or delta = eps^q

    def delta_for(self, eps: float) -> float:
        return self.delta if self.delta is not None else eps ** self.q


@dataclass
class XiConfig:
    kind: str = "dbump-localized"
    T: float = 2.0
    amplitude: float = 1.0  # amplitude (localized) or mass (transitional)

    def build(self) -> Inhomogeneity:
        if self.kind == "dbump-localized":
            return Inhomogeneity.dbump_localized(self.T, self.amplitude)
        if self.kind == "bump-transitional":
            return Inhomogeneity.bump_transitional(self.T, self.amplitude)
        raise ConfigError(f"xi.kind must be dbump-localized or bump-transitional, got {self.kind!r}")


@dataclass
class GridConfig:
    R: float = 12.0
    n: int = 481
    kappa: float = 14.0
    points_per_period: int = 64
    greens_h: float = 0.01
    field_stride_t: int = 8
    field_stride_r: int = 4

    def half_line(self) -> HalfLineGrid:
        return HalfLineGrid(self.R, self.n)


@dataclass
class NormalFormConfig:
    omega1: float = 1.0
    alpha2: float = 1.0
    alpha7: float = 1.0
    alpha8: float = 1.0
    alpha0: float | None = None  # None: use the computed alpha0
    C: float = 0.1
    theta: float = 0.0
    span: float = 50.0  # in units of 1/sqrt(-alpha0 eps)
    tol: float = 1e-10
    samples: int = 2001


@dataclass
class RunConfig:
    well: WellConfig = field(default_factory=WellConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    eps: EpsConfig = field(default_factory=EpsConfig)
    xi: XiConfig = field(default_factory=XiConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    normalform: NormalFormConfig = field(default_factory=NormalFormConfig)
    workers: int = 1

    def validate(self) -> "RunConfig":
        g = self.grid
        for name, val in (("grid.R", g.R), ("grid.kappa", g.kappa), ("grid.greens_h", g.greens_h),
                          ("xi.T", self.xi.T)):
            if not val > 0:
                raise ConfigError(f"{name} must be positive, got {val}")
        for name, val in (("grid.n", g.n), ("grid.points_per_period", g.points_per_period),
                          ("grid.field_stride_t", g.field_stride_t),
                          ("grid.field_stride_r", g.field_stride_r), ("workers", self.workers)):
            if not val >= 1:
                raise ConfigError(f"{name} must be >= 1, got {val}")
        for e in [self.eps.value, *self.eps.ladder]:
            if not 0 < e <= EPS_MAX:
                raise ConfigError(f"eps entries must lie in (0, {EPS_MAX}], got {e}")
        for e in self.eps.pencil:
            if not 0 <= e <= EPS_MAX:
                raise ConfigError(f"pencil eps entries must lie in [0, {EPS_MAX}], got {e}")
        if self.eps.delta is None and not self.eps.q > 0.75:
            raise ConfigError(f"delta exponent q must exceed 3/4, got {self.eps.q}")
        if self.eps.delta is not None and self.eps.delta < 0:
            raise ConfigError(f"delta must be nonnegative, got {self.eps.delta}")
        if not 1e-12 <= self.normalform.tol <= 1e-6:
            raise ConfigError(f"normalform.tol must lie in [1e-12, 1e-6], got {self.normalform.tol}")
        self.xi.build()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def physics_dict(self) -> dict:
        """Everything that can change a number in the outputs (``workers`` cannot)."""
        d = self.to_dict()
        d.pop("workers")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.physics_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _coerce(cls, name: str, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    out = {}
    for key, val in data.items():
        default = getattr(cls(), key)
        if val is None and default is None:
            out[key] = None
            continue
        if isinstance(default, bool) or isinstance(val, bool):
            raise ConfigError(f"{name}.{key}: booleans are not accepted")
        if isinstance(default, float) or (default is None and isinstance(val, (int, float))):
            if not isinstance(val, (int, float)):
                raise ConfigError(f"{name}.{key} must be a number")
            val = float(val)
        elif isinstance(default, int):
            if not isinstance(val, int):
                raise ConfigError(f"{name}.{key} must be an integer")
        elif isinstance(default, list) or key == "coefficients":
            if not isinstance(val, list) or not all(isinstance(x, (int, float)) for x in val):
                raise ConfigError(f"{name}.{key} must be a list of numbers")
            val = [float(x) for x in val]
        elif isinstance(default, str) and not isinstance(val, str):
            raise ConfigError(f"{name}.{key} must be a string")
        out[key] = val
    return cls(**out)


_SECTIONS = {"well": WellConfig, "physics": PhysicsConfig, "eps": EpsConfig, "xi": XiConfig,
             "grid": GridConfig, "normalform": NormalFormConfig}


def from_dict(data: dict) -> RunConfig:
    unknown = sorted(set(data) - set(_SECTIONS) - {"workers"})
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    kw = {name: _coerce(cls, name, data.get(name, {})) for name, cls in _SECTIONS.items()}
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool):
        raise ConfigError("workers must be an integer")
    return RunConfig(**kw, workers=workers).validate()


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return from_dict(data)
