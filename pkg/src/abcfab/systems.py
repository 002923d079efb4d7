"""Registry of right-hand sides f(t, u) for the ABC initial-value problem.

Built-in systems:

``chaos3d_a``
    phi (x2 - x1) + sigma x2 x3,  varphi x1 - x1 x3,  x1 x2 - psi x3 + delta x2^2
``chaos3d_b``
    phi (x2 - x1),  x1 - x1 x3,  50 - varphi x1^2 - psi x3
``hyper4d``
    phi x1 - x2 x3 + x4,  -varphi x2 + x1 x3 + x4,  -psi x3 + q(x) + x1,  sigma x1
    where the quadratic/cubic term q is chosen by the ``hyper4d_f3_variant``
    option (see ``HYPER4D_F3_VARIANTS``).
``tbeta``
    f(t, y) = t^beta, with the closed-form solution ``exact_tbeta``.
``linear_ty``
    f(t, y) = rate * t * y with rate = 1/1000.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .core import OrderLike, as_order
from .errors import ConfigError, DomainError, UnknownSystemError

RhsFunc = Callable[[float, np.ndarray, Mapping[str, float], Mapping[str, str]], np.ndarray]


@dataclass(frozen=True)
class SystemSpec:
    """A named right-hand side with its parameters and default initial data."""

    name: str
    dimension: int
    params: Mapping[str, float]
    func: RhsFunc = field(repr=False, compare=False)
    default_ic: Tuple[float, ...]
    description: str = ""
    options: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "options", MappingProxyType(dict(self.options)))
        object.__setattr__(self, "default_ic", tuple(float(v) for v in self.default_ic))
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")
        if len(self.default_ic) != self.dimension:
            raise ConfigError(
                f"{self.name}: default_ic has {len(self.default_ic)} components, "
                f"expected {self.dimension}"
            )

    def rhs(self, t: float, u) -> np.ndarray:
        out = np.asarray(self.func(t, np.asarray(u, dtype=float), self.params, self.options), dtype=float)
        return out.reshape(self.dimension)

    __call__ = rhs

    def with_overrides(self, overrides: Optional[Mapping[str, object]] = None) -> "SystemSpec":
        """Copy with some parameters (or string options) replaced."""
        if not overrides:
            return self
        params = dict(self.params)
        options = dict(self.options)
        for key, value in overrides.items():
            if key in params:
                try:
                    params[key] = float(value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{self.name}: parameter {key!r} needs a real value, got {value!r}")
            elif key in options:
                options[key] = str(value)
            else:
                known = sorted(params) + sorted(options)
                raise ConfigError(f"{self.name}: unknown parameter {key!r} (known: {', '.join(known)})")
        _check_options(self.name, options)
        return SystemSpec(
            name=self.name,
            dimension=self.dimension,
            params=params,
            func=self.func,
            default_ic=self.default_ic,
            description=self.description,
            options=options,
        )


def _chaos3d_a(t, x, p, o):
    x1, x2, x3 = x
    return np.array([
        p["phi"] * (x2 - x1) + p["sigma"] * x2 * x3,
        p["varphi"] * x1 - x1 * x3,
        x1 * x2 - p["psi"] * x3 + p["delta"] * x2 * x2,
    ])


def _chaos3d_b(t, x, p, o):
    x1, x2, x3 = x
    return np.array([
        p["phi"] * (x2 - x1),
        x1 - x1 * x3,
        50.0 - p["varphi"] * x1 * x1 - p["psi"] * x3,
    ])


# Candidate readings of the quadratic/cubic cross term in the third equation.
# "x2_x1sq" escapes to infinity near t = 1.06 even for the classical ODE, so the
# bounded "x1_x2" reading is the default.
HYPER4D_F3_VARIANTS: Dict[str, Callable[[float, float, float, float], float]] = {
    "x1_x2": lambda x1, x2, x3, x4: x1 * x2,
    "x2_x1sq": lambda x1, x2, x3, x4: x2 * x1 * x1,
    "x1_cubed": lambda x1, x2, x3, x4: x1 * x1 * x1,
}


def _hyper4d(t, x, p, o):
    x1, x2, x3, x4 = x
    cross = HYPER4D_F3_VARIANTS[o["hyper4d_f3_variant"]](x1, x2, x3, x4)
    return np.array([
        p["phi"] * x1 - x2 * x3 + x4,
        -p["varphi"] * x2 + x1 * x3 + x4,
        -p["psi"] * x3 + cross + x1,
        p["sigma"] * x1,
    ])


def _tbeta(t, x, p, o):
    return np.array([float(t) ** p["beta"]])


def _linear_ty(t, x, p, o):
    return p["rate"] * float(t) * x


def _check_options(name, options):
    variant = options.get("hyper4d_f3_variant")
    if variant is not None and variant not in HYPER4D_F3_VARIANTS:
        raise ConfigError(
            f"{name}: hyper4d_f3_variant must be one of {sorted(HYPER4D_F3_VARIANTS)}, got {variant!r}"
        )


_BUILTINS: Dict[str, SystemSpec] = {
    spec.name: spec
    for spec in (
        SystemSpec(
            name="chaos3d_a",
            dimension=3,
            params={"phi": 12.0, "varphi": 16.0, "psi": 5.0, "sigma": 96.0, "delta": 10.0},
            func=_chaos3d_a,
            default_ic=(0.2, 0.1, 0.2),
            description="3-D chaotic attractor with a delta x2^2 term",
        ),
        SystemSpec(
            name="chaos3d_b",
            dimension=3,
            params={"phi": 2.6, "varphi": 0.5, "psi": 0.4},
            func=_chaos3d_b,
            default_ic=(0.6, 0.5, 0.4),
            description="six-term 3-D dissipative system",
        ),
        SystemSpec(
            name="hyper4d",
            dimension=4,
            params={"phi": 8.0, "varphi": 33.0, "psi": 16.0, "sigma": 1.25},
            func=_hyper4d,
            default_ic=(0.2, 0.4, 0.2, 0.7),
            description="4-D hyperchaotic four-wing system",
            options={"hyper4d_f3_variant": "x1_x2"},
        ),
        SystemSpec(
            name="tbeta",
            dimension=1,
            params={"beta": 1.0},
            func=_tbeta,
            default_ic=(0.0,),
            description="f(t, y) = t^beta with a closed-form solution",
        ),
        SystemSpec(
            name="linear_ty",
            dimension=1,
            params={"rate": 1e-3},
            func=_linear_ty,
            default_ic=(1.0,),
            description="f(t, y) = rate * t * y",
        ),
    )
}

_CUSTOM: Dict[str, SystemSpec] = {}


def register_system(spec: SystemSpec, replace: bool = False) -> SystemSpec:
    """Make a custom system available to ``builtin_system`` and the CLI."""
    if spec.name in _BUILTINS:
        raise ConfigError(f"cannot shadow built-in system {spec.name!r}")
    if spec.name in _CUSTOM and not replace:
        raise ConfigError(f"system {spec.name!r} is already registered")
    _CUSTOM[spec.name] = spec
    return spec


def unregister_system(name: str) -> None:
    _CUSTOM.pop(name, None)


def available_systems() -> Tuple[str, ...]:
    return tuple(sorted(_BUILTINS)) + tuple(sorted(_CUSTOM))


def builtin_system(name: str, overrides: Optional[Mapping[str, object]] = None) -> SystemSpec:
    """Look up a system by name and apply parameter overrides."""
    spec = _BUILTINS.get(name) or _CUSTOM.get(name)
    if spec is None:
        raise UnknownSystemError(
            f"unknown system {name!r}; available: {', '.join(available_systems())}"
        )
    return spec.with_overrides(overrides)


def exact_tbeta(t, alpha: OrderLike, beta: float):
    """Closed-form solution of D^alpha y = t^beta, y(0) = 0.

    y(t) = (1-alpha)/AB t^beta + alpha t^(alpha+beta) Gamma(beta+1) / (AB Gamma(alpha+beta+1))

    Works elementwise on arrays. For beta = 0 the first term makes
    y(0+) = (1-alpha)/AB, a jump away from the zero initial value.
    """
    order = as_order(alpha)
    if beta < 0:
        raise DomainError(f"beta must be non-negative, got {beta!r}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("exact_tbeta is defined for t >= 0")
    a, ab = order.alpha, order.ab_norm
    scale = a * math.gamma(beta + 1.0) / (ab * math.gamma(a + beta + 1.0))
    y = (1.0 - a) / ab * t_arr ** beta + scale * t_arr ** (a + beta)
    return float(y) if y.ndim == 0 else y


def exact_tbeta_derivative(t, alpha: OrderLike, beta: float):
    """d/dt of ``exact_tbeta`` for t > 0."""
    order = as_order(alpha)
    a, ab = order.alpha, order.ab_norm
    t_arr = np.asarray(t, dtype=float)
    scale = a * math.gamma(beta + 1.0) / (ab * math.gamma(a + beta + 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        first = (1.0 - a) / ab * beta * t_arr ** (beta - 1.0) if beta != 0 else np.zeros_like(t_arr)
        second = scale * (a + beta) * t_arr ** (a + beta - 1.0)
    y = first + second
    return float(y) if y.ndim == 0 else y
