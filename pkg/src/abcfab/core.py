"""Special functions and the Atangana-Baleanu-Caputo (ABC) derivative.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConvergenceError, DomainError, EvaluationError


def gamma_fn(x: float) -> float:
    """Gamma function for positive finite ``x``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma_fn requires a positive finite argument, got {x!r}")
    return math.gamma(x)


def ab_norm(alpha: float) -> float:
    """Normalisation AB(alpha) = 1 - alpha + alpha / Gamma(alpha)."""
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    return 1.0 - alpha + alpha / gamma_fn(alpha)


@dataclass(frozen=True)
class Order:
    """Fractional order alpha in (0, 1] with its cached normalisation."""

    alpha: float
    ab_norm: float = field(init=False, repr=False)

    def __post_init__(self):
        alpha = float(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "ab_norm", ab_norm(alpha))

    @property
    def is_classical(self) -> bool:
        return self.alpha == 1.0

    @property
    def gamma(self) -> float:
        return gamma_fn(self.alpha)

    @property
    def local_coeff(self) -> float:
        """(1 - alpha) / AB(alpha), the weight of the non-memory term."""
        return (1.0 - self.alpha) / self.ab_norm

    def __float__(self):
        return self.alpha


OrderLike = Union[Order, float]


def as_order(alpha: OrderLike) -> Order:
    return alpha if isinstance(alpha, Order) else Order(alpha)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for power series: stop once |term| < tol."""

    tol: float = 1e-17
    max_terms: int = 2000

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("SeriesControl.tol must be positive")
        if int(self.max_terms) < 1:
            raise DomainError("SeriesControl.max_terms must be at least 1")


DEFAULT_SERIES = SeriesControl()

# largest tolerated rounding estimate, relative to max(1, |sum|)
_CANCELLATION_LIMIT = 1e-8


def mittag_leffler(alpha: float, z, ctrl: Optional[SeriesControl] = None):
    """One-parameter Mittag-Leffler function E_alpha(z) by its power series.

    ``z`` may be a scalar or an array of reals; the result has the same shape.
    Summation stops at the first term whose magnitude (largest over ``z``)
    falls below ``ctrl.tol``. For negative ``z`` the alternating terms cancel,
    so accuracy is absolute (roughly machine epsilon times the largest term)
    and degrades as |z| grows or alpha shrinks. When that rounding estimate
    exceeds 1e-8 of max(1, |sum|) a ``ConvergenceError`` is raised instead of
    returning a meaningless value.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    ctrl = ctrl or DEFAULT_SERIES
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise DomainError("mittag_leffler requires finite arguments")
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)

    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(z_arr))
    negative = z_arr < 0
    total = np.ones_like(z_arr)
    peak = np.ones_like(z_arr)
    for s in range(1, int(ctrl.max_terms)):
        magnitude = np.exp(s * log_abs - math.lgamma(alpha * s + 1.0))
        term = np.where(negative & (s % 2 == 1), -magnitude, magnitude)
        total += term
        peak = np.maximum(peak, magnitude)
        if magnitude.max() < ctrl.tol:
            break
    else:
        raise ConvergenceError(
            f"Mittag-Leffler series did not reach tol={ctrl.tol} within "
            f"{ctrl.max_terms} terms",
            partial=float(total[0]) if scalar else total,
        )
    # rounding in the largest terms swamps the sum once they dwarf it
    rounding = 8.0 * np.finfo(float).eps * peak
    if np.any(rounding > _CANCELLATION_LIMIT * np.maximum(1.0, np.abs(total))):
        raise ConvergenceError(
            "Mittag-Leffler series lost precision to cancellation "
            f"(largest term {peak.max():.3g})",
            partial=float(total[0]) if scalar else total,
        )
    return float(total[0]) if scalar else total


def _sample(u: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(u(xs), dtype=float)
        if vals.shape == xs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(u(x)) for x in xs])


def abc_derivative_quadrature(
    u: Callable,
    alpha: OrderLike,
    t: float,
    mesh: int = 4096,
    du: Optional[Callable] = None,
    ctrl: Optional[SeriesControl] = None,
) -> float:
    """Left ABC derivative of ``u`` at ``t`` by the trapezoidal rule.

    Approximates ``AB/(1-alpha) * int_0^t u'(xi) E_alpha(-alpha (t-xi)^alpha / (1-alpha)) dxi``
    on a uniform mesh of ``mesh`` cells. ``du`` is the analytic derivative of
    ``u``; without it ``u'`` is taken from second-order finite differences of
    the mesh samples (central in the interior, one-sided at the ends).
    At alpha = 1 the kernel degenerates and the classical derivative ``u'(t)``
    is returned.
    """
    order = as_order(alpha)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")
    if mesh < 16:
        raise DomainError("mesh must be at least 16")

    xi = np.linspace(0.0, float(t), int(mesh) + 1)
    if du is not None:
        slope = _sample(du, xi)
    else:
        vals = _sample(u, xi)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("non-finite samples of u")
        slope = np.gradient(vals, xi, edge_order=2)
    if not np.all(np.isfinite(slope)):
        raise EvaluationError("non-finite samples of u'")

    if order.is_classical:
        return float(slope[-1])

    a = order.alpha
    kernel = mittag_leffler(a, -a * (t - xi) ** a / (1.0 - a), ctrl)
    integral = np.trapezoid(slope * kernel, xi)
    return float(order.ab_norm / (1.0 - a) * integral)
