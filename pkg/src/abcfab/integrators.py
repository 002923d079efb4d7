"""Time steppers for the Volterra form of the ABC problem.

    u(t) - u(0) = (1-alpha)/AB f(t, u) + alpha/(AB Gamma(alpha)) int_0^t (t-tau)^(alpha-1) f(tau, u) dtau

Three schemes share one ``Trajectory`` result type:

* ``integrate_two_step``: the two-step fractional Adams-Bashforth scheme,
  ``u[n+1] = u[n] + w1(n) f[n] + w2(n) f[n-1]``, O(N) total.
* ``integrate_full_history``: difference form with the whole memory sum,
  f interpolated linearly on every past interval, O(N^2) total.
* ``integrate_reference``: first-order product-rectangle rule on a refined
  mesh with the local term solved implicitly; an independent low-order check.

All grids are uniform and start at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import Order, OrderLike, as_order
from .errors import DomainError, EvaluationError
from .systems import SystemSpec

VARIANTS = ("corrected", "as_printed")
BOOTSTRAPS = ("rk4_classical", "fractional_euler")
SCHEMES = ("two_step", "full_history", "reference")

# 24-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

_FIXED_POINT_TOL = 1e-15
_FIXED_POINT_MAXITER = 200


@dataclass(frozen=True)
class Grid:
    """Uniform mesh t_n = n h, n = 0..n_steps."""

    h: float
    n_steps: int

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError(f"step size must be positive and finite, got {self.h!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_final_time(cls, h: float, t_final: float) -> "Grid":
        if not (h > 0 and math.isfinite(h)):
            raise DomainError(f"step size must be positive and finite, got {h!r}")
        ratio = float(t_final) / float(h)
        n = round(ratio)
        if n < 1 or abs(ratio - n) > math.ulp(float(n)):
            raise DomainError(f"t_final/h = {ratio!r} is not an integer number of steps")
        return cls(h, n)

    @property
    def t_final(self) -> float:
        return self.h * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.n_steps + 1, dtype=float)


@dataclass(frozen=True)
class SchemeWeights:
    omega1: float
    omega2: float
    n: int
    variant: str


@dataclass(frozen=True)
class Trajectory:
    """Grid values of a run plus its manifest.

    ``stability`` holds ``max |f(t_n, u_n) - f(t_n-1, u_n-1)|`` for n = 1, 2, ...
    When a run diverges, the arrays stop at the last finite state and
    ``meta["truncated_at"]`` names the first non-finite step.
    """

    times: np.ndarray
    states: np.ndarray
    meta: Mapping[str, object]
    stability: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("times", "states", "stability"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def truncated(self) -> bool:
        return self.meta.get("truncated_at") is not None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.times)


def moment_integrals(n, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Unit-interval moments of the power kernel.

    Returns ``J0(n) = int_n^(n+1) s^(alpha-1) ds`` and
    ``J1(n) = int_n^(n+1) s^(alpha-1) (s - n) ds`` for integers n >= 0.
    J0 uses the closed form through expm1/log1p. J1 uses Gauss-Legendre, which
    is exact to rounding for n >= 1 and avoids the cancellation the
    closed form suffers at large n.
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    if np.any(n < 0):
        raise DomainError("moment index must be non-negative")
    pos = np.maximum(n, 1.0)
    j0 = np.where(n > 0, pos ** alpha * np.expm1(alpha * np.log1p(1.0 / pos)) / alpha, 1.0 / alpha)
    j1 = ((pos[:, None] + _GL_X) ** (alpha - 1.0) * _GL_X) @ _GL_W
    j1 = np.where(n > 0, j1, 1.0 / (alpha + 1.0))
    return j0, j1


def _corrected_table(n: np.ndarray, order: Order, h: float):
    # w1 (resp. w2) = local term + the difference of the two memory integrals of
    # the linear interpolant through (t_n-1, f_n-1), (t_n, f_n). Written as
    # int_n^(n+1) s^(alpha-1) (s - a c) ds so no term cancels for large n.
    a = order.alpha
    j0, j1 = moment_integrals(n, a)
    scale = h ** a / (order.gamma * order.ab_norm)
    w1 = order.local_coeff + scale * (j1 + (1.0 + (1.0 - a) * (n - 1.0)) * j0)
    w2 = -order.local_coeff - scale * (j1 + (1.0 - a) * n * j0)
    return w1, w2


def _as_printed_table(n: np.ndarray, order: Order, h: float):
    # Literal transcription of the uncorrected coefficients, including
    # the bracket of w1 that lacks Gamma(alpha) and the stray t_n^(alpha+1) term
    # of w2 divided once more by h Gamma(alpha) AB(alpha).
    a, ab, g = order.alpha, order.ab_norm, order.gamma
    c = a / (ab * g) * h ** a
    n1 = n + 1.0
    w1 = ((1.0 - a) / ab + a / ab * h ** a * (2.0 * n1 ** a / a - n1 ** (a + 1) / (a + 1))
          - c * (n ** a / a - n ** (a + 1) / (a + 1)))
    w2 = (a - 1.0) / ab - c * (n1 ** a / a - n1 ** (a + 1) / (a + 1) + n ** (a + 1) / (ab * g * h))
    return w1, w2


def weight_table(n_max: int, alpha: OrderLike, h: float, variant: str = "corrected",
                 classical_shortcut: bool = True):
    """Arrays (w1, w2) for n = 1..n_max; entry i belongs to n = i + 1.

    With ``classical_shortcut`` the corrected variant at alpha = 1 returns the
    classical Adams-Bashforth pair (3h/2, -h/2) exactly.
    """
    order = as_order(alpha)
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if not h > 0:
        raise DomainError("h must be positive")
    n = np.arange(1, int(n_max) + 1, dtype=float)
    if variant == "as_printed":
        return _as_printed_table(n, order, h)
    if order.is_classical and classical_shortcut:
        return np.full_like(n, 1.5 * h), np.full_like(n, -0.5 * h)
    return _corrected_table(n, order, h)


def weights(n: int, alpha: OrderLike, h: float, variant: str = "corrected") -> SchemeWeights:
    """Step-n coefficients of the two-step scheme."""
    if int(n) != n or n < 1:
        raise DomainError(f"the two-step scheme needs n >= 1, got {n!r}")
    w1, w2 = weight_table(int(n), alpha, h, variant)
    return SchemeWeights(float(w1[-1]), float(w2[-1]), int(n), variant)


def _solve_local(system: SystemSpec, t: float, base: np.ndarray, coeff: float, guess: np.ndarray):
    """Fixed-point solve of v = base + coeff f(t, v). Returns (v, converged)."""
    if coeff == 0.0:
        return base, True
    v = guess
    for _ in range(_FIXED_POINT_MAXITER):
        nxt = base + coeff * system.rhs(t, v)
        if not np.all(np.isfinite(nxt)):
            return nxt, False
        if np.max(np.abs(nxt - v)) <= _FIXED_POINT_TOL * (1.0 + np.max(np.abs(nxt))):
            return nxt, True
        v = nxt
    return v, False


def bootstrap(u0, system: SystemSpec, h: float, alpha: OrderLike,
              method: str = "rk4_classical") -> np.ndarray:
    """Starting value u_1 for the two-step schemes.

    ``rk4_classical`` takes one classical RK4 step of du/dt = f(t, u);
    ``fractional_euler`` takes one product-rectangle step of the Volterra
    form with the local term solved at t_1.
    """
    order = as_order(alpha)
    u0 = np.asarray(u0, dtype=float)
    with np.errstate(all="ignore"):
        if method == "rk4_classical":
            k1 = system.rhs(0.0, u0)
            k2 = system.rhs(0.5 * h, u0 + 0.5 * h * k1)
            k3 = system.rhs(0.5 * h, u0 + 0.5 * h * k2)
            k4 = system.rhs(h, u0 + h * k3)
            u1 = u0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        elif method == "fractional_euler":
            f0 = system.rhs(0.0, u0)
            memory = h ** order.alpha / (order.ab_norm * order.gamma) * f0
            guess = u0 + order.local_coeff * f0 + memory
            u1, _ = _solve_local(system, h, u0 + memory, order.local_coeff, guess)
        else:
            raise DomainError(f"unknown bootstrap method {method!r}; expected one of {BOOTSTRAPS}")
    if not np.all(np.isfinite(u1)):
        raise EvaluationError("bootstrap step produced non-finite values")
    return u1


def _prepare(system: SystemSpec, ic, grid: Grid, min_steps: int = 2):
    if grid.n_steps < min_steps:
        raise DomainError(f"this scheme needs at least {min_steps} steps, got {grid.n_steps}")
    u0 = np.asarray(system.default_ic if ic is None else ic, dtype=float).reshape(-1)
    if u0.shape != (system.dimension,):
        raise DomainError(f"initial state has {u0.size} components, {system.name} needs {system.dimension}")
    if not np.all(np.isfinite(u0)):
        raise DomainError("initial state must be finite")
    return u0


def _manifest(system, order, grid, scheme, **extra):
    meta = {
        "system": system.name,
        "params": dict(system.params),
        "options": dict(system.options),
        "alpha": order.alpha,
        "h": grid.h,
        "n_steps": grid.n_steps,
        "t_final": grid.t_final,
        "scheme": scheme,
        "truncated_at": None,
        "truncation_reason": None,
    }
    meta.update(extra)
    return meta


def _finish(grid, states, last, meta, stability):
    """Package the finite prefix states[:last + 1] as a Trajectory."""
    if last < grid.n_steps:
        bad = last + 1
        meta["truncated_at"] = bad
        meta["truncation_reason"] = f"non-finite state at step {bad} (t={bad * grid.h!r})"
    stability = np.asarray(stability[:last], dtype=float)
    finite = stability[np.isfinite(stability)]
    meta["max_stability"] = float(np.max(finite)) if finite.size else 0.0
    return Trajectory(grid.times[: last + 1], states[: last + 1], meta, stability)


def _start(system, u0, grid, order, bootstrap_method, states):
    try:
        states[1] = bootstrap(u0, system, grid.h, order, bootstrap_method)
        return True
    except EvaluationError:
        return False


def integrate_two_step(system: SystemSpec, ic, grid: Grid, alpha: OrderLike,
                       variant: str = "corrected", bootstrap_method: str = "rk4_classical") -> Trajectory:
    """Two-step fractional Adams-Bashforth scheme."""
    order = as_order(alpha)
    u0 = _prepare(system, ic, grid)
    n_steps = grid.n_steps
    w1, w2 = weight_table(n_steps - 1, order, grid.h, variant)
    meta = _manifest(system, order, grid, "two_step", variant=variant, bootstrap=bootstrap_method)

    states = np.empty((n_steps + 1, system.dimension))
    states[0] = u0
    stability = np.zeros(n_steps)
    if not _start(system, u0, grid, order, bootstrap_method, states):
        return _finish(grid, states, 0, meta, stability)

    last = n_steps
    with np.errstate(all="ignore"):
        f_prev = system.rhs(0.0, u0)
        for n in range(1, n_steps):
            f_n = system.rhs(n * grid.h, states[n])
            stability[n - 1] = np.max(np.abs(f_n - f_prev))
            nxt = states[n] + w1[n - 1] * f_n + w2[n - 1] * f_prev
            if not np.all(np.isfinite(nxt)):
                last = n
                break
            states[n + 1] = nxt
            f_prev = f_n
    return _finish(grid, states, last, meta, stability)


class _HistoryWeights:
    """Per-interval product-trapezoid weights for the memory integral.

    On [t_j, t_j+1] at distance m = k - j from t_k, the linear interpolant of
    f contributes ``scale * (left[m] f_j + right[m] f_j+1)``.
    """

    def __init__(self, order: Order, h: float, m_max: int):
        a = order.alpha
        j0, j1 = moment_integrals(np.arange(m_max), a)
        self.left = np.concatenate(([0.0], a * j1))
        self.right = np.concatenate(([0.0], a * (j0 - j1)))
        self.scale = h ** a / (order.ab_norm * order.gamma)
        # last interval extrapolated from (t_n-1, f_n-1), (t_n, f_n)
        self.extrap_n = 1.0 + 1.0 / (a + 1.0)
        self.extrap_nm1 = -1.0 / (a + 1.0)

    def increment(self, f_hist: np.ndarray, local_coeff: float) -> np.ndarray:
        """u_n+1 - u_n given f_0..f_n (rows of ``f_hist``)."""
        n = len(f_hist) - 1
        older, newer = f_hist[:n], f_hist[1:]
        at_n = self.left[n:0:-1] @ older + self.right[n:0:-1] @ newer
        at_n1 = (self.left[n + 1:1:-1] @ older + self.right[n + 1:1:-1] @ newer
                 + self.extrap_n * f_hist[n] + self.extrap_nm1 * f_hist[n - 1])
        return local_coeff * (f_hist[n] - f_hist[n - 1]) + self.scale * (at_n1 - at_n)


def full_history_increment(f_hist, alpha: OrderLike, h: float) -> np.ndarray:
    """Increment u_n+1 - u_n of the full-history scheme from f_0..f_n."""
    order = as_order(alpha)
    f_hist = np.asarray(f_hist, dtype=float)
    if f_hist.ndim == 1:
        f_hist = f_hist[:, None]
    if len(f_hist) < 2:
        raise DomainError("need f values at t_0 and t_1 at least")
    hw = _HistoryWeights(order, h, len(f_hist))
    return hw.increment(f_hist, order.local_coeff)


def integrate_full_history(system: SystemSpec, ic, grid: Grid, alpha: OrderLike,
                           bootstrap_method: str = "rk4_classical") -> Trajectory:
    """Difference form with the full memory sum over all past intervals."""
    order = as_order(alpha)
    u0 = _prepare(system, ic, grid)
    n_steps = grid.n_steps
    hw = _HistoryWeights(order, grid.h, n_steps + 1)
    meta = _manifest(system, order, grid, "full_history", variant=None, bootstrap=bootstrap_method)

    states = np.empty((n_steps + 1, system.dimension))
    states[0] = u0
    f_hist = np.empty_like(states)
    stability = np.zeros(n_steps)
    if not _start(system, u0, grid, order, bootstrap_method, states):
        return _finish(grid, states, 0, meta, stability)

    last = n_steps
    with np.errstate(all="ignore"):
        f_hist[0] = system.rhs(0.0, u0)
        for n in range(1, n_steps):
            f_hist[n] = system.rhs(n * grid.h, states[n])
            stability[n - 1] = np.max(np.abs(f_hist[n] - f_hist[n - 1]))
            nxt = states[n] + hw.increment(f_hist[: n + 1], order.local_coeff)
            if not np.all(np.isfinite(nxt)):
                last = n
                break
            states[n + 1] = nxt
    return _finish(grid, states, last, meta, stability)


def integrate_reference(system: SystemSpec, ic, grid: Grid, alpha: OrderLike, refine: int = 8) -> Trajectory:
    """Product-rectangle discretisation of the Volterra form on a refined mesh.

    The memory integral uses left-endpoint values of f on each of the
    ``grid.n_steps * refine`` sub-intervals; the local term (1-alpha)/AB f(t_k, u_k)
    is resolved by fixed-point iteration. Results are sampled back onto ``grid``.
    At alpha = 1 this is the explicit Euler method.
    """
    order = as_order(alpha)
    if int(refine) != refine or refine < 1:
        raise DomainError(f"refine must be a positive integer, got {refine!r}")
    refine = int(refine)
    u0 = _prepare(system, ic, grid, min_steps=1)
    fine = grid.n_steps * refine
    hf = grid.h / refine
    a = order.alpha
    j0, _ = moment_integrals(np.arange(fine), a)
    rect = np.concatenate(([0.0], hf ** a * a * j0 / (order.ab_norm * order.gamma)))
    meta = _manifest(system, order, grid, "reference", variant=None, bootstrap=None, refine=refine)

    u_fine = np.empty((fine + 1, system.dimension))
    f_fine = np.empty_like(u_fine)
    u_fine[0] = u0
    unconverged = 0
    last_fine = fine
    with np.errstate(all="ignore"):
        f_fine[0] = system.rhs(0.0, u0)
        for k in range(1, fine + 1):
            memory = rect[k:0:-1] @ f_fine[:k]
            base = u0 + memory
            guess = base + order.local_coeff * f_fine[k - 1]
            u_k, ok = _solve_local(system, k * hf, base, order.local_coeff, guess)
            unconverged += not ok
            f_k = system.rhs(k * hf, u_k)
            if not (np.all(np.isfinite(u_k)) and np.all(np.isfinite(f_k))):
                last_fine = k - 1
                break
            u_fine[k] = u_k
            f_fine[k] = f_k
    meta["fixed_point_unconverged"] = unconverged

    last = last_fine // refine
    states = u_fine[: last * refine + 1: refine]
    f_coarse = f_fine[: last * refine + 1: refine]
    stability = np.max(np.abs(np.diff(f_coarse, axis=0)), axis=1) if last else np.zeros(0)
    padded = np.zeros(grid.n_steps + 1)
    padded[: stability.size] = stability
    full_states = np.empty((grid.n_steps + 1, system.dimension))
    full_states[: last + 1] = states
    return _finish(grid, full_states, last, meta, padded)


def integrate(system: SystemSpec, ic, grid: Grid, alpha: OrderLike, scheme: str = "two_step",
              variant: str = "corrected", bootstrap_method: str = "rk4_classical",
              refine: int = 8) -> Trajectory:
    """Dispatch to one of the three schemes by name."""
    if scheme == "two_step":
        return integrate_two_step(system, ic, grid, alpha, variant, bootstrap_method)
    if scheme == "full_history":
        return integrate_full_history(system, ic, grid, alpha, bootstrap_method)
    if scheme == "reference":
        return integrate_reference(system, ic, grid, alpha, refine)
    raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
