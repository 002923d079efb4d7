"""Error factors, uniqueness radii and convergence studies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import OrderLike, as_order
from .errors import DomainError
from .integrators import Grid, integrate
from .systems import builtin_system, exact_tbeta

#: Constant the truncation factor is claimed to take at alpha = 1.
CLAIMED_CLASSICAL_PHI = 5.0 / 12.0


def phi_factor(n, alpha: OrderLike):
    """Step/order factor of the fractional remainder bound, as displayed::

        |alpha {2 alpha n^(2+alpha) + (n+1)^(alpha+2) (2 - alpha n)
                + (2+alpha)(n-1) [-2 alpha n^(alpha+1) + (alpha n - 1)(n+1)^alpha]}|

    This grows with n, including at alpha = 1 (e.g. 10 at n = 1, 1 at n = 2,
    70 at n = 3), so it does not reduce to the constant 5/12 claimed for the
    classical case; ``local_error_factor`` gives the value that does.
    """
    a = as_order(alpha).alpha
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise DomainError("phi_factor needs n >= 1")
    body = (
        2.0 * a * n_arr ** (2.0 + a)
        + (n_arr + 1.0) ** (a + 2.0) * (2.0 - a * n_arr)
        + (2.0 + a) * (n_arr - 1.0) * (-2.0 * a * n_arr ** (a + 1.0) + (a * n_arr - 1.0) * (n_arr + 1.0) ** a)
    )
    out = np.abs(a * body)
    return float(out) if out.ndim == 0 else out


def local_error_factor(n, alpha: OrderLike):
    """Exact remainder factor of the two-step scheme for f with constant f''.

    If f'' = M, the memory part of one step errs by exactly
    ``M h^(alpha+2) / AB * local_error_factor(n, alpha)``. It equals 5/12 for
    every n at alpha = 1; for alpha < 1 it changes sign and grows in magnitude
    like n^(alpha+1), so the scheme is not consistent there.
    """
    a = as_order(alpha).alpha
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise DomainError("local_error_factor needs n >= 1")

    # q(T) = int_0^T (T-s)^(a-1) (s-n)(s-n+1) ds, via a Taylor expansion of the
    # quadratic about s = T.
    def q(T):
        p = (T - n_arr) * (T - n_arr + 1.0)
        dp = 2.0 * T - 2.0 * n_arr + 1.0
        return p * T ** a / a - dp * T ** (a + 1.0) / (a + 1.0) + T ** (a + 2.0) / (a + 2.0)

    out = a * (q(n_arr + 1.0) - q(n_arr)) / (2.0 * math.gamma(a))
    return float(out) if np.ndim(out) == 0 else out


def remainder_bound(second_deriv_bound_M: float, h: float, n, alpha: OrderLike):
    """M h^(alpha+2) Phi(n, alpha) / (2 Gamma(alpha+3))."""
    if second_deriv_bound_M < 0 or not h > 0:
        raise DomainError("remainder_bound needs M >= 0 and h > 0")
    a = as_order(alpha).alpha
    return second_deriv_bound_M * h ** (a + 2.0) * phi_factor(n, a) / (2.0 * math.gamma(a + 3.0))


def classical_ab2_bound(second_deriv_bound_M: float, h: float) -> float:
    """Local error bound 5 M h^3 / 12 of the classical Adams-Bashforth 2 step."""
    if second_deriv_bound_M < 0 or not h > 0:
        raise DomainError("classical_ab2_bound needs M >= 0 and h > 0")
    return 5.0 * second_deriv_bound_M * h ** 3 / 12.0


def phi_grid(n_max: int, alphas: Sequence[float], h: float, M: float = 1.0) -> List[dict]:
    """Rows (n, alpha, phi, bound, ...) for n = 1..n_max and every alpha.

    ``bound`` is Phi h^(alpha+2) / 2; the remaining columns put the fractional
    bound, the classical 5 M h^3 / 12 bound and the exact local factor side by side.
    """
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    rows = []
    n = np.arange(1, int(n_max) + 1, dtype=float)
    classical = classical_ab2_bound(M, h)
    for a in alphas:
        phi = phi_factor(n, a)
        exact = local_error_factor(n, a)
        rb = remainder_bound(M, h, n, a)
        for i in range(n.size):
            rows.append({
                "n": int(n[i]),
                "alpha": float(a),
                "phi": float(phi[i]),
                "bound": float(phi[i] * h ** (a + 2.0) / 2.0),
                "remainder_bound": float(rb[i]),
                "classical_bound": classical,
                "local_error_factor": float(exact[i]),
            })
    return rows


@dataclass(frozen=True)
class ContractionReport:
    lipschitz_L: float
    sup_M: float
    radius_b: float
    alpha: float
    c_contraction: Optional[float]
    c_welldefined: Optional[float]
    c_max: Optional[float]
    satisfied_at: Optional[float] = None
    guaranteed: Optional[bool] = None
    k_at_c: Optional[float] = None
    status: str = "ok"

    def to_dict(self) -> dict:
        return asdict(self)


def _radius(radicand: float, alpha: float, gamma_alpha: float) -> Optional[float]:
    if radicand <= 0:
        return None
    return (radicand * gamma_alpha) ** (1.0 / alpha)


def contraction_constant(L: float, alpha: OrderLike, c: float) -> float:
    """Lipschitz constant of the Picard map on [0, c]: L/AB (1 - alpha + c^alpha / Gamma(alpha))."""
    order = as_order(alpha)
    a = order.alpha
    return L / order.ab_norm * (1.0 - a + c ** a / order.gamma)


def contraction_check(L: float, M: float, b: float, alpha: OrderLike,
                      interval_c: Optional[float] = None) -> ContractionReport:
    """Largest interval on which the Picard map is a well-defined contraction.

    Uniqueness holds on [0, c] whenever
    c < min{((AB/L + alpha - 1) Gamma(alpha))^(1/alpha), ((AB b/M + alpha - 1) Gamma(alpha))^(1/alpha)}.
    A non-positive radicand yields ``status="no-guarantee"`` rather than an error.
    """
    if not (L > 0 and M > 0 and b > 0):
        raise DomainError("L, M and b must be positive")
    order = as_order(alpha)
    a, ab, g = order.alpha, order.ab_norm, order.gamma
    c_contr = _radius(ab / L + a - 1.0, a, g)
    c_well = _radius(ab * b / M + a - 1.0, a, g)
    if c_contr is None or c_well is None:
        c_max, status = None, "no-guarantee"
    else:
        c_max, status = min(c_contr, c_well), "ok"

    guaranteed = k = None
    if interval_c is not None:
        if not interval_c > 0:
            raise DomainError("interval length c must be positive")
        guaranteed = c_max is not None and interval_c < c_max
        k = contraction_constant(L, order, interval_c)
    return ContractionReport(
        lipschitz_L=float(L), sup_M=float(M), radius_b=float(b), alpha=a,
        c_contraction=c_contr, c_welldefined=c_well, c_max=c_max,
        satisfied_at=interval_c, guaranteed=guaranteed, k_at_c=k, status=status,
    )


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    max_abs_error: float
    observed_order: Optional[float] = None
    valid: bool = True


def observed_orders(h_list: Sequence[float], errors: Sequence[float]) -> List[Optional[float]]:
    """log(e_prev/e)/log(h_prev/h) between consecutive rows; None for the first."""
    out: List[Optional[float]] = [None]
    for i in range(1, len(errors)):
        e0, e1 = errors[i - 1], errors[i]
        if not (e0 > 0 and e1 > 0 and math.isfinite(e0) and math.isfinite(e1)):
            out.append(None)
            continue
        ratio = h_list[i - 1] / h_list[i]
        if ratio == 2.0:
            out.append(math.log2(e0 / e1))
        else:
            out.append(math.log(e0 / e1) / math.log(ratio))
    return out


def convergence_table(alpha: OrderLike, beta: float, h_list: Sequence[float], t_final: float,
                      scheme: str = "two_step", variant: str = "corrected",
                      bootstrap_method: str = "rk4_classical", refine: int = 8) -> List[ConvergenceRow]:
    """Max grid error against ``exact_tbeta`` for each step size in ``h_list``."""
    h_list = [float(h) for h in h_list]
    if any(h1 >= h0 for h0, h1 in zip(h_list, h_list[1:])):
        raise DomainError("h_list must be strictly decreasing")
    order = as_order(alpha)
    system = builtin_system("tbeta", {"beta": beta})
    errors, valid = [], []
    for h in h_list:
        grid = Grid.from_final_time(h, t_final)
        traj = integrate(system, None, grid, order, scheme, variant, bootstrap_method, refine)
        # t = 0 holds the prescribed initial value, not a computed one
        exact = exact_tbeta(traj.times[1:], order, beta)
        errors.append(float(np.max(np.abs(traj.states[1:, 0] - exact))))
        valid.append(not traj.truncated)
    orders = observed_orders(h_list, errors)
    return [ConvergenceRow(h, e, o if ok else None, ok) for h, e, o, ok in zip(h_list, errors, orders, valid)]
