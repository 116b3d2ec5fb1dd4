"""Free-energy minimization under a fixed product of components.

The minimizer of F(y || 1) subject to prod(y) = prod(x) is the consensus
state gm(x) * 1 whenever gm(x) > 1/e. The solver works in u = ln y, where
the constraint is the affine hyperplane sum(u) = sum(ln x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, NonPositiveInput


@dataclass
class GmVariationalSolution:
    y_star: np.ndarray
    lagrange_multiplier: float
    kkt_residual: float
    iterations: int
    objective_history: list = field(default_factory=list, repr=False)
    feasibility_history: list = field(default_factory=list, repr=False)


def _positive(v, name):
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0 or not np.all(v > 0):
        raise NonPositiveInput(f"{name} must be a non-empty positive vector")
    return v


def _objective(u):
    # F(e^u || 1) without the additive constant
    return float(np.sum(np.exp(u) * (u - 1.0)))


def _objective_change(u, v):
    # F(e^v) - F(e^u) summed termwise without cancellation: resolves the tiny
    # decreases of the final Newton steps that the plain difference rounds away
    d = v - u
    return float(np.sum(np.exp(u) * (np.expm1(d) * (u - 1.0) + d * np.exp(d))))


def recover_multiplier(y) -> float:
    """Multiplier from the stationarity equation of the largest component."""
    y = _positive(y, "y")
    i = int(np.argmax(y))
    log_rest = np.log(y).sum() - math.log(y[i])
    return math.log(y[i]) / math.exp(log_rest)


def kkt_residual(y, lam: float, x) -> float:
    """Max of the n stationarity residuals ln y_i - lam * prod_{j != i} y_j and the
    relative feasibility gap |prod x - prod y| / prod x."""
    y = _positive(y, "y")
    x = _positive(x, "x")
    log_y = np.log(y)
    prod_except = np.exp(log_y.sum() - log_y)
    stationarity = np.abs(log_y - lam * prod_except)
    feasibility = abs(-math.expm1(log_y.sum() - np.log(x).sum()))
    return float(max(stationarity.max(), feasibility))


def solution_characteristic_residual(y) -> float:
    """Spread of y_i ln y_i; zero exactly when every component shares that value."""
    y = _positive(y, "y")
    v = y * np.log(y)
    return float(v.max() - v.min())


def solve_gm_variational(x, tol: float = 1e-10, max_iter: int = 500,
                         consensus_tol: float = 1e-6) -> GmVariationalSolution:
    """Projected (diagonally scaled) gradient descent with Armijo backtracking in log
    coordinates.

    Stops when the projected gradient has infinity norm <= ``tol``. A
    stationary point that is not a consensus vector (possible when
    gm(x) < 1/e, where the consensus point stops being a minimizer) raises
    NoConvergence.
    """
    x = _positive(x, "x")
    target = float(np.log(x).sum())
    n = x.size
    u = np.log(x).copy()
    f = _objective(u)
    history, feas = [f], [0.0]

    for it in range(1, max_iter + 1):
        ey = np.exp(u)
        grad = u * ey
        if np.abs(grad - grad.mean()).max() <= tol:
            break
        # separable objective: diagonal Newton scaling, floored where F is not convex in u
        inv_h = 1.0 / (ey * np.maximum(1.0 + u, 0.1))
        mu = (grad * inv_h).sum() / inv_h.sum()
        p = inv_h * (grad - mu)
        slope = float((grad - mu) @ p)
        step = 1.0
        while True:
            # sum(p) = 0, so the step stays on the constraint hyperplane up to rounding
            cand = u - step * p
            change = _objective_change(u, cand)
            if change <= -1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-12:
                raise NoConvergence("line search failed", it)
        u, f = cand, f + change
        history.append(f)
        feas.append(abs(u.sum() - target))
    else:
        raise NoConvergence(f"projected gradient above {tol} after {max_iter} iterations", max_iter)

    y = np.exp(u)
    spread = y.max() - y.min()
    if spread > consensus_tol * max(1.0, y.max()):
        raise NoConvergence(
            f"stationary point is not a consensus vector (spread {spread:.3g}); "
            f"gm(x) = {math.exp(target / n):.4g}", it)
    lam = recover_multiplier(y)
    return GmVariationalSolution(
        y_star=y,
        lagrange_multiplier=lam,
        kkt_residual=kkt_residual(y, lam, x),
        iterations=it,
        objective_history=history,
        feasibility_history=feas,
    )
