"""Scalar means of positive data and the metric characterization of a mean."""

from __future__ import annotations

import math

import numpy as np

from .errors import EmptyInput, InputError, LengthMismatch, NonPositiveInput, UnsupportedMetric

LGM_REL_GAP = 1e-9


def _vector(x, positive=False):
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("mean of an empty vector")
    if positive and not np.all(x > 0):
        raise NonPositiveInput("all entries must be strictly positive")
    return x


def _weights(omega, n):
    omega = np.asarray(omega, dtype=float).ravel()
    if omega.size != n:
        raise LengthMismatch(f"{omega.size} weights for {n} values")
    if not np.all(omega > 0):
        raise NonPositiveInput("weights must be strictly positive")
    if abs(omega.sum() - 1.0) > 1e-9:
        raise InputError(f"weights must sum to one, got {omega.sum()!r}")
    return omega


def am(x) -> float:
    return float(np.mean(_vector(x)))


def gm(x) -> float:
    x = _vector(x, positive=True)
    return float(np.exp(np.mean(np.log(x))))


def am_w(x, omega) -> float:
    x = _vector(x)
    return float(np.dot(_weights(omega, x.size), x))


def gm_w(x, omega) -> float:
    x = _vector(x, positive=True)
    return float(np.exp(np.dot(_weights(omega, x.size), np.log(x))))


def lgm(a: float, b: float) -> float:
    """Logarithmic mean (a - b) / (ln a - ln b), extended continuously to a == b."""
    if not (a > 0 and b > 0):
        raise NonPositiveInput(f"lgm needs positive arguments, got {a}, {b}")
    if abs(a - b) <= LGM_REL_GAP * max(a, b):
        return 0.5 * (a + b)
    # log1p of the exact difference avoids cancelling ln a - ln b for nearby arguments
    return (a - b) / math.log1p((a - b) / b)


def lgm_array(a, b):
    """Elementwise ``lgm`` with the same near-equal rule."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(a > 0) and np.all(b > 0)):
        raise NonPositiveInput("lgm needs positive arguments")
    close = np.abs(a - b) <= LGM_REL_GAP * np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (a - b) / np.log1p((a - b) / b)
    return np.where(close, 0.5 * (a + b), out)


def agm_sequence(a, b, tol=1e-14, max_iter=60):
    """Iterates (a_k, b_k) of the arithmetic-geometric mean recursion, a_0 = a, b_0 = b."""
    if not (a > 0 and b > 0):
        raise NonPositiveInput("agm needs positive arguments")
    seq = [(float(a), float(b))]
    for _ in range(max_iter):
        a_k, b_k = seq[-1]
        if abs(a_k - b_k) <= tol * max(a_k, b_k):
            break
        nxt = (0.5 * (a_k + b_k), math.sqrt(a_k * b_k))
        if nxt == (a_k, b_k):
            break
        seq.append(nxt)
    return seq


def agm(a: float, b: float, tol: float = 1e-14) -> float:
    # tol is relative: the iterates' spacing near a double can exceed any fixed absolute tol
    a_k, b_k = agm_sequence(a, b, tol)[-1]
    return 0.5 * (a_k + b_k)


def _adaptive_simpson(f, lo, hi, tol, max_depth=50):
    mid = 0.5 * (lo + hi)
    f_lo, f_mid, f_hi = f(lo), f(mid), f(hi)
    whole = (hi - lo) / 6.0 * (f_lo + 4 * f_mid + f_hi)
    total = 0.0
    stack = [(lo, hi, f_lo, f_mid, f_hi, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, s, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        delta = left + right - s
        if depth >= max_depth or abs(delta) <= 15 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2, depth + 1))
    return total


def elliptic_integral(a: float, b: float, tol: float = 1e-12) -> float:
    """I(a, b) = integral over [0, pi/2] of 1 / sqrt(a^2 cos^2 + b^2 sin^2)."""
    if not (a > 0 and b > 0):
        raise NonPositiveInput("elliptic integral needs positive parameters")
    a2, b2 = a * a, b * b

    def integrand(phi):
        c, s = math.cos(phi), math.sin(phi)
        return 1.0 / math.sqrt(a2 * c * c + b2 * s * s)

    return _adaptive_simpson(integrand, 0.0, 0.5 * math.pi, tol)


def hyperbolic_distance(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise NonPositiveInput("hyperbolic distance is defined on positive reals")
    return abs(math.log(a) - math.log(b))


def euclidean_distance(a: float, b: float) -> float:
    return abs(a - b)


# Both supported metrics are |phi(a) - phi(b)| for a monotone coordinate map phi.
_METRIC_COORDS = {
    "euclidean": lambda v: v,
    "hyperbolic": np.log,
}


def mean_from_metric(x, metric: str = "euclidean", tol: float = 1e-12) -> float:
    """Minimize sum_i d(x_i, m)^2 over m in [min x, max x] by golden-section search.

    Candidates are compared through the factored difference
    ``d(x, m1)^2 - d(x, m2)^2 = (phi(m2) - phi(m1)) (2 phi(x) - phi(m1) - phi(m2))``,
    which keeps the comparison accurate where the objective is flat.
    """
    try:
        phi = _METRIC_COORDS[metric]
    except KeyError:
        raise UnsupportedMetric(f"unsupported metric {metric!r}") from None
    x = _vector(x, positive=(metric == "hyperbolic"))
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return lo
    px = phi(x)
    n = x.size

    def first_is_better(m1, m2):
        p1, p2 = phi(m1), phi(m2)
        diff = (p2 - p1) * (2.0 * px.sum() - n * (p1 + p2))
        return diff < 0

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    while hi - lo > tol * max(1.0, abs(hi)):
        if first_is_better(c, d):
            hi = d
        else:
            lo = c
        c_new = hi - invphi * (hi - lo)
        d_new = lo + invphi * (hi - lo)
        if (c_new, d_new) == (c, d):
            break
        c, d = c_new, d_new
    return 0.5 * (lo + hi)
