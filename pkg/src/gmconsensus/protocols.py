"""Consensus vector fields and their virtual-Laplacian factorizations.

Reference fields are written edge by edge, the way the local update rules
read; the matrix factorizations below are checked against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NonPositiveState, NotBalanced, SineDomainViolation, UnsupportedMetric
from .graph import WeightedDigraph, is_balanced, laplacian
from .means import lgm_array


class Protocol(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    ENTROPIC = "entropic"
    SCALING = "scaling"
    METRIC_EUCLIDEAN = "metric:euclidean"
    METRIC_HYPERBOLIC = "metric:hyperbolic"
    METRIC_SINE = "metric:sine"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise UnsupportedMetric(
                f"unknown protocol {name!r}; choose from {', '.join(p.value for p in cls)}"
            ) from None

    @property
    def metric(self):
        return self.value.split(":", 1)[1] if self.value.startswith("metric:") else None

    @property
    def needs_positive_state(self):
        return self in (Protocol.POLYNOMIAL, Protocol.ENTROPIC, Protocol.SCALING,
                        Protocol.METRIC_HYPERBOLIC)


NONLINEAR = (Protocol.POLYNOMIAL, Protocol.ENTROPIC, Protocol.SCALING)


@dataclass(frozen=True)
class VirtualFactors:
    LX: np.ndarray
    R: np.ndarray
    X: np.ndarray


def _state(x, positive):
    x = np.asarray(x, dtype=float).ravel()
    if positive and not np.all(x > 0):
        raise NonPositiveState("state must be strictly positive")
    return x


def check_compatible(kind, g: WeightedDigraph, x=None):
    """Raise if ``kind`` cannot run on ``g`` (or at state ``x``, when given)."""
    kind = Protocol.parse(kind)
    if kind is Protocol.POLYNOMIAL and not is_balanced(g, 1e-9):
        raise NotBalanced("the polynomial protocol requires a balanced graph")
    if x is not None:
        x = _state(x, kind.needs_positive_state)
        if x.size != g.n:
            raise ValueError(f"state has {x.size} entries for a graph on {g.n} nodes")
        if kind is Protocol.METRIC_SINE and x.max() - x.min() >= math.pi / 2:
            raise SineDomainViolation("pairwise state differences must lie in (-pi/2, pi/2)")
    return kind


def _edge_sum(g, terms):
    _, heads, _ = g.edge_arrays
    out = np.zeros(g.n)
    np.add.at(out, heads, terms)
    return out


def vector_field(kind, g: WeightedDigraph, x) -> np.ndarray:
    kind = check_compatible(kind, g, x)
    x = np.asarray(x, dtype=float).ravel()
    tails, heads, w = g.edge_arrays
    xi, xj = x[heads], x[tails]

    if kind is Protocol.LINEAR:
        return _edge_sum(g, w * (xj - xi))
    if kind is Protocol.POLYNOMIAL:
        r_plus, r_minus = _rates(g, x)
        return r_plus - r_minus
    if kind is Protocol.ENTROPIC:
        return -_edge_sum(g, w * xi * np.log(xi / xj))
    if kind is Protocol.SCALING:
        lx = np.log(x)
        return _edge_sum(g, w * (lx[tails] - lx[heads]))
    # pairwise metric interactions: w_ij * sgn(x_j - x_i) * d(x_j, x_i)
    if kind is Protocol.METRIC_EUCLIDEAN:
        dist = np.abs(xj - xi)
    elif kind is Protocol.METRIC_HYPERBOLIC:
        lx = np.log(x)
        dist = np.abs(lx[tails] - lx[heads])
    else:
        dist = np.sin(np.abs(xj - xi))
    return _edge_sum(g, w * np.sign(xj - xi) * dist)


def _rates(g, x):
    lx = np.log(x)
    r_plus = np.exp(g.adjacency @ lx)
    r_minus = np.exp(g.out_degree * lx)
    return r_plus, r_minus


def rates(g: WeightedDigraph, x, i: int):
    """Inflow and outflow rates (r_plus, r_minus) at node ``i``."""
    x = _state(x, True)
    r_plus, r_minus = _rates(g, x)
    return float(r_plus[i]), float(r_minus[i])


def virtual_laplacian(g: WeightedDigraph, x) -> np.ndarray:
    """State-dependent Laplacian with weights w_ij / lgm(x_j, x_i)."""
    x = _state(x, True)
    W = g.adjacency
    i, j = np.nonzero(W)
    LX = np.zeros((g.n, g.n))
    LX[i, j] = -W[i, j] / lgm_array(x[j], x[i])
    LX[np.diag_indices(g.n)] = -LX.sum(axis=1)
    return LX


def virtual_factors(g: WeightedDigraph, x) -> VirtualFactors:
    x = _state(x, True)
    r_plus, r_minus = _rates(g, x)
    return VirtualFactors(
        LX=virtual_laplacian(g, x),
        R=np.diag(lgm_array(r_plus, r_minus)),
        X=np.diag(x),
    )


def _scaled_gap(a, b):
    scale = max(1.0, float(np.abs(a).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    return float(np.abs(a - b).max(initial=0.0)) / scale


def lx_identity_residual(g: WeightedDigraph, x) -> float:
    """Scaled gap between L_X(x) x and L ln x."""
    x = _state(x, True)
    return _scaled_gap(virtual_laplacian(g, x) @ x, laplacian(g) @ np.log(x))


def field_equivalence_residual(kind, g: WeightedDigraph, x) -> float:
    """Largest scaled gap between the edge-wise field and its matrix forms.

    Each gap is ``max|lhs - rhs| / max(1, max|lhs|, max|rhs|)``: absolute for
    fields of order one, relative for the large rates the polynomial field
    reaches at high degree.
    """
    kind = check_compatible(kind, g, x)
    x = np.asarray(x, dtype=float).ravel()
    f = vector_field(kind, g, x)
    L = laplacian(g)

    if kind in (Protocol.LINEAR, Protocol.METRIC_EUCLIDEAN):
        return _scaled_gap(f, -L @ x)
    if kind is Protocol.METRIC_SINE:
        tails, heads, w = g.edge_arrays
        return _scaled_gap(f, _edge_sum(g, w * np.sin(x[tails] - x[heads])))

    vf = virtual_factors(g, x)
    lnx_form = L @ np.log(x)
    lx_form = vf.LX @ x
    if kind is Protocol.POLYNOMIAL:
        scale = vf.R
    elif kind is Protocol.ENTROPIC:
        scale = vf.X
    else:
        scale = np.eye(g.n)
    return max(_scaled_gap(f, -scale @ lx_form), _scaled_gap(f, -scale @ lnx_form),
               _scaled_gap(lx_form, lnx_form))


PROTOCOL_CODES = {
    Protocol.LINEAR: 0,
    Protocol.POLYNOMIAL: 1,
    Protocol.ENTROPIC: 2,
    Protocol.SCALING: 3,
    Protocol.METRIC_EUCLIDEAN: 0,
    Protocol.METRIC_HYPERBOLIC: 3,
    Protocol.METRIC_SINE: 4,
}
