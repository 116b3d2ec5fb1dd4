"""Free energy, relative entropy and the projected-gradient view of the protocols."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    LengthMismatch,
    NonPositiveInput,
    NonPositiveState,
    NoConvergence,
    NotConnected,
    NotProbabilityVector,
    NotSymmetric,
)
from .graph import WeightedDigraph


@dataclass
class EnergyReport:
    times: np.ndarray
    values: np.ndarray
    monotone: bool
    max_uptick: float

    def to_csv(self):
        rows = ["t,free_energy"] + [f"{t:.17g},{v:.17g}" for t, v in zip(self.times, self.values)]
        return "\n".join(rows) + "\n"


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise LengthMismatch(f"lengths {x.shape[-1]} and {y.shape[-1]} differ")
    if not (np.all(x > 0) and np.all(y > 0)):
        raise NonPositiveInput("free energy needs positive vectors")
    return x, y


def free_energy(x, y=None, c=None):
    """F(x || y) = sum_i x_i (ln(x_i / y_i) - 1) + c, with y = 1 and c = n by default.

    A stack of states (one per row) gives one value per row.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    x, y = _pair(x, np.ones(n) if y is None else y)
    c = n if c is None else c
    val = np.sum(x * (np.log(x / y) - 1.0), axis=-1) + c
    return float(val) if np.ndim(val) == 0 else val


def free_energy_gradient(x):
    """Gradient of F(x || 1); it is ln x."""
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0):
        raise NonPositiveInput("free energy needs positive vectors")
    return np.log(x)


def relative_entropy(x, y) -> float:
    x, y = _pair(x, y)
    for name, v in (("x", x), ("y", y)):
        if abs(v.sum() - 1.0) > 1e-9:
            raise NotProbabilityVector(f"{name} sums to {v.sum()!r}, not 1")
    return float(np.sum(x * np.log(x / y)))


def projected_gradient(L, x) -> np.ndarray:
    """L ln x, the free-energy gradient projected by the Laplacian."""
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0):
        raise NonPositiveState("projected gradient needs a positive state")
    return np.asarray(L) @ np.log(x)


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a symmetric matrix
    by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(1.0, np.abs(A).max())
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise NoConvergence("Jacobi sweeps did not converge", max_sweeps)
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def eigendecomposition_projection_residual(L_sym, x, tol=1e-12) -> float:
    """max|L x - sum_i v_i lambda_i (v_i . x)| over an orthonormal eigenbasis of L_sym.

    Also checks that the smallest eigenvalue is zero with eigenvector along 1
    and that all others are positive, i.e. that the graph is connected.
    """
    L_sym = np.asarray(L_sym, dtype=float)
    x = np.asarray(x, dtype=float)
    scale = max(1.0, np.abs(L_sym).max())
    if not np.allclose(L_sym, L_sym.T, atol=1e-14 * scale, rtol=0):
        raise NotSymmetric("Laplacian must be symmetric")
    lam, V = jacobi_eigh(L_sym, tol=tol)
    n = L_sym.shape[0]
    gap_tol = 1e-9 * scale
    if abs(lam[0]) > gap_tol:
        raise NotConnected(f"smallest eigenvalue {lam[0]} is not zero")
    if n > 1 and lam[1] <= gap_tol:
        raise NotConnected("zero eigenvalue is repeated; the graph is disconnected")
    v1 = V[:, 0]
    if np.abs(np.abs(v1) - 1.0 / np.sqrt(n)).max() > 1e-8:
        raise NotConnected("null eigenvector is not uniform")
    projected = V @ (lam * (V.T @ x))
    return float(np.abs(L_sym @ x - projected).max())


def audit_energy_descent(traj, g: WeightedDigraph | None = None, slack: float = 1e-9) -> EnergyReport:
    """Evaluate F(x(t) || 1) with c = n along a trajectory and flag upticks above ``slack``."""
    times = np.asarray(traj.times)
    states = np.asarray(traj.states)
    if len(times) != len(states):
        raise LengthMismatch("times and states differ in length")
    if g is not None and states.shape[1] != g.n:
        raise LengthMismatch("trajectory dimension does not match the graph")
    values = free_energy(states) if len(states) else np.zeros(0)
    values = np.atleast_1d(values)
    diffs = np.diff(values)
    uptick = float(max(0.0, diffs.max(initial=0.0)))
    return EnergyReport(times, values, monotone=bool(uptick <= slack), max_uptick=uptick)
