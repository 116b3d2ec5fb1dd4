"""Positivity-preserving RK4 integration of the consensus fields and trajectory diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (
    EmptyInput,
    InsufficientSamples,
    InvalidGraph,
    NonPositiveState,
    NotStronglyConnected,
    SineDomainViolation,
    StepUnderflow,
)
from .graph import WeightedDigraph, is_strongly_connected, laplacian, perron_left_vector
from .protocols import PROTOCOL_CODES, Protocol, check_compatible

METHODS = ("auto", "rk4_fixed", "rk4_adaptive_positivity")
# real-axis stability limit of classical RK4
RK4_STABILITY = 2.78


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``rk4_fixed`` takes steps of ``dt``; a step whose stages leave the
    positive orthant is rejected and ``dt`` halved, then doubled back toward
    the configured value after 10 accepted steps. ``rk4_adaptive_positivity``
    keeps the same guard and adds step-doubling error control (``rtol``,
    ``atol``, ``max_dt``), which the stiff polynomial runs need. ``auto``
    picks the fixed step when ``dt`` is provably inside the RK4 stability
    region for the whole run (see ``stability_bound``) and the adaptive one
    otherwise.
    """

    dt: float = 1e-3
    t_end: float = 50.0
    consensus_tol: float = 1e-8
    min_dt: float = 1e-12
    record_stride: int = 10
    method: str = "auto"
    rtol: float = 1e-10
    atol: float = 1e-13
    max_dt: float = 0.05

    def __post_init__(self):
        if not 0 < self.min_dt <= self.dt:
            raise ValueError("need 0 < min_dt <= dt")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.consensus_tol > 0:
            raise ValueError("consensus_tol must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be an integer >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.method != "rk4_fixed" and not (self.rtol > 0 and self.atol > 0
                                                and self.max_dt >= self.dt):
            raise ValueError("adaptive method needs rtol, atol > 0 and max_dt >= dt")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    terminated_by: str
    consensus_value: Optional[float]
    protocol: Protocol
    consensus_tol: float
    accepted_steps: int = 0
    rejected_steps: int = 0
    message: str = ""
    info: dict = field(default_factory=dict)

    @property
    def x0(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    def spreads(self):
        return self.states.max(axis=1) - self.states.min(axis=1)

    def __len__(self):
        return len(self.times)


def spread(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("spread of an empty vector")
    return float(x.max() - x.min())


def stability_bound(kind, g: WeightedDigraph, lo: float, hi: float) -> float:
    """Gershgorin bound on the spectral radius of the field's Jacobian over the
    box [lo, hi]^n.

    Every protocol keeps max and min of the state monotone, so a trajectory
    started in the box stays there and fixed steps with dt * bound below the
    RK4 stability limit cannot go unstable.
    """
    kind = Protocol.parse(kind)
    d = g.in_degree
    if kind in (Protocol.LINEAR, Protocol.METRIC_EUCLIDEAN, Protocol.METRIC_SINE):
        return float(2.0 * d.max(initial=0.0))
    if lo <= 0:
        return float("inf")
    if kind in (Protocol.SCALING, Protocol.METRIC_HYPERBOLIC):
        return float((2.0 * d / lo).max(initial=0.0))
    if kind is Protocol.ENTROPIC:
        spread_log = np.log(hi / lo)
        return float((d * (spread_log + 1.0) + hi * d / lo).max(initial=0.0))
    # polynomial: products of powers, largest at either end of the box
    od = g.out_degree
    r_plus = np.maximum(hi ** d, lo ** d)
    r_minus = np.maximum(hi ** od, lo ** od)
    return float((r_plus * d / lo + od * r_minus / lo).max(initial=0.0))


def resolve_method(kind, g: WeightedDigraph, x0, cfg: IntegratorConfig) -> str:
    if cfg.method != "auto":
        return cfg.method
    x0 = np.asarray(x0, dtype=float)
    bound = stability_bound(kind, g, float(x0.min()), float(x0.max()))
    return "rk4_fixed" if cfg.dt * bound <= RK4_STABILITY else "rk4_adaptive_positivity"


def integrate(kind, g: WeightedDigraph, x0, cfg: IntegratorConfig | None = None,
              raise_on_failure: bool = True, chunk: int = 4096) -> Trajectory:
    cfg = cfg or IntegratorConfig()
    kind = Protocol.parse(kind)
    x = np.array(x0, dtype=float).ravel()
    if x.size != g.n:
        raise InvalidGraph(f"x0 has {x.size} entries for a graph on {g.n} nodes")
    if kind.needs_positive_state and not np.all(x > 0):
        raise NonPositiveState("x0 must be strictly positive")
    check_compatible(kind, g, x)
    if not is_strongly_connected(g):
        warnings.warn("graph is not strongly connected; consensus is not guaranteed",
                      RuntimeWarning, stacklevel=2)

    times = [np.array([0.0])]
    states = [x.copy()[None, :]]
    method = resolve_method(kind, g, x, cfg)
    if spread(x) <= cfg.consensus_tol:
        return Trajectory(np.array([0.0]), x.copy()[None, :], "consensus", float(np.mean(x)),
                          kind, cfg.consensus_tol, info={"method": method})

    L = np.ascontiguousarray(laplacian(g))
    W = np.ascontiguousarray(g.adjacency)
    outdeg = np.ascontiguousarray(g.out_degree, dtype=float)
    code = PROTOCOL_CODES[kind]
    adaptive = method == "rk4_adaptive_positivity"
    state = np.array([0.0, cfg.dt, 0.0, 0.0, 0.0])

    while True:
        tbuf = np.empty(chunk)
        sbuf = np.empty((chunk, g.n))
        status, nrec = _kernels.integrate_chunk(
            code, L, W, outdeg, x, state, cfg.dt, cfg.t_end, cfg.consensus_tol, cfg.min_dt,
            int(cfg.record_stride), adaptive, cfg.rtol, cfg.atol, cfg.max_dt, tbuf, sbuf)
        if nrec:
            times.append(tbuf[:nrec])
            states.append(sbuf[:nrec])
        if status != _kernels.BUFFER_FULL:
            break

    t_all = np.concatenate(times)
    s_all = np.concatenate(states)
    keep = np.concatenate([[True], np.diff(t_all) > 0])
    t_all, s_all = t_all[keep], s_all[keep]

    traj = Trajectory(t_all, s_all, "horizon", None, kind, cfg.consensus_tol,
                      accepted_steps=int(state[3]), rejected_steps=int(state[4]),
                      info={"method": method})
    if status == _kernels.CONSENSUS:
        traj.terminated_by = "consensus"
        traj.consensus_value = float(np.mean(s_all[-1]))
    elif status in (_kernels.UNDERFLOW, _kernels.DOMAIN_ERROR):
        traj.terminated_by = "failure"
        if status == _kernels.UNDERFLOW:
            traj.message = f"step size fell below min_dt={cfg.min_dt} at t={state[0]}"
            exc = StepUnderflow(traj.message)
        else:
            traj.message = f"sine protocol left its domain at t={state[0]}"
            exc = SineDomainViolation(traj.message)
        if raise_on_failure:
            exc.trajectory = traj
            raise exc
    return traj


_LINEAR_INVARIANT = (Protocol.LINEAR, Protocol.SCALING, Protocol.METRIC_EUCLIDEAN,
                     Protocol.METRIC_HYPERBOLIC)


def conserved_quantity(kind, g: WeightedDigraph, x, q=None) -> Optional[float]:
    """Flow invariant: q.ln(x) for the entropic protocol, q.x for the linear and
    scaling-invariant ones, None where no invariant is known.

    ``x`` may be a single state or a stack of states (one per row).
    """
    kind = Protocol.parse(kind)
    if kind not in _LINEAR_INVARIANT and kind is not Protocol.ENTROPIC:
        return None
    if q is None:
        if not is_strongly_connected(g):
            raise NotStronglyConnected("the invariant is weighted by the Perron vector")
        q = perron_left_vector(g)
    x = np.asarray(x, dtype=float)
    if kind is Protocol.ENTROPIC:
        if not np.all(x > 0):
            raise NonPositiveState("q.ln(x) needs a positive state")
        val = np.log(x) @ q
    else:
        val = x @ q
    return float(val) if np.ndim(val) == 0 else val


def convergence_rate(traj: Trajectory, consensus_tol: float | None = None) -> float:
    """Least-squares slope of ln(spread) against time over samples above the tolerance."""
    tol = traj.consensus_tol if consensus_tol is None else consensus_tol
    s = traj.spreads()
    mask = s > tol
    if mask.sum() < 10:
        raise InsufficientSamples(f"only {int(mask.sum())} samples with spread above {tol}")
    t = traj.times[mask]
    y = np.log(s[mask])
    slope, _ = np.polyfit(t, y, 1)
    return float(slope)


def lyapunov_check(traj: Trajectory, slack: float = 1e-9) -> dict:
    """Sample-to-sample monotonicity of max, min and spread along a trajectory."""
    hi = traj.states.max(axis=1)
    lo = traj.states.min(axis=1)
    sp = hi - lo
    return {
        "max_nonincreasing": bool(np.all(np.diff(hi) <= slack)),
        "min_nondecreasing": bool(np.all(np.diff(lo) >= -slack)),
        "spread_nonincreasing": bool(np.all(np.diff(sp) <= slack)),
        "max_increase": float(np.diff(hi).max(initial=0.0)),
        "min_decrease": float(-np.diff(lo).min(initial=0.0)),
    }


def write_trajectory_csv(traj: Trajectory, path_or_file, g: WeightedDigraph | None = None, q=None):
    """CSV with header ``t,x0,...,x{n-1},spread,conserved``; empty ``conserved`` when unknown."""
    n = traj.states.shape[1]
    conserved = None
    if g is not None:
        try:
            conserved = conserved_quantity(traj.protocol, g, traj.states, q=q)
        except NotStronglyConnected:
            conserved = None
    header = ",".join(["t"] + [f"x{i}" for i in range(n)] + ["spread", "conserved"])
    rows = [header]
    spreads = traj.spreads()
    for k, (t, x) in enumerate(zip(traj.times, traj.states)):
        c = "" if conserved is None else f"{conserved[k]:.17g}"
        rows.append(",".join([f"{t:.17g}"] + [f"{v:.17g}" for v in x] + [f"{spreads[k]:.17g}", c]))
    text = "\n".join(rows) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
