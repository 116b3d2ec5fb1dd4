"""Numerical study of the polynomial protocol's consensus value.

Three experiments bracket the consensus value x_bar between the
arithmetic-geometric mean agm(am(x0), gm(x0)) and am(x0):

* ``run_complete_graph_sweep``: normalized complete graphs over a range of
  sizes, x0 sampled with prescribed am and gm;
* ``run_ratio_experiment``: one complete graph, unconstrained random x0;
* ``run_regular_graph_experiment``: circulant (n, d)-regular graphs, with
  normalized or unit weights.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import IntegratorConfig, integrate, lyapunov_check
from .errors import BadBracket, BoundViolation, InfeasibleTarget, InvalidDegree
from .graph import generate_complete, generate_regular
from .means import agm, am, gm
from .protocols import Protocol

CSV_FIELDS = ["family", "n", "d", "normalized", "seed", "trial", "xbar", "am0", "gm0", "agm0",
              "r_am", "r_gm", "r_agm", "viol_upper", "viol_lower"]


def experiment_config(**overrides) -> IntegratorConfig:
    """Integrator settings for the bound study: tight consensus detection and
    error-controlled steps, since unit-weight regular graphs make the
    polynomial field stiff."""
    base = dict(dt=1e-3, t_end=5000.0, consensus_tol=1e-10, min_dt=1e-14, record_stride=1,
                method="rk4_adaptive_positivity", rtol=1e-10, atol=1e-13, max_dt=0.05)
    base.update(overrides)
    return IntegratorConfig(**base)


def trial_rng(*keys):
    """Independent generator per trial, keyed by (master seed, configuration, trial index)."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def _log_am_over_gm(log_z, beta):
    v = beta * log_z
    m = v.max()
    return m + math.log(np.mean(np.exp(v - m))) - v.mean()


def sample_constrained_x0(n, c1, c2, lo=0.0, hi=10.0, seed=None, max_redraws=1000):
    """Random x0 in (lo, hi)^n with am(x0) = c1 and gm(x0) = c2.

    Draws z uniformly and maps it through x = alpha * z**beta: beta solves
    am(z^beta) / gm(z^beta) = c1 / c2 by bisection (the ratio is 1 at
    beta = 0 and increases with beta), alpha fixes the arithmetic mean.
    Draws that leave (lo, hi) are redrawn.
    """
    if not (0 < c2 < c1):
        raise InfeasibleTarget(f"need 0 < c2 < c1, got c1={c1}, c2={c2}")
    if not (0 <= lo < c2 and hi > c1):
        raise InfeasibleTarget(f"need 0 <= lo < c2 and hi > c1, got ({lo}, {hi})")
    if n < 2:
        raise InfeasibleTarget("need n >= 2 to separate am from gm")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    target = math.log(c1 / c2)

    for _ in range(max_redraws):
        z = rng.uniform(lo, hi, size=n)
        if not np.all(z > 0):
            continue
        log_z = np.log(z)
        if np.ptp(log_z) == 0:
            continue
        b_lo, b_hi = 0.0, 1.0
        while _log_am_over_gm(log_z, b_hi) < target:
            b_lo, b_hi = b_hi, 2.0 * b_hi
            if b_hi > 1e6:
                raise BadBracket("could not bracket the am/gm ratio")
        for _ in range(200):
            mid = 0.5 * (b_lo + b_hi)
            if mid in (b_lo, b_hi):
                break
            if _log_am_over_gm(log_z, mid) < target:
                b_lo = mid
            else:
                b_hi = mid
        beta = 0.5 * (b_lo + b_hi)
        v = beta * log_z
        y = np.exp(v - v.max())
        x = c1 * y / y.mean()
        if np.all(x > lo) and np.all(x < hi) and abs(am(x) - c1) <= 1e-10 and abs(gm(x) - c2) <= 1e-10:
            return x
    raise InfeasibleTarget(f"no admissible x0 after {max_redraws} draws")


@dataclass
class TrialRecord:
    family: str
    n: int
    d: int
    normalized: bool
    seed: int
    trial: int
    x0: np.ndarray
    xbar: float
    am0: float
    gm0: float
    agm0: float
    terminated_by: str = "consensus"
    lyapunov: dict = field(default_factory=dict)
    slack: float = 1e-9

    @property
    def r_am(self):
        return self.am0 / self.xbar

    @property
    def r_gm(self):
        return self.gm0 / self.xbar

    @property
    def r_agm(self):
        return self.agm0 / self.xbar

    @property
    def viol_upper(self):
        return bool(self.r_am < 1.0 - self.slack)

    @property
    def viol_lower(self):
        return bool(self.r_agm > 1.0 + self.slack)

    @property
    def viol_gm(self):
        return bool(self.r_gm > 1.0 + self.slack)

    @property
    def bracketed(self):
        return bool(self.x0.min() < self.xbar < self.x0.max())

    def row(self):
        return {
            "family": self.family, "n": self.n, "d": self.d, "normalized": int(self.normalized),
            "seed": self.seed, "trial": self.trial, "xbar": self.xbar, "am0": self.am0,
            "gm0": self.gm0, "agm0": self.agm0, "r_am": self.r_am, "r_gm": self.r_gm,
            "r_agm": self.r_agm, "viol_upper": int(self.viol_upper),
            "viol_lower": int(self.viol_lower),
        }


@dataclass
class ExperimentReport:
    name: str
    trials: list
    slack: float = 1e-9

    def configurations(self):
        keys = []
        for t in self.trials:
            k = (t.family, t.n, t.d, t.normalized)
            if k not in keys:
                keys.append(k)
        return keys

    @property
    def bound_violations(self):
        """Counts per (family, n, d, normalized): x_bar above am(x0), below agm, below gm."""
        out = {}
        for t in self.trials:
            k = (t.family, t.n, t.d, t.normalized)
            c = out.setdefault(k, {"upper": 0, "lower": 0, "gm": 0, "trials": 0})
            c["upper"] += t.viol_upper
            c["lower"] += t.viol_lower
            c["gm"] += t.viol_gm
            c["trials"] += 1
        return out

    @property
    def total_upper_violations(self):
        return sum(t.viol_upper for t in self.trials)

    @property
    def total_lower_violations(self):
        return sum(t.viol_lower for t in self.trials)

    def summary(self):
        r_agm = np.array([t.r_agm for t in self.trials])
        r_am = np.array([t.r_am for t in self.trials])
        return {
            "experiment": self.name,
            "trials": len(self.trials),
            "upper_violations": int(self.total_upper_violations),
            "lower_violations": int(self.total_lower_violations),
            "gm_violations": int(sum(t.viol_gm for t in self.trials)),
            "unbracketed": int(sum(not t.bracketed for t in self.trials)),
            "max_r_agm": float(r_agm.max()) if r_agm.size else float("nan"),
            "min_r_am": float(r_am.min()) if r_am.size else float("nan"),
        }

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for t in self.trials:
            writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v)
                             for k, v in t.row().items()})
        return buf.getvalue()


def _run_trial(spec):
    family, n, d, normalized, seed, trial, sampling, cfg, slack = spec
    rng = trial_rng(seed, n, d, int(normalized), trial)
    if sampling[0] == "constrained":
        _, c1, c2, lo, hi = sampling
        x0 = sample_constrained_x0(n, c1, c2, lo, hi, seed=rng)
    else:
        _, lo, hi = sampling
        x0 = rng.uniform(lo, hi, size=n)
        while not np.all(x0 > 0):
            x0 = rng.uniform(lo, hi, size=n)
    if family == "complete":
        g = generate_complete(n, normalized)
    else:
        g = generate_regular(n, d, normalized)
    traj = integrate(Protocol.POLYNOMIAL, g, x0, cfg)
    xbar = traj.consensus_value if traj.consensus_value is not None else float(np.mean(traj.final))
    a, b = am(x0), gm(x0)
    return TrialRecord(family, n, d, normalized, seed, trial, x0, xbar, a, b, agm(a, b),
                       terminated_by=traj.terminated_by, lyapunov=lyapunov_check(traj),
                       slack=slack)


def _run_all(specs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial, specs, chunksize=4))
    else:
        records = [_run_trial(s) for s in specs]
    return sorted(records, key=lambda r: (r.family, r.n, r.d, r.normalized, r.trial))


def run_complete_graph_sweep(n_range, trials, c1=4.0, c2=3.0, seed=0, lo=0.0, hi=10.0,
                             cfg=None, workers=1, slack=1e-9) -> ExperimentReport:
    cfg = cfg or experiment_config()
    for n in n_range:
        if n < 2:
            raise InvalidDegree("complete graphs need n >= 2")
    specs = [("complete", n, n - 1, True, seed, k, ("constrained", c1, c2, lo, hi), cfg, slack)
             for n in n_range for k in range(trials)]
    return ExperimentReport("sweep", _run_all(specs, workers), slack)


def run_ratio_experiment(n=5, trials=100, lo=0.0, hi=10.0, seed=0, cfg=None, workers=1,
                         slack=1e-9) -> ExperimentReport:
    cfg = cfg or experiment_config()
    if n < 2:
        raise InvalidDegree("complete graphs need n >= 2")
    specs = [("complete", n, n - 1, True, seed, k, ("uniform", lo, hi), cfg, slack)
             for k in range(trials)]
    return ExperimentReport("ratio", _run_all(specs, workers), slack)


def run_regular_graph_experiment(n=12, d_range=range(2, 9), trials=10, normalized=True, seed=0,
                                 lo=0.0, hi=10.0, cfg=None, workers=1,
                                 slack=1e-9) -> ExperimentReport:
    cfg = cfg or experiment_config()
    for d in d_range:
        if not 2 <= d < n:
            raise InvalidDegree(f"need 2 <= d < n, got n={n}, d={d}")
    specs = [("regular", n, d, normalized, seed, k, ("uniform", lo, hi), cfg, slack)
             for d in d_range for k in range(trials)]
    report = ExperimentReport("regular", _run_all(specs, workers), slack)
    # the agm lower bound is only expected under normalized weighting
    if normalized and report.total_lower_violations:
        raise BoundViolation(f"{report.total_lower_violations} lower-bound violations on "
                             "normalized regular graphs", report)
    return report
