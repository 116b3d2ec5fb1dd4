"""Command line entry point ``gmcons``.

Subcommands: ``simulate``, ``graph-info``, ``solve-gm`` and
``experiment {sweep,ratio,regular}``. A flat JSON file passed with
``--config`` supplies defaults; explicit flags override it.

Exit codes: 0 success (consensus), 2 horizon reached without consensus,
1 runtime error, 64 usage error, 65 malformed input data, 66 missing input
file, 73 output file cannot be created.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments
from .dynamics import METHODS, IntegratorConfig, integrate, write_trajectory_csv
from .errors import (
    ConsensusError,
    InfeasibleTarget,
    InputError,
    InvalidDegree,
    NoConvergence,
    ParseError,
)
from .graph import (
    DATA_DIR,
    generate_complete,
    generate_regular,
    is_balanced,
    is_strongly_connected,
    parse_edge_list,
    perron_left_vector,
)
from .means import am, am_w, gm, gm_w
from .optimize import solve_gm_variational
from .protocols import Protocol

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HORIZON = 2
EXIT_USAGE = os.EX_USAGE
EXIT_DATAERR = os.EX_DATAERR
EXIT_NOINPUT = os.EX_NOINPUT
EXIT_CANTCREAT = os.EX_CANTCREAT


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def usage(message):
    return CliError(message, EXIT_USAGE)


@dataclass
class RunConfig:
    """Everything a command may read, as one flat record (the shape of ``--config`` files)."""

    command: Optional[str] = None
    graph: Optional[str] = None
    normalized: bool = False
    protocol: str = "entropic"
    x0: Optional[str] = None
    x: Optional[str] = None
    dt: float = 1e-3
    t_end: float = 50.0
    tol: float = 1e-8
    min_dt: float = 1e-12
    record_stride: int = 10
    method: str = "auto"
    rtol: float = 1e-10
    atol: float = 1e-13
    max_dt: float = 0.05
    seed: int = 0
    out: Optional[str] = None
    workers: int = 1
    n: Optional[str] = None
    d: Optional[str] = None
    trials: int = 20
    c1: float = 4.0
    c2: float = 3.0
    lo: float = 0.0
    hi: float = 10.0

    @classmethod
    def from_sources(cls, config: dict, flags: dict) -> "RunConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(config) - set(known))
        if unknown:
            raise usage(f"unknown config keys: {', '.join(unknown)}")
        merged = dict(config)
        merged.update({k: v for k, v in flags.items() if k in known and v is not None})
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("dt", "t_end", "tol", "min_dt", "rtol", "atol", "max_dt"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
                raise usage(f"{name} must be a positive number, got {value!r}")
        for name in ("seed", "workers", "trials", "record_stride"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise usage(f"{name} must be an integer, got {value!r}")
        if self.workers < 1 or self.trials < 1 or self.record_stride < 1:
            raise usage("workers, trials and record_stride must be >= 1")
        if self.method not in METHODS:
            raise usage(f"method must be one of {', '.join(METHODS)}")
        if not isinstance(self.normalized, bool):
            raise usage("normalized must be true or false")
        try:
            Protocol.parse(self.protocol)
        except ValueError as exc:
            raise usage(str(exc)) from None

    def integrator(self) -> IntegratorConfig:
        try:
            return IntegratorConfig(dt=self.dt, t_end=self.t_end, consensus_tol=self.tol,
                                    min_dt=min(self.min_dt, self.dt),
                                    record_stride=self.record_stride, method=self.method,
                                    rtol=self.rtol, atol=self.atol,
                                    max_dt=max(self.max_dt, self.dt))
        except ValueError as exc:
            raise usage(str(exc)) from None


def parse_floats(text, what):
    try:
        values = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise usage(f"cannot read {what} {text!r}") from None
    if not values:
        raise usage(f"empty {what}")
    return np.array(values)


def parse_int_range(text, what):
    """``7``, ``2..10`` (inclusive) or ``2,4,8``."""
    text = str(text)
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise usage(f"cannot read {what} {text!r}") from None


def resolve_graph(spec, normalized):
    if spec is None:
        raise usage("--graph is required")
    spec = str(spec)
    try:
        if spec.startswith("complete:"):
            return generate_complete(int(spec.split(":", 1)[1]), normalized)
        if spec.startswith("regular:"):
            n, d = (int(v) for v in spec.split(":", 1)[1].split(","))
            return generate_regular(n, d, normalized)
    except (ValueError, InputError) as exc:
        raise usage(f"bad graph spec {spec!r}: {exc}") from None
    path = Path(spec)
    if not path.exists() and (DATA_DIR / spec).exists():
        path = DATA_DIR / spec
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(f"cannot read graph file {spec}: {exc.strerror}", EXIT_NOINPUT) from None
    try:
        return parse_edge_list(text)
    except (ParseError, InputError) as exc:
        raise CliError(f"{spec}: {exc}", EXIT_DATAERR) from None


def resolve_x0(spec, n, seed, lo, hi):
    if spec is None:
        raise usage("--x0 is required")
    spec = str(spec)
    if spec.startswith("sample:"):
        c = parse_floats(spec.split(":", 1)[1], "sampler targets")
        if c.size != 2:
            raise usage("sample spec is sample:c1,c2")
        try:
            return experiments.sample_constrained_x0(n, c[0], c[1], lo, hi, seed=seed)
        except ConsensusError as exc:
            raise usage(str(exc)) from None
    x0 = parse_floats(spec, "x0")
    if x0.size != n:
        raise usage(f"x0 has {x0.size} entries for a graph on {n} nodes")
    return x0


def open_output(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise CliError(f"cannot create {path}: {exc.strerror}", EXIT_CANTCREAT) from None


def fmt(v):
    return f"{v:.4f}"


def cmd_simulate(cfg: RunConfig) -> int:
    g = resolve_graph(cfg.graph, cfg.normalized)
    x0 = resolve_x0(cfg.x0, g.n, cfg.seed, cfg.lo, cfg.hi)
    kind = Protocol.parse(cfg.protocol)
    integ = cfg.integrator()
    out = open_output(cfg.out) if cfg.out else None
    try:
        traj = integrate(kind, g, x0, integ, raise_on_failure=False)
        if out is not None:
            write_trajectory_csv(traj, out, g)
    finally:
        if out is not None:
            out.close()

    if traj.terminated_by == "consensus":
        print(f"consensus {fmt(traj.consensus_value)}")
    elif traj.terminated_by == "horizon":
        print(f"horizon t={traj.times[-1]:.4g} spread={traj.spreads()[-1]:.4g} "
              f"mean {fmt(float(np.mean(traj.final)))}")
    else:
        print(f"error: {traj.message}", file=sys.stderr)
    positive = bool(np.all(x0 > 0))
    print(f"am {fmt(am(x0))}")
    if positive:
        print(f"gm {fmt(gm(x0))}")
    if is_strongly_connected(g):
        q = perron_left_vector(g)
        print(f"am_w {fmt(am_w(x0, q))}")
        if positive:
            print(f"gm_w {fmt(gm_w(x0, q))}")
    return {"consensus": EXIT_OK, "horizon": EXIT_HORIZON}.get(traj.terminated_by, EXIT_ERROR)


def cmd_graph_info(cfg: RunConfig) -> int:
    g = resolve_graph(cfg.graph, cfg.normalized)
    strong = is_strongly_connected(g)
    info = {
        "n": g.n,
        "edges": g.num_edges,
        "balanced": is_balanced(g),
        "strongly_connected": strong,
        "perron": [float(v) for v in perron_left_vector(g)] if strong else None,
    }
    print(json.dumps(info))
    return EXIT_OK


def cmd_solve_gm(cfg: RunConfig) -> int:
    x = parse_floats(cfg.x if cfg.x is not None else cfg.x0, "x")
    if not np.all(x > 0):
        raise usage("x must be positive")
    try:
        sol = solve_gm_variational(x)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    y = sol.y_star
    print(f"y* = {fmt(float(np.mean(y)))} * ones({y.size})")
    print(f"gm(x) {fmt(gm(x))}")
    print(f"am(y*) {fmt(am(y))}")
    print(f"lagrange_multiplier {sol.lagrange_multiplier:.6g}")
    print(f"kkt_residual {sol.kkt_residual:.3g}")
    print(f"iterations {sol.iterations}")
    if cfg.out:
        with open_output(cfg.out) as fh:
            fh.write("i,y\n" + "".join(f"{i},{v:.17g}\n" for i, v in enumerate(y)))
    return EXIT_OK


def cmd_experiment(cfg: RunConfig, which: str) -> int:
    exp_cfg = experiments.experiment_config(dt=cfg.dt, max_dt=max(cfg.max_dt, cfg.dt),
                                            rtol=cfg.rtol, atol=cfg.atol)
    try:
        if which == "sweep":
            ns = parse_int_range(cfg.n or "2..10", "n")
            report = experiments.run_complete_graph_sweep(
                ns, cfg.trials, cfg.c1, cfg.c2, cfg.seed, cfg.lo, cfg.hi, cfg=exp_cfg,
                workers=cfg.workers)
        elif which == "ratio":
            ns = parse_int_range(cfg.n or "5", "n")
            if len(ns) != 1:
                raise usage("ratio takes a single --n")
            report = experiments.run_ratio_experiment(
                ns[0], cfg.trials, cfg.lo, cfg.hi, cfg.seed, cfg=exp_cfg, workers=cfg.workers)
        else:
            ns = parse_int_range(cfg.n or "12", "n")
            if len(ns) != 1:
                raise usage("regular takes a single --n")
            ds = parse_int_range(cfg.d or "2..8", "d")
            report = experiments.run_regular_graph_experiment(
                ns[0], ds, cfg.trials, cfg.normalized, cfg.seed, cfg.lo, cfg.hi, cfg=exp_cfg,
                workers=cfg.workers)
    except (InvalidDegree, InfeasibleTarget) as exc:
        raise usage(str(exc)) from None
    if cfg.out:
        with open_output(cfg.out) as fh:
            fh.write(report.to_csv())
    else:
        sys.stdout.write(report.to_csv())
    summary = report.summary()
    summary["by_configuration"] = [
        {"family": k[0], "n": k[1], "d": k[2], "normalized": k[3], **v}
        for k, v in report.bound_violations.items()
    ]
    print(json.dumps(summary), file=sys.stderr if not cfg.out else sys.stdout)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: error: {message}", EXIT_USAGE)


def _common(p, graph=True):
    p.add_argument("--config", help="flat JSON file with defaults for any flag")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV path")
    if graph:
        p.add_argument("--graph", help="edge-list path, complete:n or regular:n,d")
        p.add_argument("--normalized", action="store_true", default=None,
                       help="normalize generated graphs to unit in-degree")


def _integrator_flags(p):
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--tol", type=float, help="consensus tolerance on the spread")
    p.add_argument("--method", choices=METHODS)


def build_parser():
    parser = _Parser(prog="gmcons", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate a protocol and write the trajectory")
    _common(p)
    _integrator_flags(p)
    p.add_argument("--protocol", help=", ".join(m.value for m in Protocol))
    p.add_argument("--x0", help="comma-separated state or sample:c1,c2")

    p = sub.add_parser("graph-info", help="balance, connectivity and Perron vector as JSON")
    _common(p)

    p = sub.add_parser("solve-gm", help="minimize the free energy at fixed product")
    _common(p, graph=False)
    p.add_argument("--x", help="comma-separated positive vector")

    p = sub.add_parser("experiment", help="bound study for the polynomial protocol")
    p.add_argument("which", choices=("sweep", "ratio", "regular"))
    _common(p, graph=False)
    p.add_argument("--normalized", action="store_true", default=None)
    p.add_argument("--n", help="node count, or range a..b for sweep")
    p.add_argument("--d", help="degree range a..b for regular")
    p.add_argument("--trials", type=int)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--dt", type=float)
    return parser


def load_config(path):
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}", EXIT_NOINPUT) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}", EXIT_DATAERR) from None
    if not isinstance(data, dict):
        raise CliError(f"{path}: config must be a JSON object", EXIT_DATAERR)
    return data


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise usage("a subcommand is required")
    flags = vars(ns)
    config = load_config(flags.pop("config"))
    command = flags.pop("command")
    which = flags.pop("which", None)
    expected = command if which is None else f"{command} {which}"
    if config.get("command") not in (None, command, expected):
        raise usage(f"config is for '{config['command']}', not '{expected}'")
    cfg = RunConfig.from_sources(config, flags)
    if command == "simulate":
        return cmd_simulate(cfg)
    if command == "graph-info":
        return cmd_graph_info(cfg)
    if command == "solve-gm":
        return cmd_solve_gm(cfg)
    return cmd_experiment(cfg, which)


def main(argv=None) -> int:
    try:
        return run(argv)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except ConsensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
