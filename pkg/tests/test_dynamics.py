import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from gmconsensus.dynamics import (
    IntegratorConfig,
    Trajectory,
    conserved_quantity,
    convergence_rate,
    integrate,
    lyapunov_check,
    spread,
    stability_bound,
    write_trajectory_csv,
)
from gmconsensus.errors import (
    EmptyInput,
    InsufficientSamples,
    NonPositiveState,
    NotBalanced,
    SineDomainViolation,
    StepUnderflow,
)
from gmconsensus.graph import (
    WeightedDigraph,
    generate_regular,
    perron_left_vector,
    random_strongly_connected,
)
from gmconsensus.means import am_w, gm_w
from gmconsensus.protocols import Protocol, vector_field

FIG1B_PERRON = np.array([2.75, 1.5, 4.0, 1.0, 1.5]) / 10.75
LONG = IntegratorConfig(t_end=500.0, consensus_tol=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(min_dt=1e-2, dt=1e-3)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(record_stride=0)
    assert IntegratorConfig().with_(dt=1e-2).dt == 1e-2


@pytest.mark.parametrize("kind, expected", [
    ("entropic", 2.4444), ("scaling", 3.5884), ("linear", 3.5884), ("metric:hyperbolic", 3.5884),
])
def test_fig1b_consensus_values(fig1b, x0, kind, expected):
    traj = integrate(kind, fig1b, x0, LONG)
    assert traj.terminated_by == "consensus"
    assert traj.consensus_value == pytest.approx(expected, abs=1e-4)


def test_fig1a_consensus_values(fig1a, x0):
    assert integrate("entropic", fig1a, x0, LONG).consensus_value == pytest.approx(1.78858342, abs=1e-7)
    assert integrate("scaling", fig1a, x0, LONG).consensus_value == pytest.approx(3.06, abs=1e-7)
    assert integrate("linear", fig1a, x0, LONG).consensus_value == pytest.approx(3.06, abs=1e-7)


def test_uniform_start_is_immediate_consensus(fig1a):
    for kind in Protocol:
        traj = integrate(kind, fig1a, [2.0] * 5)
        assert traj.terminated_by == "consensus"
        assert traj.consensus_value == 2.0
        assert len(traj) == 1


def test_matches_scipy_reference(fig1b, x0):
    cfg = IntegratorConfig(t_end=2.0, consensus_tol=1e-12, record_stride=1)
    for kind in ("entropic", "scaling", "linear"):
        traj = integrate(kind, fig1b, x0, cfg)
        ref = solve_ivp(lambda t, x: vector_field(kind, fig1b, x), (0, 2.0), x0,
                        method="DOP853", rtol=1e-12, atol=1e-12, t_eval=traj.times)
        np.testing.assert_allclose(traj.states, ref.y.T, atol=1e-9)


def polynomial_reference(g, x0, t_end):
    """Stiff oracle: Radau on the polynomial field written in u = ln x."""
    W, od = g.adjacency, g.out_degree
    sol = solve_ivp(lambda t, u: np.exp(W @ u - u) - np.exp((od - 1) * u), (0, t_end),
                    np.log(x0), method="Radau", rtol=1e-12, atol=1e-12)
    return np.exp(sol.y[:, -1])


def test_polynomial_matches_stiff_reference(fig1a, x0):
    ref = polynomial_reference(fig1a, x0, 100.0)
    assert np.ptp(ref) < 1e-9
    traj = integrate("polynomial", fig1a, x0, IntegratorConfig(t_end=100, consensus_tol=1e-10))
    # fixed RK4 at dt = 1e-3 is outside its stability region here (out-degree 8)
    assert traj.info["method"] == "rk4_adaptive_positivity"
    assert traj.consensus_value == pytest.approx(ref.mean(), abs=1e-8)


def test_auto_method_keeps_fixed_steps_when_stable(fig1b, x0):
    traj = integrate("entropic", fig1b, x0, IntegratorConfig(t_end=1.0))
    assert traj.info["method"] == "rk4_fixed"
    assert stability_bound("linear", fig1b, -1.0, 1.0) == 22.0
    assert stability_bound("scaling", fig1b, 0.0, 1.0) == math.inf


def test_positivity_guard_halves_steps():
    # a large first step would overshoot zero; the guard must reject and shrink it
    g = WeightedDigraph(2, ((0, 1, 1.0), (1, 0, 1.0)))
    cfg = IntegratorConfig(dt=0.5, t_end=20, method="rk4_fixed")
    traj = integrate("entropic", g, [100.0, 1e-3], cfg)
    assert traj.rejected_steps > 0
    assert np.all(traj.states > 0)
    assert traj.terminated_by == "consensus"
    assert 1e-3 < traj.consensus_value < 100.0


def test_extreme_start_is_accurate_under_auto():
    g = WeightedDigraph(2, ((0, 1, 1.0), (1, 0, 1.0)))
    traj = integrate("entropic", g, [100.0, 1e-3], IntegratorConfig(t_end=50, consensus_tol=1e-10))
    assert traj.consensus_value == pytest.approx(math.sqrt(0.1), rel=1e-8)


def test_linear_accepts_real_states(fig1b):
    traj = integrate("linear", fig1b, [-3.0, 1.0, 0.0, 2.0, -1.0], IntegratorConfig(t_end=100))
    q = perron_left_vector(fig1b)
    assert traj.consensus_value == pytest.approx(q @ [-3.0, 1.0, 0.0, 2.0, -1.0], abs=1e-7)


def test_step_underflow_carries_trajectory():
    g = WeightedDigraph(2, ((0, 1, 1.0), (1, 0, 1.0)))
    cfg = IntegratorConfig(dt=0.5, min_dt=0.25, t_end=20, method="rk4_fixed")
    with pytest.raises(StepUnderflow) as info:
        integrate("entropic", g, [100.0, 1e-3], cfg)
    assert info.value.trajectory.terminated_by == "failure"
    traj = integrate("entropic", g, [100.0, 1e-3], cfg, raise_on_failure=False)
    assert traj.terminated_by == "failure" and "min_dt" in traj.message


def test_horizon(fig1b, x0):
    traj = integrate("scaling", fig1b, x0, IntegratorConfig(t_end=1.0))
    assert traj.terminated_by == "horizon"
    assert traj.consensus_value is None
    assert traj.times[-1] == pytest.approx(1.0)
    assert np.all(np.diff(traj.times) > 0)


def test_input_errors(fig1b):
    with pytest.raises(NonPositiveState):
        integrate("entropic", fig1b, [1, 2, 3, 0, 1])
    with pytest.raises(NotBalanced):
        integrate("polynomial", fig1b, [1, 2, 3, 4, 5])
    with pytest.raises(SineDomainViolation):
        integrate("metric:sine", fig1b, [0.1, 2, 0.3, 0.4, 0.5])
    with pytest.raises(EmptyInput):
        spread([])


def test_disconnected_graph_warns():
    g = WeightedDigraph(3, ((0, 1, 1.0), (1, 2, 1.0)))
    with pytest.warns(RuntimeWarning):
        integrate("linear", g, [1.0, 2.0, 3.0], IntegratorConfig(t_end=1.0))


def test_sine_protocol_reaches_consensus(fig1b):
    x0 = np.array([1.0, 1.3, 1.9, 1.2, 1.6])
    traj = integrate("metric:sine", fig1b, x0, LONG)
    assert traj.terminated_by == "consensus"
    assert x0.min() < traj.consensus_value < x0.max()


def test_conserved_quantities(fig1b, x0):
    q = perron_left_vector(fig1b)
    assert conserved_quantity("entropic", fig1b, x0) == pytest.approx(math.log(gm_w(x0, q)))
    assert conserved_quantity("scaling", fig1b, x0) == pytest.approx(am_w(x0, q))
    assert conserved_quantity("metric:sine", fig1b, x0) is None
    assert conserved_quantity("polynomial", fig1b, x0) is None
    stacked = conserved_quantity("linear", fig1b, np.vstack([x0, x0]))
    assert stacked.shape == (2,)


def test_invariant_drift_along_flow(fig1b, x0):
    for kind in ("entropic", "scaling", "linear"):
        traj = integrate(kind, fig1b, x0, LONG)
        c = conserved_quantity(kind, fig1b, traj.states)
        assert np.abs(c - c[0]).max() <= 1e-9


def test_two_node_linear_rate():
    g = WeightedDigraph(2, ((0, 1, 1.0), (1, 0, 1.0)))
    traj = integrate("linear", g, [0.0, 1.0], IntegratorConfig(t_end=20, consensus_tol=1e-10))
    assert convergence_rate(traj) == pytest.approx(-2.0, rel=1e-3)


def test_rate_needs_samples():
    traj = Trajectory(np.arange(5.0), np.outer(np.exp(-np.arange(5.0)), [0, 1]), "consensus",
                      0.0, Protocol.LINEAR, 1e-8)
    with pytest.raises(InsufficientSamples):
        convergence_rate(traj)


def test_lyapunov_check_flags_violations():
    times = np.arange(3.0)
    good = Trajectory(times, np.array([[1, 3], [1.5, 2.5], [2, 2.0]]), "consensus", 2.0,
                      Protocol.LINEAR, 1e-8)
    assert all(v for k, v in lyapunov_check(good).items() if k.endswith(("increasing", "decreasing")))
    bad = Trajectory(times, np.array([[1, 3], [1.5, 3.5], [2, 2.0]]), "consensus", 2.0,
                     Protocol.LINEAR, 1e-8)
    report = lyapunov_check(bad)
    assert not report["max_nonincreasing"] and report["max_increase"] == pytest.approx(0.5)


def test_trajectory_csv(fig1b, x0):
    traj = integrate("scaling", fig1b, x0, IntegratorConfig(t_end=0.05))
    buf = io.StringIO()
    write_trajectory_csv(traj, buf, fig1b)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x0,x1,x2,x3,x4,spread,conserved"
    assert len(lines) == len(traj) + 1
    first = [float(v) for v in lines[1].split(",")]
    assert first[1:6] == list(x0)
    assert first[-1] == pytest.approx(am_w(x0, FIG1B_PERRON), abs=1e-12)
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    assert buf.getvalue().splitlines()[1].endswith(",")


@settings(max_examples=25)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_weighted_mean_limits(n, seed):
    g = random_strongly_connected(n, seed)
    x0 = np.random.default_rng(seed).uniform(0.1, 10, n)
    q = perron_left_vector(g)
    cfg = IntegratorConfig(t_end=2000.0, consensus_tol=1e-8, method="rk4_adaptive_positivity",
                           max_dt=0.2)
    ent = integrate("entropic", g, x0, cfg)
    sca = integrate("scaling", g, x0, cfg)
    assert ent.consensus_value == pytest.approx(gm_w(x0, q), abs=1e-6)
    assert sca.consensus_value == pytest.approx(am_w(x0, q), abs=1e-6)
    for traj in (ent, sca):
        report = lyapunov_check(traj)
        assert report["max_nonincreasing"] and report["min_nondecreasing"]


def test_unit_weight_regular_polynomial_is_stiff_but_solvable():
    g = generate_regular(12, 8, normalized=False)
    x0 = np.random.default_rng(0).uniform(0.1, 10, 12)
    cfg = IntegratorConfig(t_end=100, consensus_tol=1e-10, method="rk4_adaptive_positivity",
                           min_dt=1e-14)
    traj = integrate("polynomial", g, x0, cfg)
    assert traj.terminated_by == "consensus"
    assert x0.min() < traj.consensus_value < x0.max()


def test_spread_examples(x0):
    assert spread(x0) == pytest.approx(6.3)
    assert spread([5.0]) == 0.0
    assert spread([1, 1, 1]) == 0.0


def test_entropic_invariant_on_balanced_graph(fig1a, x0):
    assert conserved_quantity("entropic", fig1a, x0) == pytest.approx(np.log(x0).mean(), abs=1e-12)
