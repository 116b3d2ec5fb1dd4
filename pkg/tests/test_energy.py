import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmconsensus.dynamics import IntegratorConfig, Trajectory, integrate
from gmconsensus.energy import (
    audit_energy_descent,
    eigendecomposition_projection_residual,
    free_energy,
    free_energy_gradient,
    jacobi_eigh,
    projected_gradient,
    relative_entropy,
)
from gmconsensus.errors import LengthMismatch, NonPositiveInput, NotConnected, NotProbabilityVector, NotSymmetric
from gmconsensus.graph import WeightedDigraph, laplacian, load_edge_list, DATA_DIR, random_symmetric_connected
from gmconsensus.protocols import Protocol, vector_field

seeds = st.integers(0, 2**32 - 1)


def test_free_energy_values():
    assert free_energy(np.ones(4)) == 0.0
    # F(x || y) vanishes at x = y when c = sum(y)
    y = np.array([0.5, 2.0, 3.0])
    assert free_energy(y, y, c=y.sum()) == pytest.approx(0.0, abs=1e-15)
    assert free_energy(np.vstack([np.ones(3), 2 * np.ones(3)])).shape == (2,)
    with pytest.raises(NonPositiveInput):
        free_energy([1.0, 0.0])
    with pytest.raises(LengthMismatch):
        free_energy([1.0, 2.0], [1.0])


def test_gradient_matches_finite_differences(x0):
    h = 1e-6
    fd = [(free_energy(x0 + h * e) - free_energy(x0 - h * e)) / (2 * h) for e in np.eye(5)]
    np.testing.assert_allclose(free_energy_gradient(x0), fd, atol=1e-8)


def test_relative_entropy():
    p = np.array([0.2, 0.3, 0.5])
    assert relative_entropy(p, p) == 0.0
    assert relative_entropy(p, np.full(3, 1 / 3)) > 0
    with pytest.raises(NotProbabilityVector):
        relative_entropy([0.5, 0.6], [0.5, 0.5])


def test_projected_gradient_is_scaling_field(fig1b, x0):
    np.testing.assert_allclose(-projected_gradient(laplacian(fig1b), x0),
                               vector_field(Protocol.SCALING, fig1b, x0), atol=1e-13)


@given(st.integers(2, 9), seeds)
def test_jacobi_against_numpy(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    A = A + A.T
    w, V = jacobi_eigh(A)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(A @ V, V * w, atol=1e-10)


@given(st.integers(2, 9), seeds)
def test_eigendecomposition_projection(n, seed):
    g = random_symmetric_connected(n, seed)
    x = np.random.default_rng(seed).uniform(0.1, 10, n)
    assert eigendecomposition_projection_residual(laplacian(g), x) < 1e-10


def test_projection_errors(fig1b):
    with pytest.raises(NotSymmetric):
        eigendecomposition_projection_residual(laplacian(fig1b), np.ones(5))
    two_components = WeightedDigraph(4, ((0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)))
    with pytest.raises(NotConnected):
        eigendecomposition_projection_residual(laplacian(two_components), np.ones(4))


def test_triangle_descent_to_simplex_minimum():
    g = load_edge_list(DATA_DIR / "triangle.edges")
    cfg = IntegratorConfig(t_end=100, consensus_tol=1e-10, record_stride=1)
    for x0 in ([2.4, 0.3, 0.3], [0.2, 1.0, 1.8], [1.2, 1.5, 0.3]):
        traj = integrate("scaling", g, x0, cfg)
        report = audit_energy_descent(traj, g)
        assert report.monotone
        assert np.abs(traj.states.sum(axis=1) - 3.0).max() <= 1e-8
        assert report.values[-1] == pytest.approx(free_energy(np.ones(3)), abs=1e-12)
        assert report.to_csv().startswith("t,free_energy\n")


def test_audit_flags_upticks():
    traj = Trajectory(np.arange(3.0), np.array([[1, 1.0], [1.5, 1.0], [2.0, 2.0]]), "horizon",
                      None, Protocol.SCALING, 1e-8)
    report = audit_energy_descent(traj)
    assert not report.monotone and report.max_uptick > 0
    with pytest.raises(LengthMismatch):
        audit_energy_descent(traj, WeightedDigraph(3))


@given(st.integers(2, 8), seeds, st.floats(0.5, 20.0))
def test_uniform_point_minimizes_free_energy_on_simplex(n, seed, m):
    rng = np.random.default_rng(seed)
    center = np.full(n, m / n)
    for _ in range(20):
        d = rng.normal(size=n)
        d -= d.mean()
        d *= 0.5 * center[0] / np.abs(d).max()
        assert free_energy(center + d) >= free_energy(center) - 1e-12


def test_scaling_descent_on_random_symmetric_graphs():
    rng = np.random.default_rng(3)
    cfg = IntegratorConfig(t_end=500, consensus_tol=1e-9)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        g = random_symmetric_connected(n, rng)
        traj = integrate("scaling", g, rng.uniform(0.1, 10, n), cfg)
        assert audit_energy_descent(traj, g).monotone
        mass = traj.states.sum(axis=1)
        assert np.abs(mass - mass[0]).max() <= 1e-8
