from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from threedvar.dynamics import (
    CLASSICAL,
    LorenzParams,
    Trajectory,
    advance,
    apply_A,
    bilinear_B,
    grid_ratio,
    n_steps,
    solve,
    spin_up,
    step,
    vector_field,
)
from threedvar.errors import ConfigError, Divergence, GridMismatch

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
states = arrays(np.float64, 3, elements=finite)


def classical_lorenz(X, sigma=10.0, rho=28.0, beta=8.0 / 3.0):
    x, y, z = X
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def test_constants_exact():
    # exact rational evaluation of K at (10, 8/3, 28)
    b, r, a = Fraction(8, 3), Fraction(28), Fraction(10)
    K = b**2 * (r + a) ** 2 / (4 * (b - 1))
    assert K == Fraction(92416, 60)
    assert CLASSICAL.K == pytest.approx(float(K), rel=1e-15)
    assert CLASSICAL.K == pytest.approx(1540.2666666, rel=1e-9)
    assert CLASSICAL.beta == pytest.approx(2 * (math.sqrt(float(K)) - 1), rel=1e-15)
    assert CLASSICAL.beta == pytest.approx(76.49246, rel=1e-6)
    assert CLASSICAL.eta_c == pytest.approx(4 / float(K), rel=1e-15)


def test_operators_match_matrices():
    A = CLASSICAL.A
    np.testing.assert_array_equal(A, [[10, -10, 0], [10, 1, 0], [0, 0, 8 / 3]])
    np.testing.assert_allclose(CLASSICAL.f, [0, 0, -8 / 3 * 38])
    u = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(apply_A(u), A @ u)


@given(states)
def test_vector_field_is_shifted_classical_lorenz(u):
    shift = np.array([0.0, 0.0, CLASSICAL.r + CLASSICAL.alpha])
    np.testing.assert_allclose(vector_field(u), classical_lorenz(u + shift), rtol=1e-12, atol=1e-9)


@given(states, states)
def test_bilinear_symmetric_and_energy(u, v):
    np.testing.assert_array_equal(bilinear_B(u, v), bilinear_B(v, u))
    assert abs(bilinear_B(u, u) @ u) <= 1e-10 * max(1.0, np.linalg.norm(u)) ** 3


@given(states)
def test_equilibrium_is_fixed(u):
    eq = CLASSICAL.equilibrium
    np.testing.assert_allclose(vector_field(eq), 0, atol=1e-12)


def test_broadcasting():
    u = np.arange(12.0).reshape(4, 3)
    np.testing.assert_allclose(vector_field(u), np.array([vector_field(x) for x in u]))


@pytest.mark.parametrize("bad", [dict(alpha=1.0), dict(b=0.5), dict(r=-1.0), dict(alpha=math.nan)])
def test_params_validation(bad):
    with pytest.raises(ConfigError):
        LorenzParams(**bad)


def test_compiled_matches_numpy_step(v0):
    for scheme in ("explicit_euler", "rk4"):
        u = v0.copy()
        for _ in range(50):
            u = step(u, 1e-3, scheme=scheme)
        traj = solve(v0, 0.05, 1e-3, scheme=scheme)
        np.testing.assert_allclose(traj.end, u, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(advance(v0, 50, 1e-3, scheme=scheme), u, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("scheme, order", [("explicit_euler", 1), ("rk4", 4)])
def test_convergence_order(v0, scheme, order):
    T = 0.2
    ref = solve(v0, T, 1e-5, scheme="rk4").end
    errs = [np.linalg.norm(solve(v0, T, dt, scheme=scheme).end - ref) for dt in (2e-3, 1e-3)]
    observed = math.log2(errs[0] / errs[1])
    assert abs(observed - order) < 0.3


def test_attractor_absorbing_ball(v0):
    traj = solve(v0, 20.0, 1e-4)
    assert np.max(np.sum(traj.states**2, axis=1)) <= CLASSICAL.K


def test_divergence_raised():
    with pytest.raises(Divergence) as info:
        solve([1.0, 1.0, 1.0], 10.0, 0.1)
    assert info.value.step > 0


def test_trajectory_grid():
    traj = solve([1.0, 1.0, 1.0], 1.0, 1e-3)
    assert len(traj) == 1001
    assert traj.duration == pytest.approx(1.0)
    sub = traj.subsample(0.01)
    assert len(sub) == 101
    np.testing.assert_array_equal(sub.states, traj.states[::10])
    with pytest.raises(GridMismatch):
        traj.subsample(0.0015)


def test_grid_helpers():
    assert grid_ratio(0.01, 1e-4) == 100
    assert n_steps(100.0, 1e-4) == 1_000_000
    with pytest.raises(GridMismatch):
        grid_ratio(0.01, 3e-3)


def test_stride_storage():
    full = solve([1.0, 1.0, 1.0], 1.0, 1e-3)
    sparse = solve([1.0, 1.0, 1.0], 1.0, 1e-3, stride=100)
    np.testing.assert_array_equal(sparse.states, full.states[::100])
    with pytest.raises(ConfigError):
        solve([1.0, 1.0, 1.0], 1.0, 1e-3, stride=7)


def test_spin_up_zero_returns_copy():
    u = np.array([1.0, 2.0, 3.0])
    out = spin_up(u, 0.0)
    assert out is not u
    np.testing.assert_array_equal(out, u)


def test_state_validation():
    with pytest.raises(ValueError):
        step([1.0, 2.0], 0.1)
    with pytest.raises(ValueError):
        step([1.0, math.nan, 0.0], 0.1)
    with pytest.raises(ConfigError):
        step([1.0, 2.0, 3.0], 0.1, scheme="leapfrog")
    with pytest.raises(ValueError):
        Trajectory(0.0, 0.1, np.zeros((3, 2)))
