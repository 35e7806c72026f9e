import math

import numpy as np
import pytest

from smclab import plants
from smclab.errors import SingularGain
from smclab.experiments import builtin_scenarios, run_scenario
from smclab.ode import IntegratorConfig, Status, fixed_step, integrate, step_order_check

CP = plants.CraneParams()


def test_tableau_consistency():
    from smclab.ode import A, B4, B5, C

    assert sum(B5) == pytest.approx(1.0, abs=1e-15)
    assert sum(B4) == pytest.approx(1.0, abs=1e-15)
    for ci, row in zip(C, A):
        assert sum(row) == pytest.approx(ci, abs=1e-15)


def test_zero_rhs_is_constant():
    traj = integrate(lambda t, y: (0.0, 0.0, 0.0, 0.0), (1, 2, 3, 4))
    assert traj.status is Status.COMPLETED
    assert np.all(traj.states == np.array([1, 2, 3, 4.0]))
    assert traj.times[-1] == pytest.approx(10.0)


def test_exponential_decay():
    traj = integrate(lambda t, y: (-y[0],), (1.0,), IntegratorConfig(rtol=1e-9, atol=1e-12, t_end=1.0))
    assert traj.final_state[0] == pytest.approx(0.3678794, abs=1e-7)
    assert traj.final_state[0] == pytest.approx(math.exp(-1), abs=1e-8)


def test_pendulum_energy_drift():
    cfg = IntegratorConfig(rtol=1e-9, atol=1e-12, t_end=10.0)
    traj = integrate(lambda t, y: plants.asymptotic_pendulum_derivative(y[0], y[1], CP), (0.5, 0.0), cfg)
    V = np.array([plants.pendulum_energy(a, b, CP) for a, b in traj.states])
    assert abs(V - V[0]).max() <= 1e-6 * max(1.0, V[0])


@pytest.mark.parametrize("h", [0.01, 0.02])
def test_observed_order(h):
    assert 4.5 <= step_order_check(h) <= 5.5


def test_linear_system_matches_matrix_exponential():
    # A = V diag(-1, -3) V^-1 with V = [[1, 1], [0, -1]]
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    V = np.array([[1.0, 1.0], [0.0, -1.0]])
    y0 = np.array([1.0, 1.0])
    t = 2.0
    exact = V @ np.diag(np.exp([-1 * t, -3 * t])) @ np.linalg.solve(V, y0)
    traj = integrate(lambda s, y: tuple(A @ np.asarray(y)), y0, IntegratorConfig(rtol=1e-11, atol=1e-14, t_end=t))
    rel = np.abs(traj.final_state - exact) / np.abs(exact)
    assert rel.max() <= 1e-8


def test_tolerance_monotonicity():
    cfg = lambda r: IntegratorConfig(rtol=r, atol=r * 1e-3, t_end=5.0)  # noqa: E731
    exact = np.array([math.cos(5.0), -math.sin(5.0)])
    errs = []
    for r in (1e-4, 5e-5, 2.5e-5, 1.25e-5, 6.25e-6):
        traj = integrate(lambda t, y: (y[1], -y[0]), (1.0, 0.0), cfg(r))
        errs.append(np.abs(traj.final_state - exact).max())
    assert all(b <= a for a, b in zip(errs, errs[1:])), errs


def test_determinism():
    s = builtin_scenarios()["fig_b"]
    a, ma = run_scenario(s)
    b, mb = run_scenario(s)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)
    assert ma.as_dict() == mb.as_dict()


def test_pass_through_discontinuity_completes():
    def rhs(t, y):
        return (2.0 if y[0] > 0.5 else 1.0,)

    traj = integrate(rhs, (0.0,), IntegratorConfig(t_end=1.0))
    assert traj.status is Status.COMPLETED
    steps = np.diff(traj.times)
    i = int(np.searchsorted(traj.states[:, 0], 0.5))
    # exact answer 1.5; the slope error is confined to the step straddling y = 0.5
    assert abs(traj.final_state[0] - 1.5) <= steps[i - 1] * (2.0 - 1.0)


def test_sign_discontinuity_shrinks_step_and_completes():
    traj = integrate(lambda t, y: (-math.copysign(1.0, y[0]) if y[0] else 0.0,), (1.0,), IntegratorConfig(t_end=2.0))
    assert traj.status is Status.COMPLETED
    assert abs(traj.final_state[0]) < 1e-3
    steps = np.diff(traj.times)
    early = steps[traj.times[1:] < 0.9]
    late = steps[traj.times[:-1] > 1.0]
    assert late.max() < 0.2 * early.max()


def test_divergence_guard():
    traj = integrate(lambda t, y: (y[0],), (1.0,), IntegratorConfig(diverge_norm=100.0))
    assert traj.status is Status.DIVERGED
    assert traj.status_time == pytest.approx(math.log(100), abs=0.2)
    assert abs(traj.final_state[0]) > 100


def test_step_underflow():
    cfg = IntegratorConfig(h_min=1e-6, h_init=1e-3, diverge_norm=1e300, t_end=2.0)
    traj = integrate(lambda t, y: (y[0] ** 2,), (1.0,), cfg)
    assert traj.status is Status.STEP_UNDERFLOW
    assert traj.status_time < 1.0


def test_singular_gain_propagates():
    def rhs(t, y):
        if y[0] > 0.5:
            raise SingularGain("test", 0.0)
        return (1.0,)

    traj = integrate(rhs, (0.0,), IntegratorConfig(t_end=1.0))
    assert traj.status is Status.SINGULAR_GAIN
    assert traj.status_time <= 0.5
    assert "test" in traj.message


def test_zero_horizon():
    traj = integrate(lambda t, y: (1.0,), (3.0,), IntegratorConfig(t_end=0.0))
    assert len(traj) == 1 and traj.n_accepted == 0


def test_trajectory_invariants():
    traj, _ = run_scenario(builtin_scenarios()["fig_c"])
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj.times) == len(traj.states) == len(traj.controls)
    assert traj.times[-1] >= 10.0 - 1e-12


def test_fig_d_guard():
    traj, _ = run_scenario(builtin_scenarios()["fig_d"])
    assert traj.status in (Status.DIVERGED, Status.SINGULAR_GAIN)
    assert traj.status_time < 10.0


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(h_min=1.0, h_init=0.1)
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0)


def test_fixed_step_harmonic():
    y = fixed_step(lambda t, y: (y[1], -y[0]), (1.0, 0.0), 0.01, 100)
    assert y == pytest.approx([math.cos(1), -math.sin(1)], abs=1e-11)
