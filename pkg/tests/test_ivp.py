"""Adaptive Runge-Kutta integrator: accuracy, dense output, guards, errors."""

import math

import numpy as np
import pytest

from periorbit import IntegrationBlowUp
from periorbit.ivp import solve_ivp_dp


def _harmonic(t, y):
    return np.array([y[1], -y[0]])


def test_harmonic_oscillator_endpoint():
    res = solve_ivp_dp(_harmonic, 0.0, [1.0, 0.0], 2.0 * math.pi,
                       rtol=1e-12, atol=1e-14)
    assert abs(res.t - 2.0 * math.pi) < 1e-14
    assert abs(res.y[0] - 1.0) < 1e-10
    assert abs(res.y[1]) < 1e-10
    assert res.nsteps > 10
    assert res.nfev >= 6 * res.nsteps


def test_dense_output_accuracy():
    res = solve_ivp_dp(_harmonic, 0.0, [1.0, 0.0], 2.0 * math.pi,
                       rtol=1e-12, atol=1e-14, dense=True)
    ts = np.linspace(0.0, 2.0 * math.pi, 1001)
    vals = res.dense(ts)
    err = np.abs(vals - np.stack([np.cos(ts), -np.sin(ts)], axis=1))
    assert np.max(err) < 1e-9
    # scalar evaluation agrees with the vector path
    mid = res.dense(1.2345)
    assert np.allclose(mid, res.dense(np.array([1.2345]))[0])


def test_dense_output_rejects_out_of_span():
    res = solve_ivp_dp(_harmonic, 0.0, [1.0, 0.0], 1.0, dense=True)
    with pytest.raises(ValueError):
        res.dense(1.5)
    with pytest.raises(ValueError):
        res.dense(-0.5)


def test_against_scipy_reference():
    """Cross-check a driven damped pendulum against an independent solver."""
    from scipy.integrate import solve_ivp as scipy_solve

    def f(t, y):
        return np.array([y[1], -math.sin(y[0]) - 0.1 * y[1] + 0.3 * math.cos(2.0 * t)])

    mine = solve_ivp_dp(f, 0.0, [1.0, 0.0], 10.0, rtol=1e-11, atol=1e-12)
    ref = scipy_solve(f, (0.0, 10.0), [1.0, 0.0], method="DOP853",
                      rtol=1e-12, atol=1e-13)
    assert ref.success
    assert np.max(np.abs(mine.y - ref.y[:, -1])) < 1e-8


def test_energy_drift_on_singular_oscillator():
    """One period of the conservative x'' = -q x + b x^(-3/2) + c x^(-1.3) + e
    preserves energy to 1e-8 relative."""
    q, b, c, e = 1.0 / 40.0, 3.0, 1.0, 11.0
    rho1, rho2 = 1.5, 1.3

    def f(t, y):
        x, v = y
        return np.array([v, -q * x + b * x ** (-rho1) + c * x ** (-rho2) + e])

    def energy(y):
        x, v = y
        potential = (0.5 * q * x * x
                     + b * x ** (1.0 - rho1) / (rho1 - 1.0)
                     + c * x ** (1.0 - rho2) / (rho2 - 1.0)
                     - e * x)
        return 0.5 * v * v + potential

    y0 = np.array([400.0, 0.0])
    res = solve_ivp_dp(f, 0.0, y0, 2.0 * math.pi / 3.0, rtol=1e-12, atol=1e-14)
    e0, e1 = energy(y0), energy(res.y)
    assert abs(e1 - e0) <= 1e-8 * abs(e0)


def test_guard_stops_integration():
    def f(t, y):
        return np.array([-1.0])

    with pytest.raises(IntegrationBlowUp) as exc:
        solve_ivp_dp(f, 0.0, [1.0], 2.0, guard=lambda y: y[0] < 0.5)
    err = exc.value
    # the last accepted state sits just above the guard line near t = 0.5
    assert err.y[0] >= 0.5
    assert 0.0 < err.t <= 0.5 + 1e-9


def test_guard_violated_at_start():
    def f(t, y):
        return np.array([-1.0])

    with pytest.raises(IntegrationBlowUp) as exc:
        solve_ivp_dp(f, 0.0, [0.1], 1.0, guard=lambda y: y[0] < 0.5)
    assert exc.value.t == 0.0


def test_zero_span_returns_initial_state():
    res = solve_ivp_dp(_harmonic, 1.0, [2.0, 3.0], 1.0, dense=True)
    assert res.t == 1.0
    assert np.array_equal(res.y, [2.0, 3.0])
    assert res.nsteps == 0
    assert np.allclose(res.dense(1.0), [2.0, 3.0])


def test_backward_span_rejected():
    with pytest.raises(ValueError):
        solve_ivp_dp(_harmonic, 1.0, [1.0, 0.0], 0.0)


def test_max_step_honored():
    res = solve_ivp_dp(_harmonic, 0.0, [1.0, 0.0], 1.0, max_step=0.01)
    assert res.nsteps >= 100


def test_counters_are_consistent():
    res = solve_ivp_dp(_harmonic, 0.0, [1.0, 0.0], 6.0)
    assert res.rejected >= 0
    assert res.guard_rejections == 0
    assert res.nfev >= 6 * (res.nsteps + res.rejected)
