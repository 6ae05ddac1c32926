import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from conftest import BANDS, LINEAR, LOCKING
from iffl.errors import DomainError, StepBudgetError, StiffnessError, WrongExperimentError
from iffl.inputs import Constant, Exponential, Linear, Oscillating, Step
from iffl.model import FullState, ModelParams, ReducedState, Variant
from iffl.ode import (
    IntegratorConfig,
    Outcome,
    Terminal,
    classify_u_outcome,
    integrate,
    preadapted_state,
    simulate_step_response,
    w_slope,
    y_subsystem_equilibria,
)


def scipy_full(params, x0, y0, w0, t_eval, signal=None):
    """Reference solution in plain (x, y, w) coordinates."""
    def f(t, s):
        x, y, w = s
        u = math.exp(w)
        hill = params.V * y**params.n / (params.K**params.n + y**params.n) if params.V else 0.0
        dw = params.lam - params.kappa * y if signal is None else signal.log_derivative(t)
        return [-params.a * x + params.b * u, params.c * u / x - params.delta * y + hill, dw]

    sol = solve_ivp(f, (0, t_eval[-1]), [x0, y0, w0], method="DOP853", rtol=1e-12, atol=1e-14, t_eval=t_eval)
    return sol.y.T


class TestAgainstReferences:
    def test_open_loop_x_matches_closed_form(self):
        # constant u: x(t) = bu/a + (x0 - bu/a) e^{-at}
        times = tuple(np.linspace(0, 10, 41))
        tr = integrate(LINEAR, FullState(3.0, 1.0, 0.0), Constant(2.0), IntegratorConfig(t_end=10, output_times=times, stop_on_steady=False))
        exact = 2.0 + (3.0 - 2.0) * np.exp(-np.array(times))
        assert np.allclose(tr.x, exact, rtol=1e-7, atol=0)

    def test_closed_loop_matches_scipy(self):
        times = np.linspace(0, 20, 81)
        tr = integrate(BANDS.with_(lam=5), FullState(1, 1, 0), None,
                       IntegratorConfig(t_end=20, output_times=tuple(times), rel_tol=1e-10, abs_tol=1e-12, stop_on_steady=False))
        ref = scipy_full(BANDS.with_(lam=5), 1, 1, 0, times)
        assert np.allclose(tr.x, ref[:, 0], rtol=1e-7)
        assert np.allclose(tr.y, ref[:, 1], rtol=1e-7, atol=1e-9)
        assert np.allclose(tr.w, ref[:, 2], rtol=1e-7, atol=1e-8)

    def test_open_loop_oscillating_matches_scipy(self):
        times = np.linspace(0, 15, 61)
        sig = Oscillating(1.0, 0.5)
        tr = integrate(LINEAR, FullState(1, 1, 0), sig, IntegratorConfig(t_end=15, output_times=tuple(times), rel_tol=1e-10, abs_tol=1e-12))
        ref = scipy_full(LINEAR, 1, 1, sig.log_value(0), times, sig)
        assert np.allclose(tr.y, ref[:, 1], rtol=1e-7)

    def test_dense_output_agrees_with_step_endpoints(self):
        cfg = IntegratorConfig(t_end=10, stop_on_steady=False)
        steps = integrate(LINEAR, FullState(1, 1, 0), None, cfg)
        dense = integrate(LINEAR, FullState(1, 1, 0), None, cfg.with_(output_times=tuple(steps.times[1:-1:3])))
        # dense output of the same run reproduces the accepted step values to interpolation accuracy
        assert np.allclose(dense.data, steps.data[1:-1:3], rtol=1e-6, atol=1e-8)


class TestClosedLoop:
    def test_reduced_converges_to_equilibrium(self):
        tr = integrate(LINEAR, ReducedState(2, 2), None, IntegratorConfig(t_end=50))
        assert tr.final == pytest.approx((2 / 3, 2 / 3), abs=1e-6)

    def test_negative_net_growth_drives_to_origin(self):
        p = ModelParams(a=1, lam=-2)
        tr = integrate(p, FullState(1, 1, 0), None, IntegratorConfig(t_end=60))
        assert tr.p[-1] < 1e-6 and tr.y[-1] < 1e-6
        assert w_slope(tr) == pytest.approx(-2.0, abs=1e-3)

    def test_linear_slope(self):
        tr = integrate(LINEAR, FullState(1, 1, 0), None, IntegratorConfig(t_end=100))
        assert w_slope(tr) == pytest.approx(-1 / 3, abs=1e-6)
        assert classify_u_outcome(tr) is Outcome.ELIMINATION

    @pytest.mark.parametrize("lam, outcome", [(25, Outcome.ELIMINATION), (5, Outcome.PROLIFERATION)])
    def test_autocatalytic_outcomes(self, lam, outcome):
        tr = integrate(BANDS.with_(lam=lam), FullState(1, 1, 0), None, IntegratorConfig(t_end=200))
        assert classify_u_outcome(tr) is outcome

    def test_no_false_steady_exit_near_origin_saddle(self):
        # p collapses towards 0 before recovering; the run must not stop while p grows
        tr = integrate(BANDS.with_(lam=1), FullState(1, 1, 0), None, IntegratorConfig(t_end=200))
        assert classify_u_outcome(tr) is Outcome.ELIMINATION
        assert w_slope(tr) == pytest.approx(-0.2506, abs=1e-3)

    def test_slope_needs_closed_loop_full_run(self):
        red = integrate(LINEAR, ReducedState(1, 1), None, IntegratorConfig(t_end=5))
        with pytest.raises(WrongExperimentError):
            w_slope(red)
        open_loop = integrate(LINEAR, FullState(1, 1, 0), Constant(1.0), IntegratorConfig(t_end=5))
        with pytest.raises(WrongExperimentError):
            classify_u_outcome(open_loop)

    def test_full_and_reduced_agree(self):
        times = tuple(np.linspace(0, 30, 61))
        cfg = IntegratorConfig(t_end=30, output_times=times, stop_on_steady=False)
        params = BANDS.with_(lam=15)
        full = integrate(params, FullState(2.0, 0.5, math.log(3.0)), None, cfg)
        red = integrate(params, ReducedState(1.5, 0.5), None, cfg)
        # the full run carries p as exp(w - ln x), so its error scale is that of the log coordinates
        log_scale = cfg.rel_tol * (np.abs(full.w) + np.abs(full.ln_x)) + cfg.abs_tol
        assert np.all(np.abs(np.log(full.p) - np.log(red.p)) <= 10 * log_scale)
        assert np.all(np.abs(full.y - red.y) <= 10 * (cfg.rel_tol * np.abs(red.y) + cfg.abs_tol))


class TestOpenLoop:
    @pytest.mark.parametrize("alpha", [5.0, 9.0])
    def test_constant_input_adapts_to_same_level(self, alpha):
        p = ModelParams(delta=2)
        tr = integrate(p, FullState(1, 1, 0), Constant(alpha), IntegratorConfig(t_end=100))
        assert tr.y[-1] == pytest.approx(0.5, abs=1e-6)

    def test_step_breakpoint_is_hit_exactly(self):
        tr = integrate(LINEAR, FullState(1, 1, 0), Step(1.0, 2.0, 5.0), IntegratorConfig(t_end=10, stop_on_steady=False))
        assert 5.0 in tr.times
        k = np.flatnonzero(tr.times == 5.0)
        # the right limit is recorded at the jump
        assert tr.u[k[-1]] == pytest.approx(2.0)

    def test_rate_bounds_sandwich_output(self):
        tr = integrate(ModelParams(), FullState(1, 1, 0), Oscillating(1.0, 0.5), IntegratorConfig(t_end=300))
        tail = tr.p[tr.times >= 150]
        assert tail.min() >= 0.5 - 1e-2 and tail.max() <= 1.5 + 1e-2

    def test_degradation_matches_production_limit(self):
        cfg = IntegratorConfig(t_end=20, stop_on_steady=False)
        sig = Exponential(1.0, 0.5)
        prod = integrate(ModelParams(), FullState(1, 1, 0), sig, cfg)
        deg = integrate(ModelParams(variant=Variant.DEGRADATION), FullState(1, 1, 0), sig, cfg)
        assert deg.y[-1] == pytest.approx(prod.y[-1], abs=1e-3)
        assert np.all(np.isnan(deg.q))


class TestFailures:
    def test_singular_input_raises_stiffness_error_with_time(self):
        with pytest.raises(StiffnessError) as info:
            integrate(ModelParams(), FullState(1, 1, 0), Linear(1.0, -1.0), IntegratorConfig(t_end=2))
        assert info.value.t == pytest.approx(1.0, abs=1e-6)
        assert "t=0.99" in str(info.value)

    def test_step_budget(self):
        with pytest.raises(StepBudgetError):
            integrate(ModelParams(variant=Variant.DEGRADATION), FullState(1, 1, 0), Exponential(1.0, 5.0),
                      IntegratorConfig(t_end=20, max_steps=2000))

    @pytest.mark.parametrize("state", [FullState(0, 1, 0), FullState(1, -1, 0), ReducedState(0, 1)])
    def test_non_positive_initial_state(self, state):
        with pytest.raises(DomainError):
            integrate(LINEAR, state)


rate = st.floats(min_value=0.1, max_value=5)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(rate, rate, rate, rate, rate, st.floats(min_value=-3, max_value=10), st.floats(min_value=0, max_value=3),
       st.floats(min_value=0.01, max_value=10), st.floats(min_value=0.01, max_value=10), st.floats(min_value=-3, max_value=3))
def test_positivity(a, b, c, delta, kappa, lam, V, x0, y0, w0):
    params = ModelParams(a=a, b=b, c=c, delta=delta, kappa=kappa, lam=lam, V=V)
    tr = integrate(params, FullState(x0, y0, w0), None, IntegratorConfig(t_end=30))
    assert np.all(tr.x > 0) and np.all(tr.y > 0) and np.all(np.isfinite(tr.data))


@settings(max_examples=20, deadline=None)
@given(rate, rate, rate, rate, rate, st.floats(min_value=-0.9, max_value=5), st.floats(min_value=0.05, max_value=1),
       st.floats(min_value=0.05, max_value=1))
def test_forward_invariant_rectangle(a, b, c, delta, kappa, lam, fp, fy):
    params = ModelParams(a=a, b=b, c=c, delta=delta, kappa=kappa, lam=lam * a)
    P = (params.a + params.lam) / params.b
    Y = c * P / delta
    tr = integrate(params, ReducedState(fp * P, fy * Y), None, IntegratorConfig(t_end=30))
    assert np.all(tr.p <= P * (1 + 1e-9)) and np.all(tr.y <= Y * (1 + 1e-9))


@pytest.mark.parametrize("params", [LINEAR, BANDS.with_(lam=5), BANDS.with_(lam=15)])
def test_tightening_tolerance_changes_result_less_than_loose_tolerance(params):
    loose = IntegratorConfig(t_end=20, rel_tol=1e-6, abs_tol=1e-8, stop_on_steady=False)
    tight = loose.with_(rel_tol=1e-7, abs_tol=1e-9)
    a = integrate(params, FullState(1, 1, 0), None, loose).data[-1]
    b = integrate(params, FullState(1, 1, 0), None, tight).data[-1]
    assert np.all(np.abs(a - b) <= loose.rel_tol * np.abs(b) * 20 + loose.abs_tol)


class TestStepResponse:
    def test_locking_subsystem_roots(self):
        roots = y_subsystem_equilibria(LOCKING, 1.0)
        assert [r for r, _ in roots] == pytest.approx([2 / 3, 1.0, 2.0], rel=1e-10)
        assert [s for _, s in roots] == [True, False, True]

    def test_preadapted_state(self):
        s = preadapted_state(LOCKING, 1.0)
        assert (s.x, s.y, s.w) == pytest.approx((1.0, 2 / 3, 0.0), rel=1e-10)

    def test_locking(self):
        _, summary = simulate_step_response(LOCKING, 1.0, 2.0)
        assert summary.q0 == pytest.approx(2.0, abs=1e-6)
        assert summary.y_final == pytest.approx(2.0, abs=1e-2)

    def test_complete_adaptation_without_feedback(self):
        _, summary = simulate_step_response(LOCKING.with_(V=0), 1.0, 2.0)
        assert summary.y_final == pytest.approx(1 / 3, abs=1e-3)

    def test_fold_change_sets_initial_response(self):
        a = simulate_step_response(LOCKING.with_(V=0), 1.0, 3.0)[1]
        b = simulate_step_response(LOCKING.with_(V=0), 2.0, 6.0)[1]
        assert a.q0 == pytest.approx(b.q0, rel=1e-12)

    def test_no_step_stays_put(self):
        tr, summary = simulate_step_response(LOCKING, 1.0, 1.0)
        assert np.allclose(tr.y, 2 / 3, atol=1e-9)
