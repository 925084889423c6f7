import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tensorica.datagen import MixingModel, ObservationStream, SourceDistribution
from tensorica.errors import DegenerateVectorError, InvalidDimensionError, ScheduleInfeasibleError
from tensorica.solver import (
    SolverState,
    StepsizeSchedule,
    init_uniform,
    project_sphere,
    run,
    sgd_step,
    stepsize_at,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.integers(2, 12).flatmap(lambda d: arrays(float, d, elements=finite))


class TestProjection:
    def test_345(self):
        np.testing.assert_allclose(project_sphere([3.0, 4.0]), [0.6, 0.8], atol=1e-15)

    def test_unit_vector_fixed(self):
        e1 = np.array([1.0, 0.0, 0.0])
        np.testing.assert_array_equal(project_sphere(e1), e1)

    @pytest.mark.parametrize("w", [[0.0, 0.0], [1e-320, 0.0], [np.nan, 1.0]])
    def test_degenerate(self, w):
        with pytest.raises(DegenerateVectorError):
            project_sphere(w)

    @given(vectors)
    def test_norm_and_idempotence(self, w):
        if np.linalg.norm(w) < 1e-100:
            return
        p = project_sphere(w)
        assert abs(np.linalg.norm(p) - 1) < 1e-12
        assert np.max(np.abs(project_sphere(p) - p)) < 1e-12


class TestStep:
    def test_hand_example(self):
        # w = e1 + 0.1 * 1^3 * [1, 1] = [1.1, 0.1]; ||w|| = sqrt(1.22)
        s = sgd_step(SolverState(np.array([1.0, 0.0]), kurtosis_sign=1), [1.0, 1.0], 0.1)
        np.testing.assert_allclose(s.u, [0.995893206, 0.090535746], atol=1e-9)
        assert s.t == 1

    def test_negative_sign(self):
        s = sgd_step(SolverState(np.array([1.0, 0.0]), kurtosis_sign=-1), [1.0, 1.0], 0.1)
        np.testing.assert_allclose(s.u, np.array([0.9, -0.1]) / math.sqrt(0.82), atol=1e-15)

    def test_orthogonal_observation_is_noop(self):
        u = project_sphere([1.0, 2.0, 2.0])
        x = np.array([2.0, -1.0, 0.0])
        s = sgd_step(SolverState(u), x, 5.0)
        np.testing.assert_allclose(s.u, u, atol=1e-15)

    def test_zero_step_freezes(self):
        u = project_sphere([0.3, -0.2, 0.9])
        # renormalizing a unit vector may move it by one ulp
        np.testing.assert_allclose(sgd_step(SolverState(u), [1.0, 2.0, 3.0], 0.0).u, u, atol=1e-15)

    def test_vanishing_vector_raises_with_iteration(self):
        # u + eta (u.x)^3 x = 0 for u = e1, x = e1, eta = -1 / sign  -> use sign -1, eta 1
        with pytest.raises(DegenerateVectorError) as err:
            sgd_step(SolverState(np.array([1.0, 0.0]), t=4, kurtosis_sign=-1), [1.0, 0.0], 1.0)
        assert err.value.iteration == 5

    @given(vectors, st.floats(1e-6, 1.0), st.sampled_from([-1, 1]), st.integers(0, 2**31))
    @settings(max_examples=60)
    def test_sphere_and_sign_invariance(self, x, eta, sign, seed):
        u = init_uniform(len(x), seed)
        a = sgd_step(SolverState(u, kurtosis_sign=sign), x, eta)
        b = sgd_step(SolverState(u, kurtosis_sign=sign), -x, eta)
        assert abs(np.linalg.norm(a.u) - 1) < 1e-12
        np.testing.assert_array_equal(a.u, b.u)


def _one_step_change(model, u, sign, eta, n, seed, i=1):
    """Mean and SE of ((a_i . u')^2 - (a_i . u)^2) over n independent steps."""
    xs = ObservationStream(model, seed).take(n)
    a = model.component(i)
    base = float(a @ u) ** 2
    out = np.empty(n)
    state = SolverState(u, kurtosis_sign=sign)
    for j, x in enumerate(xs):
        out[j] = float(a @ sgd_step(state, x, eta).u) ** 2 - base
    return out.mean(), out.std(ddof=1) / math.sqrt(n)


@pytest.mark.parametrize("name", ["gaussian_bernoulli", "mixture_gaussian"])
def test_gradient_sign_property(name):
    src = SourceDistribution.from_name(name)
    model = MixingModel.random(5, src, seed=21)
    rng = np.random.default_rng(4)
    # warm point: a_1 . u = 0.9, remainder spread over the other components.
    # eta is small so the O(eta^2) noise term does not mask the O(eta) drift
    rest = rng.standard_normal(4)
    rest *= math.sqrt(1 - 0.81) / np.linalg.norm(rest)
    u = model.A @ np.concatenate([[0.9], rest])
    right, se_r = _one_step_change(model, u, src.kurtosis_sign, 1e-4, 100_000, 5)
    wrong, se_w = _one_step_change(model, u, -src.kurtosis_sign, 1e-4, 100_000, 5)
    assert right - 3 * se_r > 0
    assert wrong + 3 * se_w < 0


def test_component_is_fixed_point_in_expectation(gb_model):
    # at u = a_1 every other rotated coordinate has zero expected drift
    u = gb_model.component(1).copy()
    xs = ObservationStream(gb_model, seed=6).take(100_000)
    drifts = np.array([gb_model.A.T @ sgd_step(SolverState(u, kurtosis_sign=1), x, 0.01).u
                       for x in xs])[:, 1:]
    mean = drifts.mean(axis=0)
    se = drifts.std(axis=0, ddof=1) / math.sqrt(len(drifts))
    assert np.all(np.abs(mean) <= 3 * se)


class TestSchedules:
    def test_practical_values(self):
        s = StepsizeSchedule("two_phase_practical", 10**6, 20, 6.0)
        assert stepsize_at(s, 1) == pytest.approx(8 * 20 / (3 * 10**6), rel=1e-15)
        assert stepsize_at(s, 1) == pytest.approx(5.3333e-5, rel=1e-4)
        assert stepsize_at(s, 10**6) == pytest.approx(3e-6, rel=1e-12)

    def test_practical_uses_abs_kurtosis(self):
        s = StepsizeSchedule("two_phase_practical", 1000, 4, 2.5)
        assert s.at(1) == pytest.approx(8 * 4 / (0.5 * 1000))
        assert s.kurtosis_sign == -1

    def test_two_phase_boundary(self):
        T = 10**6
        s = StepsizeSchedule("two_phase", T, 20, 6.0, B=1.5)
        assert s.at(T // 2) != s.at(T // 2 + 1)
        assert s.at(1) == s.at(T // 2)
        assert s.at(T // 2 + 1) == s.at(T)

    def test_log_formulas(self):
        k, T, d, B = 3.0, 10**6, 20, 1.5
        s = StepsizeSchedule("two_phase", T, d, 6.0, B=B)
        assert s.at(1) == pytest.approx(8 * d * math.log(k**2 * T / (8 * B**8 * d)) / (k * T))
        assert s.at(T) == pytest.approx(9 * math.log(k**2 * T / (9 * B**8)) / (k * T))
        w = StepsizeSchedule("constant_warm", T, d, 6.0, B=B)
        assert w.at(7) == pytest.approx(9 * math.log(2 * k**2 * T / (9 * B**8)) / (2 * k * T))
        u = StepsizeSchedule("constant_uniform", T, d, 6.0, B=B)
        assert u.at(7) == pytest.approx(4 * d * math.log(k**2 * T / (4 * B**8 * d)) / (k * T))

    def test_infeasible_names_condition(self):
        s = StepsizeSchedule("two_phase", 1000, 20, 6.0, B=3.0)
        with pytest.raises(ScheduleInfeasibleError, match="T > 8 B\\^8 d"):
            s.at(1)

    def test_t_out_of_range(self):
        s = StepsizeSchedule("fixed", 10, 3, 6.0, eta=0.1)
        with pytest.raises(ValueError):
            stepsize_at(s, 0)
        with pytest.raises(ValueError):
            stepsize_at(s, 11)

    def test_log_kind_needs_B(self):
        with pytest.raises(ScheduleInfeasibleError):
            StepsizeSchedule("constant_warm", 100, 3, 6.0)

    @given(st.integers(2, 10**7), st.integers(2, 100), st.sampled_from([2.5, 6.0, 1.2, 9.0]))
    def test_practical_constant_within_phases(self, T, d, mu4):
        s = StepsizeSchedule("two_phase_practical", T, d, mu4)
        h = T // 2
        assert s.at(1) == s.at(max(h, 1)) > 0
        assert s.at(h + 1) == s.at(T) > 0


class TestInit:
    def test_unit_norm(self):
        for seed in range(50):
            assert abs(np.linalg.norm(init_uniform(7, seed)) - 1) < 1e-12

    def test_symmetric_d2(self):
        rng = np.random.default_rng(1)
        u1 = np.array([init_uniform(2, rng)[0] for _ in range(100_000)])
        assert abs(u1.mean()) <= 3 * u1.std() / math.sqrt(len(u1))

    def test_second_moment_d20(self):
        rng = np.random.default_rng(2)
        sq = np.array([init_uniform(20, rng)[0] ** 2 for _ in range(10_000)])
        assert abs(sq.mean() - 1 / 20) <= 3 * sq.std() / math.sqrt(len(sq))

    def test_bad_dimension(self):
        with pytest.raises(InvalidDimensionError):
            init_uniform(1, 0)


class TestRun:
    def test_kernel_matches_reference_steps(self, gb_model):
        T = 3000
        sched = StepsizeSchedule("two_phase_practical", T, gb_model.d, gb_model.source.mu4)
        u0 = init_uniform(gb_model.d, 12)
        trace = run(gb_model, T, sched, init=u0, seed=5, full_resolution=True, keep_snapshots=True)
        # replay with the pure numpy step on the same observations
        _, stream_seq, _ = np.random.SeedSequence(5).spawn(3)
        xs = ObservationStream(gb_model, stream_seq).take(T)
        state = SolverState(u0, kurtosis_sign=1)
        for t, x in enumerate(xs, 1):
            state = sgd_step(state, x, sched.at(t))
            np.testing.assert_allclose(trace.u_snapshots[t - 1], state.u, atol=1e-12)
        np.testing.assert_allclose(trace.final_u, state.u, atol=1e-12)

    def test_zero_stepsize_freezes(self, gb_model):
        u0 = init_uniform(gb_model.d, 3)
        tr = run(gb_model, 1, StepsizeSchedule("fixed", 1, gb_model.d, 6.0, eta=0.0), init=u0)
        np.testing.assert_allclose(tr.final_u, u0, atol=1e-15)

    def test_deterministic(self, gb_model):
        a = run(gb_model, 20_000, "two_phase_practical", seed=9, record_stride=13)
        b = run(gb_model, 20_000, "two_phase_practical", seed=9, record_stride=13)
        assert a.equals(b)
        c = run(gb_model, 20_000, "two_phase_practical", seed=10, record_stride=13)
        assert not a.equals(c)

    def test_records_and_window(self, gb_model):
        T = 1000
        tr = run(gb_model, T, "two_phase_practical", seed=1, full_resolution=True)
        assert len(tr) == T
        np.testing.assert_array_equal(tr.t, np.arange(1, T + 1))
        assert np.all(tr.phase[: T // 2] == 1) and np.all(tr.phase[T // 2:] == 2)
        assert tr.window_mean_error == pytest.approx(tr.tan_angle_min[-600:].mean(), rel=1e-12)

    def test_default_stride_includes_last(self, gb_model):
        tr = run(gb_model, 4001, "two_phase_practical", seed=1)
        assert tr.t[0] == 2 and tr.t[-1] == 4001
        assert np.all(np.diff(tr.t) > 0)

    def test_degenerate_reports_iteration(self):
        model = MixingModel(np.eye(2), SourceDistribution.custom(
            lambda rng, size: np.broadcast_to([1.0, 0.0], size).copy(), 1.0, 1.0))
        sched = StepsizeSchedule("fixed", 5, 2, 1.0, eta=1.0)
        with pytest.raises(DegenerateVectorError) as err:
            run(model, 5, sched, init=[1.0, 0.0])
        assert err.value.iteration == 1

    def test_estimated_kurtosis_sign(self):
        model = MixingModel.random(6, SourceDistribution.mixture_gaussian(), seed=2)
        tr = run(model, 100, "two_phase_practical", seed=3, kurtosis_sign="estimate")
        assert tr.extra["kurtosis_sign"] == -1

    def test_mismatched_schedule(self, gb_model):
        with pytest.raises(ValueError):
            run(gb_model, 100, StepsizeSchedule("two_phase_practical", 50, gb_model.d, 6.0))

    def test_converges_small_problem(self):
        model = MixingModel.random(5, SourceDistribution.gaussian_bernoulli(), seed=30)
        tr = run(model, 200_000, "two_phase_practical", seed=31)
        assert tr.final_error < 0.05
        assert tr.first_warm_t is not None and tr.first_warm_t <= 100_000
