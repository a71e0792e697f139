import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sslalm.core import NoiseModel, ProblemInstance, as_stochastic
from sslalm.geometry import Ball, Box, WholeSpace, project
from sslalm.lagrangian import (
    LagrangianState,
    SolverConfig,
    StepSchedule,
    dual_step_ialm,
    dual_step_regu,
    init_state,
    iterate,
    regu,
    run,
    track_correction,
    track_exact,
)
from sslalm.methods import EmbeddedMethodState, MethodConfig
from sslalm.problems import make_affine_l1, make_stochastic_affine


def scalar_problem(objective=None, subgrad=None, fset=None):
    """1-d instance with constraint c(x) = x."""
    objective = objective or (lambda x: 0.0)
    subgrad = subgrad or (lambda x: np.zeros(1))
    return ProblemInstance(
        dim_primal=1,
        dim_constraint=1,
        objective=objective,
        objective_subgradient=subgrad,
        constraint=lambda x: x.copy(),
        constraint_jacobian=lambda x: np.array([[1.0]]),
        feasible_set=fset or WholeSpace(1),
    )


class TestStepSchedule:
    def test_constant(self):
        s = StepSchedule("constant", 0.3)
        assert s(0) == s(100) == 0.3

    def test_inv_sqrt_epoch(self):
        s = StepSchedule("inv_sqrt_epoch", 0.1, epoch_len=5)
        assert s(0) == pytest.approx(0.1)
        assert s(4) == pytest.approx(0.1)
        assert s(5) == pytest.approx(0.1 / np.sqrt(2))
        assert s(14) == pytest.approx(0.1 / np.sqrt(3))

    def test_power(self):
        s = StepSchedule("power", 1.0, exponent=0.75)
        assert s(0) == pytest.approx(1.0)
        assert s(15) == pytest.approx(16.0**-0.75)

    def test_power_exponent_range(self):
        with pytest.raises(ValueError):
            StepSchedule("power", 1.0, exponent=0.5)
        with pytest.raises(ValueError):
            StepSchedule("power", 1.0, exponent=1.5)

    def test_max_value(self):
        assert StepSchedule("inv_sqrt_epoch", 0.7).max_value == 0.7


class TestRegu:
    def test_zero_maps_to_zero(self):
        assert np.array_equal(regu(np.zeros(2)), np.zeros(2))

    def test_normalization(self):
        assert regu(np.array([3.0, 4.0])) == pytest.approx([0.6, 0.8])

    def test_below_zero_tol_maps_to_zero(self):
        assert np.array_equal(regu(np.array([1e-18, 0.0])), np.zeros(2))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=4))
    def test_output_norm_is_zero_or_one(self, vals):
        nrm = np.linalg.norm(regu(np.array(vals)))
        assert nrm == 0.0 or nrm == pytest.approx(1.0, abs=1e-12)


class TestDualStepRegu:
    def test_hand_value(self):
        lam = dual_step_regu(np.zeros(2), np.array([3.0, 4.0]), 0.5, 1.0)
        assert lam == pytest.approx([0.3, 0.4])

    def test_pure_decay_when_w_zero(self):
        lam = dual_step_regu(np.array([1.0, 0.0]), np.zeros(2), 0.5, 1.0)
        assert lam == pytest.approx([0.5, 0.0])

    def test_contraction_toward_ball(self):
        lam = dual_step_regu(np.array([2.0, 0.0]), np.array([1.0, 1.0]), 0.5, 1.0)
        assert np.linalg.norm(lam) <= 1.5 + 1e-12

    def test_rejects_theta_at_beta(self):
        with pytest.raises(ValueError):
            dual_step_regu(np.zeros(1), np.zeros(1), 1.0, 1.0)

    @settings(max_examples=300, deadline=None)
    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=2),
        st.lists(st.floats(-10, 10), min_size=2, max_size=2),
        st.floats(0.0, 0.99),
        st.floats(0.2, 5.0),
    )
    def test_contraction_inequality(self, lam, w, frac, beta):
        theta = frac * beta
        lam = np.array(lam)
        nxt = dual_step_regu(lam, np.array(w), theta, beta)
        lhs = np.linalg.norm(nxt) - beta
        rhs = (1.0 - theta / beta) * (np.linalg.norm(lam) - beta)
        assert lhs <= rhs + 1e-12


class TestDualStepIalm:
    def test_hand_value(self):
        lam = dual_step_ialm(np.zeros(1), np.array([0.5]), 1.0, 10.0, 2.0, 0)
        assert lam == pytest.approx([1.0])  # min(1/0.5, 10) = 2

    def test_zero_constraint_is_noop(self):
        lam0 = np.array([0.7])
        lam = dual_step_ialm(lam0, np.zeros(1), 1.0, 10.0, 2.0, 3)
        assert np.array_equal(lam, lam0)

    def test_min_saturates_at_large_k(self):
        c = np.array([0.5])
        for k in [10, 100, 10000]:
            lam = dual_step_ialm(np.zeros(1), c, 1.0, 10.0, 2.0, k)
            assert lam == pytest.approx([1.0])  # theta~/||c|| = 2 wins


class TestTrackers:
    def test_exact_matches_constraint_bitwise(self):
        prob = scalar_problem()
        x = np.array([0.37])
        assert np.array_equal(track_exact(prob, x), prob.constraint(x))

    def test_correction_hand_value(self):
        w = track_correction(np.array([1.0]), np.array([0.8]), np.array([0.9]), 1.0, 0.1)
        assert w == pytest.approx([1.08])

    def test_correction_fixed_point(self):
        c = np.array([0.4])
        w = track_correction(c, c, c, 1.0, 0.3)
        assert w == pytest.approx(c)

    def test_correction_rejects_large_step(self):
        with pytest.raises(ValueError):
            track_correction(np.zeros(1), np.zeros(1), np.zeros(1), 2.0, 0.6)

    def test_long_run_mean_tracks_constant(self):
        # stationary point, zero-mean noise, 1e5 steps at eta = 0.01
        rng = np.random.default_rng(0)
        c = np.array([0.7])
        w = np.array([2.0])
        total = np.zeros(1)
        steps = 100000
        for _ in range(steps):
            noise = rng.uniform(-0.5, 0.5, 1)
            w = track_correction(w, c + noise, c + noise, 1.0, 0.01)
            total += w
        assert abs(total[0] / steps - c[0]) <= 0.01


ETA_01 = StepSchedule("constant", 0.1)


class TestIterate:
    def test_hand_computed_chain(self):
        prob = scalar_problem()
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=0.0,
            beta=1.0,
            theta=StepSchedule("constant", 0.5),
            eta=ETA_01,
            max_iters=1,
        )
        state = LagrangianState(
            method_state=EmbeddedMethodState(x=np.array([1.0]), y=np.zeros(0)),
            lam=np.array([0.5]),
            w=np.array([1.0]),
        )
        nxt, rec = iterate(prob, state, cfg, np.random.default_rng(0))
        assert nxt.x == pytest.approx([0.95])
        assert nxt.w == pytest.approx([0.95])
        assert nxt.lam == pytest.approx([0.75])
        assert rec.k == 1

    def test_feasible_stationary_point_is_fixed(self):
        prob = scalar_problem(
            objective=lambda x: float(np.abs(x[0])), subgrad=lambda x: np.sign(x)
        )
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"), beta=1.0, theta=StepSchedule("constant", 0.5),
            eta=ETA_01, max_iters=1,
        )
        state = init_state(prob, cfg, x0=np.zeros(1))
        nxt, _ = iterate(prob, state, cfg, np.random.default_rng(0))
        assert np.array_equal(nxt.x, state.x)
        assert np.array_equal(nxt.lam, state.lam)

    def test_dual_consumes_new_tracker_value(self):
        # the multiplier step must see w_{k+1}, whose sign differs from w_k here
        prob = scalar_problem()
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"), rho=0.0, beta=1.0,
            theta=StepSchedule("constant", 0.5), eta=ETA_01, max_iters=1,
        )
        state = LagrangianState(
            method_state=EmbeddedMethodState(x=np.array([0.1]), y=np.zeros(0)),
            lam=np.array([5.0]),
            w=np.array([0.1]),
        )
        nxt, _ = iterate(prob, state, cfg, np.random.default_rng(0))
        # x+ = 0.1 - 0.1*5 = -0.4, regu(w+) = -1: lam+ = 5 + 0.5*(-1 - 5) = 2
        # consuming the stale w would have given 5 + 0.5*(1 - 5) = 3
        assert nxt.x == pytest.approx([-0.4])
        assert nxt.lam == pytest.approx([2.0])

    def test_nonfinite_direction_raises(self):
        prob = scalar_problem(subgrad=lambda x: np.array([np.inf]))
        cfg = SolverConfig(method=MethodConfig(kind="prox_sgd"), eta=ETA_01, max_iters=1)
        state = init_state(prob, cfg, x0=np.zeros(1))
        with pytest.raises(ArithmeticError):
            iterate(prob, state, cfg, np.random.default_rng(0))


class TestRun:
    def test_zero_iterations_records_initial_metrics(self):
        rec = make_affine_l1(n=3, p=1, seed=0)
        cfg = SolverConfig(method=MethodConfig(kind="prox_sgd"), max_iters=0)
        res = run(rec.instance, cfg, x0=rec.start)
        assert len(res.records) == 1
        assert res.records[0].k == 0
        assert not res.aborted

    def test_same_seed_bitwise_identical(self):
        rec = make_affine_l1(n=4, p=2, seed=5)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgdm", alpha=0.2),
            rho=1.0, beta=2.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.5),
            noise=NoiseModel("uniform_box", 0.1, seed=0),
            max_iters=500, seed=42,
        )
        a = run(rec.instance, cfg, x0=rec.start, record_every=50)
        b = run(rec.instance, cfg, x0=rec.start, record_every=50)
        assert [r.to_json_line() for r in a.records] == [r.to_json_line() for r in b.records]
        assert np.array_equal(a.state.x, b.state.x)
        assert np.array_equal(a.state.lam, b.state.lam)

    def test_degenerates_to_prox_subgradient_descent(self):
        # rho = 0, lambda0 = 0, theta = 0, exact tracker: the driver must equal
        # the bare projected subgradient recursion bitwise
        rec = make_affine_l1(n=4, p=2, seed=7)
        prob = rec.instance
        noise = NoiseModel("uniform_box", 0.2, seed=0)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=0.0, beta=1.0,
            theta=StepSchedule("constant", 0.0),
            eta=StepSchedule("inv_sqrt_epoch", 0.3),
            noise=noise,
            max_iters=200, seed=9,
        )
        res = run(prob, cfg, x0=rec.start, record_every=200)
        rng = np.random.default_rng(9)
        fset = prob.feasible_set
        J = prob.constraint_jacobian(rec.start)
        x = project(fset, rec.start)
        for k in range(200):
            d = prob.objective_subgradient(x)
            ell = d + J @ np.zeros(2) + noise.draw(rng, 4)
            x = project(fset, x - cfg.eta(k) * ell)
        assert np.array_equal(res.state.x, x)
        assert np.array_equal(res.state.lam, np.zeros(2))

    def test_dual_bound_and_contraction_tracked(self):
        rec = make_affine_l1(n=5, p=2, seed=2)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=1.0, beta=2.0,
            theta=StepSchedule("constant", 1.0),
            eta=StepSchedule("inv_sqrt_epoch", 0.3),
            noise=NoiseModel("uniform_box", 0.1, seed=1),
            max_iters=2000, seed=3,
        )
        res = run(rec.instance, cfg, x0=rec.start, record_every=500)
        assert res.max_contraction_slack <= 1e-12
        assert res.max_dual_excess <= 1e-9
        for r in res.records:
            assert r.lambda_norm <= cfg.beta + 1e-9

    def test_exact_tracker_zero_error_bitwise(self):
        rec = make_affine_l1(n=3, p=1, seed=1)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"), rho=0.5, beta=1.0,
            eta=StepSchedule("inv_sqrt_epoch", 0.2), max_iters=300,
        )
        res = run(rec.instance, cfg, x0=rec.start, record_every=30)
        for r in res.records:
            assert r.tracker_err == 0.0

    def test_abort_on_nonfinite_keeps_partial_trajectory(self):
        prob = scalar_problem(subgrad=lambda x: np.array([np.inf]))
        cfg = SolverConfig(method=MethodConfig(kind="prox_sgd"), eta=ETA_01, max_iters=50)
        res = run(prob, cfg, x0=np.zeros(1), kkt_probe=None)
        assert res.aborted
        assert res.abort_reason == "non-finite primal direction"
        assert len(res.records) == 1

    def test_abort_on_overflowing_trajectory(self):
        # finite oracles whose runaway feedback overflows the run mid-way;
        # the partial trajectory survives, with only the last record blown up
        prob = scalar_problem(subgrad=lambda x: -1e4 * x)
        cfg = SolverConfig(method=MethodConfig(kind="prox_sgd"), eta=ETA_01, max_iters=500)
        with np.errstate(over="ignore"):
            res = run(prob, cfg, x0=np.ones(1), kkt_probe=None, record_every=5)
        assert res.aborted
        assert res.abort_reason == "non-finite metrics"
        assert len(res.records) >= 2
        assert all(np.isfinite(r.feas) for r in res.records[:-1])
        assert not np.isfinite(res.records[-1].feas)

    def test_displacement_check_passes_on_clean_run(self):
        rec = make_affine_l1(n=3, p=1, seed=3)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_adam", alpha=0.3),
            rho=0.5, beta=2.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.5),
            noise=NoiseModel("uniform_box", 0.1, seed=0),
            max_iters=300, seed=11,
        )
        res = run(rec.instance, cfg, x0=rec.start, check_displacement=True)
        assert not res.aborted


class TestExpectationConstrained:
    def test_degenerate_sampler_equals_deterministic_correction_run(self):
        rec = make_affine_l1(n=3, p=1, seed=4)
        prob = rec.instance
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=0.2, beta=1.0,
            theta=StepSchedule("constant", 0.4),
            eta=StepSchedule("inv_sqrt_epoch", 0.2),
            tracker="correction", tau_tilde=1.0,
            max_iters=400, seed=6,
        )
        res_stoch = run(as_stochastic(prob), cfg, x0=rec.start, record_every=40)
        res_det = run(prob, cfg, x0=rec.start, record_every=40)
        lines_a = [r.to_json_line() for r in res_stoch.records]
        lines_b = [r.to_json_line() for r in res_det.records]
        assert lines_a == lines_b
        assert np.array_equal(res_stoch.state.x, res_det.state.x)

    def test_correction_on_deterministic_stays_near_exact_run(self):
        # with w0 = c(x0) the correction recursion reproduces the exact tracker
        # up to roundoff, so the two runs deviate at most at that scale
        rec = make_affine_l1(n=3, p=1, seed=4)
        prob = rec.instance
        base = dict(
            method=MethodConfig(kind="prox_sgd"), rho=0.2, beta=1.0,
            theta=StepSchedule("constant", 0.4),
            eta=StepSchedule("inv_sqrt_epoch", 0.2), max_iters=400, seed=6,
        )
        res_corr = run(prob, SolverConfig(tracker="correction", **base), x0=rec.start)
        res_exact = run(prob, SolverConfig(tracker="exact", **base), x0=rec.start)
        assert np.max(np.abs(res_corr.state.x - res_exact.state.x)) <= 1e-9
        assert max(r.tracker_err for r in res_corr.records) <= 1e-12

    def test_tracker_error_shrinks_on_stochastic_instance(self):
        rec = make_stochastic_affine(n=4, p=2, noise_scale=0.4, seed=8)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=0.1, beta=1.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.1, epoch_len=50),
            tracker="correction", tau_tilde=1.0,
            max_iters=20000, seed=1,
        )
        res = run(rec.instance, cfg, x0=rec.start, record_every=1, kkt_probe=None)
        errs = [r.tracker_err for r in res.records]
        head = np.mean(errs[1 : len(errs) // 10])
        tail = np.mean(errs[-len(errs) // 10 :])
        assert tail < head
        assert tail <= 0.1

    def test_stochastic_run_deterministic_under_seed(self):
        rec = make_stochastic_affine(n=3, p=1, noise_scale=0.3, seed=2)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgdm", alpha=0.2),
            rho=0.1, beta=1.0,
            theta=StepSchedule("constant", 0.3),
            eta=StepSchedule("inv_sqrt_epoch", 0.1),
            tracker="correction",
            max_iters=300, seed=5,
        )
        a = run(rec.instance, cfg, x0=rec.start)
        b = run(rec.instance, cfg, x0=rec.start)
        assert [r.to_json_line() for r in a.records] == [r.to_json_line() for r in b.records]


class TestSolverConfigValidation:
    def test_theta_must_stay_below_beta(self):
        with pytest.raises(ValueError, match="theta_max < beta"):
            SolverConfig(beta=1.0, theta=StepSchedule("constant", 1.0))

    def test_sgdm_eta_capped_at_one(self):
        with pytest.raises(ValueError):
            SolverConfig(
                method=MethodConfig(kind="prox_sgdm"), eta=StepSchedule("constant", 1.5)
            )

    def test_adam_eta_tau2_cap(self):
        with pytest.raises(ValueError):
            SolverConfig(
                method=MethodConfig(kind="prox_adam", tau2=4.0, tau1=1.0),
                eta=StepSchedule("constant", 0.5),
            )

    def test_correction_step_cap(self):
        with pytest.raises(ValueError):
            SolverConfig(tracker="correction", tau_tilde=3.0, eta=StepSchedule("constant", 0.5))

    def test_ialm_parameters(self):
        with pytest.raises(ValueError):
            SolverConfig(dual="ialm", sigma=1.0)
        with pytest.raises(ValueError):
            SolverConfig(dual="regu", inner_steps=5)

    def test_ialm_inner_steps_gate_dual_updates(self):
        prob = scalar_problem()
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=0.0, beta=1.0, eta=ETA_01,
            dual="ialm", inner_steps=3, theta_tilde=1.0, beta_tilde=1.0, sigma=2.0,
            max_iters=2,
        )
        state = LagrangianState(
            method_state=EmbeddedMethodState(x=np.array([1.0]), y=np.zeros(0)),
            lam=np.array([0.0]),
            w=np.array([1.0]),
        )
        rng = np.random.default_rng(0)
        nxt, _ = iterate(prob, state, cfg, rng)
        assert np.array_equal(nxt.lam, state.lam)  # k=1 not a multiple of 3


class TestDriverVariants:
    def test_ball_constrained_adam_run(self):
        # exercises the weighted ball projection inside the driver loop
        center = np.zeros(3)
        anchor = np.array([2.0, 0.0, 0.0])
        prob = ProblemInstance(
            dim_primal=3,
            dim_constraint=1,
            objective=lambda x: float(np.abs(x - anchor).sum()),
            objective_subgradient=lambda x: np.sign(x - anchor),
            constraint=lambda x: np.array([x[1] - 0.2]),
            constraint_jacobian=lambda x: np.array([[0.0], [1.0], [0.0]]),
            feasible_set=Ball(center, 1.0),
        )
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_adam", alpha=0.2, tau2=0.2),
            rho=1.0, beta=3.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.5),
            max_iters=3000, seed=0,
        )
        res = run(prob, cfg, x0=np.zeros(3), record_every=500)
        assert not res.aborted
        assert np.linalg.norm(res.state.x - center) <= 1.0 + 1e-9
        assert res.final.feas <= 2e-2

    def test_truncated_gaussian_noise_run(self):
        rec = make_affine_l1(n=4, p=1, seed=6)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=1.0, beta=4.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.5),
            noise=NoiseModel("truncated_gaussian", 0.2, seed=0),
            max_iters=5000, seed=1,
        )
        res = run(rec.instance, cfg, x0=rec.start, record_every=1000)
        assert not res.aborted
        assert res.final.feas <= 5e-2

    def test_power_schedule_run(self):
        rec = make_affine_l1(n=4, p=1, seed=6)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=1.0, beta=4.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("power", 0.9, exponent=0.75),
            max_iters=5000, seed=1,
        )
        res = run(rec.instance, cfg, x0=rec.start, record_every=1000)
        assert not res.aborted
        assert res.final.feas <= 5e-2

    def test_perturbed_oracle_still_converges(self):
        # decaying-radius inexactness in the subgradient selections
        from sslalm.core import perturbed_instance

        rec = make_affine_l1(n=4, p=1, seed=6)
        wrapped = perturbed_instance(rec.instance, radius=0.5, seed=0, decay=0.6)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=1.0, beta=4.0,
            theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.5),
            max_iters=10000, seed=1,
        )
        res = run(wrapped, cfg, x0=rec.start, record_every=2000, kkt_probe=None)
        assert not res.aborted
        assert res.final.feas <= 2e-2

    def test_lyapunov_recorded_for_adaptive_methods_only(self):
        rec = make_affine_l1(n=3, p=1, seed=0)
        base = dict(
            rho=0.5, beta=2.0, theta=StepSchedule("constant", 0.5),
            eta=StepSchedule("inv_sqrt_epoch", 0.2), max_iters=20, seed=0,
        )
        res = run(rec.instance, SolverConfig(method=MethodConfig(kind="prox_sgd"), **base),
                  x0=rec.start)
        assert all(r.lyapunov is None for r in res.records)
        for kind in ["prox_sgdm", "prox_adam"]:
            res = run(rec.instance, SolverConfig(method=MethodConfig(kind=kind, alpha=0.2), **base),
                      x0=rec.start)
            assert all(r.lyapunov is not None for r in res.records)
            # the certificate dominates the penalty value it is built on
            assert all(r.lyapunov >= r.g_val - 1e-12 for r in res.records)

    def test_default_start_is_projected_origin(self):
        prob = scalar_problem(fset=Box(np.array([0.5]), np.array([2.0])))
        cfg = SolverConfig(method=MethodConfig(kind="prox_sgd"), eta=ETA_01, max_iters=0)
        state = init_state(prob, cfg)
        assert state.x == pytest.approx([0.5])
        assert np.array_equal(state.lam, np.zeros(1))
        assert np.array_equal(state.w, prob.constraint(state.x))

    def test_iterate_on_stochastic_instance_uses_mean_metrics(self):
        rec = make_stochastic_affine(n=3, p=1, noise_scale=0.5, seed=3)
        cfg = SolverConfig(
            method=MethodConfig(kind="prox_sgd"),
            rho=0.1, beta=1.0,
            theta=StepSchedule("constant", 0.3),
            eta=StepSchedule("inv_sqrt_epoch", 0.1),
            tracker="correction", max_iters=1,
        )
        rng = np.random.default_rng(0)
        state = init_state(rec.instance, cfg, x0=rec.start, rng=rng)
        nxt, recm = iterate(rec.instance, state, cfg, rng)
        c_mean = rec.instance.mean.constraint(nxt.x)
        assert recm.feas == pytest.approx(np.linalg.norm(c_mean))
        assert recm.tracker_err == pytest.approx(np.linalg.norm(nxt.w - c_mean))
