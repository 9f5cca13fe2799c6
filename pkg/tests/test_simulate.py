import numpy as np
import pytest

from projttsa import projection, simulate
from projttsa.errors import NonFinite
from projttsa.projection import Subspace, project
from projttsa.simulate import IterateState, NoiseModel, StepSizes
from projttsa.system import TwoTimeScaleSystem

from helpers import paper_instance, random_stable_system, random_subspace

STEPS = StepSizes(0.2, 0.02)


def small_problem(seed=0):
    S = random_stable_system(seed, n=4, m=3)
    return S, random_subspace(seed + 100, 4, 2), random_subspace(seed + 200, 3, 2)


def run_steps(S, sub_x, sub_y, steps, noise, T, rng, x0=None, y0=None):
    state = IterateState.initial(np.zeros(S.n) if x0 is None else x0,
                                 np.zeros(S.m) if y0 is None else y0)
    history = [state]
    for _ in range(T):
        state = simulate.step(S, sub_x, sub_y, steps, noise, state, rng)
        history.append(state)
    return history


def test_step_sizes_validation():
    with pytest.raises(ValueError):
        StepSizes(0.1, 0.2)
    with pytest.raises(ValueError):
        StepSizes(0.0, 0.0)


def test_noise_model():
    nm = NoiseModel("gaussian_iid", 0.5)
    assert nm.C_eps(4) == pytest.approx(1.0)
    assert nm.C_psi(8) == pytest.approx(2.0)
    assert NoiseModel("none", 0.5).C_eps(4) == 0.0
    with pytest.raises(ValueError):
        NoiseModel("cauchy", 1.0)
    with pytest.raises(ValueError):
        NoiseModel("gaussian_iid", -1.0)


def test_draw_order_eps_first():
    nm = NoiseModel("gaussian_iid", 1.0)
    eps, psi = nm.draw(np.random.default_rng(5), 3, 2)
    raw = np.random.default_rng(5).standard_normal(5)
    np.testing.assert_array_equal(eps, raw[:3])
    np.testing.assert_array_equal(psi, raw[3:])
    block = nm.draw_block(np.random.default_rng(5), 4, 3, 2)
    rng = np.random.default_rng(5)
    rows = [np.concatenate(nm.draw(rng, 3, 2)) for _ in range(4)]
    np.testing.assert_array_equal(block, rows)


def test_fixed_point_is_stationary():
    S, sub_x, sub_y = small_problem()
    cs = projection.constrained_solution(S, sub_x, sub_y)
    hist = run_steps(S, sub_x, sub_y, STEPS, NoiseModel("none"), 5, None, cs.x_p, cs.y_p)
    for s in hist:
        np.testing.assert_allclose(s.x, cs.x_p, atol=1e-12)
        np.testing.assert_allclose(s.y, cs.y_p, atol=1e-12)


def test_one_noiseless_step_from_zero():
    S = TwoTimeScaleSystem(-2 * np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), -np.eye(1),
                           [-2.0, -4.0], [-3.0])
    e1 = Subspace(np.array([[1.0], [0.0]]))
    s = simulate.step(S, e1, Subspace.full(1), StepSizes(0.1, 0.01), NoiseModel("none"),
                      IterateState.initial(np.zeros(2), np.zeros(1)), None)
    np.testing.assert_allclose(s.x, project(e1, 0.1 * -S.b1))
    np.testing.assert_allclose(s.y, 0.01 * -S.b2)


def test_step_reproducible():
    S, sub_x, sub_y = small_problem()
    nm = NoiseModel("gaussian_iid", 0.1)
    a = run_steps(S, sub_x, sub_y, STEPS, nm, 3, np.random.default_rng(9))[-1]
    b = run_steps(S, sub_x, sub_y, STEPS, nm, 3, np.random.default_rng(9))[-1]
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_step_nonfinite():
    S = TwoTimeScaleSystem(np.eye(1) * 1e300, np.zeros((1, 1)), np.zeros((1, 1)), -np.eye(1),
                           [0.0], [0.0])
    state = IterateState.initial([1e10], [0.0])
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(NonFinite) as exc:
        for _ in range(5):
            state = simulate.step(S, Subspace.full(1), Subspace.full(1), StepSizes(1.0, 0.1),
                                  NoiseModel("none"), state, None)
    assert exc.value.t >= 1


def test_run_trial_matches_step_loop():
    """The batched engine and the literal update give the same trajectory."""
    S, sub_x, sub_y = small_problem(3)
    nm = NoiseModel("gaussian_iid", 0.2)
    T = 300
    grid = simulate.checkpoint_grid(T, 20)
    tr = simulate.run_trial(S, sub_x, sub_y, STEPS, nm, T, checkpoint_grid=grid, seed=17)
    hist = run_steps(S, sub_x, sub_y, STEPS, nm, T, simulate.trial_rng(17, 0))
    cs = projection.constrained_solution(S, sub_x, sub_y)
    ref = [np.sum((hist[t].xbar - cs.x_p) ** 2) for t in grid]
    np.testing.assert_allclose(tr.stat_x, ref, rtol=1e-9)
    ref_y = [np.sum((hist[t].y - cs.y_p) ** 2) for t in grid]
    np.testing.assert_allclose(tr.last_y, ref_y, rtol=1e-9)
    fin = tr.final_state
    np.testing.assert_allclose(fin.x, hist[-1].x, atol=1e-12)
    np.testing.assert_allclose(fin.eps_sum, hist[-1].eps_sum, atol=1e-12)
    np.testing.assert_allclose(fin.psi_sum, hist[-1].psi_sum, atol=1e-12)


def test_pr_average_exact():
    S, sub_x, sub_y = small_problem(4)
    hist = run_steps(S, sub_x, sub_y, STEPS, NoiseModel("gaussian_iid", 0.3), 100,
                     np.random.default_rng(0))
    xs = np.array([h.x for h in hist[:100]])
    np.testing.assert_allclose(hist[100].xbar, xs.mean(axis=0), atol=1e-12)


def test_T1_average_is_start():
    S, sub_x, sub_y = small_problem(5)
    cs = projection.constrained_solution(S, sub_x, sub_y)
    x0 = sub_x.U @ np.array([0.5, -0.5])
    tr = simulate.run_trial(S, sub_x, sub_y, STEPS, NoiseModel("gaussian_iid", 1.0), 1, x0=x0)
    assert tr.stat_x[0] == pytest.approx(np.sum((x0 - cs.x_p) ** 2), rel=1e-14)


def test_noiseless_converges():
    S, sub_x, sub_y = small_problem(6)
    # the averaged error of a noiseless run decays like 1/T^2
    tr = simulate.run_trial(S, sub_x, sub_y, STEPS, NoiseModel("none"), 1_000_000)
    assert tr.stat_x[-1] < 1e-8 and tr.stat_y[-1] < 1e-8


def test_experiment_trials_one_equals_trial():
    S, sub_x, sub_y = small_problem(7)
    nm = NoiseModel("gaussian_iid", 0.1)
    a = simulate.run_trial(S, sub_x, sub_y, STEPS, nm, 500, seed=3)
    b = simulate.run_experiment(S, sub_x, sub_y, STEPS, nm, 500, 1, master_seed=3)
    for f in simulate.TrialTrace.FIELDS:
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_experiment_noiseless_trials_identical():
    S, sub_x, sub_y = small_problem(8)
    a = simulate.run_trial(S, sub_x, sub_y, STEPS, NoiseModel("none"), 500)
    b = simulate.run_experiment(S, sub_x, sub_y, STEPS, NoiseModel("none"), 500, 5)
    for f in simulate.TrialTrace.FIELDS:
        # batch size changes BLAS summation order, hence rounding only
        np.testing.assert_allclose(getattr(a, f), getattr(b, f), rtol=1e-9, atol=1e-20)


def test_experiment_reproducible_and_trial_order():
    S, sub_x, sub_y = small_problem(9)
    nm = NoiseModel("gaussian_iid", 0.1)
    a, rec = simulate.run_experiment(S, sub_x, sub_y, STEPS, nm, 400, 4, 11, keep_trials=True)
    b = simulate.run_experiment(S, sub_x, sub_y, STEPS, nm, 400, 4, 11)
    assert np.array_equal(a.stat_y, b.stat_y)
    # trial 2 alone uses the same stream as inside the batch
    single = simulate._run_batch(S, sub_x, sub_y, STEPS, nm, 400, np.zeros(4), np.zeros(3),
                                 a.t, [simulate.trial_rng(11, 2)])[0]
    np.testing.assert_allclose(single["stat_y"][0], rec["stat_y"][2], rtol=1e-12)


def test_projected_draws_same_law():
    """Projected draws change the stream but not the mean error curve."""
    S, sub_x, sub_y = small_problem(10)
    nm = NoiseModel("gaussian_iid", 0.3)
    ex = simulate.expected_trace(S, sub_x, sub_y, STEPS, nm, 2000)
    mc = simulate.run_experiment(S, sub_x, sub_y, STEPS, nm, 2000, 400, draws="projected")
    i = -1
    assert mc.stat_y[i] == pytest.approx(ex.stat_y[i], rel=0.15)
    assert mc.stat_x[i] == pytest.approx(ex.stat_x[i], rel=0.15)


def test_expected_trace_matches_monte_carlo():
    S, sub_x, sub_y = small_problem(11)
    nm = NoiseModel("gaussian_iid", 0.3)
    ex = simulate.expected_trace(S, sub_x, sub_y, STEPS, nm, 1000)
    mc = simulate.run_experiment(S, sub_x, sub_y, STEPS, nm, 1000, 400)
    for f in ("stat_x", "stat_y", "total_x", "total_y", "last_x"):
        # 400 trials: relative standard error of a chi-square-like mean is ~7%
        assert getattr(mc, f)[-1] == pytest.approx(getattr(ex, f)[-1], rel=0.2), f


def test_expected_trace_noiseless_is_exact():
    S, sub_x, sub_y = small_problem(12)
    ex = simulate.expected_trace(S, sub_x, sub_y, STEPS, NoiseModel("none"), 300)
    tr = simulate.run_trial(S, sub_x, sub_y, STEPS, NoiseModel("none"), 300)
    np.testing.assert_allclose(ex.stat_y, tr.stat_y, rtol=1e-9)
    np.testing.assert_allclose(ex.total_x, tr.total_x, rtol=1e-9)


def test_noiseless_iterate_matches_loop():
    S, sub_x, sub_y = small_problem(13)
    hist = run_steps(S, sub_x, sub_y, STEPS, NoiseModel("none"), 250, None)
    x, y = simulate.noiseless_iterate(S, sub_x, sub_y, STEPS, 250)
    np.testing.assert_allclose(x, hist[-1].x, atol=1e-12)
    np.testing.assert_allclose(y, hist[-1].y, atol=1e-12)


def test_telescoping_noiseless_and_noisy():
    S, sub_x, sub_y = small_problem(14)
    hist = run_steps(S, sub_x, sub_y, STEPS, NoiseModel("none"), 50, None)
    assert max(simulate.telescoping_residuals(S, sub_x, sub_y, STEPS, hist[-1])) < 1e-10
    hist = run_steps(S, sub_x, sub_y, STEPS, NoiseModel("gaussian_iid", 0.5), 50,
                     np.random.default_rng(1))
    assert max(simulate.telescoping_residuals(S, sub_x, sub_y, STEPS, hist[1])) < 1e-9
    assert max(simulate.telescoping_residuals(S, sub_x, sub_y, STEPS, hist[-1])) < 1e-9


def test_telescoping_detects_wrong_sign():
    """The boundary term enters as (x_T - x_0), not (x_0 - x_T)."""
    S, sub_x, sub_y = small_problem(15)
    hist = run_steps(S, sub_x, sub_y, STEPS, NoiseModel("none"), 20, None)
    s = hist[-1]
    cs = projection.constrained_solution(S, sub_x, sub_y)
    lhs = project(sub_x, S.A_ff @ (s.xbar - projection.x_p_of_y(S, sub_x, s.ybar)))
    flipped = (s.x0 - s.x) / (STEPS.alpha * s.t)
    assert np.linalg.norm(lhs - flipped) > 1e-6
    assert cs is not None


def test_checkpoint_grid():
    g = simulate.checkpoint_grid(5000)
    assert g[0] == 1 and g[-1] == 5000
    assert np.all(np.diff(g) > 0)
    assert 40 <= len(g) <= 50
    assert 777 in simulate.checkpoint_grid(5000, extra=[777, 9999])
    assert list(simulate.checkpoint_grid(1)) == [1]


def test_start_must_be_in_subspace():
    S, sub_x, sub_y = small_problem(16)
    with pytest.raises(ValueError):
        simulate.run_trial(S, sub_x, sub_y, STEPS, NoiseModel("none"), 5, x0=np.ones(4))


def test_batch_nonfinite_reports_step():
    S = TwoTimeScaleSystem(np.eye(1) * 5.0, np.zeros((1, 1)), np.zeros((1, 1)), -np.eye(1),
                           [-1.0], [0.0])
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFinite) as exc:
            simulate.run_trial(S, Subspace.full(1), Subspace.full(1), StepSizes(1.0, 0.1),
                               NoiseModel("none"), 3000)
    # |z| grows like 6^t, overflowing near t = log(1.8e308) / log 6 ~ 396
    assert 390 <= exc.value.t <= 400


def test_paper_instance_runs_fast():
    inst = paper_instance()
    tr = simulate.run_experiment(inst.system, inst.sub_x, inst.sub_y, StepSizes(0.2, 0.01),
                                 NoiseModel("gaussian_iid", 0.08), 5000, 25)
    assert np.all(np.isfinite(tr.stat_y)) and np.all(tr.stat_y >= 0)
    assert tr.trials == 25 and len(tr.final_states) == 25
