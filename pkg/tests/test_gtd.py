import numpy as np
import pytest

from projttsa import gtd, projection, simulate
from projttsa.projection import Subspace
from projttsa.system import check_assumptions, schur_complement, unconstrained_solution


@pytest.fixture(scope="module")
def setup():
    mdp, vs = gtd.build_mdp(0)
    return mdp, vs, gtd.gtd_system(mdp), gtd.feature_families(vs, 1)


def test_mdp_construction(setup):
    mdp, vs, _, _ = setup
    assert mdp.S == 9 and mdp.gamma == 0.9
    np.testing.assert_array_equal(vs.c, [3.0, 2.4, 1.8, 1.4, 1.1, 0.5, 1e-3, 5e-4, 1e-4])
    np.testing.assert_allclose(mdp.P.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(mdp.P >= 0.1 / 9 - 1e-15)
    np.testing.assert_allclose(vs.W.T @ vs.W, np.eye(9), atol=1e-12)
    assert np.linalg.norm(gtd.bellman_residual(mdp, vs.V_pi)) < 1e-12
    assert abs(vs.V_pi @ vs.V_pi - vs.c @ vs.c) < 1e-12


def test_mdp_validation():
    with pytest.raises(ValueError):
        gtd.Mdp(np.array([[0.5, 0.6], [0.5, 0.5]]), np.zeros(2), 0.9)
    with pytest.raises(ValueError):
        gtd.Mdp(np.eye(2), np.zeros(2), 1.0)


def test_unconstrained_solution_is_value(setup):
    mdp, vs, G, _ = setup
    sol = unconstrained_solution(G)
    assert np.max(np.abs(sol.x_star)) < 1e-10
    assert np.max(np.abs(sol.y_star - vs.V_pi)) < 1e-10


def test_schur_complement(setup):
    mdp, _, G, _ = setup
    M = np.eye(9) - mdp.gamma * mdp.P
    D = schur_complement(G)
    np.testing.assert_allclose(D, -M.T @ M, atol=1e-12)
    np.testing.assert_allclose(D, D.T, atol=1e-12)
    assert np.max(np.linalg.eigvalsh(0.5 * (D + D.T))) < 0


def test_feature_families(setup):
    _, vs, G, fams = setup
    assert [f.label for f in fams] == ["well", "medium", "poor"]
    sol = unconstrained_solution(G)
    eps = []
    for f in fams:
        sub = Subspace.from_spanning(f.Phi)
        eps.append(projection.approximation_errors(sol, sub, sub)[1])
    assert eps[0] == pytest.approx(3.42000126, abs=1e-6)
    assert eps[2] == pytest.approx(21.42, abs=1e-4)
    assert eps[0] < eps[1] < eps[2]


def test_assumptions_hold_for_every_family(setup):
    _, _, G, fams = setup
    for f in fams:
        sub = Subspace.from_spanning(f.Phi)
        rep = check_assumptions(G, sub, sub, 0.02, 0.001)
        assert rep.all_ok, (f.label, rep.failures())
        # U^T A_ff U = -I_3
        assert rep.a2_fast_hurwitz.value == pytest.approx(-1.0)


def test_projected_composite_equation(setup):
    mdp, _, G, fams = setup
    M = np.eye(9) - mdp.gamma * mdp.P
    for f in fams:
        sub = Subspace.from_spanning(f.Phi)
        Pi = sub.projector
        cs = projection.constrained_solution(G, sub, sub)
        lhs = Pi @ M.T @ Pi @ M @ cs.y_p
        rhs = Pi @ M.T @ Pi @ mdp.reward
        assert np.linalg.norm(lhs - rhs) < 1e-9


def test_full_rank_features(setup):
    _, vs, G, _ = setup
    sub = Subspace.from_spanning(vs.W)
    cs = projection.constrained_solution(G, sub, sub)
    err = gtd.gtd_errors(
        simulate.run_trial(G, sub, sub, simulate.StepSizes(0.02, 0.001),
                           simulate.NoiseModel("none"), 10), vs.V_pi, cs.y_p)
    assert err.approx < 1e-20
    np.testing.assert_allclose(cs.y_p, vs.V_pi, atol=1e-10)


def test_gtd_errors_consistent(setup):
    _, vs, G, fams = setup
    sub = Subspace.from_spanning(fams[0].Phi)
    cs = projection.constrained_solution(G, sub, sub)
    tr = simulate.run_experiment(G, sub, sub, simulate.StepSizes(0.02, 0.001),
                                 simulate.NoiseModel("gaussian_iid", 0.08), 2000, 3)
    err = gtd.gtd_errors(tr, vs.V_pi, cs.y_p)
    assert err.approx == pytest.approx(np.sum((vs.V_pi - cs.y_p) ** 2))
    # Minkowski in L2 over trials
    assert np.all(np.sqrt(err.total) <= np.sqrt(err.stat) + np.sqrt(err.approx) + 1e-12)


def test_noiseless_limit_plateau(setup):
    _, vs, G, fams = setup
    sub = Subspace.from_spanning(fams[2].Phi)
    cs = projection.constrained_solution(G, sub, sub)
    x, y = simulate.noiseless_iterate(G, sub, sub, simulate.StepSizes(0.02, 0.001), 2_000_000)
    assert np.linalg.norm(y - cs.y_p) < 1e-8
