import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pygesd import Cpd, GesdConfig, GesdError, cpderr, from_cpd, gesd
from pygesd.experiments import adversarial_problem
from pygesd.synth import FactorSpec, gen_problem

G = sys.modules["pygesd.gesd"]


def random_cpd(rng, dims, rank):
    return Cpd(*(rng.standard_normal((n, rank)) for n in dims))


def test_rank_one_is_trivial(rng):
    truth = random_cpd(rng, (4, 5, 6), 1)
    res = gesd(from_cpd(truth), 1)
    assert res.ok and len(res.nodes) == 1
    assert cpderr(truth, res.cpd).max < 1e-12


def test_adversarial_first_split_and_exact_recovery():
    prob = adversarial_problem()
    res = gesd(prob.noisy, 3)
    assert res.ok
    assert sorted(res.first_split) == [1, 2]
    assert cpderr(prob.truth, res.cpd).max < 1e-8


@given(st.integers(0, 2**32 - 1))
def test_noiseless_random_recovery(seed):
    rng = np.random.default_rng(seed)
    truth = random_cpd(rng, (10, 10, 10), 5)
    res = gesd(from_cpd(truth), 5)
    if res.ok:
        assert cpderr(truth, res.cpd).max < 1e-6


def test_noiseless_rank10_recovery():
    prob = gen_problem((10, 10, 10), 10, FactorSpec("standard_normal"), seed=1)
    res = gesd(prob.noisy, 10)
    assert res.ok
    assert cpderr(prob.truth, res.cpd).max < 1e-8


def test_rank_bookkeeping(rng):
    truth = random_cpd(rng, (8, 8, 8), 6)
    res = gesd(from_cpd(truth), 6)
    by_path = {n.path: n for n in res.nodes}
    for node in res.nodes:
        if len(node.sizes) > 1:
            assert sum(node.sizes) == node.rank
            for i, s in enumerate(node.sizes):
                assert by_path[node.path + (i,)].rank == s
    leaves = [n for n in res.nodes if n.rank == 1]
    assert len(leaves) == 6


def test_deterministic(rng):
    t = from_cpd(random_cpd(rng, (6, 6, 6), 4)) + 0.05 * rng.standard_normal((6, 6, 6))
    a, b = gesd(t, 4), gesd(t, 4)
    for x, y in zip(a.cpd.factors, b.cpd.factors):
        assert np.array_equal(x, y)


def test_split_once_diagonal_pencil():
    core = np.zeros((3, 3, 2))
    core[:, :, 0] = np.eye(3)
    core[:, :, 1] = np.diag([0.0, 1.0, 1.0])
    split = G.split_once(core)
    assert sorted(split.sizes) == [1, 2]


def test_equal_slices_are_unresolved():
    # c1 == c2 for all columns: every eigenvalue coincides.
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    truth = Cpd(a, b, np.ones((2, 3)))
    trials = []
    core = np.stack([a @ b.T, a @ b.T], axis=2)
    assert G.split_once(core, trials=trials) is None
    assert len(trials) == 1  # two slices: no random pencils
    res = gesd(from_cpd(truth), 3)
    assert not res.ok
    assert res.unresolved_blocks[0].columns == (0, 1, 2)


def test_random_pencils_are_tried_for_three_slices():
    core = np.zeros((2, 2, 3))
    core[:, :, 0] = np.eye(2)
    core[:, :, 1] = np.eye(2)
    core[:, :, 2] = np.diag([1.0, -1.0])
    trials = []
    split = G.split_once(core, GesdConfig(slice_pairs="disjoint"), trials=trials)
    assert split is not None
    assert trials[0].source == "mlsvd(1,2)" and trials[-1].source.startswith("random")


def test_extract_rank1_examples():
    a, c, ok = G.extract_rank1(np.outer([1.0, 2.0], [3.0, 4.0]))
    np.testing.assert_allclose(np.outer(a, c), np.outer([1.0, 2.0], [3.0, 4.0]), atol=1e-12)
    assert abs(np.linalg.norm(c) - 1) < 1e-12 and ok
    _, _, ok = G.extract_rank1(np.eye(2))
    assert not ok


def test_solve_b_matches_normal_equations(rng):
    a, b, c = rng.standard_normal((4, 3)), rng.standard_normal((4, 3)), rng.standard_normal((3, 3))
    core = from_cpd(Cpd(a, b, c))
    np.testing.assert_allclose(G.solve_b(core, a, c), b, atol=1e-10)
    noisy = core + 0.1 * rng.standard_normal(core.shape)
    kr = np.column_stack([np.kron(c[:, r], a[:, r]) for r in range(3)])
    y2 = np.moveaxis(noisy, 1, 0).reshape(4, -1, order="F")
    oracle = np.linalg.solve(kr.T @ kr, kr.T @ y2.T).T
    np.testing.assert_allclose(G.solve_b(noisy, a, c), oracle, atol=1e-10)


def test_solve_b_rank_deficient():
    a = np.ones((3, 2))
    c = np.ones((2, 2))
    with pytest.raises(G.IllConditionedSystem):
        G.solve_b(np.zeros((3, 3, 2)), a, c)


def test_estimate_lies_in_mlsvd_subspaces(rng):
    t = from_cpd(random_cpd(rng, (12, 11, 10), 4)) + 0.01 * rng.standard_normal((12, 11, 10))
    est = gesd(t, 4).cpd
    for mode, f in enumerate(est.factors, start=1):
        u = np.linalg.svd(np.moveaxis(t, mode - 1, 0).reshape(t.shape[mode - 1], -1), full_matrices=False)[0][:, :4]
        resid = f - u @ (u.T @ f)
        assert np.linalg.norm(resid) < 1e-10 * np.linalg.norm(f)


def test_rank_validation(rng):
    t = rng.standard_normal((3, 4, 5))
    with pytest.raises(GesdError):
        gesd(t, 4)
    with pytest.raises(GesdError):
        gesd(t, 0)


@pytest.mark.parametrize("kw", [dict(threshold=0.0), dict(threshold=1.5), dict(max_random_pencils=0),
                                dict(slice_pairs="all")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GesdConfig(**kw)


def test_pencil_schedules():
    assert G.pencil_schedule(4) == [(0, 1), (0, 2), (0, 3)]
    assert G.pencil_schedule(5, "disjoint") == [(0, 1), (2, 3)]
    with pytest.raises(ValueError):
        G.pencil_schedule(3, "other")
