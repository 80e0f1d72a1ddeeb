import numpy as np
import pytest
from hypothesis import given, strategies as st

from pygesd.tensor_core import (
    Cpd, from_cpd, frob_norm, frontal_slices, khatri_rao, mode_product, rank1_approx_matrix,
    refold, unfold,
)


def random_cpd(rng, dims, r):
    return Cpd(*(rng.standard_normal((n, r)) for n in dims))


def loop_tensor(cpd):
    i1, i2, i3 = cpd.shape
    t = np.zeros((i1, i2, i3))
    for i in range(i1):
        for j in range(i2):
            for k in range(i3):
                t[i, j, k] = sum(cpd.A[i, r] * cpd.B[j, r] * cpd.C[k, r] for r in range(cpd.rank))
    return t


def test_unfold_single_entry():
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = 1
    np.testing.assert_array_equal(unfold(t, 1), [[1, 0, 0, 0], [0, 0, 0, 0]])


def test_unfold_column_order():
    t = np.arange(24.0).reshape(2, 3, 4)
    m1, m2, m3 = unfold(t, 1), unfold(t, 2), unfold(t, 3)
    # mode 1: column j + I2*k ; mode 2: column i + I1*k ; mode 3: column i + I1*j
    for i in range(2):
        for j in range(3):
            for k in range(4):
                assert m1[i, j + 3 * k] == t[i, j, k]
                assert m2[j, i + 2 * k] == t[i, j, k]
                assert m3[k, i + 2 * j] == t[i, j, k]


def test_unfold_rank1_identity(rng):
    a, b, c = rng.standard_normal(3), rng.standard_normal(4), rng.standard_normal(2)
    t = from_cpd(Cpd(a[:, None], b[:, None], c[:, None]))
    np.testing.assert_allclose(unfold(t, 2), np.outer(b, np.kron(c, a)), atol=1e-14)


def test_unfold_refold_roundtrip(rng):
    t = rng.standard_normal((3, 4, 5))
    for mode in (1, 2, 3):
        np.testing.assert_array_equal(refold(unfold(t, mode), mode, t.shape), t)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_roundtrip_property(i1, i2, i3, seed):
    t = np.random.default_rng(seed).standard_normal((i1, i2, i3))
    for mode in (1, 2, 3):
        np.testing.assert_array_equal(refold(unfold(t, mode), mode, t.shape), t)


def test_bad_mode():
    with pytest.raises(ValueError):
        unfold(np.zeros((2, 2, 2)), 4)


def test_mode_product_identity_and_selection(rng):
    t = rng.standard_normal((3, 3, 4))
    np.testing.assert_array_equal(mode_product(t, np.eye(3), 1), t)
    e = np.zeros((1, 4))
    e[0, 2] = 1
    np.testing.assert_array_equal(mode_product(t, e, 3)[:, :, 0], t[:, :, 2])


def test_mode_product_on_cpd_entrywise(rng):
    cpd = random_cpd(rng, (4, 4, 3), 3)
    m = rng.standard_normal((4, 5))
    lhs = mode_product(from_cpd(cpd), m.T, 2)
    np.testing.assert_allclose(lhs, loop_tensor(Cpd(cpd.A, m.T @ cpd.B, cpd.C)), atol=1e-12)


def test_mode_product_mismatch():
    with pytest.raises(ValueError):
        mode_product(np.zeros((2, 3, 4)), np.zeros((2, 2)), 2)


@given(st.integers(0, 2**32 - 1))
def test_mode_product_composition_and_orthogonal_invariance(seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal((3, 4, 5))
    u, v = rng.standard_normal((6, 5)), rng.standard_normal((2, 6))
    np.testing.assert_allclose(mode_product(mode_product(t, u, 3), v, 3), mode_product(t, v @ u, 3), atol=1e-12)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    assert abs(frob_norm(mode_product(t, q.T, 3)) - frob_norm(t)) < 1e-12 * frob_norm(t)


def test_khatri_rao_examples():
    np.testing.assert_array_equal(khatri_rao(np.array([[1.0], [0.0]]), np.array([[1.0], [1.0]])), [[1], [1], [0], [0]])
    np.testing.assert_array_equal(khatri_rao(np.eye(2), np.eye(2)), np.eye(4)[:, [0, 3]])
    with pytest.raises(ValueError):
        khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_unfold_khatri_rao_identity(seed, r):
    rng = np.random.default_rng(seed)
    cpd = random_cpd(rng, (3, 4, 5), r)
    t = loop_tensor(cpd)
    assert np.linalg.norm(unfold(t, 2) - cpd.B @ khatri_rao(cpd.C, cpd.A).T) <= 1e-12 * max(1, np.linalg.norm(t))
    assert np.linalg.norm(unfold(t, 1) - cpd.A @ khatri_rao(cpd.C, cpd.B).T) <= 1e-12 * max(1, np.linalg.norm(t))
    assert np.linalg.norm(unfold(t, 3) - cpd.C @ khatri_rao(cpd.B, cpd.A).T) <= 1e-12 * max(1, np.linalg.norm(t))


def test_from_cpd_examples(rng):
    e = np.array([[1.0], [0.0]])
    t = from_cpd(Cpd(e, e, e))
    assert t[0, 0, 0] == 1 and np.count_nonzero(t) == 1
    cpd = random_cpd(rng, (3, 4, 2), 5)
    assert np.linalg.norm(from_cpd(cpd) - loop_tensor(cpd)) < 1e-12


def test_cpd_validation():
    with pytest.raises(ValueError):
        Cpd(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        Cpd(np.array([[1.0, 0.0], [1.0, 0.0]]), np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        Cpd(np.array([[np.nan]]), np.ones((1, 1)), np.ones((1, 1)))


def test_frob_norm_and_rank1():
    assert frob_norm(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8))
    u, s, v = rank1_approx_matrix(np.diag([2.0, 1.0]))
    assert s == pytest.approx(2.0)
    assert abs(u[0]) == pytest.approx(1.0) and abs(v[0]) == pytest.approx(1.0)


def test_rank1_recovers_exact(rng):
    u0 = rng.standard_normal(4)
    v0 = rng.standard_normal(3)
    u0 /= np.linalg.norm(u0)
    v0 /= np.linalg.norm(v0)
    u, s, v = rank1_approx_matrix(3 * np.outer(u0, v0))
    assert s == pytest.approx(3.0, abs=1e-10)
    sign = np.sign(u @ u0)
    np.testing.assert_allclose(sign * u, u0, atol=1e-10)
    np.testing.assert_allclose(sign * v, v0, atol=1e-10)


def test_frontal_slices(rng):
    t = rng.standard_normal((2, 2, 3))
    sl = frontal_slices(t)
    assert len(sl) == 3 and np.array_equal(sl[1], t[:, :, 1])
