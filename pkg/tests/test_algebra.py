import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onsager_scars.algebra import (BasisIndex, LocalAlgebra, SparseOperator, charge_sector_basis, charges,
                                   embed, local_operator, scaled_commutator_norm)


def test_tau_n2():
    np.testing.assert_allclose(local_operator("tau", 2), np.diag([1, -1]), atol=1e-15)


def test_s_plus_n3_raises_label():
    # S^+|p> = |p+1>: ones below the diagonal (see decisions ledger)
    expected = np.zeros((3, 3))
    expected[1, 0] = expected[2, 1] = 1
    np.testing.assert_array_equal(local_operator("s_plus", 3), expected)
    np.testing.assert_array_equal(local_operator("s_minus", 3), expected.T)


def test_s_z_n2():
    np.testing.assert_array_equal(local_operator("s_z", 2), np.diag([-0.5, 0.5]))


def test_sigma_shift():
    sigma = local_operator("sigma", 4)
    for j in range(4):
        e = np.eye(4)[:, j]
        np.testing.assert_array_equal(sigma @ e, np.eye(4)[:, (j + 1) % 4])


@pytest.mark.parametrize("n", [0, 1])
def test_invalid_dimension(n):
    with pytest.raises(ValueError):
        local_operator("tau", n)


def test_unknown_kind():
    with pytest.raises(ValueError):
        local_operator("s_x", 2)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_local_commutation_relations(n):
    alg = LocalAlgebra(n)
    np.testing.assert_allclose(alg.s_z @ alg.s_plus - alg.s_plus @ alg.s_z, alg.s_plus, atol=1e-15)
    np.testing.assert_allclose(alg.s_z @ alg.s_minus - alg.s_minus @ alg.s_z, -alg.s_minus, atol=1e-15)
    np.testing.assert_allclose(alg.tau @ alg.sigma, alg.omega * alg.sigma @ alg.tau, atol=1e-14)


def test_local_algebra_is_read_only():
    alg = LocalAlgebra(3)
    with pytest.raises(ValueError):
        alg.tau[0, 0] = 5


@given(L=st.integers(1, 6), n=st.integers(2, 4), data=st.data())
def test_basis_roundtrip(L, n, data):
    basis = BasisIndex(L, n)
    idx = data.draw(st.integers(0, basis.dimension - 1))
    digits = basis.decode(idx)
    assert basis.encode(digits) == idx
    np.testing.assert_array_equal(basis.digits(np.array([idx]))[0], digits)


def test_lexicographic_order():
    basis = BasisIndex(3, 3)
    labels = [basis.decode(i) for i in range(basis.dimension)]
    assert labels == sorted(labels)


def test_embed_identity():
    op = embed(np.eye(2), (3,), 4)
    np.testing.assert_array_equal(op.toarray(), np.eye(16))


def test_embed_single_site_sz():
    op = embed(local_operator("s_z", 2), (1,), 1, 2)
    np.testing.assert_allclose(op @ np.array([1, 0]), [-0.5, 0])


def test_embed_pair_raising():
    sp = local_operator("s_plus", 2)
    op = embed(np.kron(sp, sp), (2, 3), 4, 2)
    basis = BasisIndex(4, 2)
    psi = np.zeros(16)
    psi[basis.from_string("0000")] = 1
    out = op @ psi
    assert np.flatnonzero(out).tolist() == [basis.from_string("0110")]


def test_embed_wraps_and_orders_sites():
    sp, sz = local_operator("s_plus", 2), local_operator("s_z", 2)
    wrapped = embed(np.kron(sp, sz), (4, 5), 4, 2)
    explicit = embed(np.kron(sz, sp), (1, 4), 4, 2)
    np.testing.assert_allclose(wrapped.toarray(), explicit.toarray())


def test_embed_errors():
    with pytest.raises(ValueError):
        embed(np.eye(4), (1, 5), 4, 2)
    with pytest.raises(ValueError):
        embed(np.eye(3), (1,), 4, 2)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), seed=st.integers(0, 2**32 - 1))
def test_embed_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 9, 9)) + 1j * rng.normal(size=(2, 9, 9))
    lhs = embed(a * x + b * y, (2, 3), 4, 3).toarray()
    rhs = a * embed(x, (2, 3), 4, 3).toarray() + b * embed(y, (2, 3), 4, 3).toarray()
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_charge_sectors():
    basis = BasisIndex(2, 2)
    assert set(charge_sector_basis(2, 2, 0)) == {basis.from_string("01"), basis.from_string("10")}
    assert len(charge_sector_basis(4, 2, 0)) == 6
    b3 = BasisIndex(2, 3)
    assert set(charge_sector_basis(2, 3, 0)) == {b3.from_string(s) for s in ("02", "11", "20")}
    assert len(charge_sector_basis(4, 2, 0.5)) == 0
    assert len(charge_sector_basis(4, 2, 7)) == 0


@pytest.mark.parametrize("n,L", [(2, 5), (3, 3)])
def test_sectors_partition_basis(n, L):
    q = np.unique(charges(L, n))
    parts = np.concatenate([charge_sector_basis(L, n, x) for x in q])
    np.testing.assert_array_equal(np.sort(parts), np.arange(n**L))
    op = SparseOperator.identity(n, L).with_sectors()
    assert len(op.sectors) == len(q)


def test_sector_projectors_commute_with_charge_conserving_terms():
    n, L = 3, 4
    alg = LocalAlgebra(n)
    hop = np.kron(alg.s_plus, alg.s_minus) + np.kron(alg.s_minus, alg.s_plus)
    H = embed(hop, (1, 2), L, n) + embed(alg.tau, (3,), L, n) + embed(alg.s_z, (4,), L, n)
    for q in np.unique(charges(L, n)):
        proj = np.zeros(n**L)
        proj[charge_sector_basis(L, n, q)] = 1
        P = SparseOperator.diagonal(proj, n, L)
        assert scaled_commutator_norm(P, H) < 1e-12


def test_sparse_operator_checks():
    with pytest.raises(ValueError):
        SparseOperator(np.eye(3), 2, 2)
    with pytest.raises(ValueError):
        SparseOperator(np.triu(np.ones((4, 4))), 2, 2, hermitian=True)
    op = SparseOperator(np.diag([1.0, 2, 3, 4]), 2, 2, hermitian=True)
    assert (op + op).is_hermitian()
    assert not (1j * op).hermitian
    assert op.adjoint().is_hermitian()
    np.testing.assert_allclose((op @ op).toarray(), np.diag([1, 4, 9, 16]))
    with pytest.raises(ValueError):
        op + SparseOperator.identity(2, 3)
