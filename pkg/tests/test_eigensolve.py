import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from onsager_scars.algebra import SparseOperator, embed, local_operator
from onsager_scars.eigensolve import (POISSON_MEAN_R, diagonalize, goe_surrogate, level_spacing_stats,
                                      poisson_surrogate, reference_pdf)
from onsager_scars.entanglement import identify_scars, tower_candidates
from onsager_scars.models import ModelSpec, PerturbationCoefficients, build_h_n, build_h_s, substream


def test_diagonal_matrix():
    H = SparseOperator.diagonal(np.array([3.0, 1, 2, 0]), 2, 2, hermitian=True)
    np.testing.assert_allclose(diagonalize(H).eigenvalues, [0, 1, 2, 3])


def test_two_site_doubled_bond():
    np.testing.assert_allclose(diagonalize(build_h_n(2, 2)).eigenvalues, [-2, 0, 0, 2], atol=1e-14)


def test_rejects_non_hermitian():
    op = embed(local_operator("s_plus", 2), (1,), 2)
    with pytest.raises(ValueError):
        diagonalize(op)


def test_rejects_sector_for_u1_breaking_operator():
    spec = ModelSpec(2, 6, 1.0, PerturbationCoefficients.random(2, 6, seed=1))
    with pytest.raises(ValueError, match="U\\(1\\)"):
        diagonalize(build_h_s(spec), sector=0)


def test_unattainable_sector():
    with pytest.raises(ValueError):
        diagonalize(build_h_n(2, 4), sector=0.5)


@pytest.mark.parametrize("n,L,channels", [(2, 8, (1, 2)), (3, 4, None)])
def test_reconstruction_and_sectors(n, L, channels):
    spec = ModelSpec(n, L, 0.4, PerturbationCoefficients.random(n, L, seed=2, channels=channels))
    H = build_h_s(spec)
    d = diagonalize(H)
    V, w = d.eigenvectors, d.eigenvalues
    dense = H.toarray()
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(dense - (V * w) @ V.conj().T) <= 1e-9 * np.linalg.norm(dense)
    qs = np.arange(L * (n - 1) + 1) - L * (n - 1) / 2
    blocks = [diagonalize(H, sector=q) for q in qs]
    np.testing.assert_allclose(np.sort(np.concatenate([b.eigenvalues for b in blocks])), w, atol=1e-9)
    full = blocks[len(blocks) // 2].full_vectors()
    np.testing.assert_allclose(np.linalg.norm(dense @ full - full * blocks[len(blocks) // 2].eigenvalues,
                                              axis=0), 0, atol=1e-10)


def test_translation_invariance_clean_limit():
    L = 8
    H = build_h_s(ModelSpec(2, L, 0.3))
    dense = H.toarray()
    perm = np.arange(2**L).reshape([2] * L).transpose(list(range(1, L)) + [0]).reshape(-1)
    shifted = dense[np.ix_(perm, perm)]
    np.testing.assert_allclose(np.linalg.eigvalsh(shifted), np.linalg.eigvalsh(dense), atol=1e-12)
    np.testing.assert_allclose(shifted, dense, atol=1e-14)


def test_tower_eigenvectors_have_small_residual():
    n, L = 2, 8
    spec = ModelSpec(n, L, 1.0, PerturbationCoefficients.random(n, L, seed=3))
    H = build_h_s(spec)
    d = diagonalize(H)
    matches = identify_scars(d, tower_candidates(n, L))
    assert all(m.matched for m in matches)
    dense = H.toarray()
    for m in matches:
        for i in m.cluster:
            v = d.eigenvectors[:, i]
            assert np.linalg.norm(dense @ v - d.eigenvalues[i] * v) <= 1e-10


def test_equally_spaced_levels():
    st_ = level_spacing_stats(np.arange(400.0))
    np.testing.assert_allclose(st_.spacings, 1)
    np.testing.assert_allclose(st_.r_values, 1)
    assert st_.mean_r == 1
    assert st_.window == (100, 300)


def test_poisson_mean_r():
    eigs = poisson_surrogate(20000, substream(1, "poisson"))
    assert level_spacing_stats(eigs).mean_r == pytest.approx(0.386, abs=0.01)
    assert POISSON_MEAN_R == pytest.approx(0.3863, abs=1e-4)


def test_goe_surrogate_mean_r():
    eigs = goe_surrogate(1500, substream(2, "goe"))
    assert 0.51 <= level_spacing_stats(eigs).mean_r <= 0.55


def test_degenerate_levels_discarded():
    eigs = np.repeat(np.arange(200.0), 2)
    st_ = level_spacing_stats(eigs)
    assert st_.discarded == 99 or st_.discarded == 100
    np.testing.assert_allclose(st_.spacings, 1)


def test_too_few_levels():
    with pytest.raises(ValueError):
        level_spacing_stats(np.zeros(50))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), size=st.integers(120, 600))
def test_spacing_invariants(seed, size):
    rng = np.random.default_rng(seed)
    st_ = level_spacing_stats(np.sort(rng.normal(size=size)))
    assert st_.spacings.mean() == pytest.approx(1.0)
    assert np.all((st_.r_values >= 0) & (st_.r_values <= 1))


def test_reference_pdfs():
    assert reference_pdf("poisson", 0) == 1
    assert reference_pdf("wigner_dyson", 0) == 0
    for kind in ("poisson", "wigner_dyson"):
        total, _ = quad(lambda s: reference_pdf(kind, s), 0, np.inf, epsabs=1e-12)
        assert total == pytest.approx(1, abs=1e-8)
    with pytest.raises(ValueError):
        reference_pdf("goe", 1.0)
