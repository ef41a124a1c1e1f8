"""Entanglement entropy, eigenstate scatter with scar tagging, and closed-form tower EE."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import BasisIndex, SparseOperator, embed, local_operator
from .eigensolve import EigenDecomposition
from .models import build_window_projector_sum
from .tensornet import contract, ferromagnetic_state, obc_tower_mps_tensors, schmidt_decompose, tower_vectors

__all__ = [
    "EEPoint",
    "ScarMatch",
    "ClosedFormEE",
    "von_neumann_ee",
    "reduced_density_matrix",
    "ee_from_density_matrix",
    "identify_scars",
    "ee_scatter",
    "observable_expectation",
    "one_magnon_states",
    "tower_candidates",
    "transfer_matrix_entry",
    "transfer_matrix_entry_formula",
    "closed_form_coefficients",
    "scar_ee_closed_form",
    "scar_ee_numerical_obc",
    "page_value",
]

SCHMIDT_CUTOFF = 1e-14


def _entropy(probabilities: np.ndarray) -> float:
    p = np.asarray(probabilities, dtype=float)
    p = p[p > SCHMIDT_CUTOFF]
    s = float(-np.sum(p * np.log(p)))
    return s if s > 0 else 0.0


def _infer_length(size: int, n: int) -> int:
    L = round(math.log(size, n))
    if n**L != size:
        raise ValueError(f"vector of length {size} is not a power of {n}")
    return L


def von_neumann_ee(state: np.ndarray, cut: int | None = None, n: int = 2) -> float:
    """Entropy ``-tr rho_A ln rho_A`` of sites ``1..cut`` (half chain by default)."""
    L = _infer_length(np.asarray(state).size, n)
    cut = L // 2 if cut is None else cut
    s = schmidt_decompose(state, cut, n).values
    return _entropy(s**2)


def reduced_density_matrix(state: np.ndarray, cut: int | None = None, n: int = 2) -> np.ndarray:
    """Density matrix of the left block ``1..cut``."""
    psi = np.asarray(state, dtype=complex)
    L = _infer_length(psi.size, n)
    cut = L // 2 if cut is None else cut
    m = psi.reshape(n**cut, n ** (L - cut))
    return m @ m.conj().T


def ee_from_density_matrix(rho: np.ndarray) -> float:
    return _entropy(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))


# -- scar identification ---------------------------------------------------


class ScarMatch(NamedTuple):
    tag: str
    matched: bool
    overlap: float
    cluster: np.ndarray
    energy: float


@dataclass(frozen=True)
class EEPoint:
    energy: float
    entropy: float
    index: int
    scar_tag: str = "none"
    overlap: float = 0.0


def _default_tol(eigs: np.ndarray) -> float:
    width = float(eigs[-1] - eigs[0]) if len(eigs) > 1 else 0.0
    return 1e-9 * max(width, 1.0)


def _clusters(eigs: np.ndarray, tol: float) -> list[np.ndarray]:
    breaks = np.flatnonzero(np.diff(eigs) > tol) + 1
    return np.split(np.arange(len(eigs)), breaks)


def identify_scars(decomp: EigenDecomposition, candidates: Sequence[tuple[str, np.ndarray]],
                   threshold: float = 0.99, degeneracy_tol: float | None = None) -> list[ScarMatch]:
    """Match each normalized candidate to the degenerate eigenvector cluster it lives in.

    The overlap of a cluster is the summed squared modulus of the projections.
    A candidate whose best cluster stays below ``threshold`` is unmatched.
    """
    if decomp.eigenvectors is None:
        raise ValueError("scar identification needs eigenvectors")
    tol = _default_tol(decomp.eigenvalues) if degeneracy_tol is None else degeneracy_tol
    clusters = _clusters(decomp.eigenvalues, tol)
    out = []
    for tag, vec in candidates:
        vec = np.asarray(vec, dtype=complex)
        if abs(np.linalg.norm(vec) - 1) > 1e-8:
            raise ValueError(f"candidate {tag!r} is not normalized")
        weights = np.abs(decomp.eigenvectors.conj().T @ decomp.to_local(vec)) ** 2
        sums = np.array([weights[c].sum() for c in clusters])
        best = int(np.argmax(sums))
        c = clusters[best]
        out.append(ScarMatch(tag, bool(sums[best] >= threshold), float(min(sums[best], 1.0)), c,
                             float(decomp.eigenvalues[c].mean())))
    return out


def _aligned_vectors(decomp: EigenDecomposition, candidates, matches) -> tuple[np.ndarray, list]:
    """Eigenvectors with each matched cluster rotated so candidates become basis vectors."""
    vecs = decomp.eigenvectors.astype(complex, copy=True)
    labels: list[tuple[str, float]] = [("none", 0.0)] * vecs.shape[1]
    by_cluster: dict[int, list[int]] = {}
    for i, m in enumerate(matches):
        if m.matched:
            by_cluster.setdefault(int(m.cluster[0]), []).append(i)
    for members in by_cluster.values():
        cluster = matches[members[0]].cluster
        block = vecs[:, cluster]
        # candidate directions inside the cluster, then the orthogonal remainder
        coords = np.column_stack([block.conj().T @ decomp.to_local(candidates[i][1]) for i in members])
        q, _ = np.linalg.qr(np.column_stack([coords, np.eye(len(cluster), dtype=complex)]))
        rotated = block @ q
        vecs[:, cluster] = rotated
        for slot, i in enumerate(members[: len(cluster)]):
            labels[cluster[slot]] = (matches[i].tag, matches[i].overlap)
    return vecs, labels


def ee_scatter(decomp: EigenDecomposition, cut: int | None = None,
               candidates: Sequence[tuple[str, np.ndarray]] = (), threshold: float = 0.99,
               degeneracy_tol: float | None = None) -> list[EEPoint]:
    """Half-chain entropy of every eigenstate, with scar tags from ``candidates``.

    Within a degenerate cluster that contains matched candidates, the basis is
    rotated so each candidate is one of the vectors; otherwise an arbitrary
    mixture chosen by the solver would be reported.
    """
    if decomp.eigenvectors is None:
        raise ValueError("ee_scatter needs eigenvectors")
    matches = identify_scars(decomp, candidates, threshold, degeneracy_tol) if candidates else []
    vecs, labels = _aligned_vectors(decomp, candidates, matches)
    dim = decomp.n**decomp.L
    points = []
    full = np.zeros(dim, dtype=complex)
    for i in range(vecs.shape[1]):
        if decomp.basis is None:
            psi = vecs[:, i]
        else:
            full[:] = 0
            full[decomp.basis] = vecs[:, i]
            psi = full
        points.append(EEPoint(float(decomp.eigenvalues[i]), von_neumann_ee(psi, cut, decomp.n), i,
                              labels[i][0], labels[i][1]))
    return points


def observable_expectation(decomp: EigenDecomposition, observable: SparseOperator | None = None) -> np.ndarray:
    """Diagonal expectation values ``<E_i|O|E_i>`` (default ``O = sum_j |010><010|``)."""
    if decomp.eigenvectors is None:
        raise ValueError("observable_expectation needs eigenvectors")
    op = build_window_projector_sum(decomp.L, "010", decomp.n) if observable is None else observable
    mat = op.matrix if decomp.basis is None else op.restrict(decomp.basis)
    v = decomp.eigenvectors
    return np.real(np.einsum("ij,ij->j", v.conj(), mat @ v))


def tower_candidates(n: int, L: int, q_plus: SparseOperator | None = None) -> list[tuple[str, np.ndarray]]:
    """Normalized ``(Q^+)^k|down>`` for every nonvanishing ``k``, tagged ``tower(k)``."""
    return [(f"tower({k})", v / np.linalg.norm(v)) for k, v in enumerate(tower_vectors(n, L, q_plus))]


def one_magnon_states(n: int, L: int) -> list[tuple[str, np.ndarray]]:
    """Plane waves of one lowered spin on the fully raised background.

    ``|k> = L^{-1/2} sum_j e^{i k j} |(n-1)...(n-2)_j...(n-1)>`` for
    ``k = 2 pi m / L``.  Each has half-chain entropy ``ln 2``.
    """
    basis = BasisIndex(L, n)
    top = [n - 1] * L
    sites = []
    for j in range(L):
        digits = list(top)
        digits[j] = n - 2
        sites.append(basis.encode(digits))
    out = []
    for m in range(L):
        vec = np.zeros(n**L, dtype=complex)
        vec[sites] = np.exp(2j * np.pi * m * np.arange(1, L + 1) / L) / np.sqrt(L)
        out.append((f"one_magnon({m})", vec))
    return out


# -- closed-form tower entropy ----------------------------------------------


def _binom_or_zero(top: int, bottom: int) -> int:
    if bottom < 0 or top < bottom:
        return 0
    return math.comb(top, bottom)


def transfer_matrix_entry(m: int, l: int) -> int:
    """``(E^m)_{(0,0),(l,l)}`` by explicit powers of the transfer matrix of the OBC tower MPS."""
    chi = l + 1
    tensors = obc_tower_mps_tensors(1, (l + 1) // 2 + 1).tensors[0][:, :chi, :chi].real
    E = np.einsum("pab,pcd->acbd", tensors, tensors).reshape(chi * chi, chi * chi)
    vec = np.zeros(chi * chi)
    vec[0] = 1.0
    for _ in range(m):
        vec = vec @ E
    return int(round(vec[l * chi + l]))


def transfer_matrix_entry_formula(m: int, l: int) -> int:
    """Closed binomial form of :func:`transfer_matrix_entry`."""
    if l % 2 == 0:
        return _binom_or_zero(m - l // 2, l // 2)
    return _binom_or_zero(m - (l + 1) // 2, (l - 1) // 2)


def closed_form_coefficients(L: int) -> list[int]:
    """Squared Schmidt weights ``c_l``, ``l = 0..L/2``, as exact integers."""
    return [transfer_matrix_entry_formula(L // 2, l) for l in range(L // 2 + 1)]


@dataclass(frozen=True)
class ClosedFormEE:
    L: int
    coefficients: tuple[int, ...]
    normalization: int
    entropy: float
    bound: float


def scar_ee_closed_form(L: int) -> ClosedFormEE:
    """Half-chain entropy of the half-filled OBC tower state ``(Q^+)^{L/4}|down>``."""
    if L <= 0 or L % 4:
        raise ValueError(f"L must be a positive multiple of 4, got {L}")
    c = closed_form_coefficients(L)
    h = L // 2
    weights = [c[l] * c[h - l] for l in range(h + 1)]
    norm = sum(weights)
    p = np.array([w / norm for w in weights], dtype=float)
    return ClosedFormEE(L, tuple(c), norm, _entropy(p), math.log(h + 1))


def _obc_q_plus(L: int) -> SparseOperator:
    sp = local_operator("s_plus", 2)
    pair = np.kron(sp, sp)
    op = SparseOperator.zeros(2, L)
    for j in range(1, L):
        op = op + embed(pair, (j, j + 1), L, 2)
    return op


def scar_ee_numerical_obc(L: int, k: int, method: str = "mps") -> float:
    """Half-chain EE of ``(sum_{j<L} S^+_j S^+_{j+1})^k |down>`` at ``n = 2``.

    ``method`` is ``"mps"`` (contract the tower MPS) or ``"dense"`` (apply the
    sparse operator ``k`` times).
    """
    if k == 0:
        return 0.0
    if method == "mps":
        psi = contract(obc_tower_mps_tensors(L, k))
    elif method == "dense":
        op = _obc_q_plus(L)
        psi = ferromagnetic_state(2, L)
        for _ in range(k):
            psi = op @ psi
    else:
        raise ValueError(f"unknown method {method!r}")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError(f"tower state vanishes for L={L}, k={k}")
    return von_neumann_ee(psi / norm, L // 2, 2)


def page_value(L: int, n: int) -> float:
    """Mean half-chain entropy of a random pure state, ``(L/2) ln n - 1/2``."""
    return 0.5 * L * math.log(n) - 0.5
