"""Dense exact diagonalization and level-spacing statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .algebra import SparseOperator, charge_sector_basis, charges

__all__ = [
    "EigenDecomposition",
    "LevelStatistics",
    "diagonalize",
    "level_spacing_stats",
    "reference_pdf",
    "poisson_surrogate",
    "goe_surrogate",
    "POISSON_MEAN_R",
]

log = logging.getLogger(__name__)

POISSON_MEAN_R = 2 * np.log(2) - 1


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues in ascending order, with optional eigenvectors.

    When ``sector`` is set, eigenvectors are expressed in the sector basis
    ``basis`` (a sorted index subset of the full product basis).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    n: int
    L: int
    sector: float | None = None
    basis: np.ndarray | None = None
    provenance: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def has_vectors(self) -> bool:
        return self.eigenvectors is not None

    def full_vectors(self) -> np.ndarray:
        """Eigenvectors embedded in the full ``n^L`` space (columns)."""
        if self.eigenvectors is None:
            raise ValueError("decomposition was computed without eigenvectors")
        if self.basis is None:
            return self.eigenvectors
        out = np.zeros((self.n**self.L, self.eigenvectors.shape[1]), dtype=self.eigenvectors.dtype)
        out[self.basis] = self.eigenvectors
        return out

    def to_local(self, state: np.ndarray) -> np.ndarray:
        """Project a full-space vector onto the basis used by ``eigenvectors``."""
        state = np.asarray(state)
        return state if self.basis is None else state[self.basis]


@dataclass(frozen=True, eq=False)
class LevelStatistics:
    spacings: np.ndarray
    r_values: np.ndarray
    mean_r: float
    window: tuple[int, int]
    discarded: int
    histogram: np.ndarray
    bin_edges: np.ndarray


def _sector_violation(H: SparseOperator) -> float:
    q = charges(H.L, H.n)
    coo = H.matrix.tocoo()
    off = np.abs(q[coo.row] - q[coo.col]) > 1e-9
    if not off.any():
        return 0.0
    return float(np.abs(coo.data[off]).max())


def diagonalize(H: SparseOperator, sector: float | None = None, vectors: bool = True,
                provenance: dict[str, Any] | None = None, tol: float = 1e-10) -> EigenDecomposition:
    """Full spectrum of ``H`` (optionally restricted to one charge sector).

    Raises ``ValueError`` if ``H`` is not Hermitian, or if a sector is requested
    for an operator that couples different charge sectors.
    """
    if not H.is_hermitian(rtol=tol):
        raise ValueError("diagonalize requires a Hermitian operator")
    basis = None
    if sector is not None:
        scale = max(float(np.abs(H.matrix.data).max(initial=0.0)), 1.0)
        if _sector_violation(H) > tol * scale:
            raise ValueError("operator does not conserve the U(1) charge; no sector restriction possible")
        basis = charge_sector_basis(H.L, H.n, sector)
        if len(basis) == 0:
            raise ValueError(f"charge {sector} is not attainable for n={H.n}, L={H.L}")
        mat = H.restrict(basis).toarray()
    else:
        mat = H.toarray()
    if not np.iscomplexobj(mat) or not np.any(mat.imag):
        mat = np.ascontiguousarray(mat.real)
    mat = 0.5 * (mat + mat.conj().T)
    if vectors:
        w, v = np.linalg.eigh(mat)
    else:
        w, v = np.linalg.eigvalsh(mat), None
    return EigenDecomposition(w, v, H.n, H.L, sector, basis, dict(provenance or {}))


def level_spacing_stats(eigs: np.ndarray, window: tuple[float, float] = (0.25, 0.75),
                        degeneracy_tol: float | None = None, bins: int = 50,
                        s_range: tuple[float, float] = (0.0, 4.0)) -> LevelStatistics:
    """Spacing distribution and gap ratios of the middle of a spectrum.

    Spacings are taken between consecutive levels with index in
    ``[window[0] N, window[1] N)``; those below ``degeneracy_tol`` (default
    ``1e-10`` times the spectral width) are dropped and counted in
    ``discarded``.  The rest are divided by their mean.
    """
    e = np.sort(np.asarray(eigs, dtype=float))
    N = len(e)
    if N < 100:
        log.warning("only %d levels; spacing statistics will be noisy", N)
    lo, hi = int(np.floor(window[0] * N)), int(np.floor(window[1] * N))
    levels = e[lo:hi]
    if degeneracy_tol is None:
        degeneracy_tol = 1e-10 * (e[-1] - e[0]) if N > 1 else 0.0
    gaps = np.diff(levels)
    keep = gaps > degeneracy_tol
    gaps = gaps[keep]
    if len(gaps) < 2:
        raise ValueError("fewer than 3 levels remain after removing degeneracies")
    s = gaps / gaps.mean()
    r = np.minimum(gaps[:-1], gaps[1:]) / np.maximum(gaps[:-1], gaps[1:])
    hist, edges = np.histogram(s, bins=bins, range=s_range, density=False)
    width = edges[1] - edges[0]
    density = hist / (len(s) * width)
    return LevelStatistics(s, r, float(r.mean()), (lo, hi), int((~keep).sum()), density, edges)


def reference_pdf(kind: str, s):
    """Poisson ``exp(-s)`` or Wigner surmise ``(pi/2) s exp(-pi s^2/4)``."""
    s = np.asarray(s, dtype=float)
    if kind == "poisson":
        return np.exp(-s)
    if kind == "wigner_dyson":
        return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s**2)
    raise ValueError(f"unknown reference distribution {kind!r}")


def poisson_surrogate(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uncorrelated levels: cumulative sum of unit-mean exponential spacings."""
    return np.cumsum(rng.exponential(1.0, size=dim))


def goe_surrogate(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Eigenvalues of a real symmetric Gaussian matrix."""
    a = rng.normal(size=(dim, dim))
    return np.linalg.eigvalsh((a + a.T) / 2)
