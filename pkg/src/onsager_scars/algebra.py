"""On-site clock/spin operators, product-basis bookkeeping and sparse embedding.

Basis conventions used throughout the package:

* a single site carries states ``|0>, ..., |n-1>`` with ``S^z|p> = (p - (n-1)/2)|p>``,
  so ``|0>`` is the lowest-weight state and ``S^+|p> = |p+1>``;
* a many-body label ``(p_1, ..., p_L)`` is encoded as the base-``n`` integer with
  site 1 as the most significant digit.  The left half of the chain is therefore a
  contiguous block of the index, and a bipartition is a plain reshape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sps

__all__ = [
    "MAX_DIMENSION",
    "LocalAlgebra",
    "BasisIndex",
    "SparseOperator",
    "local_operator",
    "embed",
    "charge_sector_basis",
    "charges",
    "commutator",
    "scaled_commutator_norm",
]

MAX_DIMENSION = 2**24

_KINDS = ("tau", "sigma", "s_plus", "s_minus", "s_z")


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"local dimension must be an integer >= 2, got {n!r}")


def local_operator(kind: str, n: int) -> np.ndarray:
    """Return the ``n x n`` matrix of a single-site operator.

    ``kind`` is one of ``tau``, ``sigma``, ``s_plus``, ``s_minus``, ``s_z``.
    """
    _check_n(n)
    p = np.arange(n)
    if kind == "tau":
        return np.diag(np.exp(2j * np.pi * p / n))
    if kind == "sigma":
        # sigma_{ij} = delta_{i, j+1 mod n}
        return np.roll(np.eye(n, dtype=complex), 1, axis=0)
    if kind == "s_plus":
        return np.eye(n, k=-1, dtype=complex)
    if kind == "s_minus":
        return np.eye(n, k=1, dtype=complex)
    if kind == "s_z":
        return np.diag(p - (n - 1) / 2).astype(complex)
    raise ValueError(f"unknown operator kind {kind!r}; expected one of {_KINDS}")


@dataclass(frozen=True)
class LocalAlgebra:
    """The complete on-site operator set for local dimension ``n``."""

    n: int
    omega: complex = field(init=False)
    tau: np.ndarray = field(init=False, repr=False)
    sigma: np.ndarray = field(init=False, repr=False)
    s_plus: np.ndarray = field(init=False, repr=False)
    s_minus: np.ndarray = field(init=False, repr=False)
    s_z: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        _check_n(self.n)
        object.__setattr__(self, "omega", np.exp(2j * np.pi / self.n))
        for kind in _KINDS:
            mat = local_operator(kind, self.n)
            mat.setflags(write=False)
            object.__setattr__(self, kind, mat)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.n, dtype=complex)


@dataclass(frozen=True)
class BasisIndex:
    """Bijection between digit strings ``(p_1..p_L)`` and ``0..n^L-1``."""

    L: int
    n: int

    def __post_init__(self) -> None:
        _check_n(self.n)
        if self.L < 1:
            raise ValueError("L must be positive")

    @property
    def dimension(self) -> int:
        return self.n**self.L

    def encode(self, digits: Sequence[int]) -> int:
        if len(digits) != self.L:
            raise ValueError(f"expected {self.L} digits, got {len(digits)}")
        index = 0
        for p in digits:
            if not 0 <= p < self.n:
                raise ValueError(f"digit {p} out of range for n={self.n}")
            index = index * self.n + int(p)
        return index

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.dimension:
            raise ValueError(f"index {index} out of range")
        digits = []
        for _ in range(self.L):
            index, p = divmod(index, self.n)
            digits.append(p)
        return tuple(reversed(digits))

    def digits(self, indices: np.ndarray | None = None) -> np.ndarray:
        """Digit table of shape ``(len(indices), L)`` (all states by default)."""
        if indices is None:
            indices = np.arange(self.dimension, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        powers = self.n ** np.arange(self.L - 1, -1, -1, dtype=np.int64)
        return (indices[:, None] // powers[None, :]) % self.n

    def from_string(self, label: str) -> int:
        """Index of a state written as a digit string, e.g. ``"0110"``."""
        return self.encode([int(c) for c in label])


def charges(L: int, n: int) -> np.ndarray:
    """Total ``S^z`` of every product state, in index order."""
    return BasisIndex(L, n).digits().sum(axis=1) - L * (n - 1) / 2


def charge_sector_basis(L: int, n: int, q: float) -> np.ndarray:
    """Sorted basis indices with total charge ``sum_j S^z_j == q``.

    An unattainable ``q`` yields an empty array.
    """
    target = q + L * (n - 1) / 2
    if abs(target - round(target)) > 1e-9:
        return np.zeros(0, dtype=np.int64)
    digit_sum = BasisIndex(L, n).digits().sum(axis=1)
    return np.flatnonzero(digit_sum == int(round(target))).astype(np.int64)


def _sector_map(L: int, n: int) -> tuple[tuple[float, np.ndarray], ...]:
    digit_sum = BasisIndex(L, n).digits().sum(axis=1)
    out = []
    for s in range(L * (n - 1) + 1):
        idx = np.flatnonzero(digit_sum == s)
        idx.setflags(write=False)
        out.append((s - L * (n - 1) / 2, idx))
    return tuple(out)


def _canonical(mat) -> sps.csr_array:
    m = sps.csr_array(mat, dtype=complex)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Operator on the ``n^L`` dimensional product space in CSR form.

    Arithmetic returns new instances; the stored matrix is never mutated.
    ``hermitian`` is a declared property and is verified on construction when set.
    """

    matrix: sps.csr_array
    n: int
    L: int
    hermitian: bool = False
    sectors: tuple[tuple[float, np.ndarray], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _canonical(self.matrix))
        dim = self.n**self.L
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match n^L = {dim}")
        if self.hermitian and not self.is_hermitian():
            raise ValueError("operator flagged Hermitian but is not")
        if self.sectors is not None:
            seen = np.concatenate([idx for _, idx in self.sectors]) if self.sectors else np.zeros(0)
            if len(seen) != dim or not np.array_equal(np.sort(seen), np.arange(dim)):
                raise ValueError("sector map must partition the basis exactly once")

    @classmethod
    def zeros(cls, n: int, L: int) -> "SparseOperator":
        dim = n**L
        return cls(sps.csr_array((dim, dim), dtype=complex), n, L, hermitian=True)

    @classmethod
    def identity(cls, n: int, L: int) -> "SparseOperator":
        return cls(sps.identity(n**L, dtype=complex, format="csr"), n, L, hermitian=True)

    @classmethod
    def diagonal(cls, values: np.ndarray, n: int, L: int, hermitian: bool = False) -> "SparseOperator":
        return cls(sps.diags_array(np.asarray(values, dtype=complex), format="csr"), n, L, hermitian)

    @property
    def dimension(self) -> int:
        return self.n**self.L

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.matrix.data) ** 2)))

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T, self.n, self.L, self.hermitian, self.sectors)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.conj().T
        scale = max(self.frobenius_norm(), 1.0)
        return float(np.sqrt(np.sum(np.abs(diff.data) ** 2))) <= rtol * scale

    def with_sectors(self) -> "SparseOperator":
        """Attach the U(1) charge partition of the basis."""
        return SparseOperator(self.matrix, self.n, self.L, self.hermitian, _sector_map(self.L, self.n))

    def restrict(self, indices: np.ndarray) -> sps.csr_array:
        """Sub-block ``H[indices][:, indices]``."""
        idx = np.asarray(indices, dtype=np.int64)
        return self.matrix[idx][:, idx]

    def _like(self, other: "SparseOperator") -> None:
        if (self.n, self.L) != (other.n, other.L):
            raise ValueError("operators act on different Hilbert spaces")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._like(other)
        return SparseOperator(self.matrix + other.matrix, self.n, self.L,
                              self.hermitian and other.hermitian)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._like(other)
        return SparseOperator(self.matrix - other.matrix, self.n, self.L,
                              self.hermitian and other.hermitian)

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(-self.matrix, self.n, self.L, self.hermitian)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        if not np.isscalar(scalar):
            return NotImplemented
        herm = self.hermitian and complex(scalar).imag == 0
        return SparseOperator(self.matrix * scalar, self.n, self.L, herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._like(other)
            return SparseOperator(self.matrix @ other.matrix, self.n, self.L)
        return self.matrix @ np.asarray(other)


def _site_positions(sites: Iterable[int], L: int) -> list[int]:
    pos = [(int(s) - 1) % L for s in sites]
    if len(set(pos)) != len(pos):
        raise ValueError(f"sites {tuple(sites)} repeat after periodic wrap on L={L}")
    return pos


def embed(op: np.ndarray, sites: Sequence[int], L: int, n: int | None = None,
          hermitian: bool = False) -> SparseOperator:
    """Place a ``k``-site matrix on the given 1-based sites (periodic wrap).

    ``op`` acts on ``sites`` in the listed order: its first tensor factor is
    ``sites[0]``.  Site ``L+1`` is site ``1``.
    """
    op = np.asarray(op, dtype=complex)
    k = len(sites)
    if n is None:
        n = int(round(op.shape[0] ** (1.0 / k)))
    _check_n(n)
    if op.shape != (n**k, n**k):
        raise ValueError(f"operator of shape {op.shape} does not act on {k} sites of dimension {n}")
    if n**L > MAX_DIMENSION:
        raise ValueError(f"n^L = {n**L} exceeds the supported dimension {MAX_DIMENSION}")
    pos = _site_positions(sites, L)

    basis = BasisIndex(L, n)
    idx = np.arange(basis.dimension, dtype=np.int64)
    weights = n ** (L - 1 - np.asarray(pos, dtype=np.int64))
    local = np.zeros_like(idx)
    for w in weights:
        local = local * n + (idx // w) % n
    local_weights = n ** np.arange(k - 1, -1, -1, dtype=np.int64)

    rows, cols, vals = [], [], []
    out_rows, in_cols = np.nonzero(op)
    for r, c in zip(out_rows, in_cols):
        src = idx[local == c]
        rd = (r // local_weights) % n
        cd = (c // local_weights) % n
        dst = src + int(np.dot(rd - cd, weights))
        rows.append(dst)
        cols.append(src)
        vals.append(np.full(src.shape, op[r, c]))
    dim = basis.dimension
    if rows:
        mat = sps.coo_array((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(dim, dim))
    else:
        mat = sps.coo_array((dim, dim), dtype=complex)
    return SparseOperator(mat, n, L, hermitian=hermitian)


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return SparseOperator(a.matrix @ b.matrix - b.matrix @ a.matrix, a.n, a.L)


def scaled_commutator_norm(a: SparseOperator, b: SparseOperator) -> float:
    """``||[A,B]||_F / (||A||_F ||B||_F)``; zero when either operand vanishes."""
    na, nb = a.frobenius_norm(), b.frobenius_norm()
    if na == 0 or nb == 0:
        return 0.0
    return commutator(a, b).frobenius_norm() / (na * nb)
