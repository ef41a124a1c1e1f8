"""Matrix-product forms of the scar states and of the operators generating them.

Conventions
-----------
* MPS tensors have shape ``(d, chi, chi)``: physical index first, then the left
  and right bond indices.
* MPO cores have shape ``(chi, chi, d, d)``: bond indices first, then the
  output and input physical indices, so ``core[i, j]`` is an on-site operator.

Every contraction here goes straight to a dense vector.  The bond dimensions
are tiny and nothing is truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import LocalAlgebra, SparseOperator
from .models import build_q_l_plus, build_q_plus

__all__ = [
    "MpsFactors",
    "SchmidtDecomposition",
    "max_tower_power",
    "ferromagnetic_state",
    "coherent_mps_tensors",
    "coherent_mpo_tensors",
    "two_param_mpo_tensors",
    "obc_tower_mps_tensors",
    "contract",
    "mpo_apply",
    "mpo_to_dense",
    "nilpotent_expm_apply",
    "coherent_state",
    "coherent_state_series",
    "two_param_state",
    "multi_param_state",
    "scar_tower",
    "tower_vectors",
    "TOWER_CANCELLATION_TOL",
    "schmidt_decompose",
]


@dataclass(frozen=True, eq=False)
class MpsFactors:
    """Site tensors of an MPS or MPO.

    ``boundary`` is ``"periodic"`` (trace closure) or ``"open"``, in which case
    ``left``/``right`` hold the boundary vectors.
    """

    tensors: tuple[np.ndarray, ...]
    kind: str = "state"
    boundary: str = "periodic"
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("state", "operator"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "open" and (self.left is None or self.right is None):
            raise ValueError("open boundary needs both boundary vectors")
        bonds = [self._bonds(t) for t in self.tensors]
        for (_, r), (l, _) in zip(bonds, bonds[1:]):
            if r != l:
                raise ValueError("bond dimensions of neighbouring tensors disagree")
        if self.boundary == "periodic" and bonds[-1][1] != bonds[0][0]:
            raise ValueError("trace closure needs matching outer bonds")

    def _bonds(self, t: np.ndarray) -> tuple[int, int]:
        return (t.shape[1], t.shape[2]) if self.kind == "state" else (t.shape[0], t.shape[1])

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def physical_dim(self) -> int:
        t = self.tensors[0]
        return t.shape[0] if self.kind == "state" else t.shape[2]

    @property
    def bond_dims(self) -> list[int]:
        return [self._bonds(t)[1] for t in self.tensors]


class SchmidtDecomposition(NamedTuple):
    values: np.ndarray
    left: np.ndarray
    right: np.ndarray


def max_tower_power(n: int, L: int) -> int:
    """Upper end ``floor((n-1) L / n)`` of the tower range.

    The top power itself can vanish: at ``n = 2`` with ``L % 4 == 2`` the two
    perfect pairings of the ring enter with opposite signs.
    """
    return ((n - 1) * L) // n


def ferromagnetic_state(n: int, L: int) -> np.ndarray:
    v = np.zeros(n**L, dtype=complex)
    v[0] = 1.0
    return v


def _check_even(L: int) -> None:
    if L < 2 or L % 2:
        raise ValueError(f"L must be even, got {L}")


def _ab_tensor(n: int, beta: complex, odd_site: bool) -> np.ndarray:
    t = np.zeros((n, n, n), dtype=complex)
    for p in range(n):
        t[p, p, 0] += beta**p
        for i in range(n):
            j = i + n - p
            if 1 <= j <= n - 1:
                sign = (-1) ** (j + 1) if odd_site else (-1) ** (n - j)
                t[p, i, j] += sign * beta**p / math.sin(math.pi * (n - j) / n)
    return t


def coherent_mps_tensors(n: int, beta: complex, L: int) -> MpsFactors:
    """``A`` on odd sites and ``B`` on even sites, closed by a trace."""
    _check_even(L)
    a = _ab_tensor(n, beta, True)
    b = _ab_tensor(n, beta, False)
    return MpsFactors(tuple(a if j % 2 == 1 else b for j in range(1, L + 1)))


def coherent_mpo_tensors(n: int, beta: complex, L: int) -> MpsFactors:
    """Cores ``C^[l]`` whose trace product is ``exp(beta^n Q^+)``."""
    _check_even(L)
    sp = LocalAlgebra(n).s_plus
    powers = [np.linalg.matrix_power(beta * sp, k) for k in range(n)]
    cores = []
    for l in range(1, L + 1):
        c = np.zeros((n, n, n, n), dtype=complex)
        for i in range(n):
            c[i, 0] = powers[i]
            for j in range(1, n):
                k = n + i - j
                if k < n:
                    sign = (-1) ** ((n + 1) * l + (n - j))
                    c[i, j] = sign / math.sin(math.pi * (n - j) / n) * powers[k]
        cores.append(c)
    return MpsFactors(tuple(cores), kind="operator")


def _operator_matrix(entries: list[list[np.ndarray]]) -> np.ndarray:
    return np.array(entries, dtype=complex)


def two_param_mpo_tensors(alpha: complex, beta: complex, L: int) -> MpsFactors:
    """Bond-dimension-8 cores for ``exp(alpha^2 Q_1^+) exp(beta^2 Q_2^+)`` (n = 2)."""
    _check_even(L)
    alg = LocalAlgebra(2)
    one, zero, sp, sz = alg.identity, np.zeros((2, 2), dtype=complex), alg.s_plus, alg.s_z

    def pair(x):
        return _operator_matrix([[one, x * sp], [x * sp, zero]])

    def twisted(x):
        return _operator_matrix([[one, -x * sp], [x * sp, zero]])

    def string(sign):
        return _operator_matrix([[one, zero], [zero, sign * sz]])

    cores = []
    for j in range(1, L + 1):
        if j % 2 == 1:
            factors = (pair(alpha), pair(beta), string(-1))
        else:
            factors = (twisted(alpha), string(+1), pair(beta))
        f1, f2, f3 = factors
        core = np.einsum("abxy,cdyz,efzw->acebdfxw", f1, f2, f3).reshape(8, 8, 2, 2)
        cores.append(core)
    return MpsFactors(tuple(cores), kind="operator")


def obc_tower_mps_tensors(L: int, k: int) -> MpsFactors:
    """Open-boundary MPS of ``(sum_{j<L} S^+_j S^+_{j+1})^k |down>`` up to normalization.

    The auxiliary index counts raised spins; ``M_0`` is allowed only at even
    counts, so raised spins always come in adjacent pairs.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    chi = 2 * k + 1
    m = np.zeros((2, chi, chi), dtype=complex)
    for i in range(0, chi, 2):
        m[0, i, i] = 1.0
    for i in range(chi - 1):
        m[1, i, i + 1] = 1.0
    left = np.zeros(chi)
    left[0] = 1.0
    right = np.zeros(chi)
    right[2 * k] = 1.0
    return MpsFactors(tuple(m for _ in range(L)), boundary="open", left=left, right=right)


def contract(mps: MpsFactors) -> np.ndarray:
    """Dense amplitude vector of an MPS in the package's basis ordering."""
    if mps.kind != "state":
        raise ValueError("contract expects a state; use mpo_to_dense for operators")
    first = mps.tensors[0]
    # carry (left bond, basis prefix, right bond)
    if mps.boundary == "periodic":
        cur = first.transpose(1, 0, 2)
    else:
        cur = np.einsum("a,pab->pb", mps.left, first)[None, :, :]
    for t in mps.tensors[1:]:
        cur = np.einsum("xpb,qbc->xpqc", cur, t)
        cur = cur.reshape(cur.shape[0], -1, cur.shape[-1])
    if mps.boundary == "periodic":
        return np.einsum("apa->p", cur)
    return np.einsum("xpb,b->p", cur, mps.right)


def mpo_apply(mpo: MpsFactors, state: np.ndarray) -> np.ndarray:
    """Apply a periodic MPO to a dense vector without forming the operator."""
    if mpo.kind != "operator" or mpo.boundary != "periodic":
        raise ValueError("expected a periodic MPO")
    d, L = mpo.physical_dim, mpo.L
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (d**L,):
        raise ValueError("state does not match the MPO")
    # axes: (first bond, current bond, processed sites..., unprocessed sites...)
    rest = psi.reshape(d, -1)
    cur = np.einsum("abxy,yr->abxr", mpo.tensors[0], rest)
    chi = cur.shape[0]
    cur = cur.reshape(chi, cur.shape[1], d, d ** (L - 1))
    for site in range(1, L):
        done = d**site
        remaining = d ** (L - site - 1)
        cur = cur.reshape(chi, cur.shape[1], done, d, remaining)
        cur = np.einsum("abpyr,bcxy->acpxr", cur, mpo.tensors[site])
        cur = cur.reshape(chi, cur.shape[1], done * d, remaining)
    return np.einsum("aapr->p", cur.reshape(chi, chi, d**L, 1))


def mpo_to_dense(mpo: MpsFactors) -> np.ndarray:
    """Dense matrix of a periodic MPO (small systems only)."""
    d, L = mpo.physical_dim, mpo.L
    if d**L > 4096:
        raise ValueError("dense MPO matrices are limited to dimension 4096")
    eye = np.eye(d**L, dtype=complex)
    return np.column_stack([mpo_apply(mpo, eye[:, i]) for i in range(d**L)])


def nilpotent_expm_apply(op: SparseOperator, coefficient: complex, state: np.ndarray,
                         max_terms: int = 10_000) -> np.ndarray:
    """``exp(coefficient * op) @ state`` for nilpotent ``op``; the series terminates exactly."""
    out = np.array(state, dtype=complex)
    term = out.copy()
    for k in range(1, max_terms):
        term = coefficient * (op @ term) / k
        if not term.any():
            return out
        out = out + term
    raise ValueError("operator does not appear to be nilpotent on this state")


def coherent_state(n: int, beta: complex, L: int) -> np.ndarray:
    """Unnormalized ``exp(beta^n Q^+)|down>`` from the MPS."""
    return contract(coherent_mps_tensors(n, beta, L))


def coherent_state_series(n: int, beta: complex, L: int) -> np.ndarray:
    """Same state summed term by term from powers of ``Q^+``."""
    return nilpotent_expm_apply(build_q_plus(n, L), beta**n, ferromagnetic_state(n, L))


def two_param_state(alpha: complex, beta: complex, L: int) -> np.ndarray:
    """``exp(alpha^2 Q_1^+) exp(beta^2 Q_2^+)|down>`` via the bond-8 MPO."""
    return mpo_apply(two_param_mpo_tensors(alpha, beta, L), ferromagnetic_state(2, L))


def multi_param_state(betas: Sequence[complex], L: int) -> np.ndarray:
    """``prod_l exp(beta_l^2 Q_l^+)|down>`` by iterated nilpotent exponentials."""
    psi = ferromagnetic_state(2, L)
    for l in range(len(betas), 0, -1):
        psi = nilpotent_expm_apply(build_q_l_plus(l, L), betas[l - 1] ** 2, psi)
    return psi


TOWER_CANCELLATION_TOL = 1e-10


def tower_vectors(n: int, L: int, q_plus: SparseOperator | None = None) -> list[np.ndarray]:
    """Unnormalized ``(Q^+)^k |down>`` for ``k = 0, 1, ...`` up to the first vanishing power.

    A power counts as vanishing when its norm is below ``TOWER_CANCELLATION_TOL``
    times the norm it would have without sign cancellations, i.e. of
    ``|Q^+|^k |down>``.  Exact zeros from phase cancellation otherwise survive
    as rounding noise of order ``1e-13``.
    """
    qp = build_q_plus(n, L) if q_plus is None else q_plus
    mag = abs(qp.matrix)
    psi = ferromagnetic_state(n, L)
    ref = np.abs(psi)
    out = []
    for _ in range(max_tower_power(n, L) + 1):
        if np.linalg.norm(psi) <= TOWER_CANCELLATION_TOL * np.linalg.norm(ref):
            break
        out.append(psi)
        psi = qp @ psi
        ref = mag @ ref
    return out


def scar_tower(n: int, L: int, k: int, normalize: bool = True,
               q_plus: SparseOperator | None = None) -> np.ndarray:
    """``(Q^+)^k |down>``, normalized.

    Powers that vanish (see :func:`tower_vectors`) come back as the exact zero vector.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    tower = tower_vectors(n, L, q_plus) if k <= max_tower_power(n, L) else []
    if k >= len(tower):
        return np.zeros(n**L, dtype=complex)
    psi = tower[k]
    return psi / np.linalg.norm(psi) if normalize else psi


def schmidt_decompose(state: np.ndarray, cut: int, n: int = 2,
                      normalized_tol: float = 1e-10) -> SchmidtDecomposition:
    """Schmidt values (descending) across the bond after site ``cut``."""
    psi = np.asarray(state)
    L = round(math.log(psi.size, n))
    if n**L != psi.size:
        raise ValueError(f"state of length {psi.size} is not a power of {n}")
    if not 0 <= cut <= L:
        raise ValueError(f"cut {cut} outside 0..{L}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > normalized_tol:
        raise ValueError(f"state is not normalized (norm {norm})")
    u, s, vh = np.linalg.svd(psi.reshape(n**cut, n ** (L - cut)), full_matrices=False)
    return SchmidtDecomposition(s, u, vh)
