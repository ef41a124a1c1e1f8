"""Hamiltonians, Onsager-algebra charges and scar-preserving perturbations.

Everything is built under periodic boundary conditions on an even number of
sites, with the conventions of :mod:`onsager_scars.algebra`.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .algebra import LocalAlgebra, SparseOperator, embed

__all__ = [
    "N3_FORBIDDEN_STATES",
    "TWO_PARAM_FORBIDDEN_STATES",
    "PerturbationCoefficients",
    "ModelSpec",
    "substream",
    "ferromagnetic_energy",
    "duality_unitary",
    "build_h_n",
    "build_h_orig",
    "build_charge_q",
    "build_charge_q_hat",
    "build_q_plus",
    "build_q_l_plus",
    "build_perturbation_n2",
    "build_perturbation_n3",
    "build_perturbation_two_param",
    "build_window_projector_sum",
    "build_zeeman",
    "build_h_s",
]


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one purpose, derived from a master seed."""
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


def _ket(label: str, n: int) -> np.ndarray:
    v = np.zeros(n ** len(label))
    v[int(label, n)] = 1.0
    return v


def _combo(n: int, terms: dict[str, float]) -> np.ndarray:
    v = sum(c * _ket(s, n) for s, c in terms.items())
    return v / np.linalg.norm(v)


# three-site states with no overlap with the n = 3 coherent state; the last one
# is the only entry touching the one-magnon windows 122/212/221
N3_FORBIDDEN_STATES: tuple[tuple[str, np.ndarray], ...] = (
    ("010", _ket("010", 3)),
    ("020", _ket("020", 3)),
    ("110", _ket("110", 3)),
    ("011", _ket("011", 3)),
    ("111", _ket("111", 3)),
    ("012+021+120+210", _combo(3, {"012": 1, "021": 1, "120": 1, "210": 1})),
    ("012-120", _combo(3, {"012": 1, "120": -1})),
    ("021-210", _combo(3, {"021": 1, "210": -1})),
    ("022-112-211+220", _combo(3, {"022": 1, "112": -1, "211": -1, "220": 1})),
    ("022+112-211-220", _combo(3, {"022": 1, "112": 1, "211": -1, "220": -1})),
    ("022+112+2*121+211+220", _combo(3, {"022": 1, "112": 1, "121": 2, "211": 1, "220": 1})),
    ("122+212+221", _combo(3, {"122": 1, "212": 1, "221": 1})),
)

TWO_PARAM_FORBIDDEN_STATES: tuple[tuple[str, np.ndarray], ...] = (
    ("00100", _ket("00100", 2)),
    ("00101-10100", _combo(2, {"00101": 1, "10100": -1})),
)


@dataclass(frozen=True, eq=False)
class PerturbationCoefficients:
    """Per-site weights of the scar-preserving perturbation.

    ``values`` has shape ``(L, 3)`` for ``n = 2`` (columns ``c^(1), c^(2), c^(3)``),
    ``(L, 12)`` for ``n = 3`` (one weight per forbidden state) and ``(L, 2)`` for the
    two-parameter construction.  Row ``j-1`` belongs to the window centred on site ``j``.
    """

    n: int
    values: np.ndarray
    include_last_projector: bool = True
    seed: int | None = None
    kind: str = "standard"
    mixing: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != self.width(self.n, self.kind):
            raise ValueError(f"coefficient table has shape {vals.shape}, "
                             f"expected (L, {self.width(self.n, self.kind)})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("perturbation coefficients must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.mixing is not None:
            if self.n != 3 or self.kind != "standard":
                raise ValueError("mixing couplings exist for the n = 3 perturbation only")
            mix = np.array(self.mixing, dtype=float)
            w = vals.shape[1]
            if mix.shape != (vals.shape[0], w, w):
                raise ValueError(f"mixing table has shape {mix.shape}, expected {(vals.shape[0], w, w)}")
            if not np.all(np.isfinite(mix)) or not np.allclose(mix, mix.transpose(0, 2, 1), atol=0):
                raise ValueError("mixing couplings must be finite and symmetric")
            if np.any(np.diagonal(mix, axis1=1, axis2=2) != 0):
                raise ValueError("mixing couplings must have a zero diagonal")
            mix.setflags(write=False)
            object.__setattr__(self, "mixing", mix)

    @staticmethod
    def width(n: int, kind: str = "standard") -> int:
        if kind == "two_param":
            if n != 2:
                raise ValueError("the two-parameter perturbation exists for n = 2 only")
            return len(TWO_PARAM_FORBIDDEN_STATES)
        if n == 2:
            return 3
        if n == 3:
            return len(N3_FORBIDDEN_STATES)
        raise ValueError(f"no perturbation is available for n = {n}")

    @property
    def L(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zero(cls, n: int, L: int, kind: str = "standard") -> "PerturbationCoefficients":
        return cls(n, np.zeros((L, cls.width(n, kind))), kind=kind)

    @classmethod
    def random(cls, n: int, L: int, seed: int, channels=None, include_last_projector: bool = True,
               kind: str = "standard", mixing: bool = False,
               label: str = "couplings") -> "PerturbationCoefficients":
        """Uniform draws on ``[-1, 1]``; channels not listed (1-based) are zeroed.

        With ``mixing=True`` (``n = 3`` only) every pair of forbidden states on a
        window is also coupled by an independent symmetric weight, which breaks
        the U(1) symmetry while still annihilating the coherent state.
        """
        width = cls.width(n, kind)
        rng = substream(seed, label)
        vals = rng.uniform(-1.0, 1.0, size=(L, width))
        if channels is not None:
            keep = np.zeros(width, dtype=bool)
            keep[[c - 1 for c in channels]] = True
            vals[:, ~keep] = 0.0
        mix = None
        if mixing:
            if n != 3 or kind != "standard":
                raise ValueError("mixing couplings exist for the n = 3 perturbation only")
            upper = np.triu(rng.uniform(-1.0, 1.0, size=(L, width, width)), k=1)
            mix = upper + upper.transpose(0, 2, 1)
        if n == 3 and kind == "standard" and not include_last_projector:
            vals[:, -1] = 0.0
            if mix is not None:
                mix[:, -1, :] = 0.0
                mix[:, :, -1] = 0.0
        return cls(n, vals, include_last_projector, seed, kind, mix)

    def breaks_u1(self) -> bool:
        if self.kind == "standard" and self.n == 2:
            return bool(np.any(self.values[:, 2] != 0))
        if self.mixing is not None:
            digit_sums = np.array([sum(np.base_repr(i, 3).zfill(3).encode()) - 3 * ord("0")
                                   for i in range(27)])
            # every forbidden state is a charge eigenstate
            charge = np.array([digit_sums[np.flatnonzero(v)[0]] for _, v in N3_FORBIDDEN_STATES])
            differs = charge[:, None] != charge[None, :]
            return bool(np.any(self.mixing[:, differs] != 0))
        return False


@dataclass(frozen=True, eq=False)
class ModelSpec:
    n: int
    L: int
    h: float = 0.0
    couplings: PerturbationCoefficients | None = None
    boundary: str = field(default="periodic", init=False)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.L < 2 or self.L % 2:
            raise ValueError(f"L must be even, got {self.L}")
        if not math.isfinite(self.h):
            raise ValueError("h must be finite")
        if self.couplings is not None:
            if self.couplings.n != self.n or self.couplings.L != self.L:
                raise ValueError("couplings do not match (n, L)")

    @property
    def dimension(self) -> int:
        return self.n**self.L


def _check_even(L: int) -> None:
    if L < 2 or L % 2:
        raise ValueError(f"L must be even, got {L}")


def _bond_sum(bond_op: np.ndarray, n: int, L: int, hermitian: bool = False) -> SparseOperator:
    total = SparseOperator.zeros(n, L)
    for j in range(1, L + 1):
        total = total + embed(bond_op, (j, j + 1), L, n)
    return SparseOperator(total.matrix, n, L, hermitian)


def ferromagnetic_energy(n: int, L: int) -> float:
    """Eigenvalue of ``H_n`` on the all-``|0>`` state."""
    total = sum((n - 2 * a) * np.exp(1j * np.pi * a / n) / (2 * np.sin(np.pi * a / n))
                for a in range(1, n))
    return float(np.real(-L * total))


def _tau_term(n: int) -> np.ndarray:
    alg = LocalAlgebra(n)
    mp = np.linalg.matrix_power
    out = np.zeros((n, n), dtype=complex)
    for a in range(1, n):
        out += -(n - 2 * a) * np.exp(1j * np.pi * a / n) / (2 * np.sin(np.pi * a / n)) * mp(alg.tau, a)
    return out


def _h_n_bond(n: int) -> np.ndarray:
    alg = LocalAlgebra(n)
    mp = np.linalg.matrix_power
    out = np.zeros((n * n, n * n), dtype=complex)
    for a in range(1, n):
        hop = n * (-1) ** a * np.kron(mp(alg.s_minus, a), mp(alg.s_plus, a))
        out += -(hop + hop.conj().T) / (2 * np.sin(np.pi * a / n))
    out += np.kron(_tau_term(n), np.eye(n))
    return out


def build_h_n(n: int, L: int) -> SparseOperator:
    """Self-dual U(1)-invariant clock chain; the XX chain for ``n = 2``."""
    _check_even(L)
    return _bond_sum(_h_n_bond(n), n, L, hermitian=True)


def _frame_phase(n: int, positions: tuple[float, float]) -> np.ndarray:
    """Diagonal of ``exp(-i pi (1+1/n) (x1 S^z x 1 + x2 1 x S^z))``."""
    sz = np.arange(n) - (n - 1) / 2
    theta = np.pi * (1 + 1 / n)
    phase = positions[0] * sz[:, None] + positions[1] * sz[None, :]
    return np.exp(-1j * theta * phase).ravel()


def _to_model_frame(bond_op: np.ndarray, n: int, j: int) -> np.ndarray:
    d = _frame_phase(n, (j, j + 1))
    return d[:, None] * bond_op * d.conj()[None, :]


def duality_unitary(n: int, L: int) -> SparseOperator:
    """Diagonal unitary ``U`` with ``U H_orig U^{-1} = H_n`` away from the boundary."""
    sz = np.arange(n) - (n - 1) / 2
    from .algebra import BasisIndex

    digits = BasisIndex(L, n).digits()
    weighted = (sz[digits] * np.arange(1, L + 1)[None, :]).sum(axis=1)
    return SparseOperator.diagonal(np.exp(-1j * np.pi * (1 + 1 / n) * weighted), n, L)


def _h_orig_bond(n: int) -> np.ndarray:
    alg = LocalAlgebra(n)
    mp = np.linalg.matrix_power
    w = alg.omega
    out = np.zeros((n * n, n * n), dtype=complex)
    for a in range(1, n):
        pref = 1j / (1 - w ** (-a))
        term = (2 * a - n) * np.kron(mp(alg.tau, a), np.eye(n))
        term = term + n * np.kron(mp(alg.s_plus, n - a), mp(alg.s_minus, n - a))
        term = term - n * np.kron(mp(alg.s_minus, a), mp(alg.s_plus, a))
        out += pref * term
    return out


def build_h_orig(n: int, L: int, boundary: str = "periodic") -> SparseOperator:
    """The clock Hamiltonian before the site-dependent phase rotation.

    ``boundary="periodic"`` closes the chain with the same bond operator as the
    bulk.  Its image under :func:`duality_unitary` is ``H_n`` with a twisted
    boundary, unless the twist is trivial (e.g. ``n = 2`` with ``L % 4 == 0``).
    ``boundary="twisted"`` carries the compensating phase on the bond ``(L, 1)``
    so that ``U H_orig U^{-1} == build_h_n(n, L)`` for every even ``L``.
    """
    _check_even(L)
    if boundary not in ("periodic", "twisted"):
        raise ValueError(f"unknown boundary {boundary!r}")
    bond = _h_orig_bond(n)
    total = SparseOperator.zeros(n, L)
    for j in range(1, L + 1):
        op = bond
        if boundary == "twisted" and j == L:
            d = _frame_phase(n, (0, L))
            op = d[:, None] * bond * d.conj()[None, :]
        total = total + embed(op, (j, j + 1), L, n)
    return SparseOperator(total.matrix, n, L, hermitian=True)


def build_charge_q(n: int, L: int) -> SparseOperator:
    from .algebra import charges

    return SparseOperator.diagonal(charges(L, n), n, L, hermitian=True)


def build_charge_q_hat(n: int, L: int) -> SparseOperator:
    """Dual charge, brought into the frame of ``H_n`` bond by bond.

    Every bond ``(j, j+1)`` is rotated with site positions ``j`` and ``j+1``,
    including the wrapping bond, which is what makes ``Q_hat`` commute with the
    strictly periodic ``H_n``.
    """
    _check_even(L)
    alg = LocalAlgebra(n)
    w = alg.omega
    hop = np.kron(alg.sigma.conj().T, alg.sigma)
    bond = sum(np.linalg.matrix_power(hop, a) / (1 - w ** (-a)) for a in range(1, n))
    total = SparseOperator.zeros(n, L)
    for j in range(1, L + 1):
        total = total + embed(_to_model_frame(bond, n, j), (j, j + 1), L, n)
    return SparseOperator(total.matrix, n, L, hermitian=True)


def build_q_plus(n: int, L: int, boundary: str = "periodic") -> SparseOperator:
    """Onsager raising element; shifts the total charge by ``n``.

    ``boundary="open"`` drops the bond ``(L, 1)``.
    """
    _check_even(L)
    alg = LocalAlgebra(n)
    mp = np.linalg.matrix_power
    last = L if boundary == "periodic" else L - 1
    total = SparseOperator.zeros(n, L)
    for j in range(1, last + 1):
        bond = np.zeros((n * n, n * n), dtype=complex)
        for a in range(1, n):
            sign = (-1) ** ((n + 1) * j + a)
            bond += sign / np.sin(np.pi * a / n) * np.kron(mp(alg.s_plus, a), mp(alg.s_plus, n - a))
        total = total + embed(bond, (j, j + 1), L, n)
    return total


def build_q_l_plus(l: int, L: int, n: int = 2) -> SparseOperator:
    """Range-``l`` raising element ``sum_j (-1)^(j+1) S^+_j (prod S^z) S^+_{j+l}``."""
    if n != 2:
        raise ValueError("the Q_l^+ family is defined for n = 2")
    _check_even(L)
    if not 1 <= l < L / 2:
        raise ValueError(f"need 1 <= l < L/2, got l={l}, L={L}")
    alg = LocalAlgebra(2)
    factors = [alg.s_plus] + [alg.s_z] * (l - 1) + [alg.s_plus]
    local = factors[0]
    for f in factors[1:]:
        local = np.kron(local, f)
    total = SparseOperator.zeros(2, L)
    for j in range(1, L + 1):
        total = total + (-1) ** (j + 1) * embed(local, tuple(range(j, j + l + 1)), L, 2)
    return total


def _window_sum(n: int, L: int, width: int, ops: list[np.ndarray], weights: np.ndarray) -> SparseOperator:
    """``sum_j sum_k weights[j-1, k] ops[k]`` on windows centred on site ``j``."""
    half = width // 2
    total = SparseOperator.zeros(n, L)
    for j in range(1, L + 1):
        local = sum(weights[j - 1, k] * op for k, op in enumerate(ops) if weights[j - 1, k] != 0)
        if isinstance(local, int):
            continue
        sites = tuple(((j - 1 + s) % L) + 1 for s in range(-half, half + 1))
        total = total + embed(local, sites, L, n)
    return SparseOperator(total.matrix, n, L, hermitian=True)


def _n2_window_ops() -> list[np.ndarray]:
    v010 = _ket("010", 2)
    sym = _ket("011", 2) + _ket("110", 2)
    return [np.outer(v010, v010), 0.5 * np.outer(sym, sym),
            np.outer(v010, sym) + np.outer(sym, v010)]


def build_perturbation_n2(L: int, coefficients: PerturbationCoefficients) -> SparseOperator:
    """Three-site projector/mixing terms that annihilate the coherent state."""
    _check_even(L)
    if coefficients.n != 2 or coefficients.kind != "standard" or coefficients.L != L:
        raise ValueError("expected standard n = 2 coefficients for this L")
    return _window_sum(2, L, 3, _n2_window_ops(), coefficients.values)


def build_perturbation_n3(L: int, coefficients: PerturbationCoefficients,
                          include_last_projector: bool | None = None) -> SparseOperator:
    """Weighted rank-1 projectors onto the twelve forbidden three-site states."""
    _check_even(L)
    if coefficients.n != 3 or coefficients.L != L:
        raise ValueError("expected n = 3 coefficients for this L")
    if include_last_projector is None:
        include_last_projector = coefficients.include_last_projector
    states = N3_FORBIDDEN_STATES if include_last_projector else N3_FORBIDDEN_STATES[:-1]
    m = len(states)
    basis = np.array([v for _, v in states]).T
    weights = np.zeros((L, m, m))
    weights[:, np.arange(m), np.arange(m)] = coefficients.values[:, :m]
    if coefficients.mixing is not None:
        weights += coefficients.mixing[:, :m, :m]
    total = SparseOperator.zeros(3, L)
    for j in range(1, L + 1):
        if not np.any(weights[j - 1]):
            continue
        local = basis @ weights[j - 1] @ basis.T
        total = total + embed(local, (j - 1, j, j + 1) if j > 1 else (L, 1, 2), L, 3)
    return SparseOperator(total.matrix, 3, L, hermitian=True)


def build_perturbation_two_param(L: int, coefficients: PerturbationCoefficients) -> SparseOperator:
    """Five-site projectors protecting the two-parameter coherent states."""
    _check_even(L)
    if coefficients.kind != "two_param" or coefficients.L != L:
        raise ValueError("expected two-parameter coefficients for this L")
    ops = [np.outer(v, v) for _, v in TWO_PARAM_FORBIDDEN_STATES]
    return _window_sum(2, L, 5, ops, coefficients.values)


def build_window_projector_sum(L: int, pattern: str = "010", n: int = 2) -> SparseOperator:
    """``sum_j |pattern><pattern|`` on windows centred on each site."""
    if len(pattern) % 2 != 1:
        raise ValueError("pattern length must be odd")
    v = _ket(pattern, n)
    return _window_sum(n, L, len(pattern), [np.outer(v, v)], np.ones((L, 1)))


def build_zeeman(n: int, L: int, h: float) -> SparseOperator:
    return h * build_charge_q(n, L)


def build_h_s(spec: ModelSpec) -> SparseOperator:
    """``H_n + H_pert + h Q`` for the given model."""
    n, L = spec.n, spec.L
    total = build_h_n(n, L)
    c = spec.couplings
    if c is not None and (np.any(c.values != 0) or (c.mixing is not None and np.any(c.mixing))):
        if c.kind == "two_param":
            total = total + build_perturbation_two_param(L, c)
        elif n == 2:
            total = total + build_perturbation_n2(L, c)
        elif n == 3:
            total = total + build_perturbation_n3(L, c)
        else:
            raise ValueError(f"no perturbation is available for n = {n}")
    if spec.h != 0:
        total = total + build_zeeman(n, L, spec.h)
    return SparseOperator(total.matrix, n, L, hermitian=True)
