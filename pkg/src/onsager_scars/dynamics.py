"""Exact time evolution by spectral resolution, fidelity and entanglement traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .algebra import BasisIndex
from .eigensolve import EigenDecomposition
from .entanglement import von_neumann_ee

__all__ = [
    "DynamicsTrace",
    "evolve",
    "fidelity_trace",
    "ee_trace",
    "revival_period",
    "default_time_grid",
    "random_state",
    "product_state",
]


@dataclass(frozen=True, eq=False)
class DynamicsTrace:
    times: np.ndarray
    fidelity: np.ndarray | None = None
    entropy: np.ndarray | None = None
    label: str = ""
    provenance: dict[str, Any] = field(default_factory=dict)


def revival_period(n: int, h: float) -> float:
    """Period ``2 pi / (n h)`` of the coherent-state orbit."""
    if h == 0:
        raise ValueError("no revival period at zero field")
    return 2 * math.pi / (n * abs(h))


def default_time_grid(n: int, h: float, points: int = 400, periods: int = 5) -> np.ndarray:
    return np.linspace(0.0, periods * revival_period(n, h), points)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized complex Gaussian vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def product_state(label: str, n: int = 2) -> np.ndarray:
    """Basis vector for a digit string such as ``"1010"``."""
    basis = BasisIndex(len(label), n)
    v = np.zeros(basis.dimension, dtype=complex)
    v[basis.from_string(label)] = 1.0
    return v


def _coefficients(state: np.ndarray, decomp: EigenDecomposition) -> np.ndarray:
    if decomp.eigenvectors is None:
        raise ValueError("time evolution needs a decomposition with eigenvectors")
    psi = np.asarray(state, dtype=complex)
    if decomp.basis is not None:
        outside = np.linalg.norm(psi) ** 2 - np.linalg.norm(psi[decomp.basis]) ** 2
        if outside > 1e-12:
            raise ValueError("state has weight outside the diagonalized charge sector")
    return decomp.eigenvectors.conj().T @ decomp.to_local(psi)


def _lift(local: np.ndarray, decomp: EigenDecomposition) -> np.ndarray:
    if decomp.basis is None:
        return local
    out = np.zeros((decomp.n**decomp.L,) + local.shape[1:], dtype=complex)
    out[decomp.basis] = local
    return out


def evolve(state: np.ndarray, decomp: EigenDecomposition, t: float) -> np.ndarray:
    """``exp(-i H t)|state>`` in the full product basis."""
    c = _coefficients(state, decomp)
    return _lift(decomp.eigenvectors @ (np.exp(-1j * decomp.eigenvalues * t) * c), decomp)


def _evolved_batch(c: np.ndarray, decomp: EigenDecomposition, times: np.ndarray) -> np.ndarray:
    phases = np.exp(-1j * np.outer(decomp.eigenvalues, times))
    return decomp.eigenvectors @ (phases * c[:, None])


def fidelity_trace(initial: np.ndarray, decomp: EigenDecomposition, times, label: str = "") -> DynamicsTrace:
    """``F(t) = |<phi|exp(-i H t)|phi>|`` evaluated from spectral weights."""
    times = np.asarray(times, dtype=float)
    c = _coefficients(initial, decomp)
    weights = np.abs(c) ** 2
    amp = np.exp(-1j * np.outer(times, decomp.eigenvalues)) @ weights
    return DynamicsTrace(times, fidelity=np.abs(amp), label=label)


def ee_trace(initial: np.ndarray, decomp: EigenDecomposition, times, cut: int | None = None,
             label: str = "", chunk: int = 64) -> DynamicsTrace:
    """Half-chain entropy of the evolved state on a time grid."""
    times = np.asarray(times, dtype=float)
    c = _coefficients(initial, decomp)
    out = np.empty(len(times))
    for start in range(0, len(times), chunk):
        block = _lift(_evolved_batch(c, decomp, times[start:start + chunk]), decomp)
        for j in range(block.shape[1]):
            psi = block[:, j]
            out[start + j] = von_neumann_ee(psi / np.linalg.norm(psi), cut, decomp.n)
    return DynamicsTrace(times, entropy=out, label=label)
