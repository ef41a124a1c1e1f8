"""Self-contained invariant checks at small sizes, used by the ``verify`` experiment."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .algebra import SparseOperator, local_operator
from .eigensolve import diagonalize
from .entanglement import (ee_from_density_matrix, reduced_density_matrix, scar_ee_closed_form,
                           scar_ee_numerical_obc, von_neumann_ee)
from .dynamics import fidelity_trace
from .models import (ModelSpec, PerturbationCoefficients, build_charge_q, build_charge_q_hat, build_h_n,
                     build_h_s, build_perturbation_n2, build_perturbation_n3, build_q_plus, substream)
from .tensornet import (coherent_mpo_tensors, coherent_state, coherent_state_series, ferromagnetic_state,
                        max_tower_power, mpo_apply, scar_tower)

__all__ = ["CheckResult", "run_checks", "CHECKS"]


class CheckResult(NamedTuple):
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def _rel_comm(a: SparseOperator, b: SparseOperator) -> float:
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    scale = a.frobenius_norm() * b.frobenius_norm()
    return float(np.sqrt(np.sum(np.abs(c.data) ** 2)) / scale) if scale else 0.0


def check_local_algebra() -> float:
    worst = 0.0
    for n in (2, 3, 4):
        sz, sp, sm = (local_operator(k, n) for k in ("s_z", "s_plus", "s_minus"))
        tau, sigma = local_operator("tau", n), local_operator("sigma", n)
        omega = np.exp(2j * np.pi / n)
        worst = max(worst, np.abs(sz @ sp - sp @ sz - sp).max(), np.abs(sz @ sm - sm @ sz + sm).max(),
                    np.abs(tau @ sigma - omega * sigma @ tau).max())
    return float(worst)


def check_commutators() -> float:
    worst = 0.0
    for n, L in ((2, 4), (2, 6), (3, 4)):
        H = build_h_n(n, L)
        for op in (build_charge_q(n, L), build_charge_q_hat(n, L), build_q_plus(n, L)):
            worst = max(worst, _rel_comm(op, H))
    return worst


def check_dolan_grady() -> float:
    worst = 0.0
    for n, L in ((2, 4), (3, 4)):
        Q, Qh = build_charge_q(n, L).toarray(), build_charge_q_hat(n, L).toarray()
        for a, b in ((Q, Qh), (Qh, Q)):
            c = a @ b - b @ a
            nested = a @ c - c @ a
            worst = max(worst, np.linalg.norm(a @ nested - nested @ a - n**2 * c) / np.linalg.norm(c))
    return float(worst)


def check_perturbation_annihilates_coherent() -> float:
    worst = 0.0
    for n, L in ((2, 6), (3, 4)):
        c = PerturbationCoefficients.random(n, L, seed=1, label="verify")
        P = build_perturbation_n2(L, c) if n == 2 else build_perturbation_n3(L, c)
        psi = coherent_state(n, 0.7 + 0.2j, L)
        worst = max(worst, np.linalg.norm(P @ psi) / (P.frobenius_norm() * np.linalg.norm(psi)))
    return float(worst)


def check_tower_residuals() -> float:
    worst = 0.0
    for n, L in ((2, 6), (3, 4)):
        spec = ModelSpec(n, L, 0.8, PerturbationCoefficients.random(n, L, seed=2, label="verify"))
        H = build_h_s(spec)
        for k in range(max_tower_power(n, L) + 1):
            psi = scar_tower(n, L, k)
            if not psi.any():
                continue
            hpsi = H @ psi
            energy = np.vdot(psi, hpsi)
            worst = max(worst, np.linalg.norm(hpsi - energy * psi))
    return float(worst)


def check_mps_routes() -> float:
    worst = 0.0
    for n, L in ((2, 6), (3, 4)):
        beta = 0.6 - 0.3j
        a = coherent_state(n, beta, L)
        b = coherent_state_series(n, beta, L)
        c = mpo_apply(coherent_mpo_tensors(n, beta, L), ferromagnetic_state(n, L))
        worst = max(worst, np.abs(a - b).max(), np.abs(a - c).max())
    return float(worst)


def check_closed_form_ee() -> float:
    return max(abs(scar_ee_closed_form(L).entropy - scar_ee_numerical_obc(L, L // 4)) for L in (4, 8, 12))


def check_vandermonde() -> float:
    bad = sum(scar_ee_closed_form(L).normalization != math.comb(3 * L // 4, L // 4) for L in range(4, 68, 4))
    return float(bad)


def check_schmidt_vs_density_matrix() -> float:
    rng = substream(0, "verify_state")
    v = rng.normal(size=2**8) + 1j * rng.normal(size=2**8)
    v /= np.linalg.norm(v)
    return abs(von_neumann_ee(v) - ee_from_density_matrix(reduced_density_matrix(v)))


def check_sector_spectrum() -> float:
    spec = ModelSpec(2, 8, 0.5, PerturbationCoefficients.random(2, 8, seed=3, channels=(1, 2), label="verify"))
    H = build_h_s(spec)
    full = diagonalize(H, vectors=False).eigenvalues
    parts = np.sort(np.concatenate([diagonalize(H, sector=q, vectors=False).eigenvalues
                                    for q in np.arange(-4, 5)]))
    return float(np.abs(full - parts).max())


def check_revival() -> float:
    L, h = 8, 1.0
    spec = ModelSpec(2, L, h, PerturbationCoefficients.random(2, L, seed=4, label="verify"))
    decomp = diagonalize(build_h_s(spec))
    psi = coherent_state(2, 0.5, L)
    psi /= np.linalg.norm(psi)
    f = fidelity_trace(psi, decomp, np.pi * np.arange(1, 6)).fidelity
    return float(np.abs(1 - f).max())


CHECKS: dict[str, tuple[Callable[[], float], float]] = {
    "local_algebra": (check_local_algebra, 1e-14),
    "commutators_with_h_n": (check_commutators, 1e-10),
    "dolan_grady": (check_dolan_grady, 1e-9),
    "perturbation_annihilates_coherent_state": (check_perturbation_annihilates_coherent, 1e-12),
    "scar_tower_residuals": (check_tower_residuals, 1e-10),
    "coherent_state_routes": (check_mps_routes, 1e-11),
    "closed_form_entropy": (check_closed_form_ee, 1e-10),
    "vandermonde_normalization": (check_vandermonde, 0.0),
    "schmidt_vs_density_matrix": (check_schmidt_vs_density_matrix, 1e-10),
    "sector_vs_full_spectrum": (check_sector_spectrum, 1e-9),
    "coherent_revivals": (check_revival, 1e-8),
}


def run_checks(names=None) -> list[CheckResult]:
    selected = CHECKS if names is None else {k: CHECKS[k] for k in names}
    return [CheckResult(name, fn(), tol) for name, (fn, tol) in selected.items()]


if __name__ == "__main__":
    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} (tol {r.tolerance:.0e})")
    raise SystemExit(0 if all(r.passed for r in results) else 1)
