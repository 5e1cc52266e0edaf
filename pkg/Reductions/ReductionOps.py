#!/usr/bin/env python3
# ======================================================================
# Reductions/ReductionOps.py
#   • ReductionFamily        – base state + certificate, members Σ e^{iθ_j} blocks
#   • verify_same_reductions – (n−1)-party marginals compared per party
#   • distinctness           – different rays
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from Schmidt.Certificates import SchmidtProjectorSet, verify_schmidt_projectors
from Schmidt.SchmidtOps import analyze
from Schmidt.SchmidtParams import ANALYSIS_SEED
from Tensors.TensorOps import (
    StateVector,
    apply_local_unitaries,
    canonical_phase,
    fidelity,
    haar_unitary,
    matricize,
    reduced_matrix,
    schmidt_decompose,
)
from Tensors.TensorParams import TOLERANCES, Tolerances

# kept-space size above which marginals are compared through a QR factor
DIRECT_LIMIT = 4096


# ────────────────────────────────────────────────────────────────
# 1) family
# ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ReductionFamily:
    base: StateVector
    certificate: SchmidtProjectorSet
    special_case: bool = False
    blocks: Tuple[np.ndarray, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        cert = self.certificate
        if not cert.full:
            raise ValueError("a reduction family needs a certificate on every party")
        check = verify_schmidt_projectors(self.base, cert)
        if not check:
            raise ValueError(
                "certificate does not verify for the base state: " + "; ".join(check.failures)
            )
        blocks = tuple(cert.block(self.base, j).amps for j in range(cert.L))
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_state(
        cls,
        state: StateVector,
        *,
        seed: int = ANALYSIS_SEED,
        tol: Tolerances = TOLERANCES,
    ) -> "ReductionFamily":
        """Family generated by the finest certificate `analyze` finds."""
        report = analyze(state, seed=seed, tol=tol)
        if not report.undetermined:
            raise ValueError("state is determined by its marginals and has no family")
        special = state.n == 2 and any(
            len(c) >= 2 for c in schmidt_decompose(state, 0, tol).degeneracy_classes
        )
        return cls(base=state, certificate=report.certificate, special_case=special)

    @property
    def L(self) -> int:
        return self.certificate.L

    def weights(self) -> np.ndarray:
        return np.array([float(np.vdot(b, b).real) for b in self.blocks])


def family_member(fam: ReductionFamily, theta: Sequence[float]) -> StateVector:
    """Normalized Σ_j e^{iθ_j} ⊗_i P_j^i ψ, in canonical global phase."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != fam.L:
        raise ValueError(f"theta has {theta.size} entries, the family has L = {fam.L}")
    amps = sum(np.exp(1j * t) * block for t, block in zip(theta, fam.blocks))
    return canonical_phase(StateVector.from_amplitudes(fam.base.dims, amps))


def _commuting_unitary(fam: ReductionFamily, rng: np.random.Generator) -> np.ndarray:
    """Block-Haar unitary on each eigenspace of ρ_0, identity on its kernel."""
    schmidt = schmidt_decompose(fam.base, 0, fam.certificate.tolerances)
    d = fam.base.dims[0]
    u = np.eye(d, dtype=complex) - schmidt.left @ schmidt.left.conj().T
    for cls in schmidt.degeneracy_classes:
        v = schmidt.left[:, list(cls)]
        u = u + v @ haar_unitary(len(cls), rng) @ v.conj().T
    return u


def sample_member(fam: ReductionFamily, seed: int) -> StateVector:
    rng = np.random.default_rng(seed)
    if fam.special_case:
        ops = [_commuting_unitary(fam, rng)] + [None] * (fam.base.n - 1)
        return canonical_phase(apply_local_unitaries(fam.base, ops))
    return family_member(fam, rng.uniform(0.0, 2 * np.pi, fam.L))


# ────────────────────────────────────────────────────────────────
# 2) comparisons
# ----------------------------------------------------------------
@dataclass(frozen=True)
class ReductionCheck:
    residuals: Tuple[float, ...]
    tolerance: float

    def __bool__(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals)

    def to_dict(self) -> dict:
        return {
            "same_reductions": bool(self),
            "tolerance": self.tolerance,
            "residuals": {str(i + 1): r for i, r in enumerate(self.residuals)},
        }


def _marginal_gap(a: StateVector, b: StateVector, traced: int) -> float:
    """‖Tr_traced|a⟩⟨a| − Tr_traced|b⟩⟨b|‖_F."""
    keep = [k for k in range(a.n) if k != traced]
    if a.dim // a.dims[traced] <= DIRECT_LIMIT:
        diff = reduced_matrix(a.amps, a.dims, keep) - reduced_matrix(b.amps, b.dims, keep)
        return float(np.linalg.norm(diff))
    # ρ_a − ρ_b = C J C† with C = [Ã  B̃]; with C = QR the norm is ‖R J R†‖_F
    d = a.dims[traced]
    c = np.hstack([matricize(a.amps, a.dims, traced).T, matricize(b.amps, b.dims, traced).T])
    r = np.linalg.qr(c, mode="r")
    ra, rb = r[:, :d], r[:, d:]
    return float(np.linalg.norm(ra @ ra.conj().T - rb @ rb.conj().T))


def verify_same_reductions(
    a: StateVector,
    b: StateVector,
    tol: Tolerances = TOLERANCES,
) -> ReductionCheck:
    if tuple(a.dims) != tuple(b.dims):
        raise ValueError(f"dims mismatch: {list(a.dims)} vs {list(b.dims)}")
    residuals = tuple(_marginal_gap(a, b, i) for i in range(a.n))
    return ReductionCheck(residuals=residuals, tolerance=tol.recon)


def distinctness(a: StateVector, b: StateVector, tol: Tolerances = TOLERANCES) -> bool:
    """True iff a and b are different rays."""
    return fidelity(a, b) < 1.0 - tol.recon
