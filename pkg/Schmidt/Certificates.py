#!/usr/bin/env python3
# ======================================================================
# Schmidt/Certificates.py
#   • SchmidtProjectorSet – L rows × n parties of local projectors
#   • construct_projectors – rows from a partition of pivot Schmidt indices
#   • verify_schmidt_projectors – per-clause check record, never raises
#   • refine_to_support / merge_rows – derived certificates
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from Tensors.StateFiles import encode_matrix
from Tensors.TensorOps import (
    Projector,
    SchmidtData,
    StateVector,
    UnnormalizedVector,
    apply_local,
    apply_local_projectors,
    local_state,
    reduced_matrix,
    schmidt_decompose,
    support_projector,
)
from Tensors.TensorParams import TOLERANCES, Tolerances

Partition = Tuple[Tuple[int, ...], ...]


# ────────────────────────────────────────────────────────────────
# 1) certificate type
# ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SchmidtProjectorSet:
    """
    rows[j][i] is P_j^i. Parties outside `parties` carry identities and
    take no part in the orthogonality / nonnull clauses.
    """

    rows: Tuple[Tuple[Projector, ...], ...]
    dims: Tuple[int, ...]
    parties: Tuple[int, ...] = ()
    pivot_used: Optional[int] = None
    tolerances: Tolerances = field(default=TOLERANCES)

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        rows = tuple(tuple(row) for row in self.rows)
        if not rows:
            raise ValueError("a certificate needs at least one row")
        for j, row in enumerate(rows):
            if len(row) != len(dims):
                raise ValueError(f"row {j} has {len(row)} projectors for {len(dims)} parties")
            for i, proj in enumerate(row):
                if proj.dim != dims[i]:
                    raise ValueError(
                        f"row {j}, party {i}: projector dim {proj.dim} != {dims[i]}"
                    )
        parties = tuple(sorted(set(self.parties))) or tuple(range(len(dims)))
        if any(not 0 <= i < len(dims) for i in parties):
            raise ValueError(f"parties {list(parties)} out of range")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "parties", parties)

    @property
    def L(self) -> int:
        return len(self.rows)

    @property
    def full(self) -> bool:
        return len(self.parties) == len(self.dims)

    def block(self, state: StateVector, j: int) -> UnnormalizedVector:
        return apply_local_projectors(state, self.rows[j])

    def block_weights(self, state: StateVector) -> np.ndarray:
        return np.array([self.block(state, j).norm ** 2 for j in range(self.L)])

    def signature(self) -> Tuple[int, ...]:
        """Sorted ranks of the pivot (or first certified party) projectors."""
        party = self.pivot_used if self.pivot_used is not None else self.parties[0]
        return tuple(sorted(row[party].rank for row in self.rows))

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "parties": [i + 1 for i in self.parties],
            "pivot": None if self.pivot_used is None else self.pivot_used + 1,
            "rows": [
                [encode_matrix(proj.matrix) for proj in row] for row in self.rows
            ],
            "tolerances": self.tolerances.as_dict(),
        }


@dataclass(frozen=True)
class CertificateCheck:
    """Per-clause verdicts; truthy iff every clause passed."""

    enough_rows: bool
    projectors_valid: bool
    orthogonal: bool
    nonnull: bool
    reconstructs: bool
    orthogonality_residual: float = 0.0
    min_action: float = 0.0
    reconstruction_residual: float = 0.0
    refinement_residual: float = 0.0
    failures: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "passed": bool(self),
            "failures": list(self.failures),
            "orthogonality_residual": self.orthogonality_residual,
            "min_action": self.min_action,
            "reconstruction_residual": self.reconstruction_residual,
            "refinement_residual": self.refinement_residual,
        }


# ────────────────────────────────────────────────────────────────
# 2) verification
# ----------------------------------------------------------------
def verify_schmidt_projectors(
    state: StateVector,
    cand: SchmidtProjectorSet,
    tol: Tolerances | None = None,
) -> CertificateCheck:
    tol = tol or cand.tolerances
    if tuple(state.dims) != cand.dims:
        return CertificateCheck(
            False, False, False, False, False,
            failures=(f"dimensions: state {list(state.dims)} vs certificate {list(cand.dims)}",),
        )

    failures = []
    enough_rows = cand.L >= 2
    if not enough_rows:
        failures.append(f"rows: L = {cand.L} < 2")

    projectors_valid = True
    for row in cand.rows:
        for proj in row:
            m = proj.matrix
            if (
                np.linalg.norm(m - m.conj().T) > tol.herm
                or np.linalg.norm(m @ m - m) > tol.idem
            ):
                projectors_valid = False
    if not projectors_valid:
        failures.append("projectors: a row entry is not an orthogonal projector")

    orth_res = 0.0
    for i in cand.parties:
        for j in range(cand.L):
            for jj in range(j + 1, cand.L):
                prod = cand.rows[j][i].matrix @ cand.rows[jj][i].matrix
                orth_res = max(orth_res, float(np.linalg.norm(prod)))
    orthogonal = orth_res <= tol.orth
    if not orthogonal:
        failures.append(f"orthogonality: max ||P_j P_j'|| = {orth_res:.3e}")

    min_action = np.inf
    for i in cand.parties:
        for row in cand.rows:
            ops = [None] * state.n
            ops[i] = row[i]
            min_action = min(min_action, float(np.linalg.norm(apply_local(state.amps, state.dims, ops))))
    min_action = float(min_action) if np.isfinite(min_action) else 0.0
    nonnull = min_action > tol.rank
    if not nonnull:
        failures.append(f"nonnull: min ||P_j^i psi|| = {min_action:.3e}")

    total = sum(cand.block(state, j).amps for j in range(cand.L))
    recon_res = float(np.linalg.norm(state.amps - total))
    reconstructs = recon_res <= tol.recon
    if not reconstructs:
        failures.append(f"reconstruction: ||psi - sum of blocks|| = {recon_res:.3e}")

    refine_res = 0.0
    for i in cand.parties:
        supp = support_projector(local_state(state, i), tol).matrix
        summed = sum(row[i].matrix for row in cand.rows)
        refine_res = max(refine_res, float(np.linalg.norm(summed - supp)))

    return CertificateCheck(
        enough_rows=enough_rows,
        projectors_valid=projectors_valid,
        orthogonal=orthogonal,
        nonnull=nonnull,
        reconstructs=reconstructs,
        orthogonality_residual=orth_res,
        min_action=min_action,
        reconstruction_residual=recon_res,
        refinement_residual=refine_res,
        failures=tuple(failures),
    )


# ────────────────────────────────────────────────────────────────
# 3) construction
# ----------------------------------------------------------------
def check_partition(partition: Sequence[Sequence[int]], size: int) -> Partition:
    blocks = tuple(tuple(sorted(int(i) for i in block)) for block in partition)
    flat = sorted(i for block in blocks for i in block)
    if any(len(b) == 0 for b in blocks) or flat != list(range(size)):
        raise ValueError(f"partition {[list(b) for b in blocks]} is not a partition of 0..{size - 1}")
    return blocks


def construct_projectors(
    state: StateVector,
    pivot: int,
    partition: Sequence[Sequence[int]],
    schmidt: SchmidtData | None = None,
    parties: Sequence[int] | None = None,
    tol: Tolerances = TOLERANCES,
) -> SchmidtProjectorSet:
    """
    Candidate rows for a partition of the pivot's Schmidt indices: the pivot
    row is the span of its Schmidt vectors, every other certified party gets
    the support of the row's conditional block. Not certified.
    """
    schmidt = schmidt or schmidt_decompose(state, pivot, tol)
    blocks = check_partition(partition, schmidt.rank)
    if len(blocks) < 2:
        raise ValueError(f"need L >= 2 blocks, got {len(blocks)}")
    parties = tuple(sorted(parties)) if parties is not None else tuple(range(state.n))
    if pivot not in parties:
        raise ValueError(f"pivot {pivot} is not among the certified parties {list(parties)}")

    rows = []
    for block in blocks:
        pivot_proj = Projector.onto(schmidt.left[:, list(block)])
        ops = [None] * state.n
        ops[pivot] = pivot_proj
        conditional = apply_local(state.amps, state.dims, ops)
        row = []
        for i, d in enumerate(state.dims):
            if i == pivot:
                row.append(pivot_proj)
            elif i in parties:
                row.append(support_projector(reduced_matrix(conditional, state.dims, [i]), tol))
            else:
                row.append(Projector.identity(d))
        rows.append(tuple(row))

    return SchmidtProjectorSet(
        rows=tuple(rows),
        dims=state.dims,
        parties=parties,
        pivot_used=pivot,
        tolerances=tol,
    )


# ────────────────────────────────────────────────────────────────
# 4) derived certificates
# ----------------------------------------------------------------
def _nearest_projector(mat: np.ndarray) -> Projector:
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    return Projector.onto(v[:, w > 0.5])


def refine_to_support(state: StateVector, cert: SchmidtProjectorSet) -> SchmidtProjectorSet:
    """Replace each P_j^i by P_supp P_j^i P_supp, P_supp the support of ρ_i."""
    supports = {
        i: support_projector(local_state(state, i), cert.tolerances).matrix
        for i in cert.parties
    }
    rows = []
    for row in cert.rows:
        rows.append(tuple(
            _nearest_projector(supports[i] @ proj.matrix @ supports[i]) if i in supports else proj
            for i, proj in enumerate(row)
        ))
    return SchmidtProjectorSet(
        rows=tuple(rows),
        dims=cert.dims,
        parties=cert.parties,
        pivot_used=cert.pivot_used,
        tolerances=cert.tolerances,
    )


def merge_rows(cert: SchmidtProjectorSet, groups: Sequence[Sequence[int]]) -> SchmidtProjectorSet:
    """Coarser certificate: each group of rows becomes one row of summed projectors."""
    blocks = check_partition(groups, cert.L)
    rows = []
    for block in blocks:
        row = []
        for i, d in enumerate(cert.dims):
            if i in cert.parties:
                row.append(_nearest_projector(sum(cert.rows[j][i].matrix for j in block)))
            else:
                row.append(Projector.identity(d))
        rows.append(tuple(row))
    return SchmidtProjectorSet(
        rows=tuple(rows),
        dims=cert.dims,
        parties=cert.parties,
        pivot_used=cert.pivot_used,
        tolerances=cert.tolerances,
    )
