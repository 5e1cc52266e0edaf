#!/usr/bin/env python3
# ======================================================================
# Schmidt/Commutant.py
#   • correlation_operators – pivot-side operators every certificate
#     row must commute with, compressed to supp(ρ_pivot)
#   • commutant_partition – finest common block structure of a family
#     of operators, from random Hermitian elements of its commutant
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from Schmidt.SchmidtParams import ANALYSIS_SEED, COMMUTANT_DRAWS
from Tensors.TensorOps import (
    Projector,
    SchmidtData,
    StateVector,
    reduced_matrix,
    schmidt_decompose,
)
from Tensors.TensorParams import TOLERANCES, Tolerances

# relative singular-value cut for the commutator null space
NULL_RCOND = 1e-8


@dataclass(frozen=True, eq=False)
class CorrelationOperators:
    basis: np.ndarray              # d_pivot × M, columns span supp(ρ_pivot)
    labels: Tuple[str, ...]
    operators: Tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.operators)


def _pair_marginal(state: StateVector, pivot: int, q: int) -> np.ndarray:
    """ρ_{pivot,q} as R[a, x, b, y] with a, b on the pivot and x, y on q."""
    lo, hi = sorted((pivot, q))
    rho = reduced_matrix(state.amps, state.dims, [lo, hi])
    d_lo, d_hi = state.dims[lo], state.dims[hi]
    rho = rho.reshape(d_lo, d_hi, d_lo, d_hi)
    if pivot == lo:
        return rho
    return rho.transpose(1, 0, 3, 2)


def correlation_operators(
    state: StateVector,
    pivot: int,
    parties: Sequence[int] | None = None,
    schmidt: SchmidtData | None = None,
    tol: Tolerances = TOLERANCES,
) -> CorrelationOperators:
    """
    U† F U for F = Tr_{pivot-complement}[(|x⟩⟨y| on q) |ψ⟩⟨ψ|] over every
    party q ≠ pivot whose removal still leaves a certified party traced
    out, plus U† ρ_pivot U. U holds the pivot's Schmidt vectors.
    """
    if state.n == 2:
        raise ValueError("correlation operators need n >= 3; the bipartite path covers n == 2")
    parties = set(parties) if parties is not None else set(range(state.n))
    schmidt = schmidt or schmidt_decompose(state, pivot, tol)
    u = schmidt.left

    labels: List[str] = ["rho"]
    ops: List[np.ndarray] = [np.diag(schmidt.coeffs).astype(complex)]
    for q in range(state.n):
        if q == pivot or not (parties - {pivot, q}):
            continue
        rho = _pair_marginal(state, pivot, q)
        for x in range(state.dims[q]):
            for y in range(state.dims[q]):
                block = rho[:, y, :, x]
                labels.append(f"party {q}: |{x}><{y}|")
                ops.append(u.conj().T @ block @ u)
    return CorrelationOperators(basis=u, labels=tuple(labels), operators=tuple(ops))


def _commutant_basis(ops: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Columns are row-major vec(X) of a basis of {X : [X, A] = [X, A†] = 0 ∀A}."""
    eye = np.eye(dim)
    constraints = []
    for a in ops:
        for b in (a, a.conj().T):
            constraints.append(np.kron(b, eye) - np.kron(eye, b.T))
    if not constraints:
        return np.eye(dim * dim, dtype=complex)
    stacked = np.vstack(constraints)
    if np.linalg.norm(stacked) == 0.0:
        return np.eye(dim * dim, dtype=complex)
    return null_space(stacked, rcond=NULL_RCOND)


def _block_diagonalizes(blocks: Sequence[Projector], ops: Sequence[np.ndarray], tol: Tolerances) -> bool:
    for a in ops:
        bound = tol.orth * max(1.0, float(np.linalg.norm(a)))
        for l, ql in enumerate(blocks):
            for m, qm in enumerate(blocks):
                if l != m and np.linalg.norm(ql.matrix @ a @ qm.matrix) > bound:
                    return False
    return True


def commutant_partition(
    ops: Sequence[np.ndarray],
    dim: int,
    seed: int | Sequence[int] = ANALYSIS_SEED,
    draws: int = COMMUTANT_DRAWS,
    tol: Tolerances = TOLERANCES,
) -> Tuple[Projector, ...]:
    """
    Finest verified family {Q_l}, Σ Q_l = I, with every op block-diagonal.

    Each draw takes a random Hermitian element of the commutant of
    {A, A†} and groups its eigenvectors by eigenvalue; the single block
    is always a valid answer.
    """
    ops = [np.asarray(a, dtype=complex) for a in ops]
    for a in ops:
        if a.shape != (dim, dim):
            raise ValueError(f"operator of shape {a.shape} in a family of dimension {dim}")
    trivial = (Projector.identity(dim),)
    if dim == 1:
        return trivial

    basis = _commutant_basis(ops, dim)
    rng = np.random.default_rng(seed)
    best = trivial
    best_key = (1, (dim,))
    for _ in range(draws):
        coeffs = rng.standard_normal(basis.shape[1]) + 1j * rng.standard_normal(basis.shape[1])
        x = (basis @ coeffs).reshape(dim, dim)
        h = (x + x.conj().T) / 2
        scale = float(np.linalg.norm(h))
        if scale == 0.0:
            continue
        w, v = np.linalg.eigh(h / scale)
        groups = [[0]]
        for i in range(1, dim):
            if w[i] - w[i - 1] <= tol.degen:
                groups[-1].append(i)
            else:
                groups.append([i])
        blocks = tuple(Projector.onto(v[:, list(g)]) for g in groups)
        key = (len(blocks), tuple(sorted(len(g) for g in groups)))
        better = key[0] > best_key[0] or (key[0] == best_key[0] and key[1] < best_key[1])
        if better and _block_diagonalizes(blocks, ops, tol):
            best, best_key = blocks, key
    return best
