#!/usr/bin/env python3
# ======================================================================
# Tensors/TensorOps.py
#   · StateVector / UnnormalizedVector   – amplitudes over explicit dims
#   · DensityOperator / Projector         – small dense Hermitian matrices
#   · SchmidtData                         – pivot-vs-rest decomposition
#   · partial traces, supports, local contractions, fidelity
#
#   Layout: amplitudes are row-major over dims, party 0 slowest-varying.
#   Every matricization below is derived from that single convention.
# ======================================================================

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from Tensors.TensorParams import TOLERANCES, Tolerances


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def _check_dims(dims: Iterable[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise ValueError(f"need at least 2 parties, got dims={list(dims)}")
    if any(d < 1 for d in dims):
        raise ValueError(f"party dimensions must be positive, got dims={list(dims)}")
    return dims


# ──────────────────────────────────────────────────────────────────────
#  PART A – domain types
# ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over `dims`."""

    dims: Tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self) -> None:
        dims = _check_dims(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise ValueError(
                f"{amps.size} amplitudes do not match dims={list(dims)} "
                f"(expected {math.prod(dims)})"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > TOLERANCES.norm:
            raise ValueError(f"state is not normalized: ||psi|| = {norm!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def from_amplitudes(cls, dims: Sequence[int], amps) -> "StateVector":
        """Build a state from raw amplitudes, dividing by their norm."""
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ValueError("the zero vector is not a state")
        return cls(tuple(dims), amps / norm)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amps.size

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class UnnormalizedVector:
    """A conditional block such as (⊗_i P^i)|ψ⟩. Never renormalized implicitly."""

    dims: Tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self) -> None:
        dims = _check_dims(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise ValueError(f"{amps.size} amplitudes do not match dims={list(dims)}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> StateVector:
        return StateVector.from_amplitudes(self.dims, self.amps)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian PSD matrix; trace below 1 is allowed for conditional blocks."""

    matrix: np.ndarray
    dims: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density operator must be square, got shape {m.shape}")
        if np.linalg.norm(m - m.conj().T) > TOLERANCES.herm:
            raise ValueError("density operator is not Hermitian")
        m = (m + m.conj().T) / 2
        if m.shape[0] and np.linalg.eigvalsh(m).min() < -TOLERANCES.eig:
            raise ValueError("density operator has a negative eigenvalue")
        dims = tuple(self.dims) or (m.shape[0],)
        if math.prod(dims) != m.shape[0]:
            raise ValueError(f"dims={list(dims)} do not match matrix size {m.shape[0]}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        """Ascending, as returned by eigvalsh."""
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector on a single party's space."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"projector must be square, got shape {m.shape}")
        if np.linalg.norm(m - m.conj().T) > TOLERANCES.herm:
            raise ValueError("projector is not Hermitian")
        if np.linalg.norm(m @ m - m) > TOLERANCES.idem:
            raise ValueError("projector is not idempotent")
        object.__setattr__(self, "matrix", _frozen((m + m.conj().T) / 2))

    @classmethod
    def identity(cls, dim: int) -> "Projector":
        return cls(np.eye(dim))

    @classmethod
    def zero(cls, dim: int) -> "Projector":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def onto(cls, vectors: np.ndarray) -> "Projector":
        """Projector onto the span of orthonormal columns."""
        vectors = np.asarray(vectors, dtype=complex)
        return cls(vectors @ vectors.conj().T)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix).real)))

    def range_vectors(self) -> np.ndarray:
        """Orthonormal columns spanning the range."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, w > 0.5]


@dataclass(frozen=True, eq=False)
class SchmidtData:
    """ψ = Σ_i √λ_i |left_i⟩_pivot |right_i⟩_rest, rest parties in index order."""

    pivot: int
    coeffs: np.ndarray
    left: np.ndarray
    right: np.ndarray
    degeneracy_classes: Tuple[Tuple[int, ...], ...]
    dims: Tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def reconstruct(self) -> np.ndarray:
        mat = (self.left * np.sqrt(self.coeffs)) @ self.right.T
        rest = tuple(d for k, d in enumerate(self.dims) if k != self.pivot)
        tensor = mat.reshape((self.dims[self.pivot],) + rest)
        return np.moveaxis(tensor, 0, self.pivot).reshape(-1)

    def is_generic(self) -> bool:
        """All nonzero coefficients pairwise distinct."""
        return all(len(c) == 1 for c in self.degeneracy_classes)


# ──────────────────────────────────────────────────────────────────────
#  PART B – contractions
# ---------------------------------------------------------------------


def apply_local(amps: np.ndarray, dims: Sequence[int], ops: Sequence) -> np.ndarray:
    """(⊗_i ops[i]) amps by per-axis contraction; None means identity."""
    tensor = np.asarray(amps, dtype=complex).reshape(dims)
    for axis, op in enumerate(ops):
        if op is None:
            continue
        mat = op.matrix if isinstance(op, Projector) else np.asarray(op)
        if mat.shape != (dims[axis], dims[axis]):
            raise ValueError(
                f"operator for party {axis} has shape {mat.shape}, "
                f"expected {(dims[axis], dims[axis])}"
            )
        tensor = np.moveaxis(np.tensordot(mat, tensor, axes=([1], [axis])), 0, axis)
    return tensor.reshape(-1)


def reduced_matrix(amps: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Tr over parties not in `keep` of |amps⟩⟨amps|, kept parties in ascending order."""
    keep = sorted(keep)
    traced = [k for k in range(len(dims)) if k not in keep]
    tensor = np.asarray(amps, dtype=complex).reshape(dims)
    rho = np.tensordot(tensor, tensor.conj(), axes=(traced, traced))
    size = math.prod(dims[k] for k in keep)
    rho = rho.reshape(size, size)
    return (rho + rho.conj().T) / 2


def matricize(amps: np.ndarray, dims: Sequence[int], pivot: int) -> np.ndarray:
    """Pivot-vs-rest matrix (d_pivot × Π_{k≠pivot} d_k)."""
    tensor = np.asarray(amps, dtype=complex).reshape(dims)
    return np.moveaxis(tensor, pivot, 0).reshape(dims[pivot], -1)


def _check_party(state, party: int) -> int:
    if not 0 <= party < len(state.dims):
        raise ValueError(f"party {party} out of range for {len(state.dims)} parties")
    return party


def partial_trace(state: StateVector, traced_parties: Iterable[int]) -> DensityOperator:
    """Reduced density operator on the parties not in `traced_parties`."""
    traced = set(int(k) for k in traced_parties)
    for k in traced:
        _check_party(state, k)
    if not traced:
        raise ValueError("traced_parties is empty")
    if len(traced) == state.n:
        raise ValueError("cannot trace out every party")
    keep = [k for k in range(state.n) if k not in traced]
    rho = reduced_matrix(state.amps, state.dims, keep)
    return DensityOperator(rho, tuple(state.dims[k] for k in keep))


def local_state(state: StateVector, party: int) -> DensityOperator:
    """1-party reduced state ρ_party."""
    _check_party(state, party)
    return partial_trace(state, [k for k in range(state.n) if k != party])


def degeneracy_classes(coeffs: np.ndarray, rel: float) -> Tuple[Tuple[int, ...], ...]:
    """Group descending coefficients whose consecutive gap is ≤ rel · max (transitive)."""
    if len(coeffs) == 0:
        return ()
    scale = float(np.max(coeffs))
    classes = [[0]]
    for i in range(1, len(coeffs)):
        if abs(coeffs[i - 1] - coeffs[i]) <= rel * scale:
            classes[-1].append(i)
        else:
            classes.append([i])
    return tuple(tuple(c) for c in classes)


def schmidt_decompose(
    state: StateVector,
    pivot: int,
    tol: Tolerances = TOLERANCES,
) -> SchmidtData:
    """SVD of the pivot-vs-rest matricization, singular values ≤ τ_rank·s_max dropped."""
    _check_party(state, pivot)
    mat = matricize(state.amps, state.dims, pivot)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    keep = s > tol.rank * s[0]
    coeffs = s[keep] ** 2
    return SchmidtData(
        pivot=pivot,
        coeffs=coeffs,
        left=u[:, keep],
        right=vh[keep].T,
        degeneracy_classes=degeneracy_classes(coeffs, tol.degen),
        dims=state.dims,
    )


def schmidt_in_basis(state: StateVector, pivot: int, left: np.ndarray) -> SchmidtData:
    """
    Schmidt data relative to given orthonormal pivot vectors.

    The columns of `left` must be eigenvectors of ρ_pivot spanning its
    support, already ordered by descending eigenvalue; the right vectors
    are the normalized conditional states ⟨left_i|ψ⟩.
    """
    _check_party(state, pivot)
    mat = matricize(state.amps, state.dims, pivot)
    blocks = left.conj().T @ mat
    weights = np.sum(np.abs(blocks) ** 2, axis=1)
    if np.any(weights <= 0):
        raise ValueError("a pivot vector lies outside the support of the state")
    right = (blocks / np.sqrt(weights)[:, None]).T
    return SchmidtData(
        pivot=pivot,
        coeffs=weights,
        left=np.asarray(left, dtype=complex),
        right=right,
        degeneracy_classes=degeneracy_classes(weights, TOLERANCES.degen),
        dims=state.dims,
    )


# ──────────────────────────────────────────────────────────────────────
#  PART C – supports and comparisons
# ---------------------------------------------------------------------


def support_projector(rho, tol: Tolerances = TOLERANCES) -> Projector:
    """Projector onto eigenvectors with eigenvalue > τ_rank · (largest eigenvalue)."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    top = float(w.max()) if w.size else 0.0
    if top <= 0.0:
        raise ValueError("zero operator has no support")
    return Projector.onto(v[:, w > tol.rank * top])


def support_rank(state: StateVector, party: int, tol: Tolerances = TOLERANCES) -> int:
    return support_projector(local_state(state, party), tol).rank


def orthogonal_supports(a, b, tol: Tolerances = TOLERANCES) -> bool:
    """True iff ‖P_supp(a) · P_supp(b)‖_F ≤ τ_orth."""
    pa = support_projector(a, tol)
    pb = support_projector(b, tol)
    if pa.dim != pb.dim:
        raise ValueError(f"dimension mismatch: {pa.dim} vs {pb.dim}")
    return float(np.linalg.norm(pa.matrix @ pb.matrix)) <= tol.orth


def apply_local_projectors(state, projectors: Sequence) -> UnnormalizedVector:
    """(⊗_i P^i)|ψ⟩ without renormalizing; entries may be None for identity."""
    if len(projectors) != len(state.dims):
        raise ValueError(f"got {len(projectors)} projectors for {len(state.dims)} parties")
    return UnnormalizedVector(state.dims, apply_local(state.amps, state.dims, projectors))


def fidelity(a, b) -> float:
    """|⟨a|b⟩| clipped to [0, 1]."""
    if tuple(a.dims) != tuple(b.dims):
        raise ValueError(f"dims mismatch: {list(a.dims)} vs {list(b.dims)}")
    return min(1.0, float(abs(np.vdot(a.amps, b.amps))))


def canonical_phase(state: StateVector) -> StateVector:
    """Same ray, largest-magnitude amplitude made real positive."""
    idx = int(np.argmax(np.abs(state.amps)))
    phase = state.amps[idx] / abs(state.amps[idx])
    return StateVector(state.dims, state.amps / phase)


# ──────────────────────────────────────────────────────────────────────
#  PART D – random local structure
# ---------------------------------------------------------------------


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(dim, random_state=rng)


def haar_state(dims: Sequence[int], rng: np.random.Generator) -> StateVector:
    size = math.prod(dims)
    amps = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return StateVector.from_amplitudes(dims, amps)


def random_local_unitaries(dims: Sequence[int], rng: np.random.Generator) -> list:
    return [haar_unitary(d, rng) for d in dims]


def apply_local_unitaries(state: StateVector, unitaries: Sequence) -> StateVector:
    return StateVector.from_amplitudes(state.dims, apply_local(state.amps, state.dims, unitaries))
