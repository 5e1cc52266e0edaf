#!/usr/bin/env python3
# ======================================================================
# Schmidt/SchmidtOps.py
#   • analyze / s_local_analyze – verdict, Schmidt number, certificate
#   • generic_partition         – distinct pivot spectrum, exact
#   • degenerate path           – commutant blocks + merge to fixpoint
#   • qubit path                – exact, through the generalized-GHZ form
#   • two_block_check / qubit_ghz_check
# ======================================================================

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from Schmidt.Certificates import (
    Partition,
    SchmidtProjectorSet,
    construct_projectors,
    merge_rows,
    verify_schmidt_projectors,
)
from Schmidt.Commutant import commutant_partition, correlation_operators
from Schmidt.Connectivity import UnionFind
from Schmidt.SchmidtParams import ANALYSIS_SEED, COMMUTANT_DRAWS
from Tensors.StateFiles import encode_matrix
from Tensors.TensorOps import (
    SchmidtData,
    StateVector,
    apply_local,
    reduced_matrix,
    schmidt_decompose,
    schmidt_in_basis,
    support_projector,
)
from Tensors.TensorParams import TOLERANCES, Tolerances

DETERMINED = "determined"
UNDETERMINED = "undetermined"

PATHS = ("generic", "degenerate-commutant", "bipartite", "qubit-fastpath")


# ────────────────────────────────────────────────────────────────
# 1) report types
# ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class AnalysisReport:
    verdict: str
    schmidt_number: int
    certificate: Optional[SchmidtProjectorSet]
    partition: Optional[Partition]
    path: str
    pivot: int
    parties: Tuple[int, ...]
    diagnostics: str = ""
    lower_bound: bool = False
    tolerances: Tolerances = field(default=TOLERANCES)
    ghz_form: Optional[GhzForm] = None

    @property
    def undetermined(self) -> bool:
        return self.verdict == UNDETERMINED

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "schmidt_number": self.schmidt_number,
            "lower_bound": self.lower_bound,
            "path": self.path,
            "pivot": self.pivot + 1,
            "parties": [i + 1 for i in self.parties],
            "partition": None if self.partition is None
            else [[i + 1 for i in block] for block in self.partition],
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "diagnostics": self.diagnostics,
            "ghz_form": None if self.ghz_form is None else self.ghz_form.to_dict(),
            "tolerances": self.tolerances.as_dict(),
        }


@dataclass(frozen=True, eq=False)
class GhzForm:
    """ψ = α|0̂…0̂⟩ + β|1̂…1̂⟩, column c of bases[i] being |ĉ⟩ on party i."""

    alpha: float
    beta: float
    bases: Tuple[np.ndarray, ...]
    residual: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "bases": [encode_matrix(b) for b in self.bases],
            "residual": self.residual,
        }


# ────────────────────────────────────────────────────────────────
# 2) partitions of the pivot's Schmidt indices
# ----------------------------------------------------------------
def _rest_index(pivot: int, party: int) -> int:
    return party if party < pivot else party - 1


def generic_partition(
    state: StateVector,
    pivot: int,
    parties: Sequence[int] | None = None,
    schmidt: SchmidtData | None = None,
    tol: Tolerances = TOLERANCES,
) -> Partition:
    """
    Components of the graph on Schmidt indices joining r, t when some
    certified party j ≠ pivot sees overlapping supports of ψ_r and ψ_t.
    """
    schmidt = schmidt or schmidt_decompose(state, pivot, tol)
    if not schmidt.is_generic():
        raise ValueError(
            f"pivot {pivot} has degenerate Schmidt coefficients; use the degenerate path"
        )
    parties = sorted(parties) if parties is not None else list(range(state.n))
    rest_dims = [d for k, d in enumerate(state.dims) if k != pivot]
    others = [j for j in parties if j != pivot]

    supports = {
        (r, j): support_projector(
            reduced_matrix(schmidt.right[:, r], rest_dims, [_rest_index(pivot, j)]), tol
        ).matrix
        for r in range(schmidt.rank)
        for j in others
    }
    uf = UnionFind(schmidt.rank)
    for r in range(schmidt.rank):
        for t in range(r + 1, schmidt.rank):
            for j in others:
                if np.linalg.norm(supports[(r, j)] @ supports[(t, j)]) > tol.orth:
                    uf.union(r, t)
                    break
    return tuple(tuple(g) for g in uf.groups())


def _commutant_adapted(
    state: StateVector,
    pivot: int,
    parties: Sequence[int],
    schmidt: SchmidtData,
    seed,
    draws: int,
    tol: Tolerances,
) -> Tuple[SchmidtData, Partition]:
    """Schmidt basis adapted to the commutant blocks, plus the induced partition."""
    corr = correlation_operators(state, pivot, parties=parties, schmidt=schmidt, tol=tol)
    blocks = commutant_partition(corr.operators, schmidt.rank, seed=seed, draws=draws, tol=tol)

    columns, labels, weights = [], [], []
    lam = np.diag(schmidt.coeffs)
    for label, q in enumerate(blocks):
        v = q.range_vectors()
        w, e = np.linalg.eigh(v.conj().T @ lam @ v)
        for c in range(e.shape[1]):
            columns.append(schmidt.left @ (v @ e[:, c]))
            labels.append(label)
            weights.append(w[c])

    order = sorted(range(len(columns)), key=lambda c: (-weights[c], c))
    left = np.column_stack([columns[c] for c in order])
    adapted = schmidt_in_basis(state, pivot, left)
    groups: Dict[int, List[int]] = {}
    for pos, c in enumerate(order):
        groups.setdefault(labels[c], []).append(pos)
    partition = tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0]))
    return adapted, partition


def _settle(
    state: StateVector,
    pivot: int,
    partition: Partition,
    schmidt: SchmidtData,
    parties: Sequence[int],
    tol: Tolerances,
) -> Tuple[Optional[SchmidtProjectorSet], Partition]:
    """Construct, verify, and on failure merge overlapping blocks until a fixpoint."""
    while len(partition) >= 2:
        cert = construct_projectors(state, pivot, partition, schmidt, parties, tol)
        if verify_schmidt_projectors(state, cert, tol):
            return cert, partition

        uf = UnionFind(len(partition))
        for j in parties:
            if j == pivot:
                continue
            for l in range(cert.L):
                for m in range(l + 1, cert.L):
                    if np.linalg.norm(cert.rows[l][j].matrix @ cert.rows[m][j].matrix) > tol.orth:
                        uf.union(l, m)
        merged = uf.groups()
        if len(merged) == len(partition):
            print(
                f"[Analyze] pivot {pivot + 1}: rows are orthogonal but fail verification, giving up",
                file=sys.stderr,
            )
            break
        print(
            f"[Analyze] pivot {pivot + 1}: merged {len(partition)} blocks into {len(merged)}",
            file=sys.stderr,
        )
        partition = tuple(
            tuple(sorted(i for l in group for i in partition[l])) for group in merged
        )
    return None, (tuple(range(schmidt.rank)),)


def _qubit_pivot_basis(
    state: StateVector,
    pivot: int,
    schmidt: SchmidtData,
    tol: Tolerances,
) -> Optional[np.ndarray]:
    """
    Pivot basis for an equal-weight qubit pivot: eigenvectors of the
    Hermitian part of a correlation operator with the widest spectral gap.
    In a generalized-GHZ state every correlation operator is diagonal in
    the pivot's GHZ basis, so any operator with a gap recovers it.
    """
    corr = correlation_operators(state, pivot, schmidt=schmidt, tol=tol)
    best, best_gap = None, tol.degen
    for a in corr.operators:
        for h in ((a + a.conj().T) / 2, (a - a.conj().T) / 2j):
            w, v = np.linalg.eigh(h)
            gap = float(w[-1] - w[0])
            if gap > best_gap:
                best, best_gap = v, gap
    return None if best is None else schmidt.left @ best


def _qubit_decision(
    state: StateVector,
    pivot: int,
    schmidt: SchmidtData,
    tol: Tolerances,
) -> Tuple[Optional[SchmidtProjectorSet], Partition, str]:
    """Exact for n ≥ 3 qubits: L ≤ 2, and L = 2 iff the state has a generalized-GHZ form."""
    parties = tuple(range(state.n))
    if schmidt.is_generic():
        partition = generic_partition(state, pivot, parties, schmidt, tol)
        note = f"pivot {pivot + 1} spectrum distinct, {len(partition)} component(s)"
        if len(partition) < 2:
            return None, partition, note
    else:
        left = _qubit_pivot_basis(state, pivot, schmidt, tol)
        if left is None:
            return None, ((0, 1),), "equal pivot weights, no correlation operator singles out a basis"
        schmidt = schmidt_in_basis(state, pivot, left)
        partition = ((0,), (1,))
        note = "equal pivot weights, basis from two-party correlations"
    cert, partition = _settle(state, pivot, partition, schmidt, parties, tol)
    return cert, partition, note


def _finer(cert: SchmidtProjectorSet, best: Optional[SchmidtProjectorSet]) -> bool:
    if best is None:
        return True
    if cert.L != best.L:
        return cert.L > best.L
    return cert.signature() < best.signature()


def select_pivot(schmidts: Dict[int, SchmidtData]) -> int:
    """Fewest degeneracy classes of size ≥ 2, then lowest index."""
    return min(
        schmidts,
        key=lambda k: (sum(1 for c in schmidts[k].degeneracy_classes if len(c) >= 2), k),
    )


# ────────────────────────────────────────────────────────────────
# 3) analysis pipeline
# ----------------------------------------------------------------
def _ordered(
    state: StateVector,
    cert: SchmidtProjectorSet,
    partition: Partition,
) -> Tuple[SchmidtProjectorSet, Partition]:
    """Rows by descending block weight, ties by the pivot projector's leading basis index."""
    weights = cert.block_weights(state)
    pivot = cert.pivot_used if cert.pivot_used is not None else cert.parties[0]
    leads = [int(np.argmax(np.diag(row[pivot].matrix).real)) for row in cert.rows]
    order = sorted(range(cert.L), key=lambda j: (-round(float(weights[j]), 10), leads[j]))
    reordered = SchmidtProjectorSet(
        rows=tuple(cert.rows[j] for j in order),
        dims=cert.dims,
        parties=cert.parties,
        pivot_used=cert.pivot_used,
        tolerances=cert.tolerances,
    )
    return reordered, tuple(partition[j] for j in order)


def _check_subset(state: StateVector, subset: Sequence[int]) -> Tuple[int, ...]:
    parties = tuple(sorted(set(int(i) for i in subset)))
    if len(parties) < 2:
        raise ValueError(f"subset {list(parties)} needs at least 2 parties")
    if any(not 0 <= i < state.n for i in parties):
        raise ValueError(f"subset {list(parties)} out of range for {state.n} parties")
    return parties


def _analyze(
    state: StateVector,
    parties: Tuple[int, ...],
    pivot: Optional[int],
    seed,
    draws: int,
    tol: Tolerances,
) -> AnalysisReport:
    full = len(parties) == state.n
    if pivot is not None and pivot not in parties:
        raise ValueError(f"pivot {pivot} is not in the party subset {list(parties)}")

    schmidts = {k: schmidt_decompose(state, k, tol) for k in parties}
    k = pivot if pivot is not None else select_pivot(schmidts)

    if full and state.n == 2:
        path = "bipartite"
    elif full and all(d == 2 for d in state.dims):
        path = "qubit-fastpath"
    elif schmidts[k].is_generic():
        path = "generic"
    else:
        path = "degenerate-commutant"

    def determined(diagnostics: str, lower_bound: bool = False) -> AnalysisReport:
        return AnalysisReport(
            verdict=DETERMINED,
            schmidt_number=1,
            certificate=None,
            partition=None,
            path=path,
            pivot=k,
            parties=parties,
            diagnostics=diagnostics,
            lower_bound=lower_bound,
            tolerances=tol,
        )

    thin = [i for i in parties if schmidts[i].rank == 1]
    if thin:
        return determined(f"party {thin[0] + 1} has a rank-1 support")

    lower_bound = False
    if path == "bipartite":
        partition = tuple((i,) for i in range(schmidts[k].rank))
        cert, partition = _settle(state, k, partition, schmidts[k], parties, tol)
        note = f"Schmidt rank {schmidts[k].rank}"
    elif path == "qubit-fastpath":
        cert, partition, note = _qubit_decision(state, k, schmidts[k], tol)
    elif schmidts[k].is_generic():
        partition = generic_partition(state, k, parties, schmidts[k], tol)
        note = f"pivot {k + 1} spectrum distinct, {len(partition)} component(s)"
        if len(partition) < 2:
            return determined(note)
        cert, partition = _settle(state, k, partition, schmidts[k], parties, tol)
    else:
        lower_bound = True
        cert, partition, k = _degenerate_search(state, parties, k, schmidts, seed, draws, tol)
        note = "degenerate spectra, commutant search over pivots"

    if cert is None:
        return determined(note, lower_bound)

    cert, partition = _ordered(state, cert, partition)
    ghz = None
    if full and all(d == 2 for d in state.dims):
        ghz = _ghz_form(state, cert, tol)
    return AnalysisReport(
        verdict=UNDETERMINED,
        schmidt_number=cert.L,
        certificate=cert,
        partition=partition,
        path=path,
        pivot=k,
        parties=parties,
        diagnostics=note,
        lower_bound=lower_bound,
        tolerances=tol,
        ghz_form=ghz,
    )


def _degenerate_search(
    state: StateVector,
    parties: Tuple[int, ...],
    first: int,
    schmidts: Dict[int, SchmidtData],
    seed,
    draws: int,
    tol: Tolerances,
):
    best = best_partition = None
    best_pivot = first
    for p in [first] + [i for i in parties if i != first]:
        schmidt = schmidts[p]
        if schmidt.is_generic():
            partition = generic_partition(state, p, parties, schmidt, tol)
        else:
            schmidt, partition = _commutant_adapted(
                state, p, parties, schmidt, [int(seed), p], draws, tol
            )
        if len(partition) < 2:
            continue
        cert, partition = _settle(state, p, partition, schmidt, parties, tol)
        if cert is not None and _finer(cert, best):
            best, best_partition, best_pivot = cert, partition, p
    return best, best_partition, best_pivot


def analyze(
    state: StateVector,
    *,
    pivot: int | None = None,
    seed: int = ANALYSIS_SEED,
    draws: int = COMMUTANT_DRAWS,
    tol: Tolerances = TOLERANCES,
) -> AnalysisReport:
    """Decide local undeterminedness; an undetermined verdict carries a verified certificate."""
    return _analyze(state, tuple(range(state.n)), pivot, seed, draws, tol)


def s_local_analyze(
    state: StateVector,
    subset: Sequence[int],
    *,
    pivot: int | None = None,
    seed: int = ANALYSIS_SEED,
    draws: int = COMMUTANT_DRAWS,
    tol: Tolerances = TOLERANCES,
) -> AnalysisReport:
    """Same pipeline with certificate rows required only on `subset` (identity elsewhere)."""
    return _analyze(state, _check_subset(state, subset), pivot, seed, draws, tol)


# ────────────────────────────────────────────────────────────────
# 4) convenience checks
# ----------------------------------------------------------------
def two_block_check(state: StateVector, tol: Tolerances = TOLERANCES) -> Optional[SchmidtProjectorSet]:
    report = analyze(state, tol=tol)
    if not report.undetermined:
        return None
    cert = report.certificate
    if cert.L > 2:
        cert = merge_rows(cert, [[0], list(range(1, cert.L))])
    return cert if verify_schmidt_projectors(state, cert, tol) else None


def qubit_ghz_check(state: StateVector, tol: Tolerances = TOLERANCES) -> Optional[GhzForm]:
    """α|0̂…0̂⟩ + β|1̂…1̂⟩ form with α ≥ β > 0, phases absorbed into party 0; None if determined."""
    if any(d != 2 for d in state.dims):
        raise ValueError(f"qubit_ghz_check needs all parties of dimension 2, got {list(state.dims)}")
    return analyze(state, tol=tol).ghz_form


def _ghz_form(state: StateVector, cert: SchmidtProjectorSet, tol: Tolerances) -> Optional[GhzForm]:
    if cert.L != 2 or any(proj.rank != 1 for row in cert.rows for proj in row):
        return None

    zero = [cert.rows[0][i].range_vectors()[:, 0] for i in range(state.n)]
    one = [cert.rows[1][i].range_vectors()[:, 0] for i in range(state.n)]

    def coefficient(vectors) -> complex:
        ops = [np.outer(np.eye(2)[0], v.conj()) for v in vectors]
        return complex(apply_local(state.amps, state.dims, ops).reshape(state.dims)[(0,) * state.n])

    a_hat, b_hat = coefficient(zero), coefficient(one)
    zero[0] = zero[0] * a_hat / abs(a_hat)
    one[0] = one[0] * b_hat / abs(b_hat)
    alpha, beta = abs(a_hat), abs(b_hat)
    if beta > alpha:
        alpha, beta, zero, one = beta, alpha, one, zero

    bases = tuple(np.column_stack([zero[i], one[i]]) for i in range(state.n))
    rebuilt = alpha * _product(zero) + beta * _product(one)
    residual = float(np.linalg.norm(rebuilt - state.amps))
    if residual > tol.recon:
        return None
    return GhzForm(alpha=float(alpha), beta=float(beta), bases=bases, residual=residual)


def _product(vectors) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for v in vectors:
        out = np.kron(out, v)
    return out
