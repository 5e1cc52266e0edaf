#!/usr/bin/env python3
# ======================================================================
# Schmidt/Connectivity.py
#   • UnionFind
#   • basis_connectivity_partition – nonzero index tuples joined when they
#     share a value at some party
#   • connectivity_certificate – projector rows from those components
# ======================================================================

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

from Schmidt.Certificates import SchmidtProjectorSet, verify_schmidt_projectors
from Schmidt.SchmidtParams import ZERO_AMPLITUDE
from Tensors.TensorOps import Projector, StateVector
from Tensors.TensorParams import TOLERANCES, Tolerances

IndexTuple = Tuple[int, ...]


class UnionFind:
    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # smaller root wins so group order follows element order
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def groups(self) -> List[List[int]]:
        """Components, each sorted, ordered by their smallest element."""
        out: Dict[int, List[int]] = {}
        for x in range(len(self.parent)):
            out.setdefault(self.find(x), []).append(x)
        return sorted(out.values(), key=lambda g: g[0])


def basis_connectivity_partition(
    state: StateVector,
    tol: float = ZERO_AMPLITUDE,
) -> List[List[IndexTuple]]:
    """
    Components of {I : |C_I| > tol · max|C_I|} under "agree at some party".

    Two or more components certify the state undetermined; a single
    component proves nothing, another product basis may still split.
    """
    mags = np.abs(state.amps)
    cutoff = tol * float(mags.max())
    flat = np.flatnonzero(mags > cutoff)
    tuples = [tuple(int(v) for v in np.unravel_index(idx, state.dims)) for idx in flat]

    uf = UnionFind(len(tuples))
    first_seen: Dict[Tuple[int, int], int] = {}
    for pos, index in enumerate(tuples):
        for party, value in enumerate(index):
            key = (party, value)
            if key in first_seen:
                uf.union(first_seen[key], pos)
            else:
                first_seen[key] = pos

    return [[tuples[pos] for pos in group] for group in uf.groups()]


def connectivity_certificate(
    state: StateVector,
    components: Sequence[Sequence[IndexTuple]],
    tol: Tolerances = TOLERANCES,
) -> SchmidtProjectorSet:
    """Row j, party i: projector onto the basis values party i takes inside component j."""
    if len(components) < 2:
        raise ValueError(f"need at least 2 components, got {len(components)}")
    rows = []
    for comp in components:
        row = []
        for party, d in enumerate(state.dims):
            diag = np.zeros(d)
            diag[sorted({index[party] for index in comp})] = 1.0
            row.append(Projector(np.diag(diag)))
        rows.append(tuple(row))
    cert = SchmidtProjectorSet(rows=tuple(rows), dims=state.dims, tolerances=tol)
    check = verify_schmidt_projectors(state, cert, tol)
    if not check:
        raise ValueError(f"connectivity rows do not certify the state: {'; '.join(check.failures)}")
    return cert
