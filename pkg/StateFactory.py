#!/usr/bin/env python3
"""
Named pure states for the marginals tool:

  • ghz / w / dicke / product          – textbook families
  • completely-gsd                     – Σ √λ_i |i⟩…|i⟩
  • haar                               – seeded Haar-random state
  • planted                            – blocks on disjoint computational boxes
  • scramble()                         – random local unitaries on any of them

Usage example
-------------
docker compose exec marginals-app \
  python3 main.py gen completely-gsd --dims 3,3,3 --lambda 0.5,0.3,0.2 -o /app/data/gsd.json
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Dict, Sequence

import numpy as np

from Tensors.TensorOps import (
    StateVector,
    apply_local_unitaries,
    haar_state,
    random_local_unitaries,
)

# ───────────────────────── configuration ──────────────────────────
KINDS = ("ghz", "w", "completely-gsd", "haar", "product", "dicke", "planted")

# λ must sum to 1 within this
LAMBDA_SUM_TOL = 1e-9
# ------------------------------------------------------------------


def _basis_state(dims: Sequence[int], index: Sequence[int]) -> np.ndarray:
    amps = np.zeros(math.prod(dims), dtype=complex)
    amps[np.ravel_multi_index(tuple(index), tuple(dims))] = 1.0
    return amps


def ghz(n: int, d: int = 2) -> StateVector:
    """Σ_i |i…i⟩ / √d."""
    if n < 2 or d < 2:
        raise ValueError(f"ghz needs n >= 2 and d >= 2, got n={n}, d={d}")
    dims = (d,) * n
    amps = sum(_basis_state(dims, (i,) * n) for i in range(d))
    return StateVector.from_amplitudes(dims, amps)


def dicke(n: int, k: int) -> StateVector:
    """Equal superposition of the n-qubit strings of Hamming weight k."""
    if n < 2 or not 0 <= k <= n:
        raise ValueError(f"dicke needs n >= 2 and 0 <= k <= n, got n={n}, k={k}")
    dims = (2,) * n
    amps = np.zeros(2 ** n, dtype=complex)
    for ones in itertools.combinations(range(n), k):
        index = [0] * n
        for pos in ones:
            index[pos] = 1
        amps += _basis_state(dims, index)
    return StateVector.from_amplitudes(dims, amps)


def w(n: int) -> StateVector:
    return dicke(n, 1)


def product(dims: Sequence[int]) -> StateVector:
    """|0…0⟩."""
    return StateVector(tuple(dims), _basis_state(dims, (0,) * len(dims)))


def completely_gsd(dims: Sequence[int], lambdas: Sequence[float]) -> StateVector:
    """Σ √λ_i |i⟩_1…|i⟩_n."""
    lambdas = [float(x) for x in lambdas]
    if not lambdas or any(x <= 0 for x in lambdas):
        raise ValueError(f"lambda must be positive, got {lambdas}")
    if abs(sum(lambdas) - 1.0) > LAMBDA_SUM_TOL:
        raise ValueError(f"lambda must sum to 1, got sum {sum(lambdas)!r}")
    if len(lambdas) > min(dims):
        raise ValueError(f"m = {len(lambdas)} terms do not fit dims {list(dims)}")
    amps = sum(math.sqrt(x) * _basis_state(dims, (i,) * len(dims)) for i, x in enumerate(lambdas))
    return StateVector.from_amplitudes(dims, amps)


def haar(dims: Sequence[int], seed: int) -> StateVector:
    return haar_state(dims, np.random.default_rng(seed))


def planted(dims: Sequence[int], blocks: int, seed: int) -> StateVector:
    """
    `blocks` random blocks, block j living on a box whose per-party value
    sets are disjoint from every other block's.
    """
    if blocks < 1 or any(d < blocks for d in dims):
        raise ValueError(f"{blocks} blocks need every party dimension >= {blocks}, got {list(dims)}")
    rng = np.random.default_rng(seed)
    values = []
    for d in dims:
        perm = rng.permutation(d)
        cuts = sorted(rng.choice(np.arange(1, d), size=blocks - 1, replace=False).tolist())
        edges = [0] + cuts + [d]
        values.append([sorted(perm[a:b].tolist()) for a, b in zip(edges, edges[1:])])

    amps = np.zeros(math.prod(dims), dtype=complex)
    for j in range(blocks):
        box = [values[i][j] for i in range(len(dims))]
        for index in itertools.product(*box):
            amps[np.ravel_multi_index(index, tuple(dims))] = rng.standard_normal() + 1j * rng.standard_normal()
    return StateVector.from_amplitudes(dims, amps)


def scramble(state: StateVector, seed: int) -> StateVector:
    """(⊗_i U_i)ψ for Haar-random U_i."""
    return apply_local_unitaries(state, random_local_unitaries(state.dims, np.random.default_rng(seed)))


# ───────────────────────────── main routine ───────────────────────
_BUILDERS: Dict[str, Callable[..., StateVector]] = {
    "ghz": lambda p: ghz(p["n"], p.get("d") or 2),
    "w": lambda p: w(p["n"]),
    "dicke": lambda p: dicke(p["n"], p["k"]),
    "product": lambda p: product(p["dims"]),
    "completely-gsd": lambda p: completely_gsd(p["dims"], p["lambdas"]),
    "haar": lambda p: haar(p["dims"], p["seed"]),
    "planted": lambda p: planted(p["dims"], p["blocks"], p["seed"]),
}


def generate_state(kind: str, *, scramble_seed: int | None = None, **params) -> StateVector:
    if kind not in _BUILDERS:
        raise ValueError(f"unknown kind '{kind}', expected one of {', '.join(KINDS)}")
    params = {k: v for k, v in params.items() if v is not None}
    try:
        state = _BUILDERS[kind](params)
    except KeyError as exc:
        raise ValueError(f"kind '{kind}' needs parameter {exc}") from None
    if scramble_seed is not None:
        state = scramble(state, scramble_seed)
    return state
