#!/usr/bin/env python3
# ======================================================================
# Tensors/StateFiles.py
#   • state JSON   {"dims": [...], "amps": [[re, im], ...]}
#   • complex matrix <-> nested [re, im] lists for reports / plans
#   Amplitudes are written as %.16e so a load reproduces them bit-exactly.
# ======================================================================

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from Tensors.TensorOps import StateVector
from Tensors.TensorParams import NORM_WARN, TOLERANCES


# ────────────────────────────────────────────────────────────────
# 1) complex helpers
# ----------------------------------------------------------------
def encode_matrix(mat: np.ndarray) -> list:
    mat = np.asarray(mat, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def decode_matrix(rows: Any, where: str = "matrix") -> np.ndarray:
    try:
        mat = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}: entries must be [re, im] pairs ({exc})") from None
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{where}: expected a square matrix, got shape {mat.shape}")
    return mat


def write_json(payload: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fout:
        json.dump(payload, fout, indent=2)
        fout.write("\n")


def read_json(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fin:
        return json.load(fin)


# ────────────────────────────────────────────────────────────────
# 2) state files
# ----------------------------------------------------------------
def state_from_dict(doc: dict, source: str = "state") -> StateVector:
    """Validate a decoded state document; renormalize with a warning when needed."""
    if not isinstance(doc, dict):
        raise ValueError(f"{source}: top level must be an object")
    for key in ("dims", "amps"):
        if key not in doc:
            raise ValueError(f"{source}: missing field '{key}'")

    dims = doc["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise ValueError(f"{source}: field 'dims' must be a list of positive integers")

    if not isinstance(doc["amps"], list):
        raise ValueError(f"{source}: field 'amps' must be a list of [re, im] pairs")
    amps = []
    for idx, pair in enumerate(doc["amps"]):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ValueError(f"{source}: field 'amps'[{idx}] must be a [re, im] pair")
        try:
            amps.append(complex(float(pair[0]), float(pair[1])))
        except (TypeError, ValueError):
            raise ValueError(f"{source}: field 'amps'[{idx}] is not numeric") from None

    expected = int(np.prod(dims)) if dims else 0
    if len(amps) != expected:
        raise ValueError(
            f"{source}: field 'amps' has {len(amps)} entries, dims {dims} need {expected}"
        )

    vec = np.array(amps, dtype=complex)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError(f"{source}: all amplitudes are zero")
    if abs(norm - 1.0) > NORM_WARN:
        print(
            f"[StateFiles] {source}: ||psi|| = {norm:.6g}, renormalized",
            file=sys.stderr,
        )
        return StateVector.from_amplitudes(dims, vec)
    if abs(norm - 1.0) > TOLERANCES.norm:
        return StateVector.from_amplitudes(dims, vec)
    return StateVector(tuple(dims), vec)


def load_state(path: str | Path) -> StateVector:
    return state_from_dict(read_json(path), source=str(path))


def state_to_json(state: StateVector) -> str:
    pairs = ",\n    ".join(f"[{z.real:.16e}, {z.imag:.16e}]" for z in state.amps)
    return (
        "{\n"
        f'  "dims": {json.dumps(list(state.dims))},\n'
        f'  "amps": [\n    {pairs}\n  ]\n'
        "}\n"
    )


def save_state(state: StateVector, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(state_to_json(state), encoding="utf-8")
