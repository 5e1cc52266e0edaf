# Tensors/TensorParams.py
# ======================================================================
# Numerical tolerances shared by every module. Values come from the
# repository .env (or the process environment) with the defaults below.
# ======================================================================

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace
from os.path import abspath, dirname, join

from dotenv import load_dotenv

dotenv_path = join(dirname(abspath(__file__)), '..', '.env')
load_dotenv(dotenv_path)


def _env_float(key: str, default: float) -> float:
    raw = os.getenv(key)
    return float(raw) if raw not in (None, "") else default


@dataclass(frozen=True)
class Tolerances:
    """Absolute (norm/herm/idem/orth/recon/eig) and relative (rank/degen) cut-offs."""

    norm: float = 1e-10
    herm: float = 1e-10
    idem: float = 1e-10
    rank: float = 1e-8
    degen: float = 1e-8
    orth: float = 1e-9
    recon: float = 1e-9
    eig: float = 1e-9

    def as_dict(self) -> dict:
        return asdict(self)

    def with_check_tolerance(self, value: float) -> "Tolerances":
        """Same record with the orthogonality / reconstruction / eigen checks set to `value`."""
        return replace(self, orth=value, recon=value, eig=value)


TOLERANCES = Tolerances(
    norm=_env_float("TAU_NORM", 1e-10),
    herm=_env_float("TAU_HERM", 1e-10),
    idem=_env_float("TAU_IDEM", 1e-10),
    rank=_env_float("TAU_RANK", 1e-8),
    degen=_env_float("TAU_DEGEN", 1e-8),
    orth=_env_float("TAU_ORTH", 1e-9),
    recon=_env_float("TAU_RECON", 1e-9),
    eig=_env_float("TAU_EIG", 1e-9),
)

# amplitudes read from disk are renormalized with a warning past this
NORM_WARN = _env_float("NORM_WARN", 1e-6)

DATA_DIR = os.getenv("DATA_DIR") or "/app/data"
