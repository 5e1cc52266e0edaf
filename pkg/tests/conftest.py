import numpy as np
import pytest

import StateFactory
from Tensors.TensorOps import StateVector


@pytest.fixture
def ghz3() -> StateVector:
    return StateFactory.ghz(3)


@pytest.fixture
def w3() -> StateVector:
    return StateFactory.w(3)


@pytest.fixture
def product3() -> StateVector:
    return StateFactory.product((2, 2, 2))


@pytest.fixture
def bell() -> StateVector:
    return StateFactory.ghz(2)


@pytest.fixture
def gsd333() -> StateVector:
    return StateFactory.completely_gsd((3, 3, 3), (0.5, 0.3, 0.2))


@pytest.fixture
def zero_bell() -> StateVector:
    """|0⟩ ⊗ (|00⟩ + |11⟩)/√2."""
    amps = np.zeros(8)
    amps[0b000] = amps[0b011] = 1 / np.sqrt(2)
    return StateVector((2, 2, 2), amps)


def ket(dims, *indices, coeffs=None) -> np.ndarray:
    """Σ_k coeffs[k] |indices[k]⟩ as a flat amplitude vector."""
    coeffs = coeffs if coeffs is not None else [1.0] * len(indices)
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    for c, index in zip(coeffs, indices):
        amps[np.ravel_multi_index(index, dims)] += c
    return amps
