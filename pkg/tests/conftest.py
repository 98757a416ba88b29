from __future__ import annotations

import numpy as np
import pytest

SEMENTE = 20240501


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEMENTE)


def _degrau(n: int, p: int, m: int, norma2: float = 1.0) -> np.ndarray:
    X = np.zeros((n, p))
    X[m:] = np.sqrt(norma2 / p)
    return X


@pytest.fixture
def degrau():
    """Painel sem ruído: 0 até a linha m e Delta (||Delta||^2 = norma2) depois."""
    return _degrau
