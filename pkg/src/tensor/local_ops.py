"""
Operadores locales (bosónicos truncados y de qubit), construidos una vez por dimensión.
Los arrays devueltos son de solo lectura: copiar antes de modificar.
"""
from functools import lru_cache

import numpy as np


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=None)
def identity(d: int) -> np.ndarray:
    return _frozen(np.eye(d, dtype=complex))


@lru_cache(maxsize=None)
def annihilation(d: int) -> np.ndarray:
    """a truncado: a|n⟩ = sqrt(n)|n−1⟩"""
    return _frozen(np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex))


@lru_cache(maxsize=None)
def creation(d: int) -> np.ndarray:
    return _frozen(annihilation(d).conj().T.copy())


@lru_cache(maxsize=None)
def number(d: int) -> np.ndarray:
    return _frozen(np.diag(np.arange(d, dtype=float)).astype(complex))


@lru_cache(maxsize=None)
def quadrature(d: int) -> np.ndarray:
    """x = a + a†"""
    return _frozen(annihilation(d) + creation(d))


@lru_cache(maxsize=None)
def commutator_deficit(d: int) -> np.ndarray:
    """1 − [a, a†] truncado: nulo salvo en el último nivel (valor d)"""
    a, ad = annihilation(d), creation(d)
    return _frozen(identity(d) - (a @ ad - ad @ a))


# Qubit en orden |0⟩, |1⟩: σz = diag(−1, +1) para que |1⟩ sea el estado excitado
@lru_cache(maxsize=None)
def sigma_z() -> np.ndarray:
    return _frozen(np.diag([-1.0, 1.0]).astype(complex))


@lru_cache(maxsize=None)
def sigma_x() -> np.ndarray:
    return _frozen(np.array([[0, 1], [1, 0]], dtype=complex))

