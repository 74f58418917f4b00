"""
Exponencial de Krylov (Lanczos) para la evolución local de TDVP.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from src.utils.errors import KrylovConvergenceError

HAPPY_BREAKDOWN = 1e-13


@dataclass
class KrylovInfo:
    dimension: int
    error_estimate: float
    happy_breakdown: bool


def krylov_expm(matvec: Callable[[np.ndarray], np.ndarray], v: np.ndarray, tau: complex,
                max_dim: int = 30, tol: float = 1e-12):
    """
    exp(τ·H)·v para H hermítico dado por `matvec` (τ = −i·dt para evolución hacia adelante).

    Lanczos con reortogonalización completa. El error se estima con el coeficiente del
    siguiente vector de Krylov: β_m·|[exp(τT)]_{m,0}|, relativo a ‖v‖.

    Returns:
        (vector resultado, KrylovInfo)
    """
    shape = v.shape
    v = np.asarray(v, dtype=complex).reshape(-1)
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0.0:
        return np.zeros(shape, dtype=complex), KrylovInfo(0, 0.0, True)

    n = v.size
    m_cap = min(max_dim, n)
    basis = np.zeros((m_cap + 1, n), dtype=complex)
    alpha = np.zeros(m_cap)
    beta = np.zeros(m_cap)
    basis[0] = v / beta0
    scale = 0.0

    for j in range(m_cap):
        w = matvec(basis[j])
        alpha[j] = float(np.real(np.vdot(basis[j], w)))
        w = w - alpha[j] * basis[j]
        if j > 0:
            w = w - beta[j - 1] * basis[j - 1]
        for _ in range(2):
            w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta[j] = float(np.linalg.norm(w))
        scale = max(scale, abs(alpha[j]), beta[j])

        m = j + 1
        T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
        coeffs = expm(tau * T)[:, 0]
        happy = beta[j] <= HAPPY_BREAKDOWN * max(scale, 1.0)
        error = beta[j] * abs(coeffs[-1])
        if happy or error < tol or m == n:
            result = beta0 * (basis[:m].T @ coeffs)
            return result.reshape(shape), KrylovInfo(m, error, happy)
        basis[j + 1] = w / beta[j]

    raise KrylovConvergenceError(
        f"Krylov exponential did not converge with dimension {m_cap}",
        diagnostics={"dimension": m_cap, "error_estimate": float(error), "tolerance": tol},
    )
