"""
Observables del baño: ocupaciones de los modos normales (base estrella) a partir de
correlaciones de la cadena, error de saturación del resonador y extracción de picos.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import eigh_tridiagonal
from scipy.signal import find_peaks

from src.data.spectral_bath import ChainCoefficients
from src.tensor import local_ops
from src.tensor.mps import MatrixProductState, SiteLayout, expectation
from src.utils.errors import ChainMismatchError, DimensionMismatchError, PeakNotFoundError
from src.utils.logger import logger

PREFIX_TOL = 1e-9
NEGATIVE_OCCUPATION_TOL = 1e-10


@dataclass
class StarSpectrum:
    """Ocupaciones ⟨n_ω⟩ por modo (sin normalizar por Δω) en las frecuencias de Jacobi"""
    omegas: np.ndarray
    occupations: np.ndarray
    M: int
    kt: float = float("nan")

    @property
    def total(self) -> float:
        return float(np.sum(self.occupations))

    @property
    def spacing(self) -> np.ndarray:
        return grid_spacing(self.omegas)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "omega_GHz": self.omegas,
            "n_omega": self.occupations,
            "time_kt_over_2pi": self.kt,
            "M": self.M,
        })


def grid_spacing(omegas: np.ndarray) -> np.ndarray:
    """Δω_k = (ω_{k+1} − ω_{k−1})/2, diferencias de un lado en los bordes"""
    w = np.asarray(omegas, dtype=float)
    if len(w) < 2:
        return np.zeros_like(w)
    out = np.empty_like(w)
    out[1:-1] = 0.5 * (w[2:] - w[:-2])
    out[0] = w[1] - w[0]
    out[-1] = w[-1] - w[-2]
    return out


def check_chain_prefix(simulated: ChainCoefficients, extended: ChainCoefficients, tol: float = PREFIX_TOL):
    """La cadena extendida debe prolongar la simulada (mismos e, t, k0 en el prefijo)"""
    n = simulated.length
    if extended.length < n:
        raise DimensionMismatchError(f"Extended chain ({extended.length}) shorter than simulated ({n})")
    diffs = [abs(simulated.k0 - extended.k0)]
    diffs.append(float(np.max(np.abs(simulated.e - extended.e[:n]))))
    if n > 1:
        diffs.append(float(np.max(np.abs(simulated.t - extended.t[: n - 1]))))
    worst = max(diffs)
    if worst > tol:
        raise ChainMismatchError(f"Extended chain deviates from simulated prefix by {worst:.2e}",
                                 diagnostics={"max_deviation": worst})


def star_occupations(C: np.ndarray, chain_M: ChainCoefficients,
                     simulated: Optional[ChainCoefficients] = None, kt: float = float("nan")) -> StarSpectrum:
    """
    ⟨n_ω_k⟩ = (Vᵀ C_pad V)_kk con V los autovectores de la matriz de Jacobi M×M
    y C_pad la matriz de correlación N×N rellenada con ceros.
    """
    C = np.asarray(C)
    N = C.shape[0]
    M = chain_M.length
    if C.shape != (N, N):
        raise DimensionMismatchError(f"Correlation matrix must be square, got {C.shape}")
    if M < N:
        raise DimensionMismatchError(f"Padded chain length M={M} smaller than N={N}")
    if simulated is not None:
        if simulated.length != N:
            raise DimensionMismatchError(f"Simulated chain has {simulated.length} sites, C has {N}")
        check_chain_prefix(simulated, chain_M)

    if M == 1:
        nodes, vecs = np.array([chain_M.e[0]]), np.ones((1, 1))
    else:
        nodes, vecs = eigh_tridiagonal(chain_M.e, chain_M.t)
    top = vecs[:N]
    occupations = np.real(np.einsum("ik,ij,jk->k", top, C, top, optimize=True))

    if occupations.min() < -NEGATIVE_OCCUPATION_TOL:
        logger.log_numerical_alert("negative_star_occupation", {"min": float(occupations.min()), "kt": kt})
    return StarSpectrum(omegas=nodes, occupations=occupations, M=M, kt=kt)


def saturation_error(psi: MatrixProductState, site: int = SiteLayout.RESONATOR) -> float:
    """δ_sat = 1 − ⟨[a, a†]⟩ con operadores truncados (= d_a · población del último nivel)"""
    d = psi.dims[site]
    return float(np.real(expectation(psi, {site: local_ops.commutator_deficit(d)})))


# ---------- PICOS ----------

def parabolic_vertex(x: np.ndarray, y: np.ndarray, k: int) -> Tuple[float, float]:
    """Vértice de la parábola por los puntos k−1, k, k+1 (grilla no uniforme)"""
    if k <= 0 or k >= len(x) - 1:
        return float(x[k]), float(y[k])
    x0, x1, x2 = x[k - 1], x[k], x[k + 1]
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1), float(y1)
    c = y1 - a * x1 ** 2 - b * x1
    xv = -b / (2 * a)
    return float(xv), float(a * xv ** 2 + b * xv + c)


def _window(spectrum: StarSpectrum, center: float, half_width: float):
    mask = np.abs(spectrum.omegas - center) <= half_width
    if mask.sum() < 3:
        raise PeakNotFoundError(f"Fewer than three modes within {half_width} GHz of {center}")
    idx = np.flatnonzero(mask)
    return idx, spectrum.omegas[idx], spectrum.occupations[idx]


def resonator_peak(spectrum: StarSpectrum, center: float, half_width: float = 0.5) -> float:
    """Máximo global en la ventana, refinado parabólicamente"""
    idx, x, y = _window(spectrum, center, half_width)
    k = int(idx[np.argmax(y)])
    return parabolic_vertex(spectrum.omegas, spectrum.occupations, k)[0]


def qubit_peak(spectrum: StarSpectrum, center: float, half_width: float = 0.5,
               prominence_factor: float = 3.0) -> float:
    """
    Pico local más prominente cerca de ω_q; exige prominencia ≥ factor × mediana de la ventana.
    """
    idx, x, y = _window(spectrum, center, half_width)
    floor = float(np.median(np.abs(y)))
    peaks, props = find_peaks(y, prominence=prominence_factor * floor if floor > 0 else None)
    if len(peaks) == 0:
        raise PeakNotFoundError(f"No qubit peak within {half_width} GHz of {center} GHz",
                                diagnostics={"floor": floor})
    best = peaks[int(np.argmax(props["prominences"]))]
    return parabolic_vertex(spectrum.omegas, spectrum.occupations, int(idx[best]))[0]
