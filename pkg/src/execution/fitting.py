"""
Ajustes de series temporales: relajación exponencial con meseta y pendiente lineal.

Las tasas se reportan en GHz (unidades de tabla): la envolvente decae como exp(−2π·Γ·t[ns]).
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit

from src.utils.errors import FitQualityError

TWO_PI = 2.0 * np.pi
MIN_SAMPLES = 20
MAX_RESIDUAL = 0.05
MONOTONIC_TOL = 0.1


@dataclass
class FitResult:
    gamma: float  # GHz
    offset: float  # meseta c
    residual: float  # RMS normalizado por la amplitud (1 + c)
    n_points: int

    @property
    def gamma_mhz(self) -> float:
        return 1e3 * self.gamma


def relaxation_model(t_ns: np.ndarray, gamma: float, offset: float) -> np.ndarray:
    """⟨Σz(t)⟩ = (1 + c)·exp(−2πΓt) − c"""
    return (1.0 + offset) * np.exp(-TWO_PI * gamma * t_ns) - offset


def _window(kt: np.ndarray, window: Tuple[float, float]) -> np.ndarray:
    return (kt >= window[0] - 1e-12) & (kt <= window[1] + 1e-12)


def fit_gamma(kt: Sequence[float], sigma_z: Sequence[float], kappa: float,
              window: Tuple[float, float] = (0.2, 0.5), max_residual: float = MAX_RESIDUAL) -> FitResult:
    """
    Ajusta Γ10 por mínimos cuadrados no lineales sobre la ventana en κt/2π.

    Args:
        kt: tiempos adimensionales κt/2π
        sigma_z: ⟨Σz⟩ en esos tiempos
        kappa: κ en GHz (t[ns] = kt/κ)

    Raises:
        FitQualityError: pocas muestras, serie no monótona o residuo > max_residual
    """
    kt = np.asarray(kt, dtype=float)
    y = np.asarray(sigma_z, dtype=float)
    mask = _window(kt, window)
    n = int(mask.sum())
    if n < MIN_SAMPLES:
        raise FitQualityError(f"Only {n} samples in fit window {window} (need {MIN_SAMPLES})")
    t = kt[mask] / kappa
    y = y[mask]

    if np.ptp(y) < 1e-12:
        return FitResult(gamma=0.0, offset=float("nan"), residual=0.0, n_points=n)

    running_min = np.minimum.accumulate(y)
    rebound = float(np.max(y - running_min))
    if rebound > MONOTONIC_TOL * max(np.ptp(y), 1e-12) and rebound > 1e-3:
        raise FitQualityError(f"Series is not monotonic in fit window (rebound {rebound:.3e})",
                              diagnostics={"rebound": rebound})

    # Estimado inicial con meseta en −1
    guess_gamma = max(-np.log(np.clip((y[-1] + 1.0) / 2.0, 1e-12, 1.0)) / (TWO_PI * t[-1]), 1e-8)
    try:
        popt, _ = curve_fit(relaxation_model, t, y, p0=[guess_gamma, 1.0],
                            bounds=([0.0, -0.999], [np.inf, 1e3]),
                            ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=20000)
    except (RuntimeError, ValueError) as e:
        raise FitQualityError(f"Exponential fit failed: {e}")

    gamma, offset = float(popt[0]), float(popt[1])
    rms = float(np.sqrt(np.mean((relaxation_model(t, gamma, offset) - y) ** 2)))
    residual = rms / (1.0 + offset)
    if residual > max_residual:
        raise FitQualityError(f"Fit residual {residual:.3e} exceeds {max_residual}",
                              diagnostics={"gamma": gamma, "offset": offset, "residual": residual})
    return FitResult(gamma=gamma, offset=offset, residual=residual, n_points=n)


def linear_slope(kt: Sequence[float], values: Sequence[float], kappa: float,
                 window: Tuple[float, float] = (0.1, 0.5)) -> Tuple[float, float]:
    """
    Pendiente de una serie contra t en unidades de tabla (d/dt[ns] dividido por 2π).
    Returns: (pendiente, ordenada en t=0)
    """
    kt = np.asarray(kt, dtype=float)
    y = np.asarray(values, dtype=float)
    mask = _window(kt, window)
    if mask.sum() < 2:
        raise FitQualityError(f"Need at least two samples in window {window}")
    slope, intercept = np.polyfit(kt[mask] / kappa, y[mask], 1)
    return float(slope / TWO_PI), float(intercept)
