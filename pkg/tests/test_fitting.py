"""
Tests para el ajuste exponencial de Γ10 y la pendiente lineal.
"""
import numpy as np
import pytest

from src.execution.fitting import MIN_SAMPLES, fit_gamma, linear_slope, relaxation_model
from src.utils.errors import FitQualityError

KAPPA = 0.05


def synthetic(gamma, offset, n=60, window=(0.2, 0.5)):
    kt = np.linspace(window[0], window[1], n)
    return kt, relaxation_model(kt / KAPPA, gamma, offset)


class TestFitGamma:
    """Test suite para fit_gamma"""

    def test_recovers_rate(self):
        """Serie exacta: Γ y meseta recuperados"""
        kt, y = synthetic(1.2e-2, 0.8)
        fit = fit_gamma(kt, y, KAPPA)
        assert fit.gamma == pytest.approx(1.2e-2, rel=1e-5)
        assert fit.offset == pytest.approx(0.8, rel=1e-5)
        assert fit.residual < 1e-8
        assert fit.gamma_mhz == pytest.approx(12.0, rel=1e-5)

    def test_noisy_series(self):
        """Ruido chico: residuo pequeño y Γ cercano"""
        rng = np.random.default_rng(0)
        kt, y = synthetic(1.0e-2, 1.0, n=200)
        fit = fit_gamma(kt, y + 1e-4 * rng.normal(size=kt.size), KAPPA)
        assert fit.gamma == pytest.approx(1.0e-2, rel=0.05)
        assert fit.residual < 1e-3

    def test_only_window_is_used(self):
        """Los puntos fuera de la ventana no participan"""
        kt, y = synthetic(1.0e-2, 1.0, n=100, window=(0.0, 1.0))
        y = y.copy()
        y[kt < 0.2] = 5.0
        fit = fit_gamma(kt, y, KAPPA)
        assert fit.n_points == int(np.sum((kt >= 0.2 - 1e-12) & (kt <= 0.5 + 1e-12)))
        assert fit.gamma == pytest.approx(1.0e-2, rel=1e-5)

    def test_too_few_samples(self):
        """Menos de MIN_SAMPLES en la ventana"""
        kt, y = synthetic(1.0e-2, 1.0, n=MIN_SAMPLES - 1)
        with pytest.raises(FitQualityError):
            fit_gamma(kt, y, KAPPA)

    def test_constant_series(self):
        """Σz constante: Γ = 0"""
        kt = np.linspace(0.2, 0.5, 40)
        fit = fit_gamma(kt, np.full(40, -1.0), KAPPA)
        assert fit.gamma == 0.0
        assert fit.residual == 0.0

    def test_non_monotonic(self):
        """Un rebote grande invalida el ajuste"""
        kt, y = synthetic(1.0e-2, 1.0, n=40)
        y = y + 0.2 * np.sin(40 * kt)
        with pytest.raises(FitQualityError):
            fit_gamma(kt, y, KAPPA)

    def test_model_at_zero(self):
        """El modelo parte de Σz = 1"""
        assert relaxation_model(np.array([0.0]), 2e-3, 0.4)[0] == pytest.approx(1.0)


class TestLinearSlope:
    """Test suite para linear_slope"""

    def test_slope_in_table_units(self):
        """Pendiente dividida por 2π"""
        kt = np.linspace(0.0, 0.6, 61)
        t = kt / KAPPA
        values = -1.0 + 2 * np.pi * 3e-5 * t
        slope, intercept = linear_slope(kt, values, KAPPA)
        assert slope == pytest.approx(3e-5)
        assert intercept == pytest.approx(-1.0)

    def test_needs_two_points(self):
        """Ventana sin puntos suficientes"""
        with pytest.raises(FitQualityError):
            linear_slope([0.0, 0.05], [1.0, 1.0], KAPPA)
