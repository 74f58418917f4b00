"""
Tests para densidades espectrales, discretización y mapeo a cadena.
"""
import numpy as np
import pytest
from scipy.integrate import quad

from config.readout_config import BathConfig, BathKind, Kernel
from src.data.spectral_bath import (SpectralDensity, analytic_recurrence, calibrate_prefactor,
                                    chain_from_config, chain_map, chain_to_frame, discretize,
                                    effective_filtered_sdf, evaluate, integrate_moment,
                                    jacobi_quadrature, light_cone_length, reconstruct_sdf,
                                    reorganization_energy, spectral_density_from_config)
from src.utils.errors import (CalibrationImpossibleError, ConfigValidationError,
                              DimensionMismatchError, UnsupportedBathError)
from src.utils.logger import logger

KAPPA = 0.05
OMEGA_A = 7.5


def _purcell():
    return calibrate_prefactor(BathKind.PURCELL_NOTCH, KAPPA, OMEGA_A,
                               notch_depth=0.7, notch_sigma=0.1, notch_center=5.304)


def _exact_moment(J, k):
    lo, hi = J.support()
    points = list(J.breakpoints())
    return quad(lambda w: w ** k * evaluate(J, w), lo, hi, points=points[1:-1] or None,
                limit=400, epsabs=0, epsrel=1e-12)[0]


class TestCalibration:
    """Test suite para la calibración de α"""

    @pytest.mark.parametrize("kind", ["flat", "ohmic"])
    def test_two_pi_j_equals_kappa(self, kind):
        """2π·J(ω_a) = κ exactamente"""
        J = calibrate_prefactor(kind, KAPPA, OMEGA_A)
        assert 2 * np.pi * evaluate(J, OMEGA_A) == pytest.approx(KAPPA, rel=1e-14)

    def test_purcell_calibration_includes_notch(self):
        """El notch se incluye al calibrar"""
        J = _purcell()
        assert 2 * np.pi * evaluate(J, OMEGA_A) == pytest.approx(KAPPA, rel=1e-14)
        assert evaluate(J, 5.304) < 0.35 * 2 * J.alpha * 5.304

    def test_prefactor_values(self):
        """α_ohm = κ/(4π·ω_a) y α_flat = κ/(4π)"""
        assert calibrate_prefactor("ohmic", KAPPA, OMEGA_A).alpha == pytest.approx(5.305e-4, rel=1e-3)
        assert calibrate_prefactor("flat", KAPPA, OMEGA_A).alpha == pytest.approx(KAPPA / (4 * np.pi))

    def test_resonator_outside_band(self):
        """ω_a fuera del soporte: imposible calibrar"""
        with pytest.raises(CalibrationImpossibleError):
            calibrate_prefactor("flat", KAPPA, 13.0)

    def test_unknown_kind(self):
        """Tipo de baño desconocido"""
        with pytest.raises(UnsupportedBathError):
            SpectralDensity(kind="lorentzian", alpha=1.0)

    def test_invalid_notch_depth(self):
        """Profundidad de notch fuera de [0, 1)"""
        with pytest.raises(ConfigValidationError):
            SpectralDensity(kind=BathKind.PURCELL_NOTCH, alpha=1.0, notch_depth=1.0)

    def test_from_config_uses_qubit_as_notch_center(self):
        """Sin notch_center explícito el notch va en ω_q"""
        J = spectral_density_from_config(BathConfig(kind=BathKind.PURCELL_NOTCH), KAPPA, OMEGA_A, 5.304)
        assert J.notch_center == 5.304
        assert 5.304 - 0.5 in J.breakpoints()


class TestEvaluate:
    """Test suite para evaluate"""

    def test_zero_outside_support(self):
        """J = 0 fuera del soporte y para ω < 0"""
        flat = calibrate_prefactor("flat", KAPPA, OMEGA_A)
        ohm = calibrate_prefactor("ohmic", KAPPA, OMEGA_A)
        assert evaluate(flat, 2.9) == 0.0
        assert evaluate(flat, 12.1) == 0.0
        assert evaluate(ohm, -1.0) == 0.0
        assert evaluate(ohm, 15.5) == 0.0

    def test_vectorized(self):
        """Acepta arrays y devuelve arrays"""
        ohm = calibrate_prefactor("ohmic", KAPPA, OMEGA_A)
        w = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(evaluate(ohm, w), 2 * ohm.alpha * w)


class TestDiscretize:
    """Test suite para la cuadratura"""

    @pytest.mark.parametrize("kind", ["flat", "ohmic", "purcell"])
    def test_exact_point_count_and_mass(self, kind):
        """M puntos exactos y masa total = ∫J"""
        J = _purcell() if kind == "purcell" else calibrate_prefactor(kind, KAPPA, OMEGA_A)
        bath = discretize(J, 1000)
        assert bath.size == 1000
        assert bath.total_weight == pytest.approx(_exact_moment(J, 0), rel=1e-10)

    def test_single_mode_at_centroid(self):
        """M = 1: un modo en el centroide con todo el peso"""
        J = calibrate_prefactor("ohmic", KAPPA, OMEGA_A)
        bath = discretize(J, 1)
        assert bath.size == 1
        assert bath.omegas[0] == pytest.approx(10.0, rel=1e-10)
        assert bath.weights[0] == pytest.approx(J.alpha * 225.0, rel=1e-10)

    def test_invalid_size(self):
        """M < 1 no es válido"""
        with pytest.raises(DimensionMismatchError):
            discretize(calibrate_prefactor("flat", KAPPA, OMEGA_A), 0)

    def test_reorganization_energy(self):
        """λ = 2α·ω_c (ohmic) y 2α·ln(ω_max/ω_min) (flat)"""
        ohm = calibrate_prefactor("ohmic", KAPPA, OMEGA_A)
        flat = calibrate_prefactor("flat", KAPPA, OMEGA_A)
        assert reorganization_energy(ohm) == pytest.approx(2 * ohm.alpha * 15.0, rel=1e-10)
        assert reorganization_energy(flat) == pytest.approx(2 * flat.alpha * np.log(4.0), rel=1e-10)

    def test_integrate_moment(self):
        """Primer momento del baño plano"""
        flat = calibrate_prefactor("flat", KAPPA, OMEGA_A)
        assert integrate_moment(flat, 1) == pytest.approx(2 * flat.alpha * (144 - 9) / 2, rel=1e-12)


class TestChainMap:
    """Test suite para el mapeo a cadena"""

    def setup_method(self):
        """Setup para cada test"""
        self.ohm = calibrate_prefactor("ohmic", KAPPA, OMEGA_A)
        self.flat = calibrate_prefactor("flat", KAPPA, OMEGA_A)

    @pytest.mark.parametrize("kind", ["flat", "ohmic", "purcell"])
    def test_first_moments(self, kind):
        """k0² = ∫J y e_0 = ∫ωJ/∫J"""
        J = _purcell() if kind == "purcell" else calibrate_prefactor(kind, KAPPA, OMEGA_A)
        chain = chain_map(discretize(J, 1500), 150)
        m0, m1 = _exact_moment(J, 0), _exact_moment(J, 1)
        assert chain.k0 ** 2 == pytest.approx(m0, rel=1e-8)
        assert chain.e[0] == pytest.approx(m1 / m0, rel=1e-8)

    def test_ohmic_matches_jacobi_recurrence(self):
        """Coeficientes ohmic = recurrencia de Jacobi(0, 1) desplazada"""
        chain = chain_map(discretize(self.ohm, 1500), 150)
        exact = analytic_recurrence("ohmic", 150, alpha=self.ohm.alpha, omega_c=15.0)
        np.testing.assert_allclose(chain.e, exact.e, atol=1e-8)
        np.testing.assert_allclose(chain.t, exact.t, atol=1e-8)
        assert chain.k0 == pytest.approx(exact.k0, rel=1e-10)

    def test_flat_matches_legendre_recurrence(self):
        """Coeficientes planos = recurrencia de Legendre desplazada"""
        chain = chain_map(discretize(self.flat, 1500), 150)
        exact = analytic_recurrence("flat", 150, alpha=self.flat.alpha)
        np.testing.assert_allclose(chain.e, exact.e, atol=1e-8)
        np.testing.assert_allclose(chain.t, exact.t, atol=1e-8)

    def test_ohmic_asymptotics(self):
        """Las desviaciones de (ω_c/2, ω_c/4) decrecen monótonamente y quedan < 2e-4 para n > 100"""
        exact = analytic_recurrence("ohmic", 471, alpha=self.ohm.alpha)
        de = np.abs(exact.e[101:] - 7.5)
        dt = np.abs(exact.t[101:] - 3.75)
        assert np.all(de < 2e-4) and np.all(dt < 2e-4)
        assert np.all(np.diff(de) < 0) and np.all(np.diff(dt) < 0)

    def test_prefix_consistency(self):
        """Los primeros N coeficientes no dependen del largo pedido"""
        bath = discretize(self.ohm, 800)
        short, long = chain_map(bath, 30), chain_map(bath, 80)
        np.testing.assert_allclose(long.truncated(30).e, short.e, atol=1e-12)
        np.testing.assert_allclose(long.truncated(30).t, short.t, atol=1e-12)

    def test_chain_longer_than_modes(self):
        """N > M no es posible"""
        with pytest.raises(DimensionMismatchError):
            chain_map(discretize(self.flat, 10), 11)

    def test_single_site(self):
        """N = 1: solo k0 y e_0"""
        chain = chain_map(discretize(self.flat, 100), 1)
        assert chain.length == 1
        assert len(chain.t) == 0
        assert chain.e[0] == pytest.approx(7.5, rel=1e-12)

    def test_from_config(self):
        """chain_from_config usa M = factor·N"""
        chain = chain_from_config(self.flat, 20, BathConfig(kind=BathKind.FLAT))
        assert chain.length == 20

    def test_frame_export(self):
        """{i, e_i, t_i} con el último t vacío"""
        chain = chain_map(discretize(self.flat, 200), 20)
        frame = chain_to_frame(chain)
        assert list(frame.columns) == ["i", "e_i", "t_i"]
        assert len(frame) == 20
        assert np.isnan(frame["t_i"].iloc[-1])

    def test_light_cone(self):
        """Sitios alcanzados: 1.2·2·2π·t_∞·t"""
        chain = analytic_recurrence("ohmic", 200, alpha=self.ohm.alpha)
        expected = int(np.ceil(1.2 * 2 * 2 * np.pi * chain.t[-1] * 10.0))
        assert light_cone_length(chain, 10.0) == expected


class TestReconstruction:
    """Test suite para la reconstrucción de J"""

    def setup_method(self):
        """Setup para cada test"""
        self.flat = calibrate_prefactor("flat", KAPPA, OMEGA_A)
        self.chain = chain_map(discretize(self.flat, 1500), 150)

    def test_quadrature_weights_sum(self):
        """Σ w_k = k0²"""
        nodes, weights = jacobi_quadrature(self.chain)
        assert weights.sum() == pytest.approx(self.chain.k0 ** 2, rel=1e-10)
        assert np.all(np.diff(nodes) > 0)

    def test_flat_interior(self):
        """J reconstruida ≈ 2α en el interior de la banda"""
        grid = np.linspace(4.5, 10.5, 61)
        rec = reconstruct_sdf(self.chain, grid=grid)
        np.testing.assert_allclose(rec.values, 2 * self.flat.alpha, rtol=0.02)

    def test_notch_converges_with_length_and_broadening(self):
        """Cadena más larga y η más chico: el notch se reconstruye mejor"""
        J = _purcell()
        grid = np.linspace(3.0, 12.0, 901)
        exact = evaluate(J, grid)
        coarse, fine = [reconstruct_sdf(chain_map(discretize(J, 10 * n), n), grid=grid) for n in (40, 400)]
        assert fine.eta < coarse.eta

        def error(rec):
            return np.linalg.norm(rec.values - exact) / np.linalg.norm(exact)

        assert error(fine) < 0.6 * error(coarse)

    def test_lorentzian_kernel(self):
        """Núcleo lorentziano: positivo y acotado"""
        rec = reconstruct_sdf(self.chain, eta=0.2, kernel=Kernel.LORENTZIAN, grid=np.linspace(3, 12, 50))
        assert np.all(rec.values > 0)
        assert rec.eta == 0.2

    def test_narrow_broadening_alert(self):
        """η menor que el espaciado medio genera alerta"""
        reconstruct_sdf(self.chain, eta=1e-3, grid=np.linspace(3, 12, 10))
        alerts = logger.get_recent_events(limit=5, event="numerical_alert")
        assert any(a["alert_type"] == "broadening_below_spacing" for a in alerts)

    def test_effective_sdf_prepends_resonator(self):
        """J̃ tiene pico en ω_a y peso total g²"""
        jt = effective_filtered_sdf(self.chain, OMEGA_A, 0.3165, eta=0.05, grid=np.linspace(3, 12, 901))
        assert len(jt.nodes) == 151
        assert jt.weights.sum() == pytest.approx(0.3165 ** 2, rel=1e-10)
        assert abs(jt.omega[np.argmax(jt.values)] - OMEGA_A) < 0.1
