"""
Tests para el modelo qubit + resonador, la base vestida y las tasas analíticas.
"""
import numpy as np
import pytest
from scipy.linalg import eigh

from config.readout_config import BathKind
from src.data.spectral_bath import ChainCoefficients, SpectralDensity, calibrate_prefactor
from src.system.system_model import (CircuitParams, build_undriven_hamiltonian, dressed_basis,
                                     dressed_projectors, dressed_spectrum_frame, drive_coefficient,
                                     effective_qubit_excitation, fgr_rate, is_dispersive,
                                     lindblad_rates, parity_operator, perturbative_amplitudes,
                                     system_operators, truncation_dims)
from src.tensor import local_ops
from src.utils.errors import ConfigValidationError, DimensionMismatchError, LabelingError
from src.utils.logger import logger

KAPPA = 0.05


class TestHamiltonian:
    """Test suite para H_S"""

    def test_decoupled_spectrum(self):
        """g = λ = 0: E = ∓ω_q/2 + n·ω_a"""
        p = CircuitParams(omega_q=5.304, omega_a=7.5, g=0.0)
        basis = dressed_basis(build_undriven_hamiltonian(p, 12), 12)
        for j in (0, 1):
            for n in range(basis.d_label):
                assert basis.energy(j, n) == pytest.approx((j - 0.5) * 5.304 + n * 7.5, abs=1e-12)

    def test_decoupled_labels_are_product_states(self):
        """g = 0: la etiqueta (j, n) apunta al estado producto"""
        p = CircuitParams(omega_q=5.304, omega_a=7.5, g=0.0)
        basis = dressed_basis(build_undriven_hamiltonian(p, 12), 12)
        for (j, n) in basis.labels:
            assert abs(basis.vector(j, n)[j * 12 + n]) == pytest.approx(1.0)

    def test_hermitian_and_parity_conserving(self):
        """H_S es hermítico y conmuta con la paridad"""
        p = CircuitParams(omega_q=5.304, omega_a=7.5, g=0.3165, lam=0.01)
        H = build_undriven_hamiltonian(p, 20)
        P = parity_operator(20)
        assert np.allclose(H, H.conj().T)
        assert np.allclose(H @ P, P @ H)

    def test_qubit_gap(self, reference_circuit):
        """Gap vestido ≈ ω_q − g²/Δ + g²/Σ y convergido en d_a"""
        p = reference_circuit
        gap30 = dressed_basis(build_undriven_hamiltonian(p, 30), 30).qubit_gap
        gap60 = dressed_basis(build_undriven_hamiltonian(p, 60), 60).qubit_gap
        estimate = p.omega_q - p.g ** 2 / p.detuning + p.g ** 2 / p.sum_frequency
        assert gap30 == pytest.approx(gap60, abs=1e-10)
        assert gap30 == pytest.approx(estimate, rel=0.01)

    def test_small_cutoff(self, reference_circuit):
        """d_a < 2 no es válido"""
        with pytest.raises(DimensionMismatchError):
            build_undriven_hamiltonian(reference_circuit, 1)

    def test_operators_shapes(self):
        """Operadores embebidos de dimensión 2·d_a"""
        ops = system_operators(7)
        assert all(op.shape == (14, 14) for op in ops.values())
        assert np.allclose(ops["x"], ops["a"] + ops["a"].conj().T)


class TestDressedBasis:
    """Test suite para el etiquetado de la base vestida"""

    def setup_method(self):
        """Setup para cada test"""
        self.p = CircuitParams(omega_q=5.304, omega_a=7.5, g=0.3165)
        self.basis = dressed_basis(build_undriven_hamiltonian(self.p, 30), 30)

    def test_default_label_depth(self):
        """d_label = min(8, d_a − 4)"""
        assert self.basis.d_label == 8
        small = dressed_basis(build_undriven_hamiltonian(self.p, 10), 10)
        assert small.d_label == 6

    def test_dominant_component(self):
        """|⟨01|0̄1⟩|² > 0.97"""
        assert abs(self.basis.vector(0, 1)[1]) ** 2 > 0.97

    def test_ground_state_admixture(self):
        """⟨11|0̄0⟩ ≈ −g/Σ y ⟨01|1̄0⟩ ≈ −g/Δ"""
        g_delta, g_sigma = perturbative_amplitudes(self.p)
        v00 = self.basis.vector(0, 0)
        v10 = self.basis.vector(1, 0)
        assert np.real(v00[30 + 1]) == pytest.approx(g_sigma, rel=0.05)
        assert np.real(v10[1]) == pytest.approx(g_delta, rel=0.05)
        assert g_sigma == pytest.approx(-0.0247, abs=1e-4)

    def test_phase_convention(self):
        """Componente dominante real positiva"""
        for (j, n) in self.basis.labels:
            v = self.basis.vector(j, n)
            k = np.argmax(np.abs(v))
            assert abs(np.imag(v[k])) < 1e-12 and np.real(v[k]) > 0

    def test_projectors(self):
        """Σz tiene autovalores ±1 en el subespacio etiquetado y N_a|0̄2⟩ = 2|0̄2⟩"""
        sz, na = dressed_projectors(self.basis)
        v = self.basis.vector(0, 2)
        assert np.real(v.conj() @ sz @ v) == pytest.approx(-1.0)
        assert np.real(v.conj() @ na @ v) == pytest.approx(2.0)
        assert np.allclose(sz, sz.conj().T)

    def test_projectors_reduce_to_bare(self):
        """g = 0: Σz = σz ⊗ 1 en los niveles etiquetados"""
        p = CircuitParams(omega_q=5.304, omega_a=7.5, g=0.0)
        basis = dressed_basis(build_undriven_hamiltonian(p, 12), 12)
        sz, _ = dressed_projectors(basis)
        mask = np.tile(np.arange(12) < basis.d_label, 2)
        bare = np.kron(local_ops.sigma_z(), np.eye(12))
        assert np.allclose(sz[np.ix_(mask, mask)], bare[np.ix_(mask, mask)])

    def test_ambiguous_label(self):
        """Un autoestado que domina dos estados desnudos es un error"""
        d_a = 6
        r = 1 / np.sqrt(2)
        U = np.eye(2 * d_a)
        U[:3, :3] = [[r, 0.5, 0.5], [r, -0.5, -0.5], [0.0, r, -r]]
        energies = np.arange(2 * d_a, dtype=float) + 10.0
        energies[:3] = [1.0, 2.0, 3.0]
        H = U @ np.diag(energies) @ U.T
        with pytest.raises(LabelingError):
            dressed_basis(H.astype(complex), d_a)

    def test_label_depth_bounds(self):
        """d_label debe dejar al menos dos niveles libres"""
        H = build_undriven_hamiltonian(self.p, 10)
        with pytest.raises(DimensionMismatchError):
            dressed_basis(H, 10, d_label=9)

    def test_spectrum_frame(self):
        """Tabla {j, n, E_GHz} con todas las etiquetas"""
        frame = dressed_spectrum_frame(self.basis)
        assert list(frame.columns) == ["j", "n", "E_GHz"]
        assert len(frame) == 2 * self.basis.d_label


class TestTruncation:
    """Test suite para las reglas de truncamiento"""

    def setup_method(self):
        """Setup para cada test"""
        self.chain = ChainCoefficients(e=np.array([7.5, 7.5]), t=np.array([3.0]), k0=1.0)

    def test_undriven(self):
        """ε_d = 0: d_a = 10, d_chain = 2"""
        rule = truncation_dims(0.0, KAPPA, self.chain)
        assert rule.d_a == 10
        assert rule.d_chain == 2

    def test_half_kappa_drive(self):
        """ε_d = κ/2: n̄_a = 1, d_a = 18"""
        rule = truncation_dims(KAPPA / 2, KAPPA, self.chain)
        assert rule.nbar_a == pytest.approx(1.0)
        assert rule.d_a == 18

    def test_initial_photons(self):
        """Los fotones iniciales cuentan en n̄_a"""
        rule = truncation_dims(0.0, KAPPA, self.chain, initial_photons=2)
        assert rule.d_a == int(np.ceil(12 + 7 * np.sqrt(2)))

    def test_chain_dimension_cap(self):
        """El tope de d_chain se aplica y se avisa"""
        rule = truncation_dims(KAPPA, KAPPA, self.chain, chain_dim_cap=8)
        assert rule.d_chain_rule == int(np.ceil(2 + 5 * 3.0 * 4.0))
        assert rule.d_chain == 8
        alerts = logger.get_recent_events(limit=3, event="numerical_alert")
        assert any(a["alert_type"] == "chain_dim_capped" for a in alerts)

    def test_without_chain(self):
        """Sin cadena (Lindblad) solo importa d_a"""
        assert truncation_dims(0.0, KAPPA, None).d_chain == 2

    def test_invalid_kappa(self):
        """κ ≤ 0 no es válido"""
        with pytest.raises(ConfigValidationError):
            truncation_dims(0.0, 0.0, self.chain)


class TestRates:
    """Test suite para las tasas analíticas"""

    def test_fgr_flat(self, reference_circuit):
        """Baño plano: Γ10(0) ≈ 1.43 MHz"""
        J = calibrate_prefactor("flat", KAPPA, 7.5)
        assert 1e3 * fgr_rate(reference_circuit, J) == pytest.approx(1.4254, rel=1e-3)

    def test_fgr_notch_suppression(self, reference_circuit):
        """Notch D = 0.7 en ω_q: tasa × 0.3 respecto del ohmic con el mismo α"""
        ohm = calibrate_prefactor("ohmic", KAPPA, 7.5)
        notch = SpectralDensity(kind=BathKind.PURCELL_NOTCH, alpha=ohm.alpha, notch_depth=0.7,
                                notch_sigma=0.1, notch_center=5.304)
        ratio = fgr_rate(reference_circuit, notch) / fgr_rate(reference_circuit, ohm)
        assert ratio == pytest.approx(0.3, rel=1e-12)

    def test_fgr_zero_density(self, reference_circuit):
        """J(ω_q) = 0 → Γ = 0"""
        J = SpectralDensity(kind=BathKind.FLAT, alpha=1.0, omega_min=6.0, omega_max=12.0)
        assert fgr_rate(reference_circuit, J) == 0.0

    def test_lindblad_rates(self, reference_circuit):
        """Γ10ᴸ ≈ 1.04 MHz y Γ01ᴸ ≈ 0.031 MHz"""
        g10, g01 = lindblad_rates(reference_circuit)
        assert 1e3 * g10 == pytest.approx(1.0386, rel=1e-3)
        assert 1e3 * g01 == pytest.approx(0.0306, rel=1e-2)

    def test_decoupled_rates(self):
        """g = 0 → (0, 0)"""
        assert lindblad_rates(CircuitParams(omega_q=5.304, omega_a=7.5, g=0.0)) == (0.0, 0.0)

    def test_resonant_qubit_rejected(self):
        """Δ = 0: las fórmulas dispersivas no aplican"""
        p = CircuitParams(omega_q=7.5, omega_a=7.5, g=0.3)
        with pytest.raises(ConfigValidationError):
            lindblad_rates(p)
        with pytest.raises(ConfigValidationError):
            fgr_rate(p, calibrate_prefactor("flat", KAPPA, 7.5))

    def test_effective_excitation_line(self, reference_circuit):
        """Σz(t) = −1 + 2·2πΓ01ᴸ·t"""
        _, g01 = lindblad_rates(reference_circuit)
        values = effective_qubit_excitation(reference_circuit, [0.0, 10.0])
        assert values[0] == -1.0
        assert values[1] == pytest.approx(-1.0 + 2 * 2 * np.pi * g01 * 10.0)


class TestCircuitParams:
    """Test suite para parámetros y drive"""

    def test_drive_coefficient(self, reference_circuit):
        """2π·2ε_d·sin(2π·ω_d·t); sin drive es 0"""
        assert drive_coefficient(reference_circuit, 1.0) == 0.0
        p = reference_circuit.with_drive(0.05, 7.5)
        assert drive_coefficient(p, 1.0 / (4 * 7.5)) == pytest.approx(2 * np.pi * 2 * 0.05)

    def test_default_drive_frequency(self, reference_circuit):
        """Sin ω_d explícita se usa ω_a"""
        assert reference_circuit.with_drive(0.01).drive_frequency == 7.5

    def test_non_dispersive_alert(self):
        """|g/Δ| grande genera alerta"""
        p = CircuitParams(omega_q=7.4, omega_a=7.5, g=0.3)
        assert not is_dispersive(p)
        alerts = logger.get_recent_events(limit=3, event="numerical_alert")
        assert any(a["alert_type"] == "non_dispersive_regime" for a in alerts)

    def test_negative_lambda(self):
        """λ < 0 no es válido"""
        with pytest.raises(ConfigValidationError):
            CircuitParams(omega_q=5.304, omega_a=7.5, g=0.3, lam=-1.0)

    def test_dense_oracle_agreement(self, reference_circuit):
        """Mismas energías que una diagonalización directa"""
        H = build_undriven_hamiltonian(reference_circuit, 20)
        basis = dressed_basis(H, 20)
        np.testing.assert_allclose(basis.energies, eigh(H, eigvals_only=True) / (2 * np.pi))
