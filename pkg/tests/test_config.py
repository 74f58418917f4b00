"""
Tests para la configuración: presets, archivo INI y overrides.
"""
import pytest

from config.readout_config import (CALIBRATION_REFERENCE, DESK_CHAIN_LENGTH, TABLE2_EVOLUTION, BathConfig, BathKind,
                                   CircuitConfig, RunConfig, ScalePreset, apply_preset, load_run_config,
                                   swapped_detuning)
from src.utils.errors import ConfigValidationError


def write_ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


class TestPresets:
    """Test suite para apply_preset"""

    def test_paper_uses_evolution_table(self):
        """paper: (χ, κdt/2π, N) del tipo de baño"""
        for kind, (chi, kappa_dt, n_chain) in TABLE2_EVOLUTION.items():
            config = apply_preset(RunConfig(bath=BathConfig(kind=kind)), ScalePreset.PAPER)
            assert (config.evolution.chi, config.evolution.kappa_dt, config.evolution.chain_length) == \
                (chi, kappa_dt, n_chain)
            assert config.tolerance_scale == 1.0

    def test_desk_is_smaller(self):
        """desk: N = 150, paso más grueso y tolerancias más anchas"""
        config = apply_preset(RunConfig(), ScalePreset.DESK)
        assert config.evolution.chain_length == DESK_CHAIN_LENGTH
        assert config.evolution.chi == TABLE2_EVOLUTION[BathKind.OHMIC][0]
        assert config.tolerance_scale > 1.0

    def test_default_amplitudes(self):
        """La lista por defecto empieza en ε_d = 0 y escala con κ"""
        config = RunConfig(circuit=CircuitConfig(kappa=0.1))
        assert config.eps_d_list[0] == 0.0
        assert config.eps_d_list[-1] == pytest.approx(0.175)

    def test_swapped_detuning(self):
        """Δ < 0 intercambia ω_q y ω_a"""
        swapped = swapped_detuning(CircuitConfig())
        assert swapped.omega_q == 7.5
        assert swapped.omega_a == 5.304
        assert swapped.detuning < 0

    def test_reference_table(self):
        """Frecuencias de referencia por baño"""
        assert CALIBRATION_REFERENCE["ohmic_positive_detuning"] == (7.546, 7.47, 7.51)


class TestLoadRunConfig:
    """Test suite para load_run_config"""

    def test_full_file(self, tmp_path):
        """Secciones tipadas y preset"""
        path = write_ini(tmp_path, """
[run]
preset = paper
eps_d_list = 0, 0.03, 0.05

[bath]
kind = flat
omega_min = 3.0
omega_max = 12.0

[circuit]
g = 0.3  # acoplamiento
omega_d = none

[output]
jobs = 2
""")
        config = load_run_config(path)
        assert config.bath.kind == BathKind.FLAT
        assert config.preset == ScalePreset.PAPER
        assert config.evolution.chain_length == TABLE2_EVOLUTION[BathKind.FLAT][2]
        assert config.circuit.g == 0.3
        assert config.circuit.omega_d is None
        assert config.output.jobs == 2
        assert config.eps_d_list == [0.0, 0.03, 0.05]

    def test_explicit_evolution_overrides_preset(self, tmp_path):
        """[evolution] explícito gana sobre el preset"""
        path = write_ini(tmp_path, """
[run]
preset = desk
[bath]
kind = ohmic
[evolution]
chi = 12
snapshot_correlations = yes
""")
        config = load_run_config(path)
        assert config.evolution.chi == 12
        assert config.evolution.snapshot_correlations is True
        assert config.evolution.chain_length == DESK_CHAIN_LENGTH

    def test_overrides_without_file(self):
        """Overrides "section.key" sin archivo; None se ignora"""
        config = load_run_config(None, {"bath.kind": "purcell_notch", "run.preset": "desk",
                                        "output.jobs": None, "evolution.chain_length": "40"})
        assert config.bath.kind == BathKind.PURCELL_NOTCH
        assert config.evolution.chain_length == 40
        assert config.output.jobs == 1

    def test_missing_required_keys(self):
        """Lista las claves requeridas faltantes"""
        with pytest.raises(ConfigValidationError) as exc:
            load_run_config(None, {})
        assert exc.value.missing_keys == ["bath.kind", "run.preset"]
        assert exc.value.exit_code == 2

    def test_unknown_key(self, tmp_path):
        """Claves desconocidas se rechazan"""
        path = write_ini(tmp_path, "[run]\npreset = desk\n[bath]\nkind = ohmic\ncutoff = 3\n")
        with pytest.raises(ConfigValidationError, match="bath.cutoff"):
            load_run_config(path)

    def test_unknown_section(self, tmp_path):
        """Secciones desconocidas se rechazan"""
        path = write_ini(tmp_path, "[run]\npreset = desk\n[bath]\nkind = ohmic\n[risk]\nmax = 1\n")
        with pytest.raises(ConfigValidationError, match="risk"):
            load_run_config(path)

    def test_invalid_value(self, tmp_path):
        """Valor no convertible"""
        path = write_ini(tmp_path, "[run]\npreset = desk\n[bath]\nkind = ohmic\n[evolution]\nchi = six\n")
        with pytest.raises(ConfigValidationError, match="Invalid config value"):
            load_run_config(path)

    def test_unknown_bath(self):
        """Tipo de baño inexistente"""
        with pytest.raises(ConfigValidationError):
            load_run_config(None, {"bath.kind": "lorentzian", "run.preset": "desk"})

    def test_missing_file(self, tmp_path):
        """Archivo inexistente"""
        with pytest.raises(ConfigValidationError, match="not found"):
            load_run_config(str(tmp_path / "nope.ini"))
