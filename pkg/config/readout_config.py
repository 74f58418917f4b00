"""
Configuración centralizada del simulador de lectura dispersiva.
Este archivo centraliza todos los parámetros físicos y numéricos (tablas de baños,
parámetros de evolución por tipo de baño, presets desk/paper) y el parser de archivos INI.

Unidades: frecuencias en GHz (ω/2π, "unidades de tabla"), tiempos en ns.
"""
import configparser
import os
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from src.utils.errors import ConfigValidationError


class BathKind(Enum):
    FLAT = "flat"
    OHMIC = "ohmic"
    PURCELL_NOTCH = "purcell_notch"


class ScalePreset(Enum):
    DESK = "desk"
    PAPER = "paper"


class Kernel(Enum):
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"


# (χ, κ·dt/2π, N) por tipo de baño
TABLE2_EVOLUTION: Dict[BathKind, Tuple[int, float, int]] = {
    BathKind.OHMIC: (6, 4e-5, 471),
    BathKind.FLAT: (5, 4e-5, 289),
    BathKind.PURCELL_NOTCH: (8, 4e-5, 472),
}

# Frecuencias de calibración de referencia (ω_a0, ω_a1, ω̄) en GHz
CALIBRATION_REFERENCE: Dict[str, Tuple[float, float, float]] = {
    "ohmic_positive_detuning": (7.546, 7.47, 7.51),
    "ohmic_negative_detuning": (5.26, 5.36, 5.31),
    "flat_positive_detuning": (7.55, 7.48, 7.52),
    "purcell_notch_positive_detuning": (7.546, 7.51, 7.47),
}

DESK_CHAIN_LENGTH = 150
DESK_KAPPA_DT = 2e-4

OUTPUT_ROOT_ENV = "READOUT_SIM_OUTPUT_ROOT"


@dataclass
class BathConfig:
    """Parámetros de la densidad espectral (formas de la tabla de baños)"""
    kind: BathKind = BathKind.OHMIC
    omega_min: float = 3.0
    omega_max: float = 12.0
    omega_c: float = 15.0
    notch_depth: float = 0.7
    notch_sigma: float = 0.1
    notch_center: Optional[float] = None  # None → ω_q del circuito
    points_per_panel: int = 8
    quadrature_factor: int = 10  # M = factor · N
    padding_factor: int = 10  # M_pad = factor · N para el espectro estrella


@dataclass
class CircuitConfig:
    """Parámetros del circuito (qubit + resonador + drive)"""
    omega_q: float = 5.304
    omega_a: float = 7.5
    g: float = 0.3165
    kappa: float = 0.05
    eps_d: float = 0.0
    omega_d: Optional[float] = None  # None → ω̄ de la calibración
    calibration_photons: int = 2

    @property
    def detuning(self) -> float:
        return self.omega_a - self.omega_q

    @property
    def sum_frequency(self) -> float:
        return self.omega_a + self.omega_q


@dataclass
class EvolutionConfig:
    """Parámetros de la evolución TDVP"""
    chi: int = 6
    kappa_dt: float = 4e-5  # κ·dt/2π
    kt_final: float = 0.5  # κ·t_final/2π
    chain_length: int = 471
    krylov_dim: int = 30
    krylov_tol: float = 1e-12
    record_stride: int = 50
    drive_convention: str = "midpoint"
    svd_cutoff: float = 1e-12
    delta_sat_threshold: float = 1e-6
    chain_dim_cap: int = 8  # tope a la regla d_chain de la cadena
    snapshot_correlations: bool = False
    record_entropy: bool = True

    def dt_ns(self, kappa: float) -> float:
        """Paso temporal en ns a partir de κ·dt/2π (κ en GHz)"""
        return self.kappa_dt / kappa

    def t_final_ns(self, kappa: float) -> float:
        return self.kt_final / kappa

    def n_steps(self, kappa: float) -> int:
        return int(round(self.kt_final / self.kappa_dt))


@dataclass
class OutputConfig:
    """Salida de artefactos"""
    out_dir: str = ""
    jobs: int = 1
    log_level: str = "INFO"
    checkpoint_dir: str = ""  # vacío: sin checkpoints (el CLI usa <out>/<comando>/checkpoints)

    def resolve_out_dir(self) -> Path:
        if self.out_dir:
            return Path(self.out_dir)
        root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
        return Path(root)


@dataclass
class RunConfig:
    """Configuración completa de una corrida"""
    bath: BathConfig = field(default_factory=BathConfig)
    circuit: CircuitConfig = field(default_factory=CircuitConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    preset: ScalePreset = ScalePreset.DESK
    eps_d_list: List[float] = None
    tolerance_scale: float = 1.0  # desk usa tolerancias más anchas

    def __post_init__(self):
        if self.eps_d_list is None:
            # n̄ ≈ 0, 0.5, 1.3, 2.5, 4 con ω_d = ω̄ y resonador en ω_a1
            k = self.circuit.kappa
            self.eps_d_list = [0.0, 0.6 * k, 1.0 * k, 1.4 * k, 1.75 * k]


def apply_preset(config: RunConfig, preset: ScalePreset) -> RunConfig:
    """
    Aplica los parámetros de evolución del preset según el tipo de baño.
    paper: tabla de evolución exacta. desk: N=150, mismo χ, paso más grueso.
    """
    chi, kappa_dt, n_chain = TABLE2_EVOLUTION[config.bath.kind]
    if preset == ScalePreset.PAPER:
        evolution = replace(config.evolution, chi=chi, kappa_dt=kappa_dt, chain_length=n_chain)
        tolerance_scale = 1.0
    else:
        evolution = replace(config.evolution, chi=chi, kappa_dt=DESK_KAPPA_DT,
                            chain_length=DESK_CHAIN_LENGTH)
        tolerance_scale = 2.5
    return replace(config, evolution=evolution, preset=preset, tolerance_scale=tolerance_scale)


def swapped_detuning(circuit: CircuitConfig) -> CircuitConfig:
    """Configuración Δ<0: intercambia frecuencias de qubit y resonador"""
    return replace(circuit, omega_q=circuit.omega_a, omega_a=circuit.omega_q)


# ---------- PARSER DE ARCHIVOS INI ----------

REQUIRED_KEYS = [("bath", "kind"), ("run", "preset")]

_SECTIONS = {
    "bath": BathConfig,
    "circuit": CircuitConfig,
    "evolution": EvolutionConfig,
    "output": OutputConfig,
}
_RUN_KEYS = {"preset", "eps_d_list"}


def _coerce(raw: str, target_type, key: str):
    raw = raw.strip()
    if target_type in ("BathKind", BathKind):
        return BathKind(raw)
    if target_type in ("Optional[float]",) or target_type == Optional[float]:
        return None if raw.lower() in ("", "none") else float(raw)
    if target_type in ("float", float):
        return float(raw)
    if target_type in ("int", int):
        return int(raw)
    if target_type in ("bool", bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw}")
    return raw


def _parse_float_list(raw: str) -> List[float]:
    return [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Lee un archivo INI ([section] key = value) y aplica overrides "section.key" → valor.
    Rechaza claves desconocidas y lista las claves requeridas faltantes.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    if path:
        if not Path(path).exists():
            raise ConfigValidationError(f"Config file not found: {path}")
        parser.read(path)

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))

    unknown = []
    for section in parser.sections():
        if section == "run":
            unknown += [f"run.{k}" for k in parser[section] if k not in _RUN_KEYS]
        elif section not in _SECTIONS:
            unknown.append(f"[{section}]")
        else:
            allowed = {f.name for f in fields(_SECTIONS[section])}
            unknown += [f"{section}.{k}" for k in parser[section] if k not in allowed]
    if unknown:
        raise ConfigValidationError(f"Unknown config keys: {unknown}")

    missing = [f"{s}.{k}" for s, k in REQUIRED_KEYS if not parser.has_option(s, k)]
    if missing:
        raise ConfigValidationError(f"Missing required keys: {missing}", missing_keys=missing)

    try:
        sections = {}
        for name, cls in _SECTIONS.items():
            kwargs = {}
            if parser.has_section(name):
                types = {f.name: f.type for f in fields(cls)}
                for key, raw in parser[name].items():
                    kwargs[key] = _coerce(raw, types[key], key)
            sections[name] = cls(**kwargs)
        preset = ScalePreset(parser.get("run", "preset").strip())
        eps_list = None
        if parser.has_option("run", "eps_d_list"):
            eps_list = _parse_float_list(parser.get("run", "eps_d_list"))
    except (ValueError, KeyError) as e:
        raise ConfigValidationError(f"Invalid config value: {e}")

    config = RunConfig(bath=sections["bath"], circuit=sections["circuit"],
                       evolution=sections["evolution"], output=sections["output"],
                       eps_d_list=eps_list)
    config = apply_preset(config, preset)
    # Valores explícitos de [evolution] tienen prioridad sobre el preset
    if parser.has_section("evolution"):
        explicit = {k: getattr(sections["evolution"], k) for k in parser["evolution"]}
        config = replace(config, evolution=replace(config.evolution, **explicit))
    return config


# Instancia global de configuración
CONFIG = apply_preset(RunConfig(), ScalePreset.DESK)
