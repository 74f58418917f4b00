"""
Validación de entradas antes de simular.
Detecta parámetros fuera de rango, bandas inconsistentes y series mal formadas.
"""
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from config.readout_config import BathKind, RunConfig
from src.data.spectral_bath import ChainCoefficients
from src.execution.fitting import MIN_SAMPLES

SERIES_COLUMNS = ["t_ns", "kt_over_2pi", "sigma_z", "n_a"]


class InputValidator:
    """
    Validador de configuraciones, cadenas y series para asegurar calidad antes de correr.
    """

    def __init__(self, dispersive_threshold: float = 0.5, sigma_z_tolerance: float = 1e-6):
        self.dispersive_threshold = dispersive_threshold
        self.sigma_z_tolerance = sigma_z_tolerance
        self.validation_results: List[Dict[str, Any]] = []

    def _record(self, name: str, ok: bool, report: Dict[str, Any]) -> Tuple[bool, Dict[str, Any]]:
        self.validation_results.append({"check": name, **report})
        return ok, report

    def validate_run_config(self, config: RunConfig) -> Tuple[bool, Dict[str, Any]]:
        """
        Valida una configuración completa.

        Returns:
            (is_valid, validation_report)
        """
        circuit, bath, evo = config.circuit, config.bath, config.evolution

        # 1. Frecuencias y acoplamientos positivos
        bad = [name for name in ("omega_q", "omega_a", "g", "kappa") if getattr(circuit, name) <= 0]
        if bad:
            return self._record("run_config", False, {
                "status": "invalid",
                "reason": f"Non-positive circuit parameters: {bad}",
                "suggestion": "Frequencies, g and kappa are in GHz and must be > 0"
            })

        # 2. Soporte del baño: [ω_min, ω_max] plano; [0, ω_c] ohmic y purcell_notch
        if bath.kind == BathKind.FLAT:
            lo, hi = bath.omega_min, bath.omega_max
            if not 0 <= lo < hi:
                return self._record("run_config", False, {
                    "status": "invalid",
                    "reason": f"Empty band [{lo}, {hi}]",
                    "suggestion": "Use 0 <= omega_min < omega_max"
                })
        else:
            lo, hi = 0.0, bath.omega_c
            if hi <= 0:
                return self._record("run_config", False, {
                    "status": "invalid",
                    "reason": f"Ohmic cutoff must be positive, got {hi}",
                    "suggestion": "Set bath.omega_c > 0"
                })
        if bath.kind == BathKind.PURCELL_NOTCH:
            center = bath.notch_center if bath.notch_center is not None else circuit.omega_q
            if not 0 <= bath.notch_depth < 1 or bath.notch_sigma <= 0:
                return self._record("run_config", False, {
                    "status": "invalid",
                    "reason": f"Invalid notch (depth={bath.notch_depth}, sigma={bath.notch_sigma})",
                    "suggestion": "Depth in [0, 1) and sigma > 0"
                })
            if not lo < center < hi:
                return self._record("run_config", False, {
                    "status": "invalid",
                    "reason": f"Notch center {center} outside the support [{lo}, {hi}]",
                    "suggestion": "Place the notch at the qubit frequency below omega_c"
                })

        # 3. Resonador dentro del soporte (la calibración lo necesita)
        if not lo < circuit.omega_a < hi:
            return self._record("run_config", False, {
                "status": "invalid",
                "reason": f"omega_a={circuit.omega_a} outside [{lo}, {hi}]",
                "suggestion": "J must be nonzero at the resonator frequency"
            })

        # 4. Parámetros de evolución
        if evo.chi < 1 or evo.chain_length < 1 or evo.kappa_dt <= 0 or evo.kt_final <= 0:
            return self._record("run_config", False, {
                "status": "invalid",
                "reason": f"Invalid evolution parameters (chi={evo.chi}, N={evo.chain_length}, "
                          f"kappa_dt={evo.kappa_dt}, kt_final={evo.kt_final})",
                "suggestion": "chi, N >= 1 and positive time step"
            })
        samples = int(evo.kt_final / evo.kappa_dt) // max(evo.record_stride, 1)
        if samples < MIN_SAMPLES:
            return self._record("run_config", False, {
                "status": "invalid",
                "reason": f"Only {samples} recorded samples",
                "suggestion": "Reduce record_stride or kappa_dt"
            })

        # 5. Amplitudes de drive
        if any(e < 0 for e in config.eps_d_list):
            return self._record("run_config", False, {
                "status": "invalid",
                "reason": f"Negative drive amplitudes: {config.eps_d_list}",
                "suggestion": "Drive amplitudes are magnitudes in GHz"
            })

        # 6. Régimen dispersivo (solo advertencia)
        ratio = abs(circuit.g / circuit.detuning) if circuit.detuning else float("inf")
        if ratio > self.dispersive_threshold:
            return self._record("run_config", True, {
                "status": "warning",
                "reason": f"|g/Delta| = {ratio:.3f} is outside the dispersive regime",
                "suggestion": "Dressed labels may be ambiguous"
            })

        return self._record("run_config", True, {
            "status": "valid",
            "bath": bath.kind.value,
            "chain_length": evo.chain_length,
            "samples": samples
        })

    def validate_chain(self, chain: ChainCoefficients) -> Tuple[bool, Dict[str, Any]]:
        """Coeficientes finitos, saltos positivos y k0 > 0"""
        if not (np.all(np.isfinite(chain.e)) and np.all(np.isfinite(chain.t)) and np.isfinite(chain.k0)):
            return self._record("chain", False, {
                "status": "invalid",
                "reason": "Non-finite chain coefficients",
                "suggestion": "Increase the quadrature size M"
            })
        if chain.k0 <= 0 or np.any(chain.t <= 0):
            return self._record("chain", False, {
                "status": "invalid",
                "reason": "Non-positive couplings in chain",
                "suggestion": "The Lanczos recursion broke down; check J and M"
            })
        return self._record("chain", True, {"status": "valid", "length": chain.length, "k0": chain.k0})

    def validate_series(self, df: pd.DataFrame) -> Tuple[bool, Dict[str, Any]]:
        """
        Valida una serie temporal exportada (columnas, tiempos crecientes, |Σz| ≤ 1).
        """
        missing_cols = [col for col in SERIES_COLUMNS if col not in df.columns]
        if missing_cols:
            return self._record("series", False, {
                "status": "invalid",
                "reason": f"Missing columns: {missing_cols}",
                "suggestion": "Export series with ObservableSeries.to_frame()"
            })

        null_counts = df[SERIES_COLUMNS].isnull().sum()
        if null_counts.any():
            return self._record("series", False, {
                "status": "invalid",
                "reason": f"Null values found: {null_counts[null_counts > 0].to_dict()}",
                "suggestion": "Re-run the evolution"
            })

        if not df["t_ns"].is_monotonic_increasing or df["t_ns"].duplicated().any():
            return self._record("series", False, {
                "status": "invalid",
                "reason": "Times not strictly increasing",
                "suggestion": "Sort by t_ns and drop duplicates"
            })

        out_of_range = int((df["sigma_z"].abs() > 1.0 + self.sigma_z_tolerance).sum())
        if out_of_range:
            return self._record("series", False, {
                "status": "warning",
                "reason": f"{out_of_range} samples with |sigma_z| > 1",
                "suggestion": "Check norm drift and truncation"
            })

        return self._record("series", True, {
            "status": "valid",
            "rows": len(df),
            "time_range": {"start": float(df["t_ns"].min()), "end": float(df["t_ns"].max())}
        })

    def get_validation_summary(self) -> List[Dict[str, Any]]:
        """Retorna resumen de validaciones realizadas"""
        return self.validation_results
