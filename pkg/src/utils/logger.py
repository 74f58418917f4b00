"""
Sistema de logging estructurado para trazabilidad de corridas y debugging.
"""
import logging
import json
from datetime import datetime, timezone
from typing import Dict, Any, Optional
from pathlib import Path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SimulationLogger:
    """
    Logger especializado para simulaciones con estructuración de datos.
    Permite tracking de calibraciones, ajustes, diagnósticos y alertas numéricas.
    """

    def __init__(self, name: str = "readout_sim", log_file: str = None, level: str = "INFO"):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, level.upper()))

        # Formateador estándar
        self.formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        # Console handler (una sola vez por nombre de logger)
        if not self.logger.handlers:
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(self.formatter)
            self.logger.addHandler(console_handler)

        if log_file:
            self.add_file_handler(log_file)

        self.events_log = []

    def add_file_handler(self, log_file: str):
        """Añade un archivo de log además de la consola"""
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(self.formatter)
        self.logger.addHandler(file_handler)

    def set_level(self, level: str):
        self.logger.setLevel(getattr(logging, level.upper()))

    def log_run_start(self, command: str, config: Dict[str, Any]):
        """Log de inicio de corrida con la configuración completa"""
        self.logger.info(f"Run started: {command}")
        self._append_structured_log({
            "event": "run_start",
            "timestamp": _now(),
            "command": command,
            "config": config
        })

    def log_calibration(self, bath_kind: str, omega_a0: float, omega_a1: float, omega_bar: float):
        """Log de resultado de calibración"""
        self.logger.info(
            f"Calibration [{bath_kind}]: w_a0={omega_a0:.4f} w_a1={omega_a1:.4f} w_bar={omega_bar:.4f} GHz"
        )
        self._append_structured_log({
            "event": "calibration",
            "timestamp": _now(),
            "bath_kind": bath_kind,
            "omega_a0": omega_a0,
            "omega_a1": omega_a1,
            "omega_bar": omega_bar
        })

    def log_fit_result(self, label: str, gamma: float, residual: float, context: Dict[str, Any] = None):
        """Log de ajuste exponencial"""
        self.logger.info(f"Fit {label}: Gamma={gamma * 1e3:.4f} MHz (residual {residual:.2e})")
        self._append_structured_log({
            "event": "fit_result",
            "timestamp": _now(),
            "label": label,
            "gamma": gamma,
            "residual": residual,
            "context": context or {}
        })

    def log_evolution_diagnostics(self, label: str, diagnostics: Dict[str, Any]):
        """Log de diagnósticos acumulados de una evolución"""
        self.logger.info(f"Evolution {label} finished: {diagnostics}")
        self._append_structured_log({
            "event": "evolution_diagnostics",
            "timestamp": _now(),
            "label": label,
            "diagnostics": diagnostics
        })

    def log_numerical_alert(self, alert_type: str, details: Dict[str, Any]):
        """Log de alertas numéricas (régimen dispersivo, saturación, cono de luz...)"""
        self.logger.warning(f"Numerical alert: {alert_type} - {details}")
        self._append_structured_log({
            "event": "numerical_alert",
            "timestamp": _now(),
            "alert_type": alert_type,
            "details": details
        })

    def log_error(self, error_type: str, error_msg: str, context: Dict[str, Any] = None):
        """Log de errores con contexto"""
        self.logger.error(f"Error: {error_type} - {error_msg}")
        self._append_structured_log({
            "event": "error",
            "timestamp": _now(),
            "error_type": error_type,
            "error_message": error_msg,
            "context": context or {}
        })

    def _append_structured_log(self, log_entry: Dict[str, Any]):
        """Añade entrada a logs estructurados"""
        self.events_log.append(log_entry)

    def get_recent_events(self, limit: int = 10, event: Optional[str] = None) -> list:
        """Retorna los últimos eventos estructurados"""
        events = self.events_log
        if event:
            events = [e for e in events if e["event"] == event]
        return events[-limit:]

    def save_structured_logs(self, filepath: str):
        """Guarda logs estructurados a archivo JSON"""
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w') as f:
            json.dump({"events": self.events_log}, f, indent=2, default=str)


# Logger global
logger = SimulationLogger()
