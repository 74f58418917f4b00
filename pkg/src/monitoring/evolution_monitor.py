"""
Monitoreo de salud de una evolución: norma, saturación del resonador, entrelazamiento.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional
from datetime import datetime, timezone
import json
from pathlib import Path

from src.utils.logger import logger


@dataclass
class EvolutionStatus:
    """Estado de la evolución en un paso registrado"""
    timestamp: str
    step: int
    t_ns: float
    norm_drift: float
    delta_sat: float
    max_entropy: float
    truncation: float = 0.0


@dataclass
class Alert:
    """Alerta numérica"""
    timestamp: str
    level: str  # "INFO", "WARNING", "CRITICAL"
    category: str  # "NORM", "SATURATION", "KRYLOV"
    message: str
    details: Dict = field(default_factory=dict)


class EvolutionMonitor:
    """
    Monitor de una corrida TDVP.
    Una alerta CRITICAL marca la corrida (no la aborta); la marca pasa a las salidas.
    """

    def __init__(self, label: str = "", delta_sat_threshold: float = 1e-6, history_limit: int = 1000):
        self.label = label
        self.alerts: List[Alert] = []
        self.status_history: List[EvolutionStatus] = []
        self.history_limit = history_limit
        self.alert_rules = {
            "norm_drift_warning": 1e-10,
            "norm_drift_critical": 1e-8,
            "delta_sat_critical": delta_sat_threshold,
        }
        self.max_norm_drift = 0.0
        self.max_delta_sat = 0.0
        self.max_entropy = 0.0
        self._flagged = False

    @property
    def flagged(self) -> bool:
        return self._flagged

    def update_status(self, step: int, t_ns: float, norm: float, delta_sat: float,
                      max_entropy: float = 0.0, truncation: float = 0.0):
        """Registra un paso y verifica alertas"""
        status = EvolutionStatus(
            timestamp=datetime.now(timezone.utc).isoformat(),
            step=step,
            t_ns=t_ns,
            norm_drift=abs(1.0 - norm ** 2),
            delta_sat=delta_sat,
            max_entropy=max_entropy,
            truncation=truncation,
        )
        self.max_norm_drift = max(self.max_norm_drift, status.norm_drift)
        self.max_delta_sat = max(self.max_delta_sat, delta_sat)
        self.max_entropy = max(self.max_entropy, max_entropy)

        self.status_history.append(status)
        self._check_alerts(status)

        if len(self.status_history) > self.history_limit:
            self.status_history = self.status_history[-self.history_limit:]

    def _check_alerts(self, status: EvolutionStatus):
        if status.norm_drift >= self.alert_rules["norm_drift_critical"]:
            self._add_alert("CRITICAL", "NORM", f"Norm drift {status.norm_drift:.2e} at step {status.step}",
                            {"norm_drift": status.norm_drift, "step": status.step})
        elif status.norm_drift >= self.alert_rules["norm_drift_warning"]:
            self._add_alert("WARNING", "NORM", f"Norm drift {status.norm_drift:.2e} at step {status.step}",
                            {"norm_drift": status.norm_drift, "step": status.step})

        if status.delta_sat >= self.alert_rules["delta_sat_critical"]:
            self._add_alert("CRITICAL", "SATURATION",
                            f"Resonator saturation {status.delta_sat:.2e} at step {status.step}",
                            {"delta_sat": status.delta_sat, "step": status.step})

    def _add_alert(self, level: str, category: str, message: str, details: Dict = None):
        # Solo la primera alerta de cada tipo va al log
        first = not any(a.level == level and a.category == category for a in self.alerts)
        alert = Alert(timestamp=datetime.now(timezone.utc).isoformat(), level=level,
                      category=category, message=message, details=details or {})
        self.alerts.append(alert)
        if level == "CRITICAL":
            self._flagged = True
        if len(self.alerts) > 200:
            self.alerts = self.alerts[-200:]
        if first and level != "INFO":
            logger.log_numerical_alert(f"{category.lower()}_{level.lower()}", {"label": self.label, **alert.details})

    def get_current_status(self) -> Optional[EvolutionStatus]:
        return self.status_history[-1] if self.status_history else None

    def get_recent_alerts(self, level: str = None, limit: int = 10) -> List[Alert]:
        alerts = self.alerts
        if level:
            alerts = [a for a in alerts if a.level == level]
        return alerts[-limit:]

    def get_status_summary(self) -> Dict:
        """Resumen del estado y diagnósticos acumulados"""
        status = self.get_current_status()
        if not status:
            return {"status": "no_data", "label": self.label}
        return {
            "label": self.label,
            "timestamp": status.timestamp,
            "step": status.step,
            "t_ns": status.t_ns,
            "max_norm_drift": self.max_norm_drift,
            "max_delta_sat": self.max_delta_sat,
            "max_entropy": self.max_entropy,
            "truncation": status.truncation,
            "flagged": self.flagged,
            "critical_alerts": len([a for a in self.alerts if a.level == "CRITICAL"]),
            "warning_alerts": len([a for a in self.alerts if a.level == "WARNING"]),
        }

    def generate_report(self) -> str:
        summary = self.get_status_summary()
        if summary.get("status") == "no_data":
            return f"Evolution {self.label}: no data"
        report = [
            "=" * 60,
            f"EVOLUTION REPORT {summary['label']}",
            "=" * 60,
            f"Step: {summary['step']} (t = {summary['t_ns']:.4f} ns)",
            f"Max norm drift: {summary['max_norm_drift']:.2e}",
            f"Max delta_sat: {summary['max_delta_sat']:.2e}",
            f"Max bond entropy: {summary['max_entropy']:.4f}",
            f"Accumulated truncation: {summary['truncation']:.2e}",
            f"Critical alerts: {summary['critical_alerts']}",
            f"Warning alerts: {summary['warning_alerts']}",
            f"Flagged: {summary['flagged']}",
            "=" * 60,
        ]
        return "\n".join(report)

    def save_status_to_file(self, filepath: str):
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w') as f:
            json.dump(self.get_status_summary(), f, indent=2)

    def save_alerts_to_file(self, filepath: str):
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w') as f:
            json.dump([{
                "timestamp": a.timestamp,
                "level": a.level,
                "category": a.category,
                "message": a.message,
                "details": a.details
            } for a in self.alerts], f, indent=2)
