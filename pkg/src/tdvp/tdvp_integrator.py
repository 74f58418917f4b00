"""
Evolución temporal con TDVP de un sitio y registro de observables.

Esquema simétrico por paso dt:
    barrido izquierda→derecha con dt/2 (drive evaluado en t + dt/4),
    barrido derecha→izquierda con dt/2 (drive evaluado en t + 3dt/4).
Cada tensor de sitio evoluciona con exp(−i·H_eff·dt/2) y cada bond retrocede con
exp(+i·K_eff·dt/2). El centro de ortogonalidad vuelve al sitio 0 al final de cada paso.

Entornos: L[a, b, c] con ejes (bra, mpo, ket); R igual del lado derecho.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy.linalg import qr, rq

from config.readout_config import EvolutionConfig
from src.monitoring.evolution_monitor import EvolutionMonitor
from src.tdvp.krylov import krylov_expm
from src.tensor import local_ops
from src.tensor.mpo import MatrixProductOperator
from src.tensor.mps import (MatrixProductState, SiteLayout, bond_spectra, correlation_matrix, expectation,
                            saturated_bond_weight, save_checkpoint, spectrum_entropy, two_site_expectation)
from src.utils.errors import ConfigValidationError, DimensionMismatchError
from src.utils.logger import logger

MpoFactory = Callable[[float], MatrixProductOperator]
SIGMA_Z_BOUND = 1e-6


# ---------- ENTORNOS Y HAMILTONIANOS EFECTIVOS ----------

def update_left(env: np.ndarray, A: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.einsum("bwc,bsx,wstv,cty->xvy", env, A.conj(), W, A, optimize=True)


def update_right(env: np.ndarray, A: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.einsum("xvy,bsx,wstv,cty->bwc", env, A.conj(), W, A, optimize=True)


def _site_matvec(L: np.ndarray, W: np.ndarray, R: np.ndarray, shape):
    def matvec(x: np.ndarray) -> np.ndarray:
        M = x.reshape(shape)
        tmp = np.tensordot(L, M, axes=(2, 0))                 # (a, b, t, c')
        tmp = np.einsum("abtd,bstv->asdv", tmp, W, optimize=True)
        out = np.einsum("asdv,evd->ase", tmp, R, optimize=True)
        return out.reshape(-1)
    return matvec


def _bond_matvec(L: np.ndarray, R: np.ndarray, shape):
    def matvec(x: np.ndarray) -> np.ndarray:
        C = x.reshape(shape)
        return np.einsum("abc,cd,ebd->ae", L, C, R, optimize=True).reshape(-1)
    return matvec


class TDVPEngine:
    """
    Integrador TDVP1 sobre un MPS con bonds fijos (rellenar antes con pad_bond_dimension).
    """

    def __init__(self, psi: MatrixProductState, hamiltonian: MpoFactory, krylov_dim: int = 30,
                 krylov_tol: float = 1e-12, time_dependent: bool = True):
        if psi.center != 0:
            psi = psi.copy().canonicalize(0)
        self.psi = psi
        self.hamiltonian = hamiltonian
        self.krylov_dim = krylov_dim
        self.krylov_tol = krylov_tol
        self.time_dependent = time_dependent
        self.max_krylov_used = 0
        L = psi.length
        self._left: List[Optional[np.ndarray]] = [None] * L
        self._right: List[Optional[np.ndarray]] = [None] * L
        self._left[0] = np.ones((1, 1, 1), dtype=complex)
        self._right[L - 1] = np.ones((1, 1, 1), dtype=complex)
        self._mpo: Optional[MatrixProductOperator] = None

    def _expm(self, matvec, v: np.ndarray, tau: complex) -> np.ndarray:
        out, info = krylov_expm(matvec, v, tau, self.krylov_dim, self.krylov_tol)
        self.max_krylov_used = max(self.max_krylov_used, info.dimension)
        return out

    def _build_right_envs(self, down_to: int = 0):
        W = self._mpo.tensors
        for i in range(self.psi.length - 2, down_to - 1, -1):
            self._right[i] = update_right(self._right[i + 1], self.psi.tensors[i + 1], W[i + 1])

    def _build_left_envs(self, up_to: int):
        W = self._mpo.tensors
        for i in range(up_to):
            self._left[i + 1] = update_left(self._left[i], self.psi.tensors[i], W[i])

    def _set_mpo(self, mpo: MatrixProductOperator):
        if mpo.length != self.psi.length:
            raise DimensionMismatchError(f"MPO has {mpo.length} sites, state has {self.psi.length}")
        self._mpo = mpo

    def _evolve_site(self, i: int, tau: complex):
        A = self.psi.tensors[i]
        mv = _site_matvec(self._left[i], self._mpo.tensors[i], self._right[i], A.shape)
        self.psi.tensors[i] = self._expm(mv, A, tau)

    def sweep_left_to_right(self, dt: float):
        psi, W = self.psi, self._mpo.tensors
        L = psi.length
        for i in range(L - 1):
            self._evolve_site(i, -0.5j * dt)
            a, d, b = psi.tensors[i].shape
            q, r = qr(psi.tensors[i].reshape(a * d, b), mode="economic")
            psi.tensors[i] = q.reshape(a, d, q.shape[1])
            self._left[i + 1] = update_left(self._left[i], psi.tensors[i], W[i])
            mv = _bond_matvec(self._left[i + 1], self._right[i], r.shape)
            c = self._expm(mv, r, 0.5j * dt)
            psi.tensors[i + 1] = np.tensordot(c, psi.tensors[i + 1], axes=(1, 0))
        self._evolve_site(L - 1, -0.5j * dt)
        psi.center = L - 1

    def sweep_right_to_left(self, dt: float):
        psi, W = self.psi, self._mpo.tensors
        L = psi.length
        for i in range(L - 1, 0, -1):
            self._evolve_site(i, -0.5j * dt)
            a, d, b = psi.tensors[i].shape
            r, q = rq(psi.tensors[i].reshape(a, d * b), mode="economic")
            psi.tensors[i] = q.reshape(q.shape[0], d, b)
            self._right[i - 1] = update_right(self._right[i], psi.tensors[i], W[i])
            mv = _bond_matvec(self._left[i], self._right[i - 1], r.shape)
            c = self._expm(mv, r, 0.5j * dt)
            psi.tensors[i - 1] = np.tensordot(psi.tensors[i - 1], c, axes=(2, 0))
        self._evolve_site(0, -0.5j * dt)
        psi.center = 0

    def step(self, t: float, dt: float) -> MatrixProductState:
        """Un paso simétrico completo de t a t + dt"""
        if self._mpo is None:
            self._set_mpo(self.hamiltonian(t + 0.25 * dt))
            self._build_right_envs()
        elif self.time_dependent:
            self._set_mpo(self.hamiltonian(t + 0.25 * dt))
            # Solo R_0 contiene al resonador (sitio 1)
            self._right[0] = update_right(self._right[1], self.psi.tensors[1], self._mpo.tensors[1])
        self.sweep_left_to_right(dt)

        if self.time_dependent:
            self._set_mpo(self.hamiltonian(t + 0.75 * dt))
            self._build_left_envs(self.psi.length - 1)
        self.sweep_right_to_left(dt)
        return self.psi


def tdvp1_step(psi: MatrixProductState, hamiltonian: MpoFactory, t: float, dt: float,
               krylov_dim: int = 30, krylov_tol: float = 1e-12) -> MatrixProductState:
    """Un paso TDVP1 simétrico sobre una copia de ψ (centro en el sitio 0)"""
    engine = TDVPEngine(psi.copy(), hamiltonian, krylov_dim, krylov_tol)
    return engine.step(t, dt)


# ---------- OBSERVABLES ----------

@dataclass
class ReadoutObservables:
    """Σz y N_a en la base vestida (operadores densos sobre qubit ⊗ resonador)"""
    sigma_z: np.ndarray
    n_a: np.ndarray
    d_a: int
    d_chain: int = 2
    chain_sites: List[int] = field(default_factory=list)

    def measure(self, psi: MatrixProductState) -> Dict[str, float]:
        sz = two_site_expectation(psi, SiteLayout.QUBIT, self.sigma_z)
        na = two_site_expectation(psi, SiteLayout.QUBIT, self.n_a)
        delta = expectation(psi, {SiteLayout.RESONATOR: local_ops.commutator_deficit(self.d_a)})
        return {"sigma_z": float(np.real(sz)), "n_a": float(np.real(na)), "delta_sat": float(np.real(delta))}

    def chain_correlations(self, psi: MatrixProductState) -> np.ndarray:
        return correlation_matrix(psi, self.chain_sites, local_ops.annihilation(self.d_chain))


@dataclass
class ObservableSeries:
    """Serie temporal de observables (MPS o Lindblad), exportable a CSV"""
    kappa: float
    steps: List[int] = field(default_factory=list)
    t_ns: List[float] = field(default_factory=list)
    sigma_z: List[float] = field(default_factory=list)
    n_a: List[float] = field(default_factory=list)
    delta_sat: List[float] = field(default_factory=list)
    max_bond_entropy: List[float] = field(default_factory=list)
    snapshots: List[tuple] = field(default_factory=list)
    flagged: bool = False
    diagnostics: Dict = field(default_factory=dict)
    final_state: Optional[MatrixProductState] = None

    def append(self, step: int, t_ns: float, sigma_z: float, n_a: float,
               delta_sat: float = 0.0, max_bond_entropy: float = float("nan")):
        if self.t_ns and t_ns <= self.t_ns[-1]:
            raise ValueError(f"Times must be strictly increasing ({t_ns} after {self.t_ns[-1]})")
        if abs(sigma_z) > 1.0 + SIGMA_Z_BOUND:
            logger.log_numerical_alert("sigma_z_out_of_range", {"t_ns": t_ns, "sigma_z": sigma_z})
        self.steps.append(step)
        self.t_ns.append(t_ns)
        self.sigma_z.append(sigma_z)
        self.n_a.append(n_a)
        self.delta_sat.append(delta_sat)
        self.max_bond_entropy.append(max_bond_entropy)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.t_ns)

    @property
    def kt_over_2pi(self) -> np.ndarray:
        return self.kappa * self.times

    def __len__(self) -> int:
        return len(self.t_ns)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "step": self.steps,
            "t_ns": self.t_ns,
            "kt_over_2pi": self.kt_over_2pi,
            "sigma_z": self.sigma_z,
            "n_a": self.n_a,
            "delta_sat": self.delta_sat,
            "max_bond_entropy": self.max_bond_entropy,
        })


def evolve(psi0: MatrixProductState, config: EvolutionConfig, hamiltonian: MpoFactory,
           observables: ReadoutObservables, kappa: float, time_dependent: bool = True,
           label: str = "", checkpoint_path: Optional[Path] = None,
           snapshot_times: Optional[List[float]] = None, start_step: int = 0) -> ObservableSeries:
    """
    Evoluciona ψ0 hasta κt/2π = config.kt_final registrando cada `record_stride` pasos.
    start_step > 0 continúa una corrida (ψ0 es el estado en t = start_step·dt).

    snapshot_times: tiempos (κt/2π) en los que se guardan matrices de correlación de la cadena.
    Una saturación del resonador por encima del umbral marca la corrida sin abortarla.
    """
    if config.drive_convention != "midpoint":
        raise ConfigValidationError(f"Unsupported drive convention: {config.drive_convention}")
    if config.record_stride < 1:
        raise ConfigValidationError("record_stride must be >= 1")
    dt = config.dt_ns(kappa)
    n_steps = config.n_steps(kappa)
    if dt <= 0 or n_steps < 1:
        raise ConfigValidationError(f"Invalid time grid: dt={dt}, steps={n_steps}")
    if not 0 <= start_step < n_steps:
        raise ConfigValidationError(f"start_step={start_step} outside [0, {n_steps})")

    engine = TDVPEngine(psi0.copy(), hamiltonian, config.krylov_dim, config.krylov_tol, time_dependent)
    monitor = EvolutionMonitor(label=label, delta_sat_threshold=config.delta_sat_threshold)
    series = ObservableSeries(kappa=kappa)
    pending = sorted(snapshot_times or [])
    if config.snapshot_correlations and not pending:
        pending = [config.kt_final]
    pending = [kt for kt in pending if kt > kappa * start_step * dt + 1e-12]
    projection = 0.0

    def record(step: int, psi: MatrixProductState):
        nonlocal projection
        t = step * dt
        values = observables.measure(psi)
        spectra = bond_spectra(psi) if psi.length > 1 else []
        projection += saturated_bond_weight(spectra, config.chi)
        entropy = max(spectrum_entropy(s) for s in spectra) if config.record_entropy and spectra else float("nan")
        monitor.update_status(step, t, psi.norm(), values["delta_sat"],
                              0.0 if np.isnan(entropy) else entropy, truncation=projection)
        series.append(step, t, values["sigma_z"], values["n_a"], values["delta_sat"], entropy)

    record(start_step, engine.psi)
    for step in range(start_step + 1, n_steps + 1):
        engine.step((step - 1) * dt, dt)
        kt = kappa * step * dt
        while pending and kt >= pending[0] - 1e-12:
            series.snapshots.append((kt, observables.chain_correlations(engine.psi)))
            pending.pop(0)
        if step % config.record_stride == 0 or step == n_steps:
            record(step, engine.psi)

    series.flagged = monitor.flagged
    series.final_state = engine.psi
    series.diagnostics = {**monitor.get_status_summary(), "max_krylov_dim": engine.max_krylov_used,
                          "dt_ns": dt, "n_steps": n_steps, "start_step": start_step,
                          "projection_error": projection}
    logger.log_evolution_diagnostics(label, series.diagnostics)
    if monitor.flagged:
        logger.logger.warning(monitor.generate_report())
    if checkpoint_path is not None:
        checkpoint_path = Path(checkpoint_path)
        save_checkpoint(engine.psi, checkpoint_path, {"label": label, "t_ns": n_steps * dt, "step": n_steps,
                                                      "dt_ns": dt, "kt_over_2pi": kappa * n_steps * dt})
        series.diagnostics["checkpoint"] = str(checkpoint_path)
        monitor.save_status_to_file(str(checkpoint_path.with_suffix(".status.json")))
        monitor.save_alerts_to_file(str(checkpoint_path.with_suffix(".alerts.json")))
    return series
