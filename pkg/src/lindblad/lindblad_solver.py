"""
Ecuación maestra de Lindblad fenomenológica para qubit + resonador con drive:

    dρ/dt = −i[H_S(t), ρ] + κ(aρa† − ½{a†a, ρ})

Mismo H_S (con λ y drive) y mismo marco de laboratorio que la simulación MPS.
Integración RK4 de paso fijo.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.system.system_model import (TWO_PI, CircuitParams, build_undriven_hamiltonian,
                                     drive_coefficient, system_operators)
from src.tdvp.tdvp_integrator import ObservableSeries
from src.tensor import local_ops
from src.utils.errors import ConfigValidationError, DimensionMismatchError, PositivityError
from src.utils.logger import logger

TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
POSITIVITY_ABORT = -1e-5
POSITIVITY_WARN = -1e-7
RESOLUTION_LIMIT = 0.1


@dataclass
class DensityMatrix:
    """ρ sobre qubit ⊗ resonador (dimensión 2·d_a)"""
    rho: np.ndarray
    t_ns: float = 0.0

    @classmethod
    def from_state(cls, vector: np.ndarray, t_ns: float = 0.0) -> "DensityMatrix":
        v = np.asarray(vector, dtype=complex)
        return cls(np.outer(v, v.conj()), t_ns)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())

    def expectation(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.rho @ op)))


class LindbladSolver:
    """Operadores precomputados para una dimensión d_a y unos parámetros dados"""

    def __init__(self, params: CircuitParams, d_a: int):
        self.params = params
        self.d_a = d_a
        ops = system_operators(d_a)
        self.h0 = build_undriven_hamiltonian(params, d_a)
        self.x = ops["x"]
        self.a = ops["a"]
        self.ad = self.a.conj().T
        self.ada = self.ad @ self.a
        self.gamma = TWO_PI * params.kappa

    def hamiltonian(self, t_ns: float) -> np.ndarray:
        coeff = drive_coefficient(self.params, t_ns)
        return self.h0 + coeff * self.x if coeff else self.h0

    def rhs(self, rho: np.ndarray, t_ns: float) -> np.ndarray:
        H = self.hamiltonian(t_ns)
        out = -1j * (H @ rho - rho @ H)
        if self.gamma:
            out += self.gamma * (self.a @ rho @ self.ad - 0.5 * (self.ada @ rho + rho @ self.ada))
        return out

    def rk4_step(self, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
        k1 = self.rhs(rho, t)
        k2 = self.rhs(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = self.rhs(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = self.rhs(rho + dt * k3, t + dt)
        return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def lindblad_rhs(rho: np.ndarray, params: CircuitParams, t_ns: float) -> np.ndarray:
    """dρ/dt en rad/ns; d_a se deduce de la forma de ρ"""
    if rho.shape[0] % 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatchError(f"rho must be (2 d_a) x (2 d_a), got {rho.shape}")
    return LindbladSolver(params, rho.shape[0] // 2).rhs(rho, t_ns)


def max_stable_dt(params: CircuitParams) -> float:
    """Mayor dt (ns) con dt·2π·max(ω) < 0.1"""
    omega_max = max(params.omega_a, params.omega_q, params.drive_frequency if params.eps_d else 0.0)
    return RESOLUTION_LIMIT / (TWO_PI * omega_max)


def _check_state(state: DensityMatrix):
    min_eig = state.min_eigenvalue
    if min_eig < POSITIVITY_ABORT:
        raise PositivityError(f"Density matrix lost positivity at t={state.t_ns:.4f} ns (min eig {min_eig:.2e})",
                              diagnostics={"t_ns": state.t_ns, "min_eigenvalue": min_eig,
                                           "trace": state.trace})
    if min_eig < POSITIVITY_WARN or abs(state.trace - 1.0) > TRACE_TOL or state.hermiticity_error > HERMITICITY_TOL:
        logger.log_numerical_alert("density_matrix_tolerance", {
            "t_ns": state.t_ns, "min_eigenvalue": min_eig, "trace": state.trace,
            "hermiticity_error": state.hermiticity_error,
        })


def integrate(rho0: np.ndarray, params: CircuitParams, dt: float, t_final: float,
              projectors: Tuple[np.ndarray, np.ndarray], record_stride: int = 1,
              label: str = "lindblad") -> ObservableSeries:
    """
    RK4 de paso fijo desde ρ0 hasta t_final (ns), registrando Σz y N_a con los proyectores vestidos.
    """
    if dt <= 0 or t_final <= 0:
        raise ConfigValidationError(f"Invalid time grid: dt={dt}, t_final={t_final}")
    if dt > max_stable_dt(params):
        raise ConfigValidationError(
            f"dt={dt} ns does not resolve the fastest frequency (need dt < {max_stable_dt(params):.3e} ns)")
    d_a = rho0.shape[0] // 2
    solver = LindbladSolver(params, d_a)
    sigma_z, n_a = projectors
    deficit = np.kron(local_ops.identity(2), local_ops.commutator_deficit(d_a))

    n_steps = int(round(t_final / dt))
    series = ObservableSeries(kappa=params.kappa)
    state = DensityMatrix(np.array(rho0, dtype=complex), 0.0)

    def record(step: int):
        _check_state(state)
        series.append(step, state.t_ns, state.expectation(sigma_z), state.expectation(n_a),
                      state.expectation(deficit))

    record(0)
    for step in range(1, n_steps + 1):
        state.rho = solver.rk4_step(state.rho, state.t_ns, dt)
        state.t_ns = step * dt
        if step % record_stride == 0 or step == n_steps:
            record(step)

    series.diagnostics = {"label": label, "dt_ns": dt, "n_steps": n_steps, "d_a": d_a,
                          "final_trace": state.trace, "final_purity": state.purity}
    logger.log_evolution_diagnostics(label, series.diagnostics)
    return series
