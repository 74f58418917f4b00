"""
Modelo del sistema qubit + resonador (circuito QED mínimo con contratérmino de gauge).

Construye H_S sin drive, lo diagonaliza en la base vestida |j̄n⟩, asigna etiquetas y
provee las reglas de truncamiento y las tasas analíticas (FGR y Lindblad).

Convenciones:
- Base del producto qubit ⊗ resonador con índice j·d_a + n.
- Los Hamiltonianos se devuelven en frecuencia angular (rad/ns); energías y tasas
  reportadas en GHz (unidades de tabla, ω/2π).
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import eigh

from config.readout_config import CircuitConfig
from src.data.spectral_bath import ChainCoefficients, SpectralDensity, evaluate
from src.tensor import local_ops
from src.utils.errors import ConfigValidationError, DimensionMismatchError, LabelingError
from src.utils.logger import logger

TWO_PI = 2.0 * np.pi
DISPERSIVE_THRESHOLD = 0.5
# ε_d es la amplitud de la componente co-rotante: con g = 0 el resonador llega a
# n̄ = ε_d² / [(ω_a − ω_d)² + κ²/4]
DRIVE_NORMALIZATION = 2.0
LABEL_OVERLAP_WARNING = 0.5
_CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class CircuitParams:
    """Parámetros del circuito en GHz (ω/2π)"""
    omega_q: float
    omega_a: float
    g: float
    lam: float = 0.0
    eps_d: float = 0.0
    omega_d: Optional[float] = None
    kappa: float = 0.05

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigValidationError(f"Reorganization energy must be >= 0, got {self.lam}")
        if self.kappa < 0:
            raise ConfigValidationError(f"kappa must be >= 0, got {self.kappa}")
        if not is_dispersive(self):
            logger.log_numerical_alert("non_dispersive_regime", {
                "g": self.g, "detuning": self.detuning,
                "ratio": abs(self.g / self.detuning) if self.detuning else float("inf")
            })

    @property
    def detuning(self) -> float:
        return self.omega_a - self.omega_q

    @property
    def sum_frequency(self) -> float:
        return self.omega_a + self.omega_q

    @property
    def drive_frequency(self) -> float:
        return self.omega_d if self.omega_d is not None else self.omega_a

    def with_drive(self, eps_d: float, omega_d: Optional[float] = None) -> "CircuitParams":
        return replace(self, eps_d=eps_d, omega_d=omega_d if omega_d is not None else self.omega_d)

    @classmethod
    def from_config(cls, circuit: CircuitConfig, lam: float = 0.0) -> "CircuitParams":
        return cls(omega_q=circuit.omega_q, omega_a=circuit.omega_a, g=circuit.g, lam=lam,
                   eps_d=circuit.eps_d, omega_d=circuit.omega_d, kappa=circuit.kappa)


@dataclass(frozen=True)
class DressedBasis:
    """
    Autodescomposición de H_S con etiquetas (j, n) → índice de autoestado.
    energies en GHz; vectors[:, k] es el k-ésimo autovector.
    """
    energies: np.ndarray
    vectors: np.ndarray
    labels: Dict[Tuple[int, int], int]
    d_a: int
    d_label: int

    def index(self, j: int, n: int) -> int:
        if (j, n) not in self.labels:
            raise LabelingError(f"State ({j}, {n}) is not labeled (d_label={self.d_label})")
        return self.labels[(j, n)]

    def vector(self, j: int, n: int) -> np.ndarray:
        return self.vectors[:, self.index(j, n)]

    def energy(self, j: int, n: int) -> float:
        return float(self.energies[self.index(j, n)])

    @property
    def qubit_gap(self) -> float:
        """E_{1̄0} − E_{0̄0} en GHz"""
        return self.energy(1, 0) - self.energy(0, 0)


@dataclass(frozen=True)
class TruncationRule:
    """Cortes de Fock: resonador d_a y sitios de cadena d_chain (uniforme)"""
    d_a: int
    d_chain: int
    nbar_a: float
    nbar_chain: float
    d_chain_rule: int = field(default=0)  # valor de la regla antes del tope


# ---------- OPERADORES ----------

def system_operators(d_a: int) -> Dict[str, np.ndarray]:
    """Operadores embebidos en qubit ⊗ resonador (dimensión 2·d_a)"""
    i_a, i_q = local_ops.identity(d_a), local_ops.identity(2)
    a = np.kron(i_q, local_ops.annihilation(d_a))
    return {
        "sz": np.kron(local_ops.sigma_z(), i_a),
        "sx": np.kron(local_ops.sigma_x(), i_a),
        "a": a,
        "n": np.kron(i_q, local_ops.number(d_a)),
        "x": a + a.conj().T,
    }


def parity_operator(d_a: int) -> np.ndarray:
    """exp(iπ(σ⁺σ⁻ + a†a)) = diag((−1)^(j+n))"""
    j = np.repeat([0, 1], d_a)
    n = np.tile(np.arange(d_a), 2)
    return np.diag((-1.0) ** (j + n)).astype(complex)


def is_dispersive(p: CircuitParams, threshold: float = DISPERSIVE_THRESHOLD) -> bool:
    if p.detuning == 0:
        return p.g == 0
    return abs(p.g / p.detuning) < threshold


def build_undriven_hamiltonian(p: CircuitParams, d_a: int) -> np.ndarray:
    """
    H_S = (ω_q/2)σz + ω_a a†a + g σx(a+a†) + λ(a+a†)², en rad/ns.
    """
    if d_a < 2:
        raise DimensionMismatchError(f"Resonator cutoff must be >= 2, got {d_a}")
    ops = system_operators(d_a)
    h = (0.5 * p.omega_q * ops["sz"] + p.omega_a * ops["n"]
         + p.g * ops["sx"] @ ops["x"] + p.lam * ops["x"] @ ops["x"])
    h = TWO_PI * h
    return 0.5 * (h + h.conj().T)


def drive_coefficient(p: CircuitParams, t_ns: float) -> float:
    """2π·2ε_d·sin(2π·ω_d·t), en rad/ns"""
    if p.eps_d == 0:
        return 0.0
    return TWO_PI * DRIVE_NORMALIZATION * p.eps_d * np.sin(TWO_PI * p.drive_frequency * t_ns)


# ---------- BASE VESTIDA ----------

def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """La componente de mayor módulo de cada autovector queda real positiva"""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)[None, :]


def dressed_basis(H: np.ndarray, d_a: int, d_label: Optional[int] = None) -> DressedBasis:
    """
    Diagonaliza H (rad/ns) y etiqueta los autoestados por máximo solapamiento con |j⟩|n⟩,
    recorriendo los estados desnudos en orden creciente de energía diagonal.
    """
    if d_label is None:
        d_label = min(8, d_a - 4)
    if d_label < 1 or d_label > d_a - 2:
        raise DimensionMismatchError(f"d_label={d_label} needs 1 <= d_label <= d_a - 2 (d_a={d_a})")
    if H.shape != (2 * d_a, 2 * d_a):
        raise DimensionMismatchError(f"Hamiltonian shape {H.shape} does not match d_a={d_a}")

    evals, evecs = eigh(H)
    evecs = _fix_phase(evecs)
    bare_energy = np.real(np.diag(H))

    bare_states = [(j, n) for j in (0, 1) for n in range(d_label)]
    bare_states.sort(key=lambda jn: (bare_energy[jn[0] * d_a + jn[1]], jn))

    labels: Dict[Tuple[int, int], int] = {}
    claimed = set()
    for j, n in bare_states:
        overlaps = np.abs(evecs[j * d_a + n, :])
        k = int(np.argmax(overlaps))
        if k in claimed:
            raise LabelingError(f"Eigenstate {k} claimed twice while labeling ({j}, {n})",
                                diagnostics={"state": (j, n), "eigenindex": k})
        if overlaps[k] ** 2 < LABEL_OVERLAP_WARNING:
            logger.log_numerical_alert("weak_label_overlap", {"state": [j, n], "overlap2": float(overlaps[k] ** 2)})
        labels[(j, n)] = k
        claimed.add(k)

    return DressedBasis(energies=evals / TWO_PI, vectors=evecs, labels=labels, d_a=d_a, d_label=d_label)


def dressed_projectors(basis: DressedBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Σz = Σ_n |1̄n⟩⟨1̄n| − |0̄n⟩⟨0̄n| y N_a = Σ_n n(|1̄n⟩⟨1̄n| + |0̄n⟩⟨0̄n|)"""
    dim = basis.vectors.shape[0]
    sz = np.zeros((dim, dim), dtype=complex)
    na = np.zeros((dim, dim), dtype=complex)
    for n in range(basis.d_label):
        p0 = np.outer(basis.vector(0, n), basis.vector(0, n).conj())
        p1 = np.outer(basis.vector(1, n), basis.vector(1, n).conj())
        sz += p1 - p0
        na += n * (p0 + p1)
    return sz, na


def dressed_spectrum_frame(basis: DressedBasis) -> pd.DataFrame:
    rows = [{"j": j, "n": n, "E_GHz": basis.energy(j, n)} for (j, n) in sorted(basis.labels)]
    return pd.DataFrame(rows)


def perturbative_amplitudes(p: CircuitParams) -> Tuple[float, float]:
    """Admixturas de primer orden: ⟨01|1̄0⟩ ≈ −g/Δ y ⟨11|0̄0⟩ ≈ −g/Σ"""
    return -p.g / p.detuning, -p.g / p.sum_frequency


# ---------- TRUNCAMIENTO ----------

def _ceil(value: float) -> int:
    return int(math.ceil(value - _CEIL_SLACK))


def truncation_dims(eps_d: float, kappa: float, chain: Optional[ChainCoefficients],
                    initial_photons: int = 0, chain_dim_cap: Optional[int] = None) -> TruncationRule:
    """
    d_a = ⌈10 + 7√n̄_a + n̄_a⌉ con n̄_a = max(4ε_d²/κ², fotones iniciales);
    d_chain = ⌈2 + 5·n̄_chain⌉ con n̄_chain = (t₀/k₀)·n̄_a. Sin cadena (Lindblad) d_chain = 2.
    """
    if kappa <= 0:
        raise ConfigValidationError(f"kappa must be positive, got {kappa}")
    nbar_a = max(4.0 * eps_d ** 2 / kappa ** 2, float(initial_photons))
    d_a = max(_ceil(10.0 + 7.0 * math.sqrt(nbar_a) + nbar_a), 10)
    has_bonds = chain is not None and len(chain.t) and chain.k0 > 0
    ratio = float(chain.t[0] / chain.k0) if has_bonds else 0.0
    nbar_chain = ratio * nbar_a
    d_rule = max(_ceil(2.0 + 5.0 * nbar_chain), 2)
    d_chain = d_rule
    if chain_dim_cap is not None and d_rule > chain_dim_cap:
        logger.log_numerical_alert("chain_dim_capped", {"rule": d_rule, "cap": chain_dim_cap,
                                                        "nbar_chain": nbar_chain})
        d_chain = max(chain_dim_cap, 2)
    return TruncationRule(d_a=d_a, d_chain=d_chain, nbar_a=nbar_a, nbar_chain=nbar_chain, d_chain_rule=d_rule)


# ---------- TASAS ANALÍTICAS ----------

def _require_detuned(p: CircuitParams):
    if p.detuning == 0:
        raise ConfigValidationError(
            f"Rates need a detuned qubit: omega_q = omega_a = {p.omega_a} GHz")


def fgr_rate(p: CircuitParams, J: SpectralDensity, basis: Optional[DressedBasis] = None) -> float:
    """
    Γ10(0) = 2π·J(ω)·g²·|1/Δ + 1/Σ|² en GHz, con ω = ω_q o el gap vestido si se da la base.
    """
    _require_detuned(p)
    omega = basis.qubit_gap if basis is not None else p.omega_q
    return float(TWO_PI * evaluate(J, omega) * p.g ** 2 * (1.0 / p.detuning + 1.0 / p.sum_frequency) ** 2)


def lindblad_rates(p: CircuitParams) -> Tuple[float, float]:
    """(Γ10ᴸ, Γ01ᴸ) = (κg²/Δ², κg²/Σ²) en GHz"""
    _require_detuned(p)
    return p.kappa * p.g ** 2 / p.detuning ** 2, p.kappa * p.g ** 2 / p.sum_frequency ** 2


def effective_qubit_excitation(p: CircuitParams, t_ns) -> np.ndarray:
    """Σz(t) ≈ −1 + 2·(2πΓ01ᴸ)·t desde |0̄0⟩ (orden corto)"""
    _, gamma01 = lindblad_rates(p)
    return -1.0 + 2.0 * TWO_PI * gamma01 * np.asarray(t_ns, dtype=float)
