"""
Densidades espectrales del baño, discretización por cuadratura y mapeo a cadena.

Flujo típico:
    J = calibrate_prefactor(BathKind.OHMIC, kappa=0.05, omega_a=7.5)
    bath = discretize(J, M=1500)
    chain = chain_map(bath, N=150)
    jt = effective_filtered_sdf(chain, omega_a=7.5, g=0.3165)

Todas las frecuencias en GHz (ω/2π). Los coeficientes de cadena se multiplican por 2π
solo al construir Hamiltonianos.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.linalg import eigh_tridiagonal

from config.readout_config import BathConfig, BathKind, Kernel
from src.utils.errors import (CalibrationImpossibleError, ChainBreakdownError,
                              ConfigValidationError, DimensionMismatchError,
                              NumericalError, UnsupportedBathError)
from src.utils.logger import logger

ORTHOGONALITY_TOL = 1e-10
NOTCH_WINDOW_SIGMAS = 5.0
DEFAULT_MOMENT_POINTS = 4000


@dataclass(frozen=True)
class SpectralDensity:
    """
    J(ω) parametrizada (flat / ohmic / purcell_notch).
    alpha multiplica la expresión de tabla; ω en GHz.
    """
    kind: BathKind
    alpha: float
    omega_min: float = 3.0
    omega_max: float = 12.0
    omega_c: float = 15.0
    notch_depth: float = 0.0
    notch_sigma: float = 0.1
    notch_center: float = 5.304

    def __post_init__(self):
        if not isinstance(self.kind, BathKind):
            try:
                object.__setattr__(self, "kind", BathKind(self.kind))
            except ValueError:
                raise UnsupportedBathError(f"Unsupported bath kind: {self.kind}")
        if self.alpha < 0:
            raise ConfigValidationError(f"Negative prefactor alpha={self.alpha}")
        if self.kind == BathKind.PURCELL_NOTCH and not (0.0 <= self.notch_depth < 1.0):
            raise ConfigValidationError(f"Notch depth must satisfy 0 <= D < 1, got {self.notch_depth}")
        if self.kind == BathKind.FLAT and not (0.0 <= self.omega_min < self.omega_max):
            raise ConfigValidationError(f"Invalid flat band [{self.omega_min}, {self.omega_max}]")

    def __call__(self, omega):
        return evaluate(self, omega)

    def with_alpha(self, alpha: float) -> "SpectralDensity":
        return replace(self, alpha=alpha)

    def support(self) -> Tuple[float, float]:
        """Soporte compacto de J"""
        if self.kind == BathKind.FLAT:
            return self.omega_min, self.omega_max
        return 0.0, self.omega_c

    def breakpoints(self) -> np.ndarray:
        """Bordes de paneles obligatorios: bordes del soporte y ventana del notch ω_q ± 5σ"""
        lo, hi = self.support()
        points = [lo, hi]
        if self.kind == BathKind.PURCELL_NOTCH:
            half = NOTCH_WINDOW_SIGMAS * self.notch_sigma
            points += [p for p in (self.notch_center - half, self.notch_center + half) if lo < p < hi]
        return np.unique(np.array(points, dtype=float))


@dataclass(frozen=True)
class DiscretizedBath:
    """Medida discreta Σ_k w_k δ(ω − ω_k) con w_k = |g_k|²"""
    omegas: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.omegas)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class ChainCoefficients:
    """
    Coeficientes de la cadena: energías e[0..N-1], saltos t[0..N-2] (t[i] une i con i+1)
    y acoplamiento sistema-cadena k0. e[0] es el primer momento de J.
    """
    e: np.ndarray
    t: np.ndarray
    k0: float

    def __post_init__(self):
        if len(self.t) != max(len(self.e) - 1, 0):
            raise DimensionMismatchError(
                f"Chain needs len(t) = len(e) - 1, got {len(self.e)} and {len(self.t)}"
            )

    @property
    def length(self) -> int:
        return len(self.e)

    def truncated(self, n: int) -> "ChainCoefficients":
        if n > self.length:
            raise DimensionMismatchError(f"Cannot truncate chain of length {self.length} to {n}")
        return ChainCoefficients(e=self.e[:n].copy(), t=self.t[:n - 1].copy(), k0=self.k0)

    def jacobi_matrix(self) -> np.ndarray:
        return np.diag(self.e) + np.diag(self.t, 1) + np.diag(self.t, -1)

    def prepend_site(self, energy: float, coupling: float) -> "ChainCoefficients":
        """Antepone un modo (energía, acoplamiento k0 al antiguo primer sitio); el nuevo k0 se fija aparte"""
        return ChainCoefficients(e=np.concatenate([[energy], self.e]),
                                 t=np.concatenate([[self.k0], self.t]),
                                 k0=coupling)


@dataclass
class SampledFunction:
    """Función muestreada en una grilla (J reconstruida o J̃)"""
    omega: np.ndarray
    values: np.ndarray
    nodes: np.ndarray = field(default=None)
    weights: np.ndarray = field(default=None)
    eta: float = 0.0

    def __call__(self, omega):
        return np.interp(omega, self.omega, self.values)

    def to_frame(self, column: str = "J") -> pd.DataFrame:
        return pd.DataFrame({"omega_GHz": self.omega, column: self.values})


# ---------- EVALUACIÓN Y CALIBRACIÓN ----------

def evaluate(J: SpectralDensity, omega) -> Union[float, np.ndarray]:
    """
    Expresión de tabla de J(ω); exactamente 0 fuera del soporte o para ω < 0.
    """
    w = np.asarray(omega, dtype=float)
    if J.kind == BathKind.FLAT:
        inside = (w >= J.omega_min) & (w <= J.omega_max) & (w >= 0)
        out = np.where(inside, 2.0 * J.alpha, 0.0)
    elif J.kind in (BathKind.OHMIC, BathKind.PURCELL_NOTCH):
        inside = (w >= 0) & (w <= J.omega_c)
        out = np.where(inside, 2.0 * J.alpha * w, 0.0)
        if J.kind == BathKind.PURCELL_NOTCH:
            notch = 1.0 - J.notch_depth * np.exp(-(w - J.notch_center) ** 2 / (2.0 * J.notch_sigma ** 2))
            out = out * notch
    else:
        raise UnsupportedBathError(f"Unsupported bath kind: {J.kind}")
    return float(out) if np.ndim(out) == 0 else out


def calibrate_prefactor(kind, kappa: float, omega_a: float, **band) -> SpectralDensity:
    """
    Elige α tal que 2π·J(ω_a) = κ exactamente.

    Args:
        kind: BathKind o su valor
        kappa: tasa de decaimiento de un fotón (GHz, unidades de tabla)
        omega_a: frecuencia del resonador (GHz)
        band: omega_min, omega_max, omega_c, notch_depth, notch_sigma, notch_center
    """
    if kappa <= 0:
        raise ConfigValidationError(f"kappa must be positive, got {kappa}")
    unit = SpectralDensity(kind=kind, alpha=1.0, **band)
    j_unit = evaluate(unit, omega_a)
    if j_unit <= 0:
        raise CalibrationImpossibleError(
            f"J({omega_a}) = 0 for {unit.kind.value} bath: omega_a outside the support {unit.support()}"
        )
    return unit.with_alpha(kappa / (2.0 * np.pi * j_unit))


def spectral_density_from_config(bath: BathConfig, kappa: float, omega_a: float,
                                 omega_q: float) -> SpectralDensity:
    """Construye y calibra J a partir de la configuración"""
    band = dict(omega_min=bath.omega_min, omega_max=bath.omega_max, omega_c=bath.omega_c)
    if bath.kind == BathKind.PURCELL_NOTCH:
        band.update(notch_depth=bath.notch_depth, notch_sigma=bath.notch_sigma,
                    notch_center=bath.notch_center if bath.notch_center is not None else omega_q)
    return calibrate_prefactor(bath.kind, kappa, omega_a, **band)


# ---------- DISCRETIZACIÓN ----------

@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _graded_edges(lo: float, hi: float, n_cells: int) -> np.ndarray:
    """Bordes con agrupamiento tipo Chebyshev hacia los extremos del soporte"""
    u = np.linspace(0.0, 1.0, n_cells + 1)
    edges = lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * u))
    edges[0], edges[-1] = lo, hi
    return edges


def _panel_rule(J: SpectralDensity, a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x
    return nodes, half * w * evaluate(J, nodes)


def _centroid_cells(J: SpectralDensity, M: int) -> Tuple[np.ndarray, np.ndarray]:
    """Regla de punto medio ponderado: nodo = ∫ωJ/∫J de cada celda, peso = ∫J"""
    lo, hi = J.support()
    edges = _graded_edges(lo, hi, M)
    inner = J.breakpoints()
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        cuts = np.unique(np.concatenate([[a, b], inner[(inner > a) & (inner < b)]]))
        mass = first = 0.0
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            x, w = _panel_rule(J, c0, c1, 64)
            mass += w.sum()
            first += (w * x).sum()
        if mass > 0:
            nodes.append(first / mass)
            weights.append(mass)
    return np.array(nodes), np.array(weights)


def discretize(J: SpectralDensity, M: int, points_per_panel: int = 8) -> DiscretizedBath:
    """
    Cuadratura compuesta de Gauss-Legendre de la medida J(ω)dω sobre su soporte, con M puntos.

    Los paneles se agrupan hacia los bordes del soporte (donde oscilan los polinomios
    ortogonales de grado alto) e incluyen los bordes de la ventana del notch.
    Con M < points_per_panel cae a la regla de centroides (M=1 → un modo en el centroide).
    """
    if not isinstance(J.kind, BathKind):
        raise UnsupportedBathError(f"Unsupported bath kind: {J.kind}")
    if M < 1:
        raise DimensionMismatchError(f"Need at least one quadrature point, got M={M}")

    if M < points_per_panel:
        nodes, weights = _centroid_cells(J, M)
    else:
        lo, hi = J.support()
        edges = np.unique(np.concatenate([_graded_edges(lo, hi, M // points_per_panel), J.breakpoints()]))
        n_panels = len(edges) - 1
        counts = np.full(n_panels, M // n_panels)
        counts[: M % n_panels] += 1
        parts = [_panel_rule(J, a, b, int(n)) for a, b, n in zip(edges[:-1], edges[1:], counts) if n > 0]
        nodes = np.concatenate([p[0] for p in parts])
        weights = np.concatenate([p[1] for p in parts])

    keep = weights > 0
    return DiscretizedBath(omegas=nodes[keep], weights=weights[keep])


def integrate_moment(J: SpectralDensity, k: int, M: int = DEFAULT_MOMENT_POINTS) -> float:
    """∫ ω^k J(ω) dω con la misma cuadratura que discretize (k = −1 da λ)"""
    bath = discretize(J, M)
    return float(np.sum(bath.weights * bath.omegas ** k))


def reorganization_energy(J: SpectralDensity, M: int = DEFAULT_MOMENT_POINTS) -> float:
    """
    λ = ∫ J(ω)/ω dω (contratérmino de reorganización).
    Falla si J(ω)/ω diverge en ω → 0.
    """
    if J.alpha == 0:
        return 0.0
    lo, hi = J.support()
    if lo <= 0:
        eps_small, eps_large = 1e-9 * hi, 1e-4 * hi
        ratio_small = evaluate(J, eps_small) / eps_small
        ratio_large = evaluate(J, eps_large) / eps_large
        if ratio_small > 10.0 * max(ratio_large, np.finfo(float).tiny):
            raise NumericalError(f"Reorganization energy diverges: J(w)/w grows as w -> 0 for {J.kind.value}")
    return integrate_moment(J, -1, M)


# ---------- MAPEO A CADENA ----------

def chain_map(bath: DiscretizedBath, N: int) -> ChainCoefficients:
    """
    Coeficientes de recurrencia de los polinomios ortonormales de la medida discreta.

    Tridiagonalización de Lanczos de diag(ω_k) con vector inicial sqrt(w_k)/k0 y
    reortogonalización completa (dos pasadas) en cada paso.
    """
    if N > bath.size:
        raise DimensionMismatchError(f"Chain length N={N} exceeds number of modes M={bath.size}")
    if N < 1:
        raise DimensionMismatchError("Chain length must be positive")

    x = np.asarray(bath.omegas, dtype=float)
    w = np.asarray(bath.weights, dtype=float)
    if np.any(w <= 0):
        raise ChainBreakdownError("Chain mapping requires strictly positive weights")

    k0 = float(np.sqrt(w.sum()))
    basis = np.zeros((N, len(x)))
    e = np.zeros(N)
    t = np.zeros(max(N - 1, 0))
    q = np.sqrt(w) / k0
    scale = float(np.max(np.abs(x))) or 1.0

    for j in range(N):
        basis[j] = q
        v = x * q
        e[j] = q @ v
        v -= e[j] * q
        if j > 0:
            v -= t[j - 1] * basis[j - 1]
        for _ in range(2):
            v -= basis[: j + 1].T @ (basis[: j + 1] @ v)
        if j == N - 1:
            break
        beta = float(np.linalg.norm(v))
        if beta <= 1e-13 * scale:
            raise ChainBreakdownError(f"Lanczos breakdown at step {j}: invariant subspace reached",
                                      diagnostics={"step": j, "beta": beta})
        q = v / beta
        loss = float(np.max(np.abs(basis[: j + 1] @ q)))
        if loss > ORTHOGONALITY_TOL:
            raise ChainBreakdownError(f"Loss of orthogonality {loss:.2e} at step {j}",
                                      diagnostics={"step": j, "loss": loss})
        t[j] = beta

    return ChainCoefficients(e=e, t=t, k0=k0)


def chain_from_config(J: SpectralDensity, N: int, bath_config: BathConfig,
                      factor: Optional[int] = None) -> ChainCoefficients:
    """discretize + chain_map con M = factor·N (factor de cuadratura por defecto)"""
    factor = factor or bath_config.quadrature_factor
    bath = discretize(J, factor * N, bath_config.points_per_panel)
    return chain_map(bath, N)


def light_cone_length(chain: ChainCoefficients, t_final_ns: float, safety: float = 1.2) -> int:
    """Sitios alcanzados por el frente de onda (velocidad 2·t_∞ en frecuencia angular)"""
    t_inf = float(chain.t[-1]) if len(chain.t) else 0.0
    velocity = 2.0 * (2.0 * np.pi * t_inf)  # sitios por ns
    return int(np.ceil(safety * velocity * t_final_ns))


def analytic_recurrence(kind, n: int, alpha: float = 1.0, omega_min: float = 3.0,
                        omega_max: float = 12.0, omega_c: float = 15.0) -> ChainCoefficients:
    """
    Recurrencia exacta para los baños con polinomios clásicos:
    flat → Legendre desplazado en [ω_min, ω_max]; ohmic → Jacobi(0, 1) desplazado en [0, ω_c].
    """
    kind = BathKind(kind)
    i = np.arange(n, dtype=float)
    if kind == BathKind.FLAT:
        half = 0.5 * (omega_max - omega_min)
        e = np.full(n, 0.5 * (omega_min + omega_max))
        m = i[:-1] + 1
        t = half * m / np.sqrt(4 * m ** 2 - 1)
        k0 = np.sqrt(2 * alpha * (omega_max - omega_min))
    elif kind == BathKind.OHMIC:
        e = 0.5 * omega_c * (1.0 + 1.0 / ((2 * i + 1) * (2 * i + 3)))
        m = i[:-1] + 1
        t = 0.5 * omega_c * np.sqrt(m * (m + 1)) / (2 * m + 1)
        k0 = np.sqrt(alpha) * omega_c
    else:
        raise UnsupportedBathError(f"No closed-form recurrence for {kind.value}")
    return ChainCoefficients(e=e, t=t, k0=float(k0))


# ---------- RECONSTRUCCIÓN ----------

def jacobi_quadrature(chain: ChainCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """Autovalores de la matriz de Jacobi y pesos w_k = k0²·|v_1^(k)|²"""
    if chain.length == 1:
        return np.array([chain.e[0]]), np.array([chain.k0 ** 2])
    nodes, vecs = eigh_tridiagonal(chain.e, chain.t)
    return nodes, chain.k0 ** 2 * vecs[0] ** 2


def _kernel(kind: Kernel, x: np.ndarray, eta: float) -> np.ndarray:
    if kind == Kernel.GAUSSIAN:
        return np.exp(-0.5 * (x / eta) ** 2) / (np.sqrt(2.0 * np.pi) * eta)
    if kind == Kernel.LORENTZIAN:
        return (eta / np.pi) / (x ** 2 + eta ** 2)
    raise ValueError(f"Unknown kernel: {kind}")


def reconstruct_sdf(chain: ChainCoefficients, eta: Optional[float] = None,
                    kernel: Kernel = Kernel.GAUSSIAN, grid: Optional[np.ndarray] = None) -> SampledFunction:
    """
    Reconstruye J a partir de los coeficientes de cadena:
    diagonaliza la matriz de Jacobi, pesa con k0²|v_1|² y convoluciona con f_η.
    """
    kernel = Kernel(kernel)
    nodes, weights = jacobi_quadrature(chain)
    spacing = float(np.mean(np.diff(nodes))) if len(nodes) > 1 else 0.0
    if eta is None:
        eta = 3.0 * spacing if spacing > 0 else 1e-2
    elif spacing > 0 and eta < spacing:
        logger.log_numerical_alert("broadening_below_spacing", {"eta": eta, "mean_spacing": spacing})
    if grid is None:
        grid = np.linspace(nodes.min() - 5 * eta, nodes.max() + 5 * eta, 2000)
    grid = np.asarray(grid, dtype=float)
    values = _kernel(kernel, grid[:, None] - nodes[None, :], eta) @ weights
    return SampledFunction(omega=grid, values=values, nodes=nodes, weights=weights, eta=eta)


def effective_filtered_sdf(chain: ChainCoefficients, omega_a: float, g: float,
                           eta: Optional[float] = None, grid: Optional[np.ndarray] = None,
                           kernel: Kernel = Kernel.GAUSSIAN) -> SampledFunction:
    """
    J̃(ω) visto por el qubit: el resonador se antepone a la cadena (energía ω_a,
    acoplamiento k0 al primer sitio, nuevo acoplamiento g) y se reconstruye.
    Supone acoplamientos que conservan excitaciones en toda la cadena (tipo Jaynes-Cummings),
    aunque el acoplamiento resonador-cadena simulado es dipolar: solo vale cualitativamente.
    """
    extended = chain.prepend_site(omega_a, g)
    return reconstruct_sdf(extended, eta=eta, kernel=kernel, grid=grid)


# ---------- EXPORTACIÓN ----------

def chain_to_frame(chain: ChainCoefficients) -> pd.DataFrame:
    """Tabla {i, e_i, t_i}; t_i del último sitio queda vacío"""
    t = np.concatenate([chain.t, [np.nan]])
    return pd.DataFrame({"i": np.arange(chain.length), "e_i": chain.e, "t_i": t})


def sdf_to_frame(J: SpectralDensity, grid: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"omega_GHz": grid, "J": evaluate(J, grid)})
