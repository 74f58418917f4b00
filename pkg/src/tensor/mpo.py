"""
MPO del Hamiltoniano qubit + resonador + cadena con drive dependiente del tiempo.

Convención W[a, s, s', b]: estado de bond 0 = "nada colocado", último = "terminado".
    W[0, 0] = I, W[-1, -1] = I, W[0, -1] = h_local,
    W[0, 1+k] = A_k (término k del bond derecho), W[1+k, -1] = B_k (término k del bond izquierdo).
Todos los coeficientes en rad/ns.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.data.spectral_bath import ChainCoefficients
from src.system.system_model import TWO_PI, CircuitParams, drive_coefficient
from src.tensor import local_ops
from src.tensor.mps import MatrixProductState, SiteLayout
from src.utils.errors import DimensionMismatchError

BondTerms = List[Tuple[np.ndarray, np.ndarray]]


@dataclass
class MatrixProductOperator:
    """Tensores W_i con forma (w_izq, d, d, w_der)"""
    tensors: List[np.ndarray]
    drive_site: Optional[int] = None
    time: float = 0.0

    @property
    def length(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [w.shape[3] for w in self.tensors[:-1]]

    def to_dense(self) -> np.ndarray:
        """Matriz densa (orden np.kron); solo para sistemas pequeños"""
        acc = self.tensors[0][0]  # (d, d, w)
        for w in self.tensors[1:]:
            acc = np.einsum("abw,wstv->asbtv", acc, w)
            D = acc.shape[0] * acc.shape[1]
            acc = acc.reshape(D, D, acc.shape[-1])
        return acc[:, :, 0]


def assemble_mpo(onsite: Sequence[np.ndarray], bonds: Sequence[BondTerms]) -> List[np.ndarray]:
    """
    Tensores MPO para H = Σ_i h_i + Σ_i Σ_k A_k^(i) ⊗ B_k^(i+1) (solo primeros vecinos).
    """
    L = len(onsite)
    if len(bonds) != L - 1:
        raise DimensionMismatchError(f"Need {L - 1} bond term lists, got {len(bonds)}")
    tensors = []
    for i, h in enumerate(onsite):
        d = h.shape[0]
        left_terms = bonds[i - 1] if i > 0 else []
        right_terms = bonds[i] if i < L - 1 else []
        wl = len(left_terms) + 2
        wr = len(right_terms) + 2
        W = np.zeros((wl, d, d, wr), dtype=complex)
        eye = local_ops.identity(d)
        W[0, :, :, 0] = eye
        W[-1, :, :, -1] = eye
        W[0, :, :, -1] = h
        for k, (a_op, _) in enumerate(right_terms):
            W[0, :, :, 1 + k] = a_op
        for k, (_, b_op) in enumerate(left_terms):
            W[1 + k, :, :, -1] = b_op
        if i == 0:
            W = W[:1]
        if i == L - 1:
            W = W[..., -1:]
        tensors.append(W)
    return tensors


class ChainHamiltonian:
    """
    Fábrica H(t) → MPO. Los tensores estáticos se construyen una vez; solo el término
    de drive del resonador depende de t.
    """

    def __init__(self, params: CircuitParams, chain: Optional[ChainCoefficients], layout: SiteLayout):
        n_chain = chain.length if chain is not None else 0
        if n_chain != layout.n_chain:
            raise DimensionMismatchError(f"Layout has {layout.n_chain} chain sites, chain has {n_chain}")
        self.params = params
        self.chain = chain
        self.layout = layout
        self._x_res = local_ops.quadrature(layout.d_a)
        self._static = assemble_mpo(*self._terms())

    def _terms(self) -> Tuple[List[np.ndarray], List[BondTerms]]:
        p, layout = self.params, self.layout
        d_a, d_c = layout.d_a, layout.d_chain
        x_a = self._x_res
        onsite = [
            TWO_PI * 0.5 * p.omega_q * local_ops.sigma_z(),
            TWO_PI * (p.omega_a * local_ops.number(d_a) + p.lam * x_a @ x_a),
        ]
        bonds: List[BondTerms] = [[(TWO_PI * p.g * local_ops.sigma_x(), x_a)]]
        if self.chain is not None and self.chain.length:
            b, bd, n_op = local_ops.annihilation(d_c), local_ops.creation(d_c), local_ops.number(d_c)
            bonds.append([(TWO_PI * self.chain.k0 * x_a, local_ops.quadrature(d_c))])
            for i, e_i in enumerate(self.chain.e):
                onsite.append(TWO_PI * e_i * n_op)
                if i < self.chain.length - 1:
                    hop = TWO_PI * self.chain.t[i]
                    bonds.append([(hop * bd, b), (hop * b, bd)])
        return onsite, bonds

    @property
    def time_dependent(self) -> bool:
        return self.params.eps_d != 0

    def __call__(self, t: float) -> MatrixProductOperator:
        tensors = list(self._static)
        coeff = drive_coefficient(self.params, t)
        if coeff != 0:
            W = tensors[SiteLayout.RESONATOR].copy()
            W[0, :, :, -1] += coeff * self._x_res
            tensors[SiteLayout.RESONATOR] = W
        return MatrixProductOperator(tensors=tensors, drive_site=SiteLayout.RESONATOR, time=t)


def build_mpo(params: CircuitParams, chain: Optional[ChainCoefficients], layout: SiteLayout,
              t: float = 0.0) -> MatrixProductOperator:
    return ChainHamiltonian(params, chain, layout)(t)


def mpo_expectation(psi: MatrixProductState, mpo: MatrixProductOperator) -> complex:
    """⟨ψ|H|ψ⟩ por contracción de entornos"""
    if psi.length != mpo.length:
        raise DimensionMismatchError(f"State has {psi.length} sites, MPO has {mpo.length}")
    env = np.ones((1, 1, 1), dtype=complex)
    for A, W in zip(psi.tensors, mpo.tensors):
        env = np.einsum("bwc,bsx,wstv,cty->xvy", env, A.conj(), W, A, optimize=True)
    return complex(env[0, 0, 0])
