"""
Estados producto de matrices (MPS) para la cadena [qubit, resonador, sitios de cadena...].

Convención de ejes de cada tensor: (bond izquierdo, físico, bond derecho), complejo.
El orden de sitios coincide con np.kron (sitio 0 más significativo).
"""
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import null_space, qr, rq, svd

from src.system.system_model import DressedBasis
from src.utils.errors import DimensionMismatchError, NumericalError, SiteRangeError
from src.utils.export import write_bytes_atomic

CHECKPOINT_MAGIC = b"RSMPS"
CHECKPOINT_VERSION = 1
RANK_TOL = 1e-14


@dataclass(frozen=True)
class SiteLayout:
    """Sitios ordenados: qubit (d=2), resonador (d_a), n_chain sitios de cadena (d_chain)"""
    d_a: int
    d_chain: int
    n_chain: int

    QUBIT = 0
    RESONATOR = 1

    def __post_init__(self):
        if self.d_a < 2 or self.d_chain < 2 or self.n_chain < 0:
            raise DimensionMismatchError(f"Invalid layout: d_a={self.d_a}, d_chain={self.d_chain}, N={self.n_chain}")

    @property
    def dims(self) -> List[int]:
        return [2, self.d_a] + [self.d_chain] * self.n_chain

    @property
    def length(self) -> int:
        return self.n_chain + 2

    def chain_site(self, k: int) -> int:
        if not 0 <= k < self.n_chain:
            raise SiteRangeError(f"Chain site {k} outside [0, {self.n_chain})")
        return 2 + k

    @property
    def chain_sites(self) -> range:
        return range(2, 2 + self.n_chain)


class MatrixProductState:
    """MPS con centro de ortogonalidad explícito"""

    def __init__(self, tensors: List[np.ndarray], center: int = 0):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.center = center
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[2] != self.tensors[i + 1].shape[0]:
                raise DimensionMismatchError(f"Bond mismatch between sites {i} and {i + 1}")

    @classmethod
    def product_state(cls, vectors: List[np.ndarray]) -> "MatrixProductState":
        tensors = [np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in vectors]
        return cls(tensors, center=0)

    @property
    def length(self) -> int:
        return len(self.tensors)

    @property
    def dims(self) -> List[int]:
        return [t.shape[1] for t in self.tensors]

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MatrixProductState":
        return MatrixProductState([t.copy() for t in self.tensors], self.center)

    def _check_site(self, site: int):
        if not 0 <= site < self.length:
            raise SiteRangeError(f"Site {site} outside [0, {self.length})")

    # ---------- GAUGE ----------

    def _left_orthonormalize(self, i: int):
        a, d, b = self.tensors[i].shape
        q, r = qr(self.tensors[i].reshape(a * d, b), mode="economic")
        self.tensors[i] = q.reshape(a, d, q.shape[1])
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))

    def _right_orthonormalize(self, i: int):
        a, d, b = self.tensors[i].shape
        r, q = rq(self.tensors[i].reshape(a, d * b), mode="economic")
        self.tensors[i] = q.reshape(q.shape[0], d, b)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r, axes=(2, 0))

    def canonicalize(self, center: int = 0) -> "MatrixProductState":
        """Forma canónica mixta con centro en `center` (barrido completo)"""
        self._check_site(center)
        for i in range(center):
            self._left_orthonormalize(i)
        for i in range(self.length - 1, center, -1):
            self._right_orthonormalize(i)
        self.center = center
        return self

    def move_center(self, site: int) -> "MatrixProductState":
        self._check_site(site)
        while self.center < site:
            self._left_orthonormalize(self.center)
            self.center += 1
        while self.center > site:
            self._right_orthonormalize(self.center)
            self.center -= 1
        return self

    def norm(self) -> float:
        return float(np.sqrt(np.real(self.overlap(self))))

    def normalize(self) -> "MatrixProductState":
        self.tensors[self.center] = self.tensors[self.center] / self.norm()
        return self

    def overlap(self, other: "MatrixProductState") -> complex:
        """⟨self|other⟩"""
        env = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.tensors, other.tensors):
            env = np.einsum("bc,bsx,csy->xy", env, a.conj(), b, optimize=True)
        return complex(env[0, 0])

    def singular_values(self, bond: int) -> np.ndarray:
        """Espectro de Schmidt del bond entre los sitios bond y bond+1"""
        if not 0 <= bond < self.length - 1:
            raise SiteRangeError(f"Bond {bond} outside [0, {self.length - 1})")
        psi = self.copy().move_center(bond)
        a, d, b = psi.tensors[bond].shape
        return svd(psi.tensors[bond].reshape(a * d, b), compute_uv=False)

    def to_dense(self) -> np.ndarray:
        vec = self.tensors[0]
        for t in self.tensors[1:]:
            vec = np.tensordot(vec, t, axes=(vec.ndim - 1, 0))
        return vec.reshape(-1)


# ---------- ESTADO INICIAL Y RELLENO ----------

def target_bond_dims(dims: List[int], chi: int) -> List[int]:
    """min(χ, dimensión a la izquierda, dimensión a la derecha) por bond"""
    left, acc = [], 1
    for d in dims[:-1]:
        acc = min(acc * d, chi)
        left.append(acc)
    right, acc = [], 1
    for d in reversed(dims[1:]):
        acc = min(acc * d, chi)
        right.append(acc)
    return [min(l, r) for l, r in zip(left, reversed(right))]


def pad_bond_dimension(psi: MatrixProductState, chi: int) -> MatrixProductState:
    """
    Lleva todos los bonds a min(χ, ...) añadiendo filas isométricas de peso cero.
    El estado no cambia; queda canónico con centro en 0.
    El TDVP de un sitio no puede crecer bonds por sí mismo.
    """
    psi = psi.copy().canonicalize(0)
    targets = target_bond_dims(psi.dims, chi)
    for i in range(psi.length - 1, 0, -1):
        t = psi.tensors[i]
        a, d, b = t.shape
        want = targets[i - 1]
        if a >= want:
            continue
        rows = t.reshape(a, d * b)
        complement = null_space(rows)[:, : want - a].conj().T
        psi.tensors[i] = np.vstack([rows, complement]).reshape(want, d, b)
        left = psi.tensors[i - 1]
        psi.tensors[i - 1] = np.concatenate(
            [left, np.zeros(left.shape[:2] + (want - a,), dtype=complex)], axis=2)
    psi.center = 0
    return psi


def initial_state(basis: DressedBasis, j: int, n: int, layout: SiteLayout,
                  chi: Optional[int] = None, cutoff: float = RANK_TOL) -> MatrixProductState:
    """
    |j̄n⟩ ⊗ |0…0⟩: el bloque vestido qubit-resonador se separa por SVD (rango ≤ 2,
    valores singulares bajo cutoff·s_max descartados), cadena en vacío, centro en el sitio 0.
    Con χ dado se rellenan los bonds.
    """
    if basis.d_a != layout.d_a:
        raise DimensionMismatchError(f"Basis d_a={basis.d_a} differs from layout d_a={layout.d_a}")
    block = basis.vector(j, n).reshape(2, layout.d_a)
    u, s, vh = svd(block, full_matrices=False)
    rank = max(int(np.sum(s > cutoff * s[0])), 1)
    tensors = [(u[:, :rank] * s[:rank]).reshape(1, 2, rank),
               vh[:rank].reshape(rank, layout.d_a, 1)]
    vacuum = np.zeros(layout.d_chain, dtype=complex)
    vacuum[0] = 1.0
    tensors += [vacuum.reshape(1, -1, 1).copy() for _ in range(layout.n_chain)]
    psi = MatrixProductState(tensors, center=0)
    return pad_bond_dimension(psi, chi) if chi else psi


# ---------- ENTORNOS Y OBSERVABLES ----------

def _transfer(env: np.ndarray, tensor: np.ndarray, op: Optional[np.ndarray] = None) -> np.ndarray:
    if op is None:
        return np.einsum("bc,bsx,csy->xy", env, tensor.conj(), tensor, optimize=True)
    return np.einsum("bc,bsx,st,cty->xy", env, tensor.conj(), op, tensor, optimize=True)


def _transfer_right(env: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    return np.einsum("xy,bsx,csy->bc", env, tensor.conj(), tensor, optimize=True)


def identity_environments(psi: MatrixProductState) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Entornos identidad: left[k] cubre sitios < k, right[k] cubre sitios > k"""
    L = psi.length
    left = [np.ones((1, 1), dtype=complex)]
    for k in range(L - 1):
        left.append(_transfer(left[-1], psi.tensors[k]))
    right = [None] * L
    right[L - 1] = np.ones((1, 1), dtype=complex)
    for k in range(L - 2, -1, -1):
        right[k] = _transfer_right(right[k + 1], psi.tensors[k + 1])
    return left, right


def expectation(psi: MatrixProductState, ops: Dict[int, np.ndarray]) -> complex:
    """
    ⟨ψ|∏ O_s|ψ⟩ para operadores locales en uno o varios sitios (no necesariamente contiguos).
    """
    for site, op in ops.items():
        psi._check_site(site)
        d = psi.tensors[site].shape[1]
        if op.shape != (d, d):
            raise DimensionMismatchError(f"Operator shape {op.shape} does not match d={d} at site {site}")
    env = np.ones((1, 1), dtype=complex)
    for k, tensor in enumerate(psi.tensors):
        env = _transfer(env, tensor, ops.get(k))
    return complex(env[0, 0])


def reduced_density_matrix(psi: MatrixProductState, site: int) -> np.ndarray:
    """ρ de los sitios (site, site+1) como matriz (d1·d2) × (d1·d2)"""
    psi._check_site(site)
    psi._check_site(site + 1)
    left, right = identity_environments(psi)
    theta = np.tensordot(psi.tensors[site], psi.tensors[site + 1], axes=(2, 0))
    rho = np.einsum("bc,cstx,bupy,xy->stup", left[site], theta, theta.conj(), right[site + 1].T, optimize=True)
    d1, d2 = theta.shape[1], theta.shape[2]
    return rho.reshape(d1 * d2, d1 * d2)


def two_site_expectation(psi: MatrixProductState, site: int, op: np.ndarray) -> complex:
    """⟨O⟩ para un operador denso sobre los sitios contiguos (site, site+1)"""
    rho = reduced_density_matrix(psi, site)
    if op.shape != rho.shape:
        raise DimensionMismatchError(f"Operator shape {op.shape} does not match {rho.shape}")
    return complex(np.trace(rho @ op))


def correlation_matrix(psi: MatrixProductState, sites: List[int],
                       annihilation: np.ndarray) -> np.ndarray:
    """
    C[i, j] = ⟨c_i† c_j⟩ sobre los sitios dados (bosónicos, sin cadenas de Jordan-Wigner).
    """
    sites = list(sites)
    for s in sites:
        psi._check_site(s)
    a = annihilation
    ad = a.conj().T
    n_op = ad @ a
    left, right = identity_environments(psi)
    n = len(sites)
    C = np.zeros((n, n), dtype=complex)
    for p, i in enumerate(sites):
        C[p, p] = np.einsum("xy,xy->", _transfer(left[i], psi.tensors[i], n_op), right[i])
        running = _transfer(left[i], psi.tensors[i], ad)
        k = i
        for q in range(p + 1, n):
            j = sites[q]
            while k + 1 < j:
                k += 1
                running = _transfer(running, psi.tensors[k])
            C[p, q] = np.einsum("xy,xy->", _transfer(running, psi.tensors[j], a), right[j])
            C[q, p] = np.conj(C[p, q])
            running = _transfer(running, psi.tensors[j])
            k = j
    return C


def entanglement_entropy(psi: MatrixProductState, bond: int) -> float:
    """Entropía de von Neumann del espectro de Schmidt del bond"""
    return spectrum_entropy(psi.singular_values(bond))


def spectrum_entropy(s: np.ndarray) -> float:
    p = s ** 2
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p[p > 1e-300] / total
    return float(max(-np.sum(p * np.log(p)), 0.0))


def bond_spectra(psi: MatrixProductState) -> List[np.ndarray]:
    """Espectros de Schmidt de todos los bonds en un barrido de SVD (sobre una copia)"""
    work = psi.copy().canonicalize(0)
    out = []
    for i in range(work.length - 1):
        a, d, b = work.tensors[i].shape
        u, s, vh = svd(work.tensors[i].reshape(a * d, b), full_matrices=False)
        out.append(s)
        work.tensors[i] = u.reshape(a, d, -1)
        work.tensors[i + 1] = np.tensordot(s[:, None] * vh, work.tensors[i + 1], axes=(1, 0))
    return out


def bond_entropies(psi: MatrixProductState) -> np.ndarray:
    return np.array([spectrum_entropy(s) for s in bond_spectra(psi)])


def saturated_bond_weight(spectra: List[np.ndarray], chi: int) -> float:
    """
    Peso del último vector de Schmidt en los bonds que llegaron a χ: estimación del error
    de proyección de TDVP1 (sin bonds saturados es 0).
    """
    total = 0.0
    for s in spectra:
        if len(s) >= chi and s[0] > 0:
            total += float((s[-1] / np.linalg.norm(s)) ** 2)
    return total


# ---------- CHECKPOINTS ----------

def save_checkpoint(psi: MatrixProductState, path, metadata: Optional[dict] = None) -> Path:
    """
    Formato binario versionado: magic, versión (uint16 LE), largo del header (uint32 LE),
    header JSON (formas, centro, metadatos) y tensores crudos '<c16'.
    """
    header = json.dumps({
        "shapes": [list(t.shape) for t in psi.tensors],
        "center": psi.center,
        "metadata": metadata or {},
    }).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(t, dtype="<c16").tobytes() for t in psi.tensors)
    data = CHECKPOINT_MAGIC + struct.pack("<HI", CHECKPOINT_VERSION, len(header)) + header + payload
    return write_bytes_atomic(data, path)


def load_checkpoint(path) -> Tuple[MatrixProductState, dict]:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise NumericalError(f"Not an MPS checkpoint: {path}")
    offset = len(CHECKPOINT_MAGIC)
    version, header_len = struct.unpack_from("<HI", data, offset)
    if version != CHECKPOINT_VERSION:
        raise NumericalError(f"Unsupported checkpoint version {version}")
    offset += struct.calcsize("<HI")
    header = json.loads(data[offset: offset + header_len].decode("utf-8"))
    offset += header_len
    tensors = []
    for shape in header["shapes"]:
        count = int(np.prod(shape))
        tensors.append(np.frombuffer(data, dtype="<c16", count=count, offset=offset).reshape(shape).copy())
        offset += 16 * count
    return MatrixProductState(tensors, center=header["center"]), header["metadata"]
