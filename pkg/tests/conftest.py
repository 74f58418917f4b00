"""
Configuración compartida de pytest: opción --runslow y oráculos densos pequeños.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Agregar la raíz del repo al path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.tensor import local_ops  # noqa: E402

TWO_PI = 2.0 * np.pi


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run long physics reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long physics reproduction (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def embed(op: np.ndarray, site: int, dims) -> np.ndarray:
    """Operador local embebido en el espacio producto (orden np.kron)"""
    out = np.eye(1, dtype=complex)
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == site else np.eye(d))
    return out


def dense_chain_hamiltonian(params, chain, layout) -> np.ndarray:
    """H completo sin drive en rad/ns, construido término a término con np.kron"""
    dims = layout.dims
    d_a = layout.d_a
    x_a = local_ops.quadrature(d_a)
    H = TWO_PI * 0.5 * params.omega_q * embed(local_ops.sigma_z(), 0, dims)
    H = H + TWO_PI * embed(params.omega_a * local_ops.number(d_a) + params.lam * x_a @ x_a, 1, dims)
    H = H + TWO_PI * params.g * embed(local_ops.sigma_x(), 0, dims) @ embed(x_a, 1, dims)
    if chain is not None:
        d_c = layout.d_chain
        b = local_ops.annihilation(d_c)
        H = H + TWO_PI * chain.k0 * embed(x_a, 1, dims) @ embed(local_ops.quadrature(d_c), 2, dims)
        for i, e_i in enumerate(chain.e):
            H = H + TWO_PI * e_i * embed(local_ops.number(d_c), 2 + i, dims)
        for i, t_i in enumerate(chain.t):
            hop = embed(b.conj().T, 2 + i, dims) @ embed(b, 3 + i, dims)
            H = H + TWO_PI * t_i * (hop + hop.conj().T)
    return H


@pytest.fixture
def reference_circuit():
    from src.system.system_model import CircuitParams
    return CircuitParams(omega_q=5.304, omega_a=7.5, g=0.3165, kappa=0.05)
