"""Transverse-field Ising Hamiltonians, ansatz circuits, and an exact
ground-energy oracle.

Both lattices use open boundary conditions. Grid qubits are indexed
row-major; CNOT controls sit on the lower-index (left/upper) qubit of
each bond.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import SizeError
from .sim import Circuit, Gate, PauliSum

MAX_EIG_QUBITS = 14


@dataclass(frozen=True)
class ChainSpec:
    """Open 1D chain: J * sum Z_j Z_{j+1} + B * sum X_j."""

    n_sites: int
    J: float = 1.0
    B: float = 5.0

    def __post_init__(self):
        if not 2 <= self.n_sites <= 24:
            raise SizeError(f"n_sites must be in [2, 24], got {self.n_sites}")
        if not (np.isfinite(self.J) and np.isfinite(self.B)):
            raise ValueError("J and B must be finite")


@dataclass(frozen=True)
class GridSpec:
    """Open rows x cols square lattice with nearest-neighbor ZZ bonds."""

    rows: int
    cols: int
    J: float = 1.0
    B: float = 5.0

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise SizeError("rows and cols must both be >= 2")
        if self.rows * self.cols > 24:
            raise SizeError(f"lattice too large: {self.rows * self.cols} sites")
        if not (np.isfinite(self.J) and np.isfinite(self.B)):
            raise ValueError("J and B must be finite")


def tfim_chain(spec: ChainSpec) -> PauliSum:
    """(N-1) ZZ bond terms with weight J plus N transverse X terms with weight B."""
    terms = []
    for j in range(spec.n_sites - 1):
        terms.append((spec.J, {j: "Z", j + 1: "Z"}))
    if spec.B != 0.0:
        for j in range(spec.n_sites):
            terms.append((spec.B, {j: "X"}))
    return PauliSum.from_terms(spec.n_sites, terms)


def grid_bonds(rows: int, cols: int):
    """Nearest-neighbor bonds of the open grid, horizontal first, row-major."""
    bonds = []
    for r in range(rows):
        for c in range(cols - 1):
            bonds.append((r * cols + c, r * cols + c + 1))
    for r in range(rows - 1):
        for c in range(cols):
            bonds.append((r * cols + c, (r + 1) * cols + c))
    return bonds


def tfim_grid(spec: GridSpec) -> PauliSum:
    """ZZ term per grid bond plus an X term per site."""
    n = spec.rows * spec.cols
    terms = [(spec.J, {a: "Z", b: "Z"}) for a, b in grid_bonds(spec.rows, spec.cols)]
    if spec.B != 0.0:
        terms += [(spec.B, {j: "X"}) for j in range(n)]
    return PauliSum.from_terms(n, terms)


def ansatz_chain(n_qubits: int, n_blocks: int = 2) -> Circuit:
    """Blocks of [RY layer; even-bond CNOT column; odd-bond CNOT column].

    Controls are on the lower-index qubit. One fresh parameter per RY,
    so n_params = n_blocks * n_qubits.
    """
    if n_qubits < 2:
        raise SizeError("ansatz_chain needs at least 2 qubits")
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    gates = []
    for b in range(n_blocks):
        for q in range(n_qubits):
            gates.append(Gate.ry(q, b * n_qubits + q))
        for q in range(0, n_qubits - 1, 2):
            gates.append(Gate.cnot(q, q + 1))
        for q in range(1, n_qubits - 1, 2):
            gates.append(Gate.cnot(q, q + 1))
    return Circuit(n_qubits=n_qubits, gates=tuple(gates), n_params=n_blocks * n_qubits)


def ansatz_grid(rows: int, cols: int, n_blocks: int = 2) -> Circuit:
    """Grid version: per block, RY layer; per lattice row the chain CNOT
    pattern; then one vertical CNOT per column between consecutive rows,
    controls on the upper row, left to right."""
    if rows < 2 or cols < 2:
        raise SizeError("ansatz_grid needs rows, cols >= 2")
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    n = rows * cols
    gates = []
    for b in range(n_blocks):
        for q in range(n):
            gates.append(Gate.ry(q, b * n + q))
        for r in range(rows):
            base = r * cols
            for c in range(0, cols - 1, 2):
                gates.append(Gate.cnot(base + c, base + c + 1))
            for c in range(1, cols - 1, 2):
                gates.append(Gate.cnot(base + c, base + c + 1))
        for r in range(rows - 1):
            for c in range(cols):
                gates.append(Gate.cnot(r * cols + c, (r + 1) * cols + c))
    return Circuit(n_qubits=n, gates=tuple(gates), n_params=n_blocks * n)


_PAULI_MATS = {
    "X": sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)),
    "Y": sp.csr_matrix(np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)),
    "Z": sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)),
}
_ID2 = sp.identity(2, format="csr", dtype=complex)


def pauli_sum_matrix(observable: PauliSum) -> np.ndarray:
    """Dense 2^N x 2^N matrix of a PauliSum (qubit 0 = most significant)."""
    n = observable.n_qubits
    if n > MAX_EIG_QUBITS:
        raise SizeError(f"dense matrix limited to {MAX_EIG_QUBITS} qubits, got {n}")
    total = sp.csr_matrix((2**n, 2**n), dtype=complex)
    for coeff, ops in observable.terms:
        opmap = dict(ops)
        term = sp.identity(1, format="csr", dtype=complex)
        for q in range(n):
            term = sp.kron(term, _PAULI_MATS.get(opmap.get(q), _ID2), format="csr")
        total = total + coeff * term
    return np.asarray(total.todense())


def exact_ground_energy(observable: PauliSum) -> float:
    """Smallest eigenvalue of the dense Hermitian matrix of the PauliSum."""
    mat = pauli_sum_matrix(observable)
    if np.abs(mat - mat.conj().T).max() > 1e-12:
        raise ValueError("assembled matrix is not Hermitian")
    if np.abs(mat.imag).max() < 1e-14:
        mat = np.ascontiguousarray(mat.real)  # real symmetric solve is faster
    return float(np.linalg.eigvalsh(mat)[0])
