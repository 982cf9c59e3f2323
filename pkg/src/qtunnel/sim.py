"""Dense statevector simulation of RY/CNOT circuits.

Conventions:
  * Qubit 0 is the most significant bit of the basis index, so for two
    qubits the amplitude order is |00>, |01>, |10>, |11>.
  * RY(phi) = [[cos(phi/2), -sin(phi/2)], [sin(phi/2), cos(phi/2)]].
  * States are pure, stored as complex128 arrays of length 2**n_qubits.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from math import cos, sin, pi, sqrt

import numpy as np

from .exceptions import ArityError, IndexErrorQ, ShapeError, SizeError
from . import kernels

MAX_QUBITS = 24

_NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over 2**n_qubits computational basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ShapeError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm2 = float(np.sum(np.abs(amps) ** 2))
        if abs(norm2 - 1.0) > 1e-8:
            raise ShapeError(f"state is not normalized: |psi|^2 = {norm2}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


@dataclass(frozen=True)
class Gate:
    """A single circuit element: an RY rotation or a CNOT."""

    kind: str  # "ry" | "cnot"
    qubit: int = -1
    param_slot: int = -1
    control: int = -1
    target: int = -1

    @classmethod
    def ry(cls, qubit: int, param_slot: int) -> "Gate":
        return cls(kind="ry", qubit=qubit, param_slot=param_slot)

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        if control == target:
            raise IndexErrorQ("CNOT control and target must differ")
        return cls(kind="cnot", control=control, target=target)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list with trainable parameter slots.

    Every slot in [0, n_params) must appear in exactly one RY gate.
    """

    n_qubits: int
    gates: tuple
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        seen = {}
        for g in self.gates:
            if g.kind == "ry":
                if not 0 <= g.qubit < self.n_qubits:
                    raise IndexErrorQ(f"RY qubit {g.qubit} out of range")
                if not 0 <= g.param_slot < self.n_params:
                    raise IndexErrorQ(f"param slot {g.param_slot} out of range")
                if g.param_slot in seen:
                    raise IndexErrorQ(f"param slot {g.param_slot} used twice")
                seen[g.param_slot] = g
            elif g.kind == "cnot":
                for q in (g.control, g.target):
                    if not 0 <= q < self.n_qubits:
                        raise IndexErrorQ(f"CNOT qubit {q} out of range")
            else:
                raise ValueError(f"unknown gate kind {g.kind!r}")
        if len(seen) != self.n_params:
            missing = set(range(self.n_params)) - set(seen)
            raise IndexErrorQ(f"param slots never used: {sorted(missing)}")


@dataclass(frozen=True)
class PauliSum:
    """Hermitian observable: a weighted sum of Pauli strings.

    ``terms`` is a tuple of (coefficient, ops) pairs, where ops is a
    sorted tuple of (qubit, letter) with letter in {"X", "Y", "Z"}.
    """

    n_qubits: int
    terms: tuple

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        norm_terms = []
        for coeff, ops in self.terms:
            coeff = float(coeff)
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite")
            ops = tuple(sorted((int(q), str(p).upper()) for q, p in dict(ops).items()))
            for q, p in ops:
                if not 0 <= q < self.n_qubits:
                    raise IndexErrorQ(f"qubit {q} out of range in Pauli term")
                if p not in ("X", "Y", "Z"):
                    raise ValueError(f"unknown Pauli letter {p!r}")
            norm_terms.append((coeff, ops))
        object.__setattr__(self, "terms", tuple(norm_terms))

    @classmethod
    def from_terms(cls, n_qubits: int, terms) -> "PauliSum":
        """terms: iterable of (coefficient, {qubit: letter}) pairs."""
        return cls(n_qubits=n_qubits, terms=tuple((c, tuple(o.items())) for c, o in terms))


# ---------------------------------------------------------------------------
# state preparation and gate application


def zero_state(n_qubits: int) -> StateVector:
    """The all-zeros computational basis state |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _apply_ry_inplace(amps: np.ndarray, n: int, qubit: int, c: float, s: float) -> None:
    view = amps.reshape(2**qubit, 2, -1)
    a0 = view[:, 0, :].copy()
    view[:, 0, :] *= c
    view[:, 0, :] -= s * view[:, 1, :]
    view[:, 1, :] *= c
    view[:, 1, :] += s * a0


def _apply_cnot_inplace(amps: np.ndarray, n: int, control: int, target: int) -> None:
    view = amps.reshape([2] * n)
    i0 = [slice(None)] * n
    i0[control], i0[target] = 1, 0
    i1 = [slice(None)] * n
    i1[control], i1[target] = 1, 1
    i0, i1 = tuple(i0), tuple(i1)
    tmp = view[i0].copy()
    view[i0] = view[i1]
    view[i1] = tmp


def apply_gate(state: StateVector, gate: Gate, params: np.ndarray) -> StateVector:
    """Apply one gate, returning a new StateVector."""
    n = state.n_qubits
    amps = state.amplitudes.copy()
    params = np.asarray(params, dtype=float)
    if gate.kind == "ry":
        if not 0 <= gate.qubit < n:
            raise IndexErrorQ(f"RY qubit {gate.qubit} out of range for {n} qubits")
        if not 0 <= gate.param_slot < len(params):
            raise IndexErrorQ(f"param slot {gate.param_slot} out of range")
        phi = params[gate.param_slot]
        _apply_ry_inplace(amps, n, gate.qubit, cos(phi / 2), sin(phi / 2))
    elif gate.kind == "cnot":
        if not (0 <= gate.control < n and 0 <= gate.target < n):
            raise IndexErrorQ("CNOT qubit out of range")
        _apply_cnot_inplace(amps, n, gate.control, gate.target)
    else:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    return StateVector(n, amps)


def run_circuit(circuit: Circuit, params: np.ndarray) -> StateVector:
    """Apply all gates in order to the all-zeros state."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ArityError(
            f"expected {circuit.n_params} parameters, got shape {params.shape}"
        )
    amps = np.zeros(2**circuit.n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    n = circuit.n_qubits
    for g in circuit.gates:
        if g.kind == "ry":
            phi = params[g.param_slot]
            _apply_ry_inplace(amps, n, g.qubit, cos(phi / 2), sin(phi / 2))
        else:
            _apply_cnot_inplace(amps, n, g.control, g.target)
    return StateVector(n, amps)


# ---------------------------------------------------------------------------
# observables


@functools.lru_cache(maxsize=256)
def _compile_observable(observable: PauliSum):
    """Split a PauliSum into a diagonal part and bit-flip terms.

    A term acts as (O psi)[i] = phase[i] * psi[i ^ mask], where mask
    collects the X/Y qubits and phase carries Z signs and Y factors.
    Purely diagonal terms are accumulated into one real diagonal.
    """
    n = observable.n_qubits
    dim = 2**n
    idx = np.arange(dim)
    diag = np.zeros(dim, dtype=np.float64)
    masks = []
    phases = []
    for coeff, ops in observable.terms:
        mask = 0
        phase = np.full(dim, coeff, dtype=np.complex128)
        for q, p in ops:
            bit = 1 << (n - 1 - q)
            zsign = 1.0 - 2.0 * ((idx & bit) > 0)
            if p == "Z":
                phase *= zsign
            elif p == "X":
                mask ^= bit
            else:  # Y
                mask ^= bit
                phase *= -1j * zsign
        if mask == 0:
            if np.abs(phase.imag).max() > 1e-14:
                raise ValueError("diagonal Pauli term has complex phase")
            diag += phase.real
        else:
            masks.append(mask)
            phases.append(phase)
    masks = np.asarray(masks, dtype=np.int64)
    phases = (
        np.asarray(phases, dtype=np.complex128)
        if phases
        else np.zeros((0, dim), dtype=np.complex128)
    )
    return diag, masks, phases


def apply_pauli_sum(observable: PauliSum, amps: np.ndarray) -> np.ndarray:
    """Return O|psi> as a raw amplitude array."""
    diag, masks, phases = _compile_observable(observable)
    out = diag * amps
    idx = np.arange(len(amps))
    for mask, phase in zip(masks, phases):
        out += phase * amps[idx ^ mask]
    return out


def expectation(state: StateVector, observable: PauliSum) -> float:
    """<psi|O|psi> for a Hermitian PauliSum; always real."""
    if state.n_qubits != observable.n_qubits:
        raise ShapeError(
            f"state has {state.n_qubits} qubits, observable {observable.n_qubits}"
        )
    val = np.vdot(state.amplitudes, apply_pauli_sum(observable, state.amplitudes))
    if abs(val.imag) > 1e-8:
        raise ValueError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)


# ---------------------------------------------------------------------------
# distances


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<psi|phi>|^2, in [0, 1]."""
    if a.n_qubits != b.n_qubits:
        raise ShapeError("states act on different qubit counts")
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    return min(float(np.abs(overlap) ** 2), 1.0)


def hs_distance(a: StateVector, b: StateVector) -> float:
    """Hilbert-Schmidt distance sqrt(2 - 2 |<psi|phi>|^2), in [0, sqrt(2)]."""
    return sqrt(max(2.0 - 2.0 * fidelity(a, b), 0.0))


# ---------------------------------------------------------------------------
# gradients


@functools.lru_cache(maxsize=256)
def _compile_circuit(circuit: Circuit):
    """Flatten a circuit into integer arrays for the compiled kernel."""
    kinds = np.empty(len(circuit.gates), dtype=np.int64)
    arg_a = np.empty(len(circuit.gates), dtype=np.int64)
    arg_b = np.empty(len(circuit.gates), dtype=np.int64)
    for i, g in enumerate(circuit.gates):
        if g.kind == "ry":
            kinds[i], arg_a[i], arg_b[i] = 0, g.qubit, g.param_slot
        else:
            kinds[i], arg_a[i], arg_b[i] = 1, g.control, g.target
    return kinds, arg_a, arg_b


def cost_and_gradient_state(
    circuit: Circuit, params: np.ndarray, observable: PauliSum
):
    """Adjoint-differentiated cost: returns (value, gradient, StateVector).

    One forward pass builds |psi>; the reverse sweep un-applies each gate
    to both |psi> and O|psi|, accumulating d<O>/d(phi) per RY slot.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ArityError(
            f"expected {circuit.n_params} parameters, got shape {params.shape}"
        )
    if circuit.n_qubits != observable.n_qubits:
        raise ShapeError("circuit and observable qubit counts differ")
    kinds, arg_a, arg_b = _compile_circuit(circuit)
    diag, masks, phases = _compile_observable(observable)
    value, grad, amps = kernels.adjoint_cost_and_gradient(
        circuit.n_qubits, kinds, arg_a, arg_b, params, diag, masks, phases,
        circuit.n_params,
    )
    return value, grad, StateVector(circuit.n_qubits, amps)


def cost_and_gradient(circuit: Circuit, params: np.ndarray, observable: PauliSum):
    """(value, gradient) of <psi(params)|O|psi(params)> via the adjoint sweep."""
    value, grad, _ = cost_and_gradient_state(circuit, params, observable)
    return value, grad


def parameter_shift_gradient(
    circuit: Circuit, params: np.ndarray, observable: PauliSum
) -> np.ndarray:
    """Exact gradient via the +-pi/2 shift rule; independent of the adjoint path."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ArityError(
            f"expected {circuit.n_params} parameters, got shape {params.shape}"
        )
    grad = np.empty(circuit.n_params)
    for i in range(circuit.n_params):
        shifted = params.copy()
        shifted[i] = params[i] + pi / 2
        f_plus = expectation(run_circuit(circuit, shifted), observable)
        shifted[i] = params[i] - pi / 2
        f_minus = expectation(run_circuit(circuit, shifted), observable)
        grad[i] = (f_plus - f_minus) / 2.0
    return grad
