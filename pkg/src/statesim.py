"""Dense statevector simulation for small n.

Basis index bit q is qubit q. Gate kernels act on arrays of shape (2^n,) or
(2^n, k); the second form applies a circuit to k column vectors at once.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Union

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .config import HERMITIAN_TOLERANCE, MAX_DENSE_QUBITS, NORM_TOLERANCE
from .errors import DimensionMismatchError, NonHermitianError, QubitCapError

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, keys...)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *keys])))


def check_qubits(n: int) -> None:
    if not 1 <= n <= MAX_DENSE_QUBITS:
        raise QubitCapError(f"n={n} outside the dense simulation range 1..{MAX_DENSE_QUBITS}")


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n,):
            raise DimensionMismatchError(
                f"expected {1 << self.n} amplitudes, got shape {self.amplitudes.shape}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"state norm {norm} is not 1")

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(n, amps)

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[index] = 1.0
        return cls(n, amps)

    @classmethod
    def from_unnormalised(cls, n: int, amplitudes: np.ndarray) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(n, amps / np.linalg.norm(amps))

    def probabilities(self) -> np.ndarray:
        probs = np.abs(self.amplitudes) ** 2
        return probs / probs.sum()

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass
class DenseObservable:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        dim = 1 << self.n
        if self.matrix.shape != (dim, dim):
            raise DimensionMismatchError(f"expected a {dim}x{dim} matrix, got {self.matrix.shape}")
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=HERMITIAN_TOLERANCE, rtol=0):
            raise NonHermitianError("observable matrix is not Hermitian")

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def traceless(self) -> "DenseObservable":
        """O_0 = O - tr(O) I / 2^n."""
        return DenseObservable(self.n, self.matrix - (self.trace / self.dim) * np.eye(self.dim))

    @classmethod
    def identity(cls, n: int) -> "DenseObservable":
        return cls(n, np.eye(1 << n, dtype=complex))

    @classmethod
    def projector(cls, state: StateVector) -> "DenseObservable":
        return cls(state.n, state.density_matrix())


# Kernels ---------------------------------------------------------------------


@lru_cache(maxsize=None)
def _indices(n: int) -> np.ndarray:
    return np.arange(1 << n)


@lru_cache(maxsize=None)
def _bit(n: int, q: int) -> np.ndarray:
    return (_indices(n) >> q) & 1


@lru_cache(maxsize=None)
def _diagonal(n: int, kind: GateKind, qubits: tuple) -> np.ndarray:
    if kind == GateKind.CZ:
        a, b = qubits
        return 1 - 2 * (_bit(n, a) & _bit(n, b)).astype(complex)
    bit = _bit(n, qubits[0]).astype(bool)
    phase = {GateKind.Z: -1.0, GateKind.S: 1j, GateKind.SDG: -1j}[kind]
    return np.where(bit, phase, 1.0).astype(complex)


@lru_cache(maxsize=None)
def _permutation(n: int, kind: GateKind, qubits: tuple) -> np.ndarray:
    idx = _indices(n)
    if kind == GateKind.CX:
        control, target = qubits
        return idx ^ (_bit(n, control) << target)
    return idx ^ (1 << qubits[0])


def _scale(amps: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return amps * (vec[:, None] if amps.ndim > 1 else vec)


def _apply_gate(amps: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    kind, qubits = gate.kind, gate.qubits
    if kind in (GateKind.Z, GateKind.S, GateKind.SDG, GateKind.CZ):
        return _scale(amps, _diagonal(n, kind, qubits))
    if kind in (GateKind.X, GateKind.CX):
        return amps[_permutation(n, kind, qubits)]
    if kind == GateKind.Y:
        # Y|0> = i|1>, Y|1> = -i|0>
        bit = _bit(n, qubits[0]).astype(bool)
        return _scale(amps[_permutation(n, GateKind.X, qubits)], np.where(bit, 1j, -1j))
    if kind == GateKind.H:
        q = qubits[0]
        idx = _indices(n)
        low = amps[idx & ~(1 << q)]
        high = amps[idx | (1 << q)]
        sign = 1 - 2 * _bit(n, q)
        return (low + _scale(high, sign.astype(complex))) * _SQRT_HALF
    raise ValueError(f"no kernel for gate {gate}")


def apply_circuit_array(amps: np.ndarray, circuit: Circuit) -> np.ndarray:
    if amps.shape[0] != 1 << circuit.n:
        raise DimensionMismatchError("array and circuit qubit counts differ")
    out = amps
    for gate in circuit.gates:
        out = _apply_gate(out, gate, circuit.n)
    return out


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if state.n != circuit.n:
        raise DimensionMismatchError(f"state has {state.n} qubits, circuit has {circuit.n}")
    check_qubits(state.n)
    return StateVector(state.n, apply_circuit_array(state.amplitudes, circuit))


def basis_vectors(circuit: Circuit) -> np.ndarray:
    """Columns U^dag |b> for every outcome b."""
    check_qubits(circuit.n)
    return apply_circuit_array(np.eye(1 << circuit.n, dtype=complex), circuit.inverse())


def unitary(circuit: Circuit) -> np.ndarray:
    check_qubits(circuit.n)
    return apply_circuit_array(np.eye(1 << circuit.n, dtype=complex), circuit)


def sample_bitstring(state: StateVector, rng: np.random.Generator, size: Optional[int] = None):
    """Born-rule outcome(s) as basis indices."""
    probs = state.probabilities()
    draws = rng.choice(probs.shape[0], size=size, p=probs)
    return int(draws) if size is None else draws


def expectation(state: StateVector, observable: DenseObservable) -> float:
    if state.n != observable.n:
        raise DimensionMismatchError("state and observable qubit counts differ")
    value = np.vdot(state.amplitudes, observable.matrix @ state.amplitudes)
    if abs(value.imag) > 1e-9:
        raise NonHermitianError(f"expectation has imaginary part {value.imag}")
    return float(value.real)


# Named states and observables -------------------------------------------------


def _kron_qubits(factors) -> np.ndarray:
    """Operator acting as factors[q] on qubit q."""
    out = np.ones((1, 1), dtype=complex)
    for factor in factors:
        out = np.kron(factor, out)
    return out


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_EYE2 = np.eye(2, dtype=complex)


def prepare_named(
    kind: str,
    n: int,
    params: Optional[Dict[str, Any]] = None,
    rng: Optional[np.random.Generator] = None,
) -> StateVector:
    """zero, ghz, ghz_theta (params theta, radians), haar (needs rng), stabilizer_circuit (params circuit)."""
    check_qubits(n)
    params = params or {}
    dim = 1 << n
    if kind in ("zero", "product_zero"):
        return StateVector.zero(n)
    if kind == "ghz":
        amps = np.zeros(dim, dtype=complex)
        amps[0] = amps[-1] = _SQRT_HALF
        return StateVector(n, amps)
    if kind == "ghz_theta":
        # normalised: cos(theta/2)|0..0> + sin(theta/2)|1..1>
        theta = float(params["theta"])
        amps = np.zeros(dim, dtype=complex)
        amps[0] = np.cos(theta / 2)
        amps[-1] += np.sin(theta / 2)
        return StateVector.from_unnormalised(n, amps)
    if kind == "haar":
        if rng is None:
            raise ValueError("haar states need an rng")
        amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return StateVector.from_unnormalised(n, amps)
    if kind == "stabilizer_circuit":
        circuit: Circuit = params["circuit"]
        return apply_circuit(StateVector.zero(n), circuit)
    raise ValueError(f"unknown state kind '{kind}'")


def observable_builders(kind: str, n: int, params: Optional[Dict[str, Any]] = None) -> DenseObservable:
    """ghz, ghz_offdiag, oa (a), local (k, theta), product_xz (theta), projector (state), identity."""
    params = params or {}
    dim = 1 << n
    last = dim - 1
    if kind == "identity":
        return DenseObservable.identity(n)
    if kind == "ghz":
        return DenseObservable.projector(prepare_named("ghz", n))
    if kind == "ghz_offdiag":
        matrix = np.zeros((dim, dim), dtype=complex)
        matrix[0, last] = matrix[last, 0] = 0.5
        return DenseObservable(n, matrix)
    if kind == "oa":
        a = float(params["a"])
        matrix = np.zeros((dim, dim), dtype=complex)
        # a = 0 is the off-diagonal fidelity, a = 0.5 the GHZ projector
        matrix[0, last] = matrix[last, 0] = 1 - a
        matrix[0, 0] += a
        matrix[last, last] += a
        return DenseObservable(n, matrix)
    if kind == "local":
        k, theta = int(params["k"]), float(params["theta"])
        if not 0 <= k <= n:
            raise ValueError(f"k={k} outside 0..{n}")
        single = np.cos(theta) * _PAULI_Z + np.sin(theta) * _PAULI_X
        return DenseObservable(n, _kron_qubits([single] * k + [_EYE2] * (n - k)))
    if kind == "product_xz":
        theta = float(params["theta"])
        single = np.cos(theta / 2) * _PAULI_X + np.sin(theta / 2) * _PAULI_Z
        return DenseObservable(n, _kron_qubits([single] * n))
    if kind == "projector":
        state: StateVector = params["state"]
        return DenseObservable.projector(state)
    raise ValueError(f"unknown observable kind '{kind}'")


def as_density_matrix(source: Union[StateVector, np.ndarray]) -> np.ndarray:
    if isinstance(source, StateVector):
        return source.density_matrix()
    return np.asarray(source, dtype=complex)
