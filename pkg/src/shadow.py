"""Uniform MCM shadow estimation, the full-Clifford and Pauli baselines, and the
diagonal / off-diagonal split.

Single-shot estimators are returned as EstimateSeries; means and variances use
compensated summation so the result does not depend on reduction order.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import stim

from .circuit import (
    Circuit,
    basis_change_circuit,
    from_stim,
    pauli_layer,
    synthesize_all,
)
from .config import FULL_CLIFFORD_MAX_QUBITS
from .errors import DimensionMismatchError, QubitCapError
from .f2linalg import row_basis_f2
from .mub import MubEnsemble, build_ensemble
from .pauli import PauliSumObservable, PhasedPauli
from .statesim import (
    DenseObservable,
    StateVector,
    apply_circuit,
    apply_circuit_array,
    as_density_matrix,
    basis_vectors,
    check_qubits,
)

PROTOCOLS = ("mcm", "clifford", "pauli")
_PROTOCOL_ALIASES = {"full_clifford": "clifford"}

Observable = Union[DenseObservable, PauliSumObservable]


def normalise_protocol(name: str) -> str:
    return _PROTOCOL_ALIASES.get(name, name)


@dataclass(frozen=True)
class Snapshot:
    """One (U, b) record; rho_hat is the inverse channel applied to U^dag|b><b|U."""

    protocol: str
    n: int
    outcome: int
    element: Optional[int] = None
    circuit: Optional[Circuit] = None
    bases: Optional[Tuple[int, ...]] = None


@dataclass
class EstimateSeries:
    protocol: str
    n: int
    values: np.ndarray
    seed: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return math.fsum(self.values.tolist()) / len(self.values)

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if len(self.values) < 2:
            return 0.0
        mean = self.mean
        return math.fsum(((self.values - mean) ** 2).tolist()) / (len(self.values) - 1)

    @property
    def second_moment(self) -> float:
        return math.fsum((self.values**2).tolist()) / len(self.values)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / len(self.values))


@dataclass(frozen=True)
class ExactMoments:
    mean: float
    second_moment: float

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2


@dataclass
class OffDiagonalEstimate:
    estimate: float
    diagonal: EstimateSeries
    off_diagonal: EstimateSeries

    @property
    def variance(self) -> float:
        """Variance of the combined estimate."""
        return self.diagonal.variance / len(self.diagonal) + self.off_diagonal.variance / len(
            self.off_diagonal
        )


def _matrix(observable) -> np.ndarray:
    if isinstance(observable, DenseObservable):
        return observable.matrix
    if hasattr(observable, "to_dense"):
        return observable.to_dense()
    return np.asarray(observable, dtype=complex)


# MCM ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def element_circuits(ens: MubEnsemble) -> Tuple[Circuit, ...]:
    return synthesize_all(ens)


def sample_mcm_element(ens: MubEnsemble, rng: np.random.Generator) -> int:
    """Uniform over all 2^n + 1 elements, the Z basis included."""
    return int(rng.integers(len(ens)))


def rotated_expectations(circuit: Circuit, matrix: np.ndarray) -> np.ndarray:
    """<b| U A U^dag |b> for every outcome b."""
    w = basis_vectors(circuit)
    return np.einsum("ib,ib->b", w.conj(), matrix @ w).real


def rotated_diagonals(ens: MubEnsemble, observable) -> np.ndarray:
    """Table [element, b] of <b| U O U^dag |b>."""
    matrix = _matrix(observable)
    return np.stack([rotated_expectations(c, matrix) for c in element_circuits(ens)])


def outcome_probabilities(ens: MubEnsemble, source: Union[StateVector, np.ndarray]) -> np.ndarray:
    """Table [element, b] of Pr(b | U)."""
    if isinstance(source, StateVector):
        rows = [np.abs(apply_circuit(source, c).amplitudes) ** 2 for c in element_circuits(ens)]
    else:
        rho = as_density_matrix(source)
        rows = [np.clip(rotated_expectations(c, rho), 0.0, None) for c in element_circuits(ens)]
    table = np.stack(rows)
    return table / table.sum(axis=1, keepdims=True)


def mcm_estimate(observable: DenseObservable, circuit: Circuit, outcome: int) -> float:
    """(2^n + 1) <b| U O U^dag |b> - tr(O)."""
    dim = 1 << circuit.n
    basis = np.zeros(dim, dtype=complex)
    basis[outcome] = 1.0
    w = apply_circuit_array(basis, circuit.inverse())
    value = np.vdot(w, observable.matrix @ w).real
    return (dim + 1) * value - observable.trace


def draw_from_table(
    elements: np.ndarray,
    probabilities: np.ndarray,
    values: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Born-sample one outcome per drawn element and look its value up."""
    out = np.empty(len(elements), dtype=float)
    for element in np.unique(elements):
        where = np.flatnonzero(elements == element)
        outcomes = rng.choice(probabilities.shape[1], size=len(where), p=probabilities[element])
        out[where] = values[element, outcomes]
    return out


def _run_mcm(state: StateVector, observable: DenseObservable, shots: int, rng, ens: MubEnsemble) -> np.ndarray:
    dim = 1 << state.n
    elements = rng.integers(len(ens), size=shots)
    if shots >= len(ens):
        probs = outcome_probabilities(ens, state)
        values = (dim + 1) * rotated_diagonals(ens, observable) - observable.trace
        return draw_from_table(elements, probs, values, rng)
    circuits = element_circuits(ens)
    out = np.empty(shots)
    for i, element in enumerate(elements):
        rotated = apply_circuit(state, circuits[element])
        outcome = int(rng.choice(dim, p=rotated.probabilities()))
        out[i] = mcm_estimate(observable, circuits[element], outcome)
    return out


# Full-Clifford baseline --------------------------------------------------------


def _symplectic_product(a: int, b: int, n: int) -> int:
    mask = (1 << n) - 1
    return (((a & mask) & (b >> n)).bit_count() + ((a >> n) & (b & mask)).bit_count()) & 1


def _random_combination(basis: Sequence[int], rng: np.random.Generator) -> int:
    coeffs = rng.integers(2, size=len(basis))
    out = 0
    for c, vec in zip(coeffs, basis):
        if c:
            out ^= vec
    return out


def _random_symplectic(n: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Uniform images (z_i, x_i) of (Z_i, X_i) as 2n-bit vectors (x bits low, z bits high)."""
    basis = [1 << k for k in range(2 * n)]
    images = []
    for _ in range(n):
        z = 0
        while z == 0:
            z = _random_combination(basis, rng)
        while True:
            x = _random_combination(basis, rng)
            if _symplectic_product(z, x, n):
                break
        projected = []
        for w in basis:
            w2 = w
            if _symplectic_product(w, x, n):
                w2 ^= z
            if _symplectic_product(w, z, n):
                w2 ^= x
            projected.append(w2)
        basis = row_basis_f2(projected, 2 * n)
        images.append((z, x))
    return images


def _stim_pauli(vector: int, n: int) -> "stim.PauliString":
    mask = (1 << n) - 1
    pauli = PhasedPauli(n, vector & mask, vector >> n)
    return stim.PauliString(pauli.hermitian_form().label.replace("I", "_"))


def sample_full_clifford(n: int, rng: np.random.Generator) -> Circuit:
    """Uniform n-qubit Clifford: random symplectic images, stim synthesis, random Pauli layer."""
    if n > FULL_CLIFFORD_MAX_QUBITS:
        raise QubitCapError(f"full-Clifford baseline limited to n <= {FULL_CLIFFORD_MAX_QUBITS}")
    images = _random_symplectic(n, rng)
    tableau = stim.Tableau.from_conjugated_generators(
        xs=[_stim_pauli(x, n) for _, x in images],
        zs=[_stim_pauli(z, n) for z, _ in images],
    )
    body = from_stim(tableau.to_circuit("elimination"), n)
    return body.compose(pauli_layer(n, rng.integers(4, size=n)))


def _run_clifford(state: StateVector, observable: DenseObservable, shots: int, rng) -> np.ndarray:
    dim = 1 << state.n
    out = np.empty(shots)
    for i in range(shots):
        circuit = sample_full_clifford(state.n, rng)
        rotated = apply_circuit(state, circuit)
        outcome = int(rng.choice(dim, p=rotated.probabilities()))
        out[i] = mcm_estimate(observable, circuit, outcome)
    return out


# Pauli baseline ----------------------------------------------------------------

_BASIS_MATRICES = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@lru_cache(maxsize=32)
def _term_tables(observable: PauliSumObservable):
    coeffs, supports, required = observable.basis_requirements()
    weights = np.array([bin(int(s)).count("1") for s in supports], dtype=float)
    return coeffs * 3.0**weights, supports, required


def _local_snapshot(basis: int, bit: int) -> np.ndarray:
    """3 U^dag|b><b|U - I for one qubit: (I + 3 s B) / 2."""
    sign = 1 - 2 * bit
    return 0.5 * (np.eye(2) + 3 * sign * _BASIS_MATRICES[basis])


def pauli_shadow_estimate(observable: Observable, bases: Sequence[int], outcome: int) -> float:
    """tr(O rho_hat) with rho_hat = tensor_q (3 U_q^dag|b_q><b_q|U_q - I); bases 0=X, 1=Y, 2=Z."""
    bases = np.asarray(bases, dtype=np.int8)
    if isinstance(observable, PauliSumObservable):
        if len(bases) != observable.n:
            raise DimensionMismatchError("basis list length differs from qubit count")
        if not observable.terms:
            return observable.identity
        scaled, supports, required = _term_tables(observable)
        match = np.all((required == bases) | (required < 0), axis=1)
        parity = np.array([bin(int(outcome) & int(s)).count("1") & 1 for s in supports])
        return float(observable.identity + np.sum(scaled * match * (1 - 2 * parity)))
    matrix = _matrix(observable)
    n = matrix.shape[0].bit_length() - 1
    if len(bases) != n:
        raise DimensionMismatchError("basis list length differs from qubit count")
    tensor = matrix
    for q in range(n - 1, -1, -1):
        half = 1 << q
        sigma = _local_snapshot(int(bases[q]), (outcome >> q) & 1)
        tensor = np.einsum("ab,aibj->ij", sigma.T, tensor.reshape(2, half, 2, half))
    return float(tensor.reshape(-1)[0].real)


def _run_pauli(state: StateVector, observable: Observable, shots: int, rng) -> np.ndarray:
    n = state.n
    out = np.empty(shots)
    for i in range(shots):
        bases = rng.integers(3, size=n)
        rotated = apply_circuit(state, basis_change_circuit(n, bases))
        outcome = int(rng.choice(1 << n, p=rotated.probabilities()))
        out[i] = pauli_shadow_estimate(observable, bases, outcome)
    return out


# Snapshots ---------------------------------------------------------------------


def collect_snapshots(
    state: StateVector,
    shots: int,
    protocol: str,
    rng: np.random.Generator,
    ensemble: Optional[MubEnsemble] = None,
) -> List[Snapshot]:
    protocol = normalise_protocol(protocol)
    n = state.n
    snapshots = []
    for _ in range(shots):
        if protocol == "mcm":
            ens = ensemble or build_ensemble(n)
            element = sample_mcm_element(ens, rng)
            circuit = element_circuits(ens)[element]
            bases = None
        elif protocol == "clifford":
            element, circuit, bases = None, sample_full_clifford(n, rng), None
        elif protocol == "pauli":
            bases = tuple(int(b) for b in rng.integers(3, size=n))
            element, circuit = None, basis_change_circuit(n, bases)
        else:
            raise ValueError(f"unknown protocol '{protocol}'")
        rotated = apply_circuit(state, circuit)
        outcome = int(rng.choice(1 << n, p=rotated.probabilities()))
        snapshots.append(Snapshot(protocol, n, outcome, element, circuit, bases))
    return snapshots


def snapshot_matrix(snapshot: Snapshot) -> np.ndarray:
    """Dense rho_hat for one snapshot."""
    n = snapshot.n
    if snapshot.protocol == "pauli":
        return _kron_snapshot(
            [_local_snapshot(snapshot.bases[q], (snapshot.outcome >> q) & 1) for q in range(n)]
        )
    dim = 1 << n
    basis = np.zeros(dim, dtype=complex)
    basis[snapshot.outcome] = 1.0
    w = apply_circuit_array(basis, snapshot.circuit.inverse())
    return (dim + 1) * np.outer(w, w.conj()) - np.eye(dim)


def _kron_snapshot(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for factor in factors:
        out = np.kron(factor, out)
    return out


# Protocol runner ---------------------------------------------------------------


def run_protocol(
    state: StateVector,
    observable: Observable,
    shots: int,
    protocol: str,
    rng: np.random.Generator,
    ensemble: Optional[MubEnsemble] = None,
    seed: Optional[int] = None,
) -> EstimateSeries:
    """N independent single-shot estimates of tr(rho O)."""
    protocol = normalise_protocol(protocol)
    check_qubits(state.n)
    if shots < 1:
        raise ValueError("shots must be positive")
    if protocol == "pauli":
        values = _run_pauli(state, observable, shots, rng)
    else:
        dense = observable if isinstance(observable, DenseObservable) else DenseObservable(
            observable.n, _matrix(observable)
        )
        if dense.n != state.n:
            raise DimensionMismatchError("state and observable qubit counts differ")
        if protocol == "mcm":
            values = _run_mcm(state, dense, shots, rng, ensemble or build_ensemble(state.n))
        elif protocol == "clifford":
            values = _run_clifford(state, dense, shots, rng)
        else:
            raise ValueError(f"unknown protocol '{protocol}'")
    return EstimateSeries(protocol, state.n, values, seed)


# Diagonal / off-diagonal split ---------------------------------------------------


def _rotated_matrix(observable, basis_circuit: Circuit) -> Tuple[np.ndarray, np.ndarray]:
    w = basis_vectors(basis_circuit)
    return w, w.conj().T @ _matrix(observable) @ w


def split_observable(observable, basis_circuit: Circuit) -> Tuple[np.ndarray, DenseObservable]:
    """O = sum_b O_bb Phi_{U,b} + O_F in the basis Phi_{U,b} = U^dag|b><b|U."""
    w, rotated = _rotated_matrix(observable, basis_circuit)
    diag = np.diag(rotated).real.copy()
    off = rotated - np.diag(np.diag(rotated))
    return diag, DenseObservable(basis_circuit.n, w @ off @ w.conj().T)


def coherence_l1(observable, basis_circuit: Circuit) -> float:
    _, rotated = _rotated_matrix(observable, basis_circuit)
    return float(np.abs(rotated - np.diag(np.diag(rotated))).sum())


def estimate_off_diagonal(
    state: StateVector,
    observable,
    basis_circuit: Circuit,
    n_diag: int,
    n_shadow: int,
    rng: np.random.Generator,
    ensemble: Optional[MubEnsemble] = None,
) -> OffDiagonalEstimate:
    """Direct measurement for the diagonal part plus MCM snapshots for O_F."""
    diag, off = split_observable(observable, basis_circuit)
    rotated = apply_circuit(state, basis_circuit)
    outcomes = rng.choice(1 << state.n, size=n_diag, p=rotated.probabilities())
    diagonal = EstimateSeries("direct", state.n, diag[outcomes])
    shadow = run_protocol(state, off, n_shadow, "mcm", rng, ensemble)
    return OffDiagonalEstimate(diagonal.mean + shadow.mean, diagonal, shadow)


# Exact oracles -----------------------------------------------------------------


def _circuit_source(source) -> Tuple[Sequence[Circuit], Optional[Callable]]:
    if isinstance(source, MubEnsemble):
        return element_circuits(source), None
    if callable(source):
        return (), source
    return tuple(source), None


def channel_oracle(
    source,
    rho: Union[StateVector, np.ndarray],
    samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Average of sum_b tr(rho Phi_{U,b}) Phi_{U,b} over an ensemble or circuit list,
    or a Monte-Carlo average over `samples` draws of a sampler(rng) -> Circuit."""
    rho = as_density_matrix(rho)
    circuits, sampler = _circuit_source(source)
    if sampler is not None:
        if samples is None or rng is None:
            raise ValueError("sampler sources need samples and rng")
        circuits = [sampler(rng) for _ in range(samples)]
    acc = np.zeros_like(rho)
    for circuit in circuits:
        w = basis_vectors(circuit)
        probs = np.einsum("ib,ij,jb->b", w.conj(), rho, w).real
        acc += (w * probs) @ w.conj().T
    return acc / len(circuits)


def exact_moments(
    rho: Union[StateVector, np.ndarray],
    observable,
    protocol: str,
    ensemble: Optional[MubEnsemble] = None,
    distribution=None,
) -> ExactMoments:
    """Mean and second moment of the single-shot estimator by exact enumeration.

    mcm and biased enumerate every (element, outcome); pauli enumerates all
    3^n basis settings; clifford uses the closed three-design form.
    """
    protocol = normalise_protocol(protocol)
    rho = as_density_matrix(rho)
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    matrix = _matrix(observable)
    trace = float(np.trace(matrix).real)
    if protocol in ("mcm", "biased"):
        ens = ensemble or build_ensemble(n)
        probs = outcome_probabilities(ens, rho)
        diagonals = rotated_diagonals(ens, matrix)
        if protocol == "mcm":
            weights = np.full(len(ens), 1.0 / len(ens))
            values = (dim + 1) * diagonals - trace
        else:
            weights = np.asarray(distribution.probs)
            support = weights > 0
            values = np.zeros_like(diagonals)
            values[support] = (diagonals[support] - trace / dim) / weights[support, None] + trace / dim
        joint = weights[:, None] * probs
        return ExactMoments(float(np.sum(joint * values)), float(np.sum(joint * values**2)))
    if protocol == "pauli":
        if n > 6:
            raise QubitCapError("exact Pauli enumeration limited to n <= 6")
        mean = second = 0.0
        for bases in product(range(3), repeat=n):
            w = basis_vectors(basis_change_circuit(n, bases))
            probs = np.einsum("ib,ij,jb->b", w.conj(), rho, w).real
            for outcome in np.flatnonzero(probs > 1e-15):
                value = pauli_shadow_estimate(observable, bases, int(outcome))
                mean += probs[outcome] * value / 3**n
                second += probs[outcome] * value**2 / 3**n
        return ExactMoments(mean, second)
    if protocol == "clifford":
        o0 = matrix - (trace / dim) * np.eye(dim)
        o0_sq = o0 @ o0
        mean0 = float(np.trace(rho @ o0).real)
        second0 = (dim + 1) / (dim + 2) * (np.trace(o0_sq).real + 2 * np.trace(rho @ o0_sq).real)
        shift = trace / dim
        return ExactMoments(mean0 + shift, float(second0 + 2 * shift * mean0 + shift**2))
    raise ValueError(f"unknown protocol '{protocol}'")
