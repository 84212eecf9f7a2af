"""Biased MCM: element distributions p_U proportional to B_U, the rescaled
estimator, the stabilizer norm and the structured samplers for Pauli sums and
stabilizer observables.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .circuit import Circuit, conjugate_pauli, synthesize
from .config import DENSE_BIASED_MAX_QUBITS, STABILIZER_NORM_MAX_QUBITS
from .errors import (
    DimensionMismatchError,
    MCMError,
    ProfileMismatchError,
    QubitCapError,
    ZeroProbabilityError,
)
from .f2linalg import nullspace_f2, rank_f2
from .mub import MubEnsemble, ZTableau, build_ensemble, element_for_pauli
from .pauli import PauliSumObservable, PhasedPauli, pauli_expansion
from .shadow import (
    EstimateSeries,
    _matrix,
    draw_from_table,
    element_circuits,
    outcome_probabilities,
    rotated_diagonals,
    rotated_expectations,
)
from .statesim import StateVector, apply_circuit, apply_circuit_array

__all__ = [
    "BiasedDistribution",
    "PauliSumObservable",
    "StabilizerObservable",
    "AlphaProfile",
    "b_u",
    "b_values",
    "optimal_distribution",
    "biased_estimate",
    "stabilizer_norm",
    "pauli_sum_distribution",
    "stabilizer_sampler",
    "stabilizer_probability",
    "stabilizer_distribution",
    "stabilizer_overlap",
    "overlap_rank",
    "alpha_profile",
    "run_biased",
    "run_biased_stabilizer",
]

_SUM_TOLERANCE = 1e-12


@dataclass
class BiasedDistribution:
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        total = self.probs.sum()
        if abs(total - 1.0) > _SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "BiasedDistribution":
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            raise ZeroProbabilityError("all element weights vanish; the observable is proportional to identity")
        return cls(weights / total)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def __len__(self) -> int:
        return len(self.probs)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Element indices drawn from the support only."""
        support = self.support
        weights = self.probs[support] / self.probs[support].sum()
        draws = support[rng.choice(len(support), size=size, p=weights)]
        return int(draws) if size is None else draws


@dataclass(frozen=True)
class StabilizerObservable:
    """O = V^dag |0><0| V for a Clifford circuit V."""

    V: Circuit

    @property
    def n(self) -> int:
        return self.V.n

    @property
    def trace(self) -> float:
        return 1.0

    @classmethod
    def from_text(cls, text: str, n: Optional[int] = None) -> "StabilizerObservable":
        return cls(Circuit.from_text(text, n))

    def state(self) -> StateVector:
        return StateVector(self.n, apply_circuit_array(StateVector.zero(self.n).amplitudes, self.V.inverse()))

    def to_dense(self) -> np.ndarray:
        return self.state().density_matrix()

    def stabilizers(self) -> List[PhasedPauli]:
        """Signed generators V^dag Z_i V."""
        return [conjugate_pauli(self.V, PhasedPauli.z_string(self.n, 1 << i)) for i in range(self.n)]


@dataclass(frozen=True)
class AlphaProfile:
    rank: int
    alphas: np.ndarray
    counts: Dict[float, int]


# Dense distribution -------------------------------------------------------------


def _dense_matrix(observable) -> np.ndarray:
    matrix = _matrix(observable)
    n = matrix.shape[0].bit_length() - 1
    if n > DENSE_BIASED_MAX_QUBITS:
        raise QubitCapError(f"dense B_U limited to n <= {DENSE_BIASED_MAX_QUBITS}")
    return matrix


def b_u(observable, ens: MubEnsemble, index: int) -> float:
    """B_U = max_b |<b| U O_0 U^dag |b>|; ties are irrelevant to the value."""
    matrix = _dense_matrix(observable)
    dim = matrix.shape[0]
    diag = rotated_expectations(element_circuits(ens)[index], matrix)
    return float(np.max(np.abs(diag - np.trace(matrix).real / dim)))


def b_values(observable, ens: MubEnsemble) -> np.ndarray:
    matrix = _dense_matrix(observable)
    dim = matrix.shape[0]
    diagonals = rotated_diagonals(ens, matrix)
    return np.max(np.abs(diagonals - np.trace(matrix).real / dim), axis=1)


def optimal_distribution(observable, ens: MubEnsemble) -> BiasedDistribution:
    """p_U = B_U / sum B."""
    return BiasedDistribution.from_weights(b_values(observable, ens))


def biased_estimate(observable, circuit: Circuit, outcome: int, p_u: float) -> float:
    """tr(O_0 Phi_{U,b}) / p_U + tr(O) / 2^n."""
    if p_u <= 0:
        raise ZeroProbabilityError("outcome observed on an element with p_U = 0")
    matrix = _matrix(observable)
    dim = matrix.shape[0]
    shift = np.trace(matrix).real / dim
    basis = np.zeros(dim, dtype=complex)
    basis[outcome] = 1.0
    w = apply_circuit_array(basis, circuit.inverse())
    return float((np.vdot(w, matrix @ w).real - shift) / p_u + shift)


def stabilizer_norm(observable) -> float:
    """D(A) = 2^-n sum_P |tr(P A)|, the identity included."""
    matrix = _matrix(observable)
    dim = matrix.shape[0]
    if dim.bit_length() - 1 > STABILIZER_NORM_MAX_QUBITS:
        raise QubitCapError(f"stabilizer norm limited to n <= {STABILIZER_NORM_MAX_QUBITS}")
    return float(np.abs(pauli_expansion(matrix)).sum() / dim)


# Pauli sums ------------------------------------------------------------------------


def pauli_sum_distribution(observable: PauliSumObservable, ens: MubEnsemble) -> BiasedDistribution:
    """p_U proportional to the |alpha_l| of the terms owned by U."""
    if not observable.terms:
        raise ValueError("Pauli sum has no non-identity terms")
    if observable.n != ens.n:
        raise DimensionMismatchError("observable and ensemble qubit counts differ")
    weights = np.zeros(len(ens))
    for coeff, pauli in observable.terms:
        index, _ = element_for_pauli(ens, pauli)
        weights[index] += abs(coeff)
    return BiasedDistribution.from_weights(weights)


# Stabilizer observables ------------------------------------------------------------


@lru_cache(maxsize=4096)
def _overlap_tableau(observable: StabilizerObservable, ens: MubEnsemble, index: int) -> ZTableau:
    """Signed stabilizers W Z_i W^dag of W|0> with W = U V^dag."""
    w = observable.V.inverse().compose(synthesize(ens, index))
    return ZTableau.from_paulis(
        [conjugate_pauli(w, PhasedPauli.z_string(ens.n, 1 << i), "inverse") for i in range(ens.n)]
    )


@lru_cache(maxsize=4096)
def _overlap_constraints(observable: StabilizerObservable, ens: MubEnsemble, index: int):
    """(r_U, [(z mask, sign bit)]) for a basis of the Z-type stabilizers of W|0>."""
    tableau = _overlap_tableau(observable, ens, index)
    rank = rank_f2(tableau.C)
    generators = tableau.paulis()
    constraints = []
    for combo in nullspace_f2(tableau.C.transpose()):
        product = PhasedPauli.identity(ens.n)
        for i in range(ens.n):
            if (combo >> i) & 1:
                product = product * generators[i]
        if product.x:
            raise MCMError("kernel combination left an X component")
        constraints.append((product.z, 0 if product.sign > 0 else 1))
    return rank, tuple(constraints)


def overlap_rank(observable: StabilizerObservable, ens: MubEnsemble, index: int) -> int:
    """r_U: F2 rank of the X block of the stabilizers of U V^dag |0>."""
    return _overlap_constraints(observable, ens, index)[0]


def stabilizer_overlap(observable: StabilizerObservable, ens: MubEnsemble, index: int, outcome: int) -> float:
    """alpha_{U,b} = |<b| U V^dag |0>|^2 without dense algebra."""
    rank, constraints = _overlap_constraints(observable, ens, index)
    for zmask, sign in constraints:
        if (zmask & outcome).bit_count() & 1 != sign:
            return 0.0
    return 2.0**-rank


def stabilizer_probability(observable: StabilizerObservable, ens: MubEnsemble, index: int) -> float:
    """p_U = (2^-r_U - 2^-n) / (1 - 2^-n)."""
    n = ens.n
    rank = overlap_rank(observable, ens, index)
    return (2.0**-rank - 2.0**-n) / (1.0 - 2.0**-n)


def stabilizer_distribution(observable: StabilizerObservable, ens: MubEnsemble) -> BiasedDistribution:
    probs = np.array([stabilizer_probability(observable, ens, i) for i in range(len(ens))])
    return BiasedDistribution(probs / probs.sum())


@lru_cache(maxsize=65536)
def _stabilizer_element(observable: StabilizerObservable, ens: MubEnsemble, m: int) -> int:
    """Element owning the stabilizer V^dag Z_m V of O."""
    stabilizer = conjugate_pauli(observable.V, PhasedPauli.z_string(ens.n, m))
    return element_for_pauli(ens, stabilizer)[0]


def stabilizer_sampler(
    observable: StabilizerObservable, ens: MubEnsemble, rng: np.random.Generator
) -> Tuple[int, float]:
    """Draw a uniform non-identity stabilizer of O and return its element with p_U."""
    if observable.n != ens.n:
        raise DimensionMismatchError("observable and ensemble qubit counts differ")
    index = _stabilizer_element(observable, ens, int(rng.integers(1, 1 << ens.n)))
    return index, stabilizer_probability(observable, ens, index)


def alpha_profile(observable: StabilizerObservable, ens: MubEnsemble, index: int) -> AlphaProfile:
    """Dense alpha_{U,b}; exactly 2^r_U of them must equal 2^-r_U and the rest vanish."""
    rank = overlap_rank(observable, ens, index)
    amplitudes = apply_circuit(observable.state(), synthesize(ens, index)).amplitudes
    alphas = np.abs(amplitudes) ** 2
    level = 2.0**-rank
    on_level = np.isclose(alphas, level, atol=1e-9, rtol=0)
    vanishing = np.isclose(alphas, 0.0, atol=1e-9, rtol=0)
    if on_level.sum() != 1 << rank or not np.all(on_level | vanishing):
        raise ProfileMismatchError(
            f"element {index}: expected {1 << rank} overlaps of {level}, got {np.round(alphas, 12)}"
        )
    counts = {level: int(on_level.sum())}
    if vanishing.any():
        counts[0.0] = int(vanishing.sum())
    return AlphaProfile(rank, alphas, counts)


# Runners ------------------------------------------------------------------------------


def run_biased(
    state: StateVector,
    observable,
    shots: int,
    distribution: BiasedDistribution,
    rng: np.random.Generator,
    ensemble: Optional[MubEnsemble] = None,
) -> EstimateSeries:
    """Biased MCM on the table path: elements from the distribution, Born outcomes."""
    ens = ensemble or build_ensemble(state.n)
    if len(distribution) != len(ens):
        raise DimensionMismatchError("distribution size differs from the ensemble")
    matrix = _matrix(observable)
    dim = matrix.shape[0]
    shift = np.trace(matrix).real / dim
    elements = distribution.sample(rng, shots)
    probs = outcome_probabilities(ens, state)
    diagonals = rotated_diagonals(ens, matrix)
    values = np.zeros_like(diagonals)
    support = distribution.support
    values[support] = (diagonals[support] - shift) / distribution.probs[support, None] + shift
    return EstimateSeries("biased", state.n, draw_from_table(elements, probs, values, rng))


def run_biased_stabilizer(
    state: StateVector,
    observable: StabilizerObservable,
    shots: int,
    rng: np.random.Generator,
    ensemble: Optional[MubEnsemble] = None,
) -> EstimateSeries:
    """Biased MCM for O = V^dag|0><0|V with the stabilizer sampler and tableau overlaps."""
    ens = ensemble or build_ensemble(state.n)
    if observable.n != ens.n:
        raise DimensionMismatchError("observable and ensemble qubit counts differ")
    dim = 1 << state.n
    ms = rng.integers(1, dim, size=shots)
    elements = np.array([_stabilizer_element(observable, ens, int(m)) for m in ms])
    circuits = element_circuits(ens)
    out = np.empty(shots)
    for element in np.unique(elements):
        where = np.flatnonzero(elements == element)
        p_u = stabilizer_probability(observable, ens, int(element))
        probs = apply_circuit(state, circuits[element]).probabilities()
        outcomes = rng.choice(dim, size=len(where), p=probs)
        for slot, outcome in zip(where, outcomes):
            alpha = stabilizer_overlap(observable, ens, int(element), int(outcome))
            out[slot] = (alpha - 1.0 / dim) / p_u + 1.0 / dim
    return EstimateSeries("biased", state.n, out)
