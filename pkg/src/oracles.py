"""Self-check suites run by `main.py oracle`."""
import time
from typing import Callable, Dict, List, Sequence

import numpy as np

from .biased import StabilizerObservable, alpha_profile, overlap_rank, run_biased_stabilizer
from .circuit import apply_gate_to_ztableau, circuit_depth, synthesize
from .config import DEFAULT_SEED, VERBOSE
from .errors import MCMError
from .f2linalg import BinaryMatrix, is_hankel
from .models import OracleReport, OracleResult
from .mub import MubEnsemble, build_ensemble, element_generators, element_stabilizers, stabilizer_group
from .pauli import PhasedPauli, pauli_label_list
from .shadow import channel_oracle, element_circuits, exact_moments, sample_full_clifford
from .statesim import basis_vectors, prepare_named, trial_rng

EnsembleFactory = Callable[[int], MubEnsemble]

SUITE_LIMITS = {
    "channel": 3,
    "partition": 6,
    "synthesis": 8,
    "mub": 4,
    "moments": 3,
    "overlap_sums": 5,
    "zero_variance": 6,
}
SUITES = tuple(SUITE_LIMITS)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    dim = 1 << n
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def check_channel(n: int, factory: EnsembleFactory, rng, states: int = 10) -> str:
    ens = factory(n)
    dim = 1 << n
    worst = 0.0
    for _ in range(states):
        rho = prepare_named("haar", n, rng=rng).density_matrix()
        expected = (rho + np.eye(dim)) / (dim + 1)
        worst = max(worst, float(np.max(np.abs(channel_oracle(ens, rho) - expected))))
    if worst >= 1e-10:
        raise MCMError(f"channel deviates by {worst:.3e}")
    return f"max deviation {worst:.1e}"


def check_partition(n: int, factory: EnsembleFactory, rng) -> str:
    ens = factory(n)
    seen = set()
    for index in range(len(ens)):
        for stabilizer in stabilizer_group(element_generators(ens, index))[1:]:
            if stabilizer.key in seen:
                raise MCMError(f"{stabilizer.label} appears in two elements")
            seen.add(stabilizer.key)
    if len(seen) != (1 << 2 * n) - 1:
        raise MCMError(f"covered {len(seen)} Paulis, expected {(1 << 2 * n) - 1}")
    return f"{len(seen)} Paulis covered once"


def check_synthesis(n: int, factory: EnsembleFactory, rng) -> str:
    ens = factory(n)
    target = (BinaryMatrix.zeros(n, n), BinaryMatrix.identity(n))
    deepest = 0
    for index in range(1, len(ens)):
        tableau = ens.element(index).tableau
        if not is_hankel(tableau.D):
            raise MCMError(f"D of element {index} is not Hankel")
        circuit = synthesize(ens, index)
        for gate in circuit.gates:
            tableau = apply_gate_to_ztableau(tableau, gate)
        if (tableau.C, tableau.D) != target:
            raise MCMError(f"circuit of element {index} does not reduce its tableau")
        realised = pauli_label_list(element_stabilizers(ens, index))
        if realised != pauli_label_list(stabilizer_group(element_generators(ens, index))):
            raise MCMError(f"circuit of element {index} realises stabilizers with the wrong signs")
        depth = circuit_depth(circuit)
        if depth > n + 1:
            raise MCMError(f"circuit of element {index} has depth {depth} > {n + 1}")
        deepest = max(deepest, depth)
    return f"{len(ens) - 1} circuits, depth <= {deepest}"


def check_mub(n: int, factory: EnsembleFactory, rng) -> str:
    ens = factory(n)
    dim = 1 << n
    bases = [basis_vectors(c) for c in element_circuits(ens)]
    for i, wi in enumerate(bases):
        for j, wj in enumerate(bases):
            overlaps = np.abs(wi.conj().T @ wj) ** 2
            expected = np.eye(dim) if i == j else np.full((dim, dim), 1.0 / dim)
            if not np.allclose(overlaps, expected, atol=1e-10, rtol=0):
                raise MCMError(f"elements {i} and {j} are not mutually unbiased")
    return f"{len(ens)} bases"


def check_moments(n: int, factory: EnsembleFactory, rng, trials: int = 10) -> str:
    ens = factory(n)
    dim = 1 << n
    for _ in range(trials):
        rho = prepare_named("haar", n, rng=rng).density_matrix()
        x, z = 0, 0
        while x == 0 and z == 0:
            x, z = (int(v) for v in rng.integers(dim, size=2))
        pauli = PhasedPauli(n, x, z, (x & z).bit_count()).to_matrix()
        second = exact_moments(rho, pauli, "mcm", ens).second_moment
        if abs(second - (dim + 1)) > 1e-8:
            raise MCMError(f"single-Pauli second moment {second} != {dim + 1}")
        observable = random_hermitian(n, rng)
        o0 = observable - np.trace(observable).real / dim * np.eye(dim)
        scrambled = exact_moments(np.eye(dim) / dim, o0, "mcm", ens).second_moment
        expected = (dim + 1) / dim * np.trace(o0 @ o0).real
        if abs(scrambled - expected) > 1e-8 * max(1.0, expected):
            raise MCMError(f"maximally mixed second moment {scrambled} != {expected}")
    return f"{trials} states and observables"


def check_overlap_sums(n: int, factory: EnsembleFactory, rng, circuits: int = 10) -> str:
    ens = factory(n)
    for _ in range(circuits):
        observable = StabilizerObservable(sample_full_clifford(n, rng))
        total_rank = sum(2.0 ** -overlap_rank(observable, ens, i) for i in range(len(ens)))
        total_max = sum(float(alpha_profile(observable, ens, i).alphas.max()) for i in range(len(ens)))
        if abs(total_rank - 2.0) > 1e-9 or abs(total_max - 2.0) > 1e-9:
            raise MCMError(f"overlap sums {total_rank}, {total_max} differ from 2")
    return f"{circuits} stabilizer observables"


def check_zero_variance(n: int, factory: EnsembleFactory, rng, circuits: int = 20, shots: int = 10_000) -> str:
    ens = factory(n)
    loosest = 0.0
    for _ in range(circuits):
        observable = StabilizerObservable(sample_full_clifford(n, rng))
        series = run_biased_stabilizer(observable.state(), observable, shots, rng, ens)
        worst = float(np.max(np.abs(series.values - 1.0)))
        if worst > 1e-9:
            raise MCMError(f"single-shot estimate off by {worst:.3e}")
        # any other state: variance at most 1
        other = prepare_named("haar", n, rng=rng)
        values = run_biased_stabilizer(other, observable, shots, rng, ens).values
        centred = values - values.mean()
        variance = float(np.mean(centred**2))
        sigma = float(np.sqrt(max(np.mean(centred**4) - variance**2, 0.0) / shots))
        if variance > 1.0 + 5 * sigma:
            raise MCMError(f"variance {variance:.4f} exceeds 1 + 5 sigma ({sigma:.4f})")
        loosest = max(loosest, variance)
    return f"{circuits} x {shots} shots equal 1; other states variance <= {loosest:.3f}"


_CHECKS: Dict[str, Callable] = {
    "channel": check_channel,
    "partition": check_partition,
    "synthesis": check_synthesis,
    "mub": check_mub,
    "moments": check_moments,
    "overlap_sums": check_overlap_sums,
    "zero_variance": check_zero_variance,
}


def run_oracles(
    max_n: int = 4,
    suites: Sequence[str] = ("all",),
    seed: int = DEFAULT_SEED,
    ensemble_factory: EnsembleFactory = build_ensemble,
) -> OracleReport:
    """Each suite runs for n = 1 .. min(max_n, suite limit); failures are collected, not raised."""
    names: List[str] = list(SUITES) if "all" in suites else list(suites)
    unknown = [name for name in names if name not in _CHECKS]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")

    report = OracleReport()
    for key, name in enumerate(names):
        for n in range(1, min(max_n, SUITE_LIMITS[name]) + 1):
            rng = trial_rng(seed, key, n)
            start = time.perf_counter()
            try:
                detail = _CHECKS[name](n, ensemble_factory, rng)
                passed = True
            except MCMError as e:
                detail, passed = str(e), False
            result = OracleResult(
                name=name, n=n, passed=passed, detail=detail, elapsed_ms=(time.perf_counter() - start) * 1000.0
            )
            if VERBOSE:
                print(f"  {'✓' if passed else '✗'} {name:<14} n={n}  {detail}")
            report.results.append(result)
    return report
