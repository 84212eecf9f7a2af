"""Uniform MCM shadows, the full-Clifford and Pauli baselines and the exact oracles."""
import numpy as np
import pytest

from src.circuit import Circuit, conjugate_pauli
from src.config import FULL_CLIFFORD_MAX_QUBITS
from src.errors import QubitCapError
from src.mub import build_ensemble
from src.pauli import PauliSumObservable, PhasedPauli
from src.shadow import (
    EstimateSeries,
    ExactMoments,
    _random_symplectic,
    _symplectic_product,
    channel_oracle,
    coherence_l1,
    collect_snapshots,
    element_circuits,
    estimate_off_diagonal,
    exact_moments,
    mcm_estimate,
    normalise_protocol,
    outcome_probabilities,
    pauli_shadow_estimate,
    run_protocol,
    sample_full_clifford,
    snapshot_matrix,
    split_observable,
)
from src.statesim import (
    DenseObservable,
    StateVector,
    basis_vectors,
    observable_builders,
    prepare_named,
    trial_rng,
    unitary,
)


def random_hermitian(n, rng):
    dim = 1 << n
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return DenseObservable(n, (a + a.conj().T) / 2)


def test_estimate_series_statistics():
    series = EstimateSeries("mcm", 1, np.array([1.0, 2.0, 3.0, 4.0]))
    assert series.mean == pytest.approx(2.5)
    assert series.variance == pytest.approx(5.0 / 3.0)
    assert series.second_moment == pytest.approx(7.5)
    assert series.stderr == pytest.approx(np.sqrt(5.0 / 12.0))
    assert EstimateSeries("mcm", 1, np.array([3.0])).variance == 0.0
    assert ExactMoments(1.0, 3.0).variance == pytest.approx(2.0)


def test_protocol_alias():
    assert normalise_protocol("full_clifford") == "clifford"
    assert normalise_protocol("mcm") == "mcm"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mcm_channel_is_depolarising(n):
    rng = trial_rng(0, n)
    dim = 1 << n
    rho = prepare_named("haar", n, rng=rng).density_matrix()
    assert np.allclose(channel_oracle(build_ensemble(n), rho), (rho + np.eye(dim)) / (dim + 1))


@pytest.mark.parametrize("n", [2, 3])
def test_mcm_estimator_is_unbiased(n):
    rng = trial_rng(1, n)
    state = prepare_named("haar", n, rng=rng)
    observable = random_hermitian(n, rng)
    expected = np.vdot(state.amplitudes, observable.matrix @ state.amplitudes).real
    assert exact_moments(state, observable, "mcm").mean == pytest.approx(expected)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_single_pauli_second_moment(n):
    rng = trial_rng(2, n)
    rho = prepare_named("haar", n, rng=rng)
    pauli = PhasedPauli.from_label("X" + "Z" * (n - 1)).to_matrix()
    assert exact_moments(rho, pauli, "mcm").second_moment == pytest.approx((1 << n) + 1)


def test_single_qubit_protocols_coincide():
    # the six single-qubit stabilizer states already form a 3-design
    rng = trial_rng(3, 1)
    rho = prepare_named("haar", 1, rng=rng)
    observable = random_hermitian(1, rng)
    mcm = exact_moments(rho, observable, "mcm")
    clifford = exact_moments(rho, observable, "clifford")
    pauli = exact_moments(rho, observable, "pauli")
    assert clifford.mean == pytest.approx(mcm.mean)
    assert clifford.second_moment == pytest.approx(mcm.second_moment)
    assert pauli.second_moment == pytest.approx(mcm.second_moment)


def test_mcm_estimate_on_z_basis():
    n = 2
    observable = observable_builders("ghz", n)
    # |00> outcome under the trivial circuit: 5 * 1/2 - 1
    assert mcm_estimate(observable, Circuit(n), 0) == pytest.approx(1.5)
    assert mcm_estimate(observable, Circuit(n), 1) == pytest.approx(-1.0)


def test_outcome_probabilities_rows_are_distributions():
    ens = build_ensemble(3)
    state = prepare_named("ghz", 3)
    table = outcome_probabilities(ens, state)
    assert table.shape == (9, 8)
    assert np.allclose(table.sum(axis=1), 1.0)
    assert np.allclose(table, outcome_probabilities(ens, state.density_matrix()))
    assert np.allclose(table[0], state.probabilities())


def test_pauli_estimator_examples():
    z0 = PauliSumObservable.from_terms([(1.0, "Z")])
    assert pauli_shadow_estimate(z0, [2], 0) == pytest.approx(3.0)
    assert pauli_shadow_estimate(z0, [2], 1) == pytest.approx(-3.0)
    assert pauli_shadow_estimate(z0, [0], 0) == pytest.approx(0.0)
    dense = DenseObservable(1, z0.to_dense())
    assert pauli_shadow_estimate(dense, [2], 0) == pytest.approx(3.0)
    assert pauli_shadow_estimate(dense, [0], 1) == pytest.approx(0.0)


def test_pauli_dense_and_sum_paths_agree():
    rng = np.random.default_rng(8)
    observable = random_hermitian(3, rng)
    pauli_sum = PauliSumObservable.from_dense(observable.matrix)
    for _ in range(20):
        bases = rng.integers(3, size=3)
        outcome = int(rng.integers(8))
        assert pauli_shadow_estimate(pauli_sum, bases, outcome) == pytest.approx(
            pauli_shadow_estimate(observable, bases, outcome)
        )


def test_pauli_exact_moments():
    rng = trial_rng(4, 2)
    rho = prepare_named("haar", 2, rng=rng)
    observable = random_hermitian(2, rng)
    expected = np.vdot(rho.amplitudes, observable.matrix @ rho.amplitudes).real
    assert exact_moments(rho, observable, "pauli").mean == pytest.approx(expected)
    z0 = PauliSumObservable.from_terms([(1.0, "ZI")])
    assert exact_moments(rho, z0, "pauli").second_moment == pytest.approx(3.0)


def test_symplectic_images_are_a_symplectic_basis():
    n = 4
    rng = trial_rng(5, 0)
    images = _random_symplectic(n, rng)
    for i, (zi, xi) in enumerate(images):
        for j, (zj, xj) in enumerate(images):
            assert _symplectic_product(zi, zj, n) == 0
            assert _symplectic_product(xi, xj, n) == 0
            assert _symplectic_product(zi, xj, n) == int(i == j)


def test_full_clifford_sampler_is_seeded_and_unitary():
    a = sample_full_clifford(3, trial_rng(6, 0))
    b = sample_full_clifford(3, trial_rng(6, 0))
    assert a == b
    u = unitary(a)
    assert np.allclose(u.conj().T @ u, np.eye(8))
    with pytest.raises(QubitCapError):
        sample_full_clifford(FULL_CLIFFORD_MAX_QUBITS + 1, trial_rng(6, 1))


def test_full_clifford_single_qubit_elements_are_uniform():
    rng = trial_rng(7, 0)
    z, x = PhasedPauli.from_label("Z"), PhasedPauli.from_label("X")
    counts = {}
    for _ in range(2400):
        circuit = sample_full_clifford(1, rng)
        key = (conjugate_pauli(circuit, z).label, conjugate_pauli(circuit, x).label)
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 24
    assert {zi for zi, _ in counts} == {"+X", "-X", "+Y", "-Y", "+Z", "-Z"}
    assert all(abs(c - 100) < 45 for c in counts.values())


def _phase_free_key(u):
    pivot = u.flat[np.flatnonzero(np.abs(u) > 1e-9)[0]]
    return tuple(np.round(u / (pivot / abs(pivot)), 6).flatten())


def test_single_qubit_clifford_frame_potential():
    # |tr(U^dag V)|^2t averaged over the group: 1, 2, 5 for t = 1, 2, 3
    rng = trial_rng(7, 1)
    group = {}
    for _ in range(2000):
        u = unitary(sample_full_clifford(1, rng))
        group.setdefault(_phase_free_key(u), u)
        if len(group) == 24:
            break
    assert len(group) == 24
    unitaries = list(group.values())
    traces = np.array([[abs(np.trace(u.conj().T @ v)) ** 2 for v in unitaries] for u in unitaries])
    assert [float(np.mean(traces**t)) for t in (1, 2, 3)] == pytest.approx([1.0, 2.0, 5.0])


def test_full_clifford_channel_monte_carlo():
    rng = trial_rng(8, 0)
    rho = prepare_named("haar", 2, rng=rng).density_matrix()
    approx = channel_oracle(lambda r: sample_full_clifford(2, r), rho, samples=3000, rng=rng)
    assert np.max(np.abs(approx - (rho + np.eye(4)) / 5)) < 0.05


def test_run_protocol_mcm_ghz_fidelity():
    n = 3
    series = run_protocol(prepare_named("ghz", n), observable_builders("ghz", n), 20000, "mcm", trial_rng(9, 0))
    assert len(series) == 20000
    assert abs(series.mean - 1.0) < 5 * series.stderr
    exact = exact_moments(prepare_named("ghz", n), observable_builders("ghz", n), "mcm")
    assert series.variance == pytest.approx(exact.variance, rel=0.1)


def test_run_protocol_mcm_few_shots_path():
    n = 2
    series = run_protocol(prepare_named("ghz", n), observable_builders("ghz", n), 3, "mcm", trial_rng(10, 0))
    assert len(series) == 3
    values = set(np.round(series.values, 9))
    assert values <= {-1.0, 0.25, 1.5}


def test_run_protocol_is_reproducible():
    state, observable = prepare_named("ghz", 2), observable_builders("ghz", 2)
    a = run_protocol(state, observable, 500, "mcm", trial_rng(11, 0))
    b = run_protocol(state, observable, 500, "mcm", trial_rng(11, 0))
    assert np.array_equal(a.values, b.values)


def test_run_protocol_pauli_and_clifford():
    n = 2
    state = prepare_named("zero", n)
    zz = PauliSumObservable.from_terms([(1.0, "ZZ")])
    pauli = run_protocol(state, zz, 4000, "pauli", trial_rng(12, 0))
    assert abs(pauli.mean - 1.0) < 5 * pauli.stderr
    clifford = run_protocol(state, zz, 400, "clifford", trial_rng(12, 1))
    assert abs(clifford.mean - 1.0) < 5 * clifford.stderr


def test_run_protocol_rejects():
    state, observable = prepare_named("zero", 1), observable_builders("identity", 1)
    with pytest.raises(ValueError):
        run_protocol(state, observable, 0, "mcm", trial_rng(0))
    with pytest.raises(ValueError):
        run_protocol(state, observable, 10, "tomography", trial_rng(0))


@pytest.mark.parametrize("protocol", ["mcm", "pauli", "clifford"])
def test_snapshots_are_unit_trace_and_match_estimates(protocol):
    n = 2
    state = prepare_named("ghz", n)
    observable = observable_builders("ghz", n)
    for snapshot in collect_snapshots(state, 20, protocol, trial_rng(13, 0)):
        matrix = snapshot_matrix(snapshot)
        assert np.trace(matrix).real == pytest.approx(1.0)
        value = np.trace(observable.matrix @ matrix).real
        if protocol == "pauli":
            assert value == pytest.approx(pauli_shadow_estimate(observable, snapshot.bases, snapshot.outcome))
        else:
            assert value == pytest.approx(mcm_estimate(observable, snapshot.circuit, snapshot.outcome))


def test_split_observable_reconstructs():
    n = 2
    ens = build_ensemble(n)
    observable = random_hermitian(n, np.random.default_rng(14))
    for circuit in element_circuits(ens):
        diag, off = split_observable(observable, circuit)
        w = basis_vectors(circuit)
        rebuilt = (w * diag) @ w.conj().T + off.matrix
        assert np.allclose(rebuilt, observable.matrix)


def test_coherence_of_ghz_projector():
    assert coherence_l1(observable_builders("ghz", 3), Circuit(3)) == pytest.approx(1.0)
    assert coherence_l1(observable_builders("identity", 3), Circuit(3)) == pytest.approx(0.0)
    assert coherence_l1(observable_builders("oa", 3, {"a": 0.3}), Circuit(3)) == pytest.approx(1.4)


def test_off_diagonal_estimate_of_ghz_fidelity():
    n = 3
    result = estimate_off_diagonal(
        prepare_named("ghz", n), observable_builders("ghz", n), Circuit(n), 2000, 20000, trial_rng(15, 0)
    )
    assert result.diagonal.mean == pytest.approx(0.5)
    assert abs(result.estimate - 1.0) < 5 * np.sqrt(result.variance)


def test_exact_moments_unknown_protocol():
    with pytest.raises(ValueError):
        exact_moments(StateVector.zero(1), np.eye(2), "tomography")
