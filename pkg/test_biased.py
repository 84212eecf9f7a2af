"""Biased MCM distributions, the stabilizer norm and the stabilizer-observable fast path."""
import numpy as np
import pytest

from src import biased
from src.biased import (
    BiasedDistribution,
    StabilizerObservable,
    alpha_profile,
    b_u,
    b_values,
    biased_estimate,
    optimal_distribution,
    overlap_rank,
    pauli_sum_distribution,
    run_biased,
    run_biased_stabilizer,
    stabilizer_distribution,
    stabilizer_norm,
    stabilizer_overlap,
    stabilizer_probability,
    stabilizer_sampler,
)
from src.circuit import Circuit, synthesize
from src.errors import DimensionMismatchError, ProfileMismatchError, ZeroProbabilityError
from src.mub import build_ensemble
from src.pauli import PauliSumObservable
from src.shadow import exact_moments, sample_full_clifford
from src.statesim import expectation, observable_builders, prepare_named, trial_rng


def random_stabilizer(n, seed):
    return StabilizerObservable(sample_full_clifford(n, trial_rng(seed, n)))


def test_distribution_validation():
    with pytest.raises(ValueError):
        BiasedDistribution([0.5, 0.6])
    with pytest.raises(ValueError):
        BiasedDistribution([1.5, -0.5])
    with pytest.raises(ZeroProbabilityError):
        BiasedDistribution.from_weights([0.0, 0.0, 0.0])
    dist = BiasedDistribution.from_weights([2.0, 0.0, 6.0])
    assert np.allclose(dist.probs, [0.25, 0.0, 0.75])
    assert dist.support.tolist() == [0, 2]


def test_distribution_samples_support_only():
    dist = BiasedDistribution([0.5, 0.0, 0.5])
    draws = dist.sample(trial_rng(0), 2000)
    assert set(draws.tolist()) == {0, 2}
    assert isinstance(dist.sample(trial_rng(1)), int)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_b_u_of_ghz_on_z_basis(n):
    ens = build_ensemble(n)
    assert b_u(observable_builders("ghz", n), ens, 0) == pytest.approx(0.5 - 2.0**-n)


def test_b_values_agree_with_b_u():
    ens = build_ensemble(3)
    observable = observable_builders("product_xz", 3, {"theta": 0.3 * np.pi})
    values = b_values(observable, ens)
    assert values.shape == (9,)
    assert np.allclose(values, [b_u(observable, ens, i) for i in range(9)])


def test_identity_has_no_distribution():
    with pytest.raises(ZeroProbabilityError):
        optimal_distribution(observable_builders("identity", 2), build_ensemble(2))


@pytest.mark.parametrize("theta", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_stabilizer_norm_of_product_observable(n, theta):
    theta *= np.pi
    observable = observable_builders("product_xz", n, {"theta": theta})
    assert stabilizer_norm(observable) ** 2 == pytest.approx((1 + np.sin(theta)) ** n)


def test_stabilizer_norm_of_stabilizer_projector():
    assert stabilizer_norm(observable_builders("ghz", 4)) == pytest.approx(1.0)
    assert stabilizer_norm(observable_builders("identity", 3)) == pytest.approx(1.0)


@pytest.mark.parametrize("kind,params", [("ghz", None), ("product_xz", {"theta": 0.2 * np.pi}), ("oa", {"a": 0.3})])
def test_biased_estimator_is_unbiased(kind, params):
    n = 3
    ens = build_ensemble(n)
    observable = observable_builders(kind, n, params)
    rho = prepare_named("haar", n, rng=trial_rng(2, n))
    moments = exact_moments(rho, observable, "biased", ens, optimal_distribution(observable, ens))
    assert moments.mean == pytest.approx(expectation(rho, observable))


def test_biased_estimate_rejects_zero_probability():
    with pytest.raises(ZeroProbabilityError):
        biased_estimate(observable_builders("ghz", 2), Circuit(2), 0, 0.0)


def test_biased_estimate_single_value():
    n = 2
    observable = observable_builders("ghz", n)
    # (1/2 - 1/4) / (1/2) + 1/4
    assert biased_estimate(observable, Circuit(n), 0, 0.5) == pytest.approx(0.75)


def test_pauli_sum_distribution_two_terms():
    ens = build_ensemble(1)
    observable = PauliSumObservable.from_terms([(1.0, "Z"), (1.0, "X")])
    assert np.allclose(pauli_sum_distribution(observable, ens).probs, [0.5, 0.5, 0.0])


def test_pauli_sum_distribution_weights_by_coefficient():
    ens = build_ensemble(2)
    observable = PauliSumObservable.from_terms([(3.0, "ZZ"), (-1.0, "ZI")])
    assert pauli_sum_distribution(observable, ens).probs[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pauli_sum_distribution(PauliSumObservable.from_terms([(1.0, "II")]), ens)
    with pytest.raises(DimensionMismatchError):
        pauli_sum_distribution(PauliSumObservable.from_terms([(1.0, "Z")]), ens)


def test_run_biased_pauli_sum():
    n = 2
    ens = build_ensemble(n)
    observable = PauliSumObservable.from_terms([(0.5, "ZZ"), (0.5, "XX")])
    state = prepare_named("ghz", n)
    series = run_biased(state, observable, 2000, pauli_sum_distribution(observable, ens), trial_rng(3), ens)
    assert series.mean == pytest.approx(1.0)
    assert series.variance == pytest.approx(0.0, abs=1e-9)


def test_run_biased_ghz_fidelity():
    n = 3
    ens = build_ensemble(n)
    observable = observable_builders("ghz", n)
    state = prepare_named("ghz_theta", n, {"theta": 0.3 * np.pi})
    series = run_biased(state, observable, 20000, optimal_distribution(observable, ens), trial_rng(4), ens)
    assert abs(series.mean - expectation(state, observable)) < 5 * series.stderr


def test_run_biased_rejects_wrong_size():
    with pytest.raises(DimensionMismatchError):
        run_biased(prepare_named("zero", 2), observable_builders("ghz", 2), 10, BiasedDistribution([1.0]), trial_rng(0))


def test_stabilizer_observable_from_text():
    observable = StabilizerObservable.from_text("# n=2\nCX 0 1\nH 0\n")
    assert observable.n == 2
    assert observable.state().fidelity(prepare_named("ghz", 2)) == pytest.approx(1.0)
    amplitudes = observable.state().amplitudes
    for stabilizer in observable.stabilizers():
        assert np.allclose(stabilizer.to_matrix() @ amplitudes, amplitudes)
    assert np.allclose(observable.to_dense(), observable_builders("ghz", 2).matrix)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_overlaps_match_dense(n):
    ens = build_ensemble(n)
    for seed in range(3):
        observable = random_stabilizer(n, seed)
        for index in range(len(ens)):
            profile = alpha_profile(observable, ens, index)
            fast = [stabilizer_overlap(observable, ens, index, b) for b in range(1 << n)]
            assert np.allclose(fast, profile.alphas)
            assert profile.rank == overlap_rank(observable, ens, index)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_overlap_ranks_sum_to_two(n):
    ens = build_ensemble(n)
    observable = random_stabilizer(n, 10)
    assert sum(2.0 ** -overlap_rank(observable, ens, i) for i in range(len(ens))) == pytest.approx(2.0)
    assert stabilizer_distribution(observable, ens).probs.sum() == pytest.approx(1.0)


def test_z_basis_projector_ranks():
    n = 3
    ens = build_ensemble(n)
    observable = StabilizerObservable(Circuit(n))
    assert overlap_rank(observable, ens, 0) == 0
    assert all(overlap_rank(observable, ens, i) == n for i in range(1, len(ens)))
    assert stabilizer_probability(observable, ens, 0) == pytest.approx(1.0)


def test_alpha_profile_detects_wrong_rank(monkeypatch):
    ens = build_ensemble(2)
    observable = StabilizerObservable(Circuit(2))
    monkeypatch.setattr(biased, "overlap_rank", lambda *args: 0)
    with pytest.raises(ProfileMismatchError):
        alpha_profile(observable, ens, 1)


def test_stabilizer_sampler_frequencies():
    n = 3
    ens = build_ensemble(n)
    observable = random_stabilizer(n, 20)
    rng = trial_rng(21)
    counts = np.zeros(len(ens))
    for _ in range(4000):
        index, p_u = stabilizer_sampler(observable, ens, rng)
        assert p_u == pytest.approx(stabilizer_probability(observable, ens, index))
        counts[index] += 1
    expected = stabilizer_distribution(observable, ens).probs
    assert np.max(np.abs(counts / 4000 - expected)) < 0.04


@pytest.mark.parametrize("n", [2, 3, 4])
def test_zero_variance_on_own_state(n):
    ens = build_ensemble(n)
    observable = random_stabilizer(n, 30)
    series = run_biased_stabilizer(observable.state(), observable, 500, trial_rng(31, n), ens)
    assert np.allclose(series.values, 1.0)
    dense = run_biased(observable.state(), observable, 500, stabilizer_distribution(observable, ens), trial_rng(32, n), ens)
    assert np.allclose(dense.values, 1.0)


def test_stabilizer_fast_path_is_unbiased():
    n = 3
    ens = build_ensemble(n)
    observable = random_stabilizer(n, 40)
    state = prepare_named("haar", n, rng=trial_rng(41))
    series = run_biased_stabilizer(state, observable, 20000, trial_rng(42), ens)
    target = float(np.abs(np.vdot(observable.state().amplitudes, state.amplitudes)) ** 2)
    assert abs(series.mean - target) < 5 * series.stderr


def test_stabilizer_overlap_of_synthesized_element():
    # U V^dag |0> with V = U is |0>: full rank zero
    n = 3
    ens = build_ensemble(n)
    observable = StabilizerObservable(synthesize(ens, 5))
    assert overlap_rank(observable, ens, 5) == 0
    assert stabilizer_overlap(observable, ens, 5, 0) == pytest.approx(1.0)
    assert stabilizer_overlap(observable, ens, 5, 1) == 0.0
