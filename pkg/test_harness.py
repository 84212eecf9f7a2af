"""Experiment grids, slope fits, result files and the oracle suites."""
import dataclasses
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.errors import ConfigError
from src.harness import (
    CSV_COLUMNS,
    GridPoint,
    build_grid,
    build_workload,
    fit_slope,
    fit_slopes,
    load_config,
    ols,
    read_csv,
    read_json,
    run_experiment,
    run_point,
    write_csv,
    write_json,
)
from src.models import ExperimentConfig, ResultRow
from src.mub import MubElement, build_ensemble
from src.oracles import run_oracles
from src.report import generate_results_pdf, write_markdown_summary


def make_rows(protocol="mcm", slope=1.0):
    return [
        ResultRow(experiment="ghz_fidelity", protocol=protocol, n=n, mean=1.0, variance=2.0 ** (slope * n), shots=100, seed=1)
        for n in range(3, 7)
    ]


def test_config_defaults_and_validation():
    cfg = ExperimentConfig(experiment="oa_sweep").with_defaults()
    assert (cfg.n_min, cfg.n_max) == (3, 8)
    assert cfg.a_values == [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0]
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="ghz_fidelity", n_min=5, n_max=3)
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="oa_sweep", a_values=[1.5])
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="ghz_fidelity", n_min=3, n_max=12, protocols=["clifford"])
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="tomography")


def test_grid_points():
    cfg = ExperimentConfig(experiment="ghz_fidelity", n_min=3, n_max=5, protocols=["mcm", "pauli"])
    points = build_grid(cfg)
    assert len(points) == 6
    assert [p.index for p in points] == list(range(6))
    assert {(p.protocol, p.n) for p in points} == {(pr, n) for pr in ("mcm", "pauli") for n in (3, 4, 5)}


def test_local_grid_skips_k_above_n():
    cfg = ExperimentConfig(
        experiment="local_observable", n_min=2, n_max=3, protocols=["mcm"], k_values=[1, 3], thetas=[0.25]
    )
    points = build_grid(cfg)
    assert [(p.n, p.param_text) for p in points] == [(2, "k=1;theta=0.25"), (3, "k=1;theta=0.25"), (3, "k=3;theta=0.25")]


def test_param_text():
    assert GridPoint("oa_sweep", "mcm", 3, (("a", 0.5),)).param_text == "a=0.5"
    assert GridPoint("ghz_fidelity", "mcm", 3).param_text == ""


def test_haar_workloads_share_states_across_protocols():
    cfg = ExperimentConfig(experiment="haar_average", n_min=2, n_max=2, num_states=3).with_defaults()
    a = build_workload(GridPoint("haar_average", "mcm", 2, (), 0), cfg)
    b = build_workload(GridPoint("haar_average", "pauli", 2, (), 1), cfg)
    assert len(a.states) == 3
    assert all((sa.amplitudes == sb.amplitudes).all() for sa, sb in zip(a.states, b.states))


def test_run_point_ghz_fidelity():
    cfg = ExperimentConfig(experiment="ghz_fidelity", n_min=3, n_max=3, shots=5000, protocols=["mcm"], seed=3)
    row = run_point(build_grid(cfg)[0], cfg)
    assert row.mean == pytest.approx(1.0, abs=0.15)
    assert row.variance_exact is not None
    assert row.variance == pytest.approx(row.variance_exact, rel=0.15)


def test_run_point_biased_stabilizer_target():
    cfg = ExperimentConfig(
        experiment="haar_vs_stabilizer", n_min=2, n_max=2, shots=500, protocols=["biased"], num_states=2
    )
    row = run_point(build_grid(cfg)[0], cfg)
    assert row.protocol == "biased"
    assert row.variance_exact is not None and row.variance_exact >= 0


def test_run_experiment_is_deterministic(tmp_path):
    cfg = ExperimentConfig(
        experiment="product_xz_biased", n_min=2, n_max=3, shots=300, protocols=["mcm", "biased"], thetas=[0.25]
    )
    first = write_csv(run_experiment(cfg, workers=1), tmp_path / "a.csv")
    second = write_csv(run_experiment(cfg, workers=1), tmp_path / "b.csv")
    assert first.read_text() == second.read_text()
    header = first.read_text().splitlines()[0]
    assert header.split(",") == CSV_COLUMNS


def test_rows_are_sorted():
    cfg = ExperimentConfig(experiment="ghz_offdiag", n_min=2, n_max=3, shots=200, protocols=["pauli", "mcm"])
    rows = run_experiment(cfg, workers=1)
    assert [(r.protocol, r.n) for r in rows] == [("mcm", 2), ("mcm", 3), ("pauli", 2), ("pauli", 3)]


def test_ols_exact_line():
    slope, intercept, stderr = ols([1, 2, 3, 4], [3, 5, 7, 9])
    assert slope == pytest.approx(2.0)
    assert intercept == pytest.approx(1.0)
    assert stderr == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        ols([1, 2], [1, 2])
    with pytest.raises(ValueError):
        ols([1, 1, 1], [1, 2, 3])


def test_fit_slopes():
    rows = make_rows("mcm", 1.0) + make_rows("pauli", 1.58)
    fits = {fit.protocol: fit for fit in fit_slopes(rows)}
    assert fits["mcm"].slope == pytest.approx(1.0)
    assert fits["pauli"].slope == pytest.approx(1.58)
    assert fits["mcm"].points == 4
    assert fit_slope(make_rows(), sqrt=True).slope == pytest.approx(0.5)


def test_fit_slopes_skips_unfittable_groups():
    rows = make_rows()[:2]
    assert fit_slopes(rows) == []
    zero = make_rows()
    zero[0] = zero[0].model_copy(update={"variance": 0.0})
    assert fit_slopes(zero) == []
    with pytest.raises(ValueError):
        fit_slope(zero)


def test_csv_round_trip(tmp_path):
    rows = make_rows()
    rows[0] = rows[0].model_copy(update={"variance_exact": 1.25, "params": "a=0.5"})
    path = write_csv(rows, tmp_path / "rows.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert lines[1].split(",")[3] == "a=0.5"
    assert lines[2].split(",")[6] == ""
    assert sorted(read_csv(path), key=ResultRow.sort_key) == sorted(rows, key=ResultRow.sort_key)


def test_json_payload(tmp_path):
    rows = make_rows()
    path = write_json(rows, tmp_path / "rows.json")
    loaded_rows, loaded_fits = read_json(path)
    assert loaded_rows == sorted(rows, key=ResultRow.sort_key)
    assert len(loaded_fits) == 1
    assert loaded_fits[0].slope == pytest.approx(1.0)


def test_reports(tmp_path):
    rows = make_rows()
    md = write_markdown_summary(rows, tmp_path / "summary.md")
    text = md.read_text()
    assert "## ghz_fidelity" in text
    assert "| mcm |" in text
    pdf = generate_results_pdf(rows, str(tmp_path / "summary.pdf"))
    assert (tmp_path / "summary.pdf").stat().st_size > 0
    assert pdf.endswith("summary.pdf")


def test_oracles_pass():
    report = run_oracles(max_n=2, seed=5)
    assert report.passed, [f"{r.name} n={r.n}: {r.detail}" for r in report.failures]
    assert {r.name for r in report.results} == {
        "channel", "partition", "synthesis", "mub", "moments", "overlap_sums", "zero_variance"
    }


def test_oracles_reject_unknown_suite():
    with pytest.raises(ValueError):
        run_oracles(suites=["nonsense"])


def _swapped_tableau(n):
    ens = build_ensemble(n)
    elements = list(ens.elements)
    elements[1] = MubElement(1, 0, ens.element(2).tableau)
    return dataclasses.replace(ens, elements=tuple(elements))


def _flipped_beta(n):
    ens = build_ensemble(n)
    return dataclasses.replace(ens, beta=ens.beta.with_entry(0, 0, 1 - ens.beta[0, 0]))


def test_oracles_catch_swapped_element():
    report = run_oracles(max_n=2, suites=["partition", "synthesis"], ensemble_factory=_swapped_tableau)
    assert not report.passed
    assert {r.name for r in report.failures} == {"partition", "synthesis"}


def test_oracles_catch_wrong_hankel_coefficients():
    report = run_oracles(max_n=3, suites=["synthesis"], ensemble_factory=_flipped_beta)
    assert not report.passed


def test_load_config(tmp_path):
    cfg = load_config(Path(__file__).parent / "configs" / "oa_sweep.json")
    assert cfg.experiment == "oa_sweep"
    assert cfg.protocols == ["mcm"]
    bad = tmp_path / "bad.json"
    bad.write_text('{"experiment": "oa_sweep", "shots": 5}')
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("path", sorted((Path(__file__).parent / "configs").glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert cfg.experiment == path.stem
    assert build_grid(cfg)


def test_local_observable_default_grid():
    cfg = ExperimentConfig(experiment="local_observable").with_defaults()
    pairs = {(p.param_dict["k"], p.param_dict["theta"]) for p in build_grid(cfg)}
    for theta in (0.0, 0.5):
        assert {k for k, t in pairs if t == theta} == set(range(1, 8))
    for k in (1, 3, 5, 7):
        assert {t for kk, t in pairs if kk == k} >= {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}
