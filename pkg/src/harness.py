"""Experiment grids, slope fits and result files."""
import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from .biased import (
    StabilizerObservable,
    optimal_distribution,
    run_biased,
    run_biased_stabilizer,
    stabilizer_distribution,
)
from .config import NUM_WORKERS, VERBOSE
from .errors import ConfigError
from .models import ExperimentConfig, ResultRow, SlopeFit
from .mub import build_ensemble
from .shadow import EstimateSeries, exact_moments, run_protocol, sample_full_clifford
from .statesim import (
    DenseObservable,
    StateVector,
    observable_builders,
    prepare_named,
    trial_rng,
)

CSV_COLUMNS = ["experiment", "protocol", "n", "params", "mean", "variance", "variance_exact", "shots", "seed"]

# Exact enumeration limits per protocol
EXACT_LIMITS = {"mcm": 8, "biased": 8, "pauli": 6, "clifford": 14}

# Extra SeedSequence keys for streams shared by every protocol at one n
_STATE_STREAM = 1 << 20
_CLIFFORD_TARGET_STREAM = (1 << 20) + 1


@dataclass(frozen=True)
class GridPoint:
    experiment: str
    protocol: str
    n: int
    params: Tuple[Tuple[str, float], ...] = ()
    index: int = 0

    @property
    def param_dict(self) -> Dict[str, float]:
        return dict(self.params)

    @property
    def param_text(self) -> str:
        return ";".join(f"{key}={value:g}" for key, value in self.params)


@dataclass
class Workload:
    """States, observable and the protocol runner inputs of one grid point."""

    states: List[StateVector]
    observable: Any
    distribution: Any = None
    stabilizer: Optional[StabilizerObservable] = None


# Grid construction ------------------------------------------------------------------


def load_config(path) -> ExperimentConfig:
    """Read a JSON experiment config and fill the per-kind defaults."""
    try:
        with open(path) as f:
            return ExperimentConfig(**json.load(f)).with_defaults()
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e


def _param_grid(cfg: ExperimentConfig) -> List[Tuple[Tuple[str, float], ...]]:
    kind = cfg.experiment
    if kind in ("ghz_theta_biased", "product_xz_biased"):
        return [(("theta", t),) for t in cfg.thetas]
    if kind == "oa_sweep":
        return [(("a", a),) for a in cfg.a_values]
    if kind == "local_observable":
        return [(("k", float(k)), ("theta", t)) for k in cfg.k_values for t in cfg.thetas]
    return [()]


def build_grid(cfg: ExperimentConfig) -> List[GridPoint]:
    cfg = cfg.with_defaults()
    points = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        for params in _param_grid(cfg):
            if cfg.experiment == "local_observable" and dict(params)["k"] > n:
                continue
            for protocol in cfg.protocols:
                points.append(GridPoint(cfg.experiment, protocol, n, params, len(points)))
    return points


def _haar_states(cfg: ExperimentConfig, n: int) -> List[StateVector]:
    rng = trial_rng(cfg.seed, _STATE_STREAM, n)
    return [prepare_named("haar", n, rng=rng) for _ in range(cfg.num_states)]


def build_workload(point: GridPoint, cfg: ExperimentConfig) -> Workload:
    """Angles in the config are fractions of pi."""
    n, kind, params = point.n, point.experiment, point.param_dict
    theta = params.get("theta", 0.0) * math.pi
    if kind == "ghz_fidelity":
        return Workload([prepare_named("ghz", n)], observable_builders("ghz", n))
    if kind == "ghz_offdiag":
        return Workload([prepare_named("ghz", n)], observable_builders("ghz_offdiag", n))
    if kind == "ghz_theta_biased":
        return Workload([prepare_named("ghz_theta", n, {"theta": theta})], observable_builders("ghz", n))
    if kind == "product_xz_biased":
        return Workload([StateVector.zero(n)], observable_builders("product_xz", n, {"theta": theta}))
    if kind == "oa_sweep":
        return Workload([prepare_named("ghz", n)], observable_builders("oa", n, {"a": params["a"]}))
    if kind == "local_observable":
        k = int(params["k"])
        return Workload([StateVector.zero(n)], observable_builders("local", n, {"k": k, "theta": theta}))
    if kind == "haar_average":
        states = _haar_states(cfg, n)
        return Workload(states, DenseObservable.projector(states[0]))
    if kind == "haar_vs_stabilizer":
        target = StabilizerObservable(sample_full_clifford(n, trial_rng(cfg.seed, _CLIFFORD_TARGET_STREAM, n)))
        return Workload(_haar_states(cfg, n), DenseObservable(n, target.to_dense()), stabilizer=target)
    raise ConfigError(f"unknown experiment '{kind}'")


# Running -----------------------------------------------------------------------------


def _distribution(point: GridPoint, work: Workload):
    ens = build_ensemble(point.n)
    if work.stabilizer is not None:
        return stabilizer_distribution(work.stabilizer, ens)
    return optimal_distribution(work.observable, ens)


def _run_series(point: GridPoint, work: Workload, state: StateVector, shots: int, rng) -> EstimateSeries:
    ens = build_ensemble(point.n)
    if point.protocol == "biased":
        if work.stabilizer is not None:
            return run_biased_stabilizer(state, work.stabilizer, shots, rng, ens)
        return run_biased(state, work.observable, shots, work.distribution, rng, ens)
    return run_protocol(state, work.observable, shots, point.protocol, rng, ens)


def _exact_variance(point: GridPoint, work: Workload, state: StateVector) -> Optional[float]:
    if point.n > EXACT_LIMITS.get(point.protocol, 0):
        return None
    moments = exact_moments(
        state, work.observable, point.protocol, build_ensemble(point.n), work.distribution
    )
    return max(moments.variance, 0.0)


def run_point(point: GridPoint, cfg: ExperimentConfig) -> ResultRow:
    """One (protocol, grid point); replicate states are averaged with fresh snapshots each."""
    start = time.perf_counter()
    work = build_workload(point, cfg)
    if point.protocol == "biased":
        work.distribution = _distribution(point, work)
    means, variances, exact = [], [], []
    for replicate, state in enumerate(work.states):
        rng = trial_rng(cfg.seed, point.index, replicate)
        series = _run_series(point, work, state, cfg.shots, rng)
        means.append(series.mean)
        variances.append(series.variance)
        if cfg.exact:
            exact.append(_exact_variance(point, work, state))
    variance_exact = None
    if exact and all(v is not None for v in exact):
        variance_exact = math.fsum(exact) / len(exact)
    return ResultRow(
        experiment=point.experiment,
        protocol=point.protocol,
        n=point.n,
        params=point.param_text,
        mean=math.fsum(means) / len(means),
        variance=math.fsum(variances) / len(variances),
        variance_exact=variance_exact,
        shots=cfg.shots,
        seed=cfg.seed,
        wall_ms=(time.perf_counter() - start) * 1000.0,
    )


def _run_point_job(args) -> ResultRow:
    point, cfg = args
    return run_point(point, cfg)


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[ResultRow]:
    """All grid points, sorted by (experiment, protocol, n, params)."""
    cfg = cfg.with_defaults()
    points = build_grid(cfg)
    workers = workers or NUM_WORKERS

    if VERBOSE:
        print(f"🎯 Experiment: {cfg.experiment}")
        print("=" * 60)
        print(f"n = {cfg.n_min}..{cfg.n_max}, protocols: {', '.join(cfg.protocols)}, shots: {cfg.shots}, seed: {cfg.seed}")
        print(f"{len(points)} grid points on {workers} worker(s)")
        print("=" * 60)

    rows: List[ResultRow] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_run_point_job, [(p, cfg) for p in points]):
                _report_row(row)
                rows.append(row)
    else:
        for point in points:
            row = run_point(point, cfg)
            _report_row(row)
            rows.append(row)

    if VERBOSE:
        print("=" * 60)
        print("✅ Done!")
    return sorted(rows, key=ResultRow.sort_key)


def _report_row(row: ResultRow) -> None:
    if VERBOSE:
        params = f" [{row.params}]" if row.params else ""
        print(f"  ✓ {row.protocol:<8} n={row.n}{params}  mean={row.mean:.4f}  var={row.variance:.4g}  ({row.wall_ms:.0f} ms)")


# Fits ----------------------------------------------------------------------------------


def ols(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float, float]:
    """(slope, intercept, slope standard error)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 3:
        raise ValueError("slope fit needs at least 3 points")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("slope fit needs distinct x values")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    residual = y - (intercept + slope * x)
    stderr = math.sqrt(float(residual @ residual) / (len(x) - 2) / sxx)
    return slope, intercept, stderr


def fit_slope(rows: Sequence[ResultRow], sqrt: bool = False) -> SlopeFit:
    """OLS of log2 variance (or log2 sqrt variance) against n."""
    if any(r.variance <= 0 for r in rows):
        raise ValueError("nonpositive variance cannot enter a log fit")
    xs = [r.n for r in rows]
    ys = [math.log2(r.variance) * (0.5 if sqrt else 1.0) for r in rows]
    slope, intercept, stderr = ols(xs, ys)
    first = rows[0]
    return SlopeFit(
        experiment=first.experiment,
        protocol=first.protocol,
        params=first.params,
        slope=slope,
        intercept=intercept,
        stderr=stderr,
        points=len(rows),
    )


def group_rows(rows: Iterable[ResultRow]) -> Dict[Tuple[str, str, str], List[ResultRow]]:
    groups: Dict[Tuple[str, str, str], List[ResultRow]] = {}
    for row in sorted(rows, key=ResultRow.sort_key):
        groups.setdefault((row.experiment, row.protocol, row.params), []).append(row)
    return groups


def fit_slopes(rows: Iterable[ResultRow], sqrt: bool = False) -> List[SlopeFit]:
    """One fit per (experiment, protocol, params); groups that cannot be fitted are skipped."""
    fits = []
    for group in group_rows(rows).values():
        if len(group) < 3 or any(r.variance <= 0 for r in group):
            continue
        fits.append(fit_slope(group, sqrt))
    return fits


# Result files --------------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows: Sequence[ResultRow], path) -> Path:
    """Header plus one row per result; wall time is left to the JSON file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in sorted(rows, key=ResultRow.sort_key):
            data = row.model_dump()
            writer.writerow([_format_cell(data[column]) for column in CSV_COLUMNS])
    return path


def read_csv(path) -> List[ResultRow]:
    with open(path, newline="") as f:
        records = []
        for record in csv.DictReader(f):
            record = {k: v for k, v in record.items() if v != ""}
            records.append(ResultRow(**record))
    return records


def write_json(rows: Sequence[ResultRow], path, fits: Optional[Sequence[SlopeFit]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "rows": [row.model_dump() for row in sorted(rows, key=ResultRow.sort_key)],
        "fits": [fit.model_dump() for fit in (fits if fits is not None else fit_slopes(rows))],
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
    return path


def read_json(path) -> Tuple[List[ResultRow], List[SlopeFit]]:
    with open(path) as f:
        payload = json.load(f)
    rows = [ResultRow(**r) for r in payload.get("rows", [])]
    fits = [SlopeFit(**fit) for fit in payload.get("fits", [])]
    return rows, fits
