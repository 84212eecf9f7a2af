"""Data models for configs, result rows and JSON payloads."""
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .config import DEFAULT_SEED, DEFAULT_SHOTS, FULL_CLIFFORD_MAX_QUBITS, MAX_DENSE_QUBITS

ExperimentKind = Literal[
    "ghz_fidelity",
    "ghz_offdiag",
    "ghz_theta_biased",
    "haar_vs_stabilizer",
    "product_xz_biased",
    "oa_sweep",
    "local_observable",
    "haar_average",
]
ProtocolName = Literal["mcm", "clifford", "pauli", "biased"]

# Per-kind grid defaults, filled in by ExperimentConfig.with_defaults
EXPERIMENT_DEFAULTS: Dict[str, Dict] = {
    "ghz_fidelity": {"n_min": 3, "n_max": 8, "protocols": ["pauli", "clifford", "mcm"]},
    "ghz_offdiag": {"n_min": 3, "n_max": 8, "protocols": ["pauli", "clifford", "mcm"]},
    "ghz_theta_biased": {
        "n_min": 6,
        "n_max": 6,
        "protocols": ["clifford", "mcm", "biased"],
        "thetas": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
    },
    "haar_vs_stabilizer": {
        "n_min": 6,
        "n_max": 6,
        "protocols": ["clifford", "mcm", "biased"],
        "num_states": 100,
    },
    "product_xz_biased": {
        "n_min": 3,
        "n_max": 6,
        "protocols": ["clifford", "mcm", "biased"],
        "thetas": [0.1, 0.2, 0.3, 0.4, 0.5],
    },
    "oa_sweep": {
        "n_min": 3,
        "n_max": 8,
        "protocols": ["mcm"],
        "a_values": [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0],
    },
    "local_observable": {
        "n_min": 8,
        "n_max": 8,
        "protocols": ["pauli", "clifford", "mcm"],
        "k_values": [1, 2, 3, 4, 5, 6, 7],
        "thetas": [0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5],
    },
    "haar_average": {
        "n_min": 3,
        "n_max": 8,
        "protocols": ["pauli", "clifford", "mcm"],
        "num_states": 100,
    },
}


class ExperimentConfig(BaseModel):
    """Config file for `main.py experiment`; angles are fractions of pi."""

    experiment: ExperimentKind
    n_min: Optional[int] = Field(default=None, ge=1, description="Smallest qubit count")
    n_max: Optional[int] = Field(default=None, ge=1, description="Largest qubit count")
    shots: int = Field(default=DEFAULT_SHOTS, ge=100, description="Snapshots per grid point")
    protocols: Optional[List[ProtocolName]] = None
    thetas: Optional[List[float]] = Field(default=None, description="Angles in units of pi")
    a_values: Optional[List[float]] = None
    k_values: Optional[List[int]] = None
    num_states: Optional[int] = Field(default=None, ge=2)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    output: Optional[str] = Field(default=None, description="CSV path")
    exact: bool = Field(default=True, description="Also report exact enumerated variances")

    @field_validator("a_values")
    @classmethod
    def _a_in_unit_interval(cls, values):
        if values is not None and any(not 0.0 <= a <= 1.0 for a in values):
            raise ValueError("a values must lie in [0, 1]")
        return values

    def with_defaults(self) -> "ExperimentConfig":
        defaults = EXPERIMENT_DEFAULTS[self.experiment]
        filled = {key: value for key, value in defaults.items() if getattr(self, key) is None}
        return ExperimentConfig(**{**self.model_dump(), **filled})

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.n_min is not None and self.n_max is not None:
            if self.n_min > self.n_max:
                raise ValueError(f"n_min {self.n_min} exceeds n_max {self.n_max}")
            if self.n_max > MAX_DENSE_QUBITS:
                raise ValueError(f"n_max {self.n_max} above the dense cap {MAX_DENSE_QUBITS}")
            if self.protocols and "clifford" in self.protocols and self.n_max > FULL_CLIFFORD_MAX_QUBITS:
                raise ValueError(
                    f"clifford baseline limited to n <= {FULL_CLIFFORD_MAX_QUBITS}"
                )
        if self.experiment == "local_observable" and self.k_values and self.n_max is not None:
            if max(self.k_values) > self.n_max:
                raise ValueError("k must not exceed the qubit count")
        return self


class ResultRow(BaseModel):
    """One (protocol, grid point) result."""

    experiment: str
    protocol: str
    n: int
    params: str = Field(default="", description="Grid parameters as key=value;key=value")
    mean: float
    variance: float
    variance_exact: Optional[float] = None
    shots: int
    seed: int
    wall_ms: float = Field(default=0.0, description="Wall time for the grid point")

    def sort_key(self):
        return (self.experiment, self.protocol, self.n, self.params)


class SlopeFit(BaseModel):
    experiment: str = ""
    protocol: str = ""
    params: str = ""
    slope: float
    intercept: float
    stderr: float
    points: int


class EstimateRecord(BaseModel):
    """JSON output of `main.py estimate`."""

    protocol: str
    n: int
    shots: int
    seed: int
    mean: float
    variance: float
    elapsed_ms: float
    state: str = ""
    observable: str = ""


class OracleResult(BaseModel):
    name: str
    n: int
    passed: bool
    detail: str = ""
    elapsed_ms: float = 0.0


class OracleReport(BaseModel):
    results: List[OracleResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[OracleResult]:
        return [r for r in self.results if not r.passed]


class ElementDump(BaseModel):
    index: int
    label: Optional[int] = Field(default=None, description="Field element v, absent for the Z basis")
    C: List[List[int]]
    D: List[List[int]]
    generators: List[str]


class EnsembleDump(BaseModel):
    """Schema of `main.py ensemble --format json`."""

    n: int
    poly: int
    elements: List[ElementDump]
