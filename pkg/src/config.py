"""Configuration for MCM shadow estimation."""
import os
from dotenv import load_dotenv

load_dotenv()

# Field arithmetic (not overridable: fixes the ensemble size 2^n + 1)
MAX_FIELD_DEGREE = 16

# Simulation caps
MAX_DENSE_QUBITS = int(os.getenv("MCM_MAX_QUBITS", "14"))
FULL_CLIFFORD_MAX_QUBITS = int(os.getenv("MCM_CLIFFORD_MAX_QUBITS", "8"))
STABILIZER_NORM_MAX_QUBITS = 8
DENSE_BIASED_MAX_QUBITS = 8

# Sampling
DEFAULT_SHOTS = int(os.getenv("MCM_SHOTS", "10000"))
DEFAULT_SEED = int(os.getenv("MCM_SEED", "42"))
NUM_WORKERS = int(os.getenv("MCM_WORKERS", "1"))

# Numerical tolerances
NORM_TOLERANCE = 1e-10
HERMITIAN_TOLERANCE = 1e-10

VERBOSE = os.getenv("MCM_VERBOSE", "true").lower() in ("1", "true", "yes")

# Output paths
OUTPUT_DIR = "output"
CSV_DIR = "output/csv"
JSON_DIR = "output/json"
MARKDOWN_DIR = "output/markdown"
PDF_DIR = "output/pdf"
