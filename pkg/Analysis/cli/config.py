"""
Configuration constants for the command-line front end.
"""
import os

from clusrank.config import DEFAULT_PERMUTATIONS, MOMENT_PERMUTATIONS
from data_model.config import INPUT_FILE, EXCLUSIONS_FILE, PROJECT_ROOT
from remixfit.config import DENSITY_DRAWS
from tailsim.config import DEFAULT_DRAWS, DEFAULT_THRESHOLDS, DEFAULT_TARGETS

# --- Paths ---
DEFAULT_DATA_FILE = INPUT_FILE
DEFAULT_EXCLUSIONS_FILE = EXCLUSIONS_FILE
OUTPUT_DIR = os.path.join(PROJECT_ROOT, 'output')

# --- Reproducibility ---
# 17 July 2022, the date of the final in question
DEFAULT_SEED = 20220717

# --- Run Sizes ---
PERMUTATIONS = DEFAULT_PERMUTATIONS
MOMENT_DRAWS = MOMENT_PERMUTATIONS
DRAWS = DEFAULT_DRAWS
OVERLAY_DRAWS = DENSITY_DRAWS

# --quick preset
QUICK_PERMUTATIONS = 10_000
QUICK_DRAWS = 100_000

THRESHOLDS = DEFAULT_THRESHOLDS
TARGETS = DEFAULT_TARGETS

# --- Parallelism ---
# --workers is capped at one less than the CPU count
MAX_WORKERS = max(1, (os.cpu_count() or 2) - 1)

# --- Console ---
LOG_FORMAT = '[%(levelname)s] %(message)s'
CSV_FLOAT_FORMAT = '%.10g'
