"""
Configuration constants for tail probabilities and barrier inversion.
"""

# --- Defaults ---
DEFAULT_THRESHOLDS = (0.08, 0.09, 0.10)
DEFAULT_TARGETS = (1e-2, 1e-3, 1e-4)
DEFAULT_DRAWS = 10_000_000

# --- Preconditions ---
MIN_DRAWS = 100_000
# invert_barrier needs at least this many draws below the barrier
MIN_TAIL_COUNT = 100

# --- Reporting ---
BARRIER_DECIMALS = 3
# 95% upper bound on p when no draw falls below t
ZERO_COUNT_BOUND = 3.0
