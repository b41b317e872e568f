"""
Configuration constants for the clustered rank-sum test.
"""

# --- Permutation Engine ---
# Batch size is part of the seed derivation: changing it changes the draws.
PERMUTATION_BATCH = 5000
DEFAULT_PERMUTATIONS = 1_000_000

# Null moments for the asymptotic mode
MOMENT_PERMUTATIONS = 100_000
MIN_MOMENT_PERMUTATIONS = 10_000
MOMENT_METHODS = ('sampled', 'exact')

# Relative slack when comparing |S_b - E| against |S_obs - E|
TIE_TOLERANCE = 1e-12
