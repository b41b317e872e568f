"""
Configuration constants for the random-effects generalized Gamma fit.
"""

# --- Convergence ---
TOLERANCE = 1e-6
MAX_ITERATIONS = 200
ASCENT_SLACK = 1e-9

# --- Initialization ---
INIT_NU = -1.0
INIT_TAU = 0.1

# --- Bounds ---
# nu is searched on each side of zero separately; the density is undefined at nu = 0
NU_MIN = 0.02
NU_MAX = 25.0
TAU_MIN = 1e-6
TAU_MAX = 10.0

# --- Scale Intercept Correction ---
# Newton solve for the conditional modes of the heat effects
MODE_TOLERANCE = 1e-12
MODE_MAX_STEPS = 100
MODE_MAX_STEP = 0.5
# Initial half-width of the bracket searched for the corrected intercept
INTERCEPT_BRACKET = 0.05

# --- Residuals ---
RESIDUAL_CLAMP = 1e-12
PLOTTING_OFFSET = 0.375
FILLIBEN_CUTOFF = 0.99

# --- Simulation ---
# Shard size is part of the seed derivation: changing it changes the draws.
SHARD_SIZE = 1_000_000

# --- Density Overlay ---
HIST_BIN_WIDTH = 0.005
DENSITY_GRID_POINTS = 512
DENSITY_DRAWS = 1_000_000
