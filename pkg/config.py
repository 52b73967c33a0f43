# FracPot/config.py

import os

# --- Tool Identity ---
TOOL_NAME = "fracpot"
TOOL_VERSION = "0.3.0"

# --- Run Defaults ---
# Seed used when neither the run document nor --seed provides one
DEFAULT_SEED = 0

# Default walk budget per estimate
DEFAULT_WALKS = 10_000

# Worker count comes from --workers, then this variable, then os.cpu_count()
WORKERS_ENV_VAR = "FRACPOT_WORKERS"

# Walks are handed to the pool in fixed-size chunks so that results never
# depend on how many workers ran them
WALK_CHUNK_SIZE = 2048


def default_workers() -> int:
    """Worker count from the environment, falling back to available parallelism."""
    raw = os.environ.get(WORKERS_ENV_VAR)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


# --- Walk-on-Spheres Settings ---
WALK_SHRINK = 1.0
WALK_MAX_STEPS = 1_000_000
WALK_MIN_RADIUS = 1e-12

# Estimates whose censored fraction exceeds this are flagged unhealthy
CENSORED_CEILING = 1e-3

# Green estimates with stderr/mean above this get a high-variance warning
GREEN_VARIANCE_WARNING = 1.0

# --- Quadrature Settings ---
QUAD_MAX_PANELS = 2 ** 14
QUAD_DEFAULT_TOL = 1e-10

# --- Divergence Test Settings ---
DIVERGENCE_FINITE_TOL = 1e-4
DIVERGENCE_RATIO_THRESHOLD = 0.5
DIVERGENCE_MIN_CUTOFFS = 4
DIVERGENCE_DEFAULT_DEPTH = 40

# --- Accessibility Classification ---
SHELL_COUNT = 10
SHELL_POINTS = 64
SHELL_WALKS = 200
SHELL_FINITE_TOL = 0.05

# Infinity test: budgets double this many times from the starting budget
INFINITY_BUDGET_LEVELS = 4
INFINITY_MAX_STEPS = 400
INFINITY_CENSOR_ACCESSIBLE = 0.05
INFINITY_SLOPE_THRESHOLD = 0.25

# --- Martin Kernel ---
MARTIN_STABLE_RELATIVE_ERROR = 0.05

# --- Audit Tolerances ---
KELVIN_GREEN_TOL = 1e-9
KELVIN_EXIT_TIME_TOL = 1e-6
BHP_FINITE_CEILING = 1e6
BHP_STABILITY_SIGMAS = 2.0
FACTORIZATION_CEILING = 1e3
MARKOV_SIGMAS = 3.0

# --- Selftest Budgets ---
SELFTEST_WALKS = 20_000
SELFTEST_SEED = 20240601

# --- Output Templates ---
CSV_COMMENT_PREFIX = "# "
SOLVE_COLUMNS = ["x", "mean", "stderr", "n", "censored_fraction"]
PKERNEL_COLUMNS = ["x", "y", "mean", "stderr", "n", "censored_fraction"]
GREEN_COLUMNS = ["x", "v", "mean", "stderr", "n", "censored_fraction"]
MARTIN_COLUMNS = ["radius", "ratio", "stderr", "n"]
AUDIT_COLUMNS = ["configuration", "lhs", "rhs", "ratio"]

# --- Exit Codes ---
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNHEALTHY = 2
EXIT_UNDETERMINED = 3
