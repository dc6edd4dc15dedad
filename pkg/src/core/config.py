"""
Configuration constants for the MML toolkit.

This module stores the numerical thresholds, tolerances and runtime defaults
so that every method reads them from a single source of truth.
"""

import os

import toml

from src.core.errors import ConfigError

# Scalar Mittag-Leffler evaluation
SERIES_RADIUS = 5.0  # |z| below which the power series is summed
SERIES_MAX_GROWTH = 40.0  # cap on |z|^(1/alpha) for the series regime
SERIES_FLOAT_RADIUS = 1.0  # |z| below which plain float64 summation is exact enough
SERIES_GUARD_DIGITS = 25  # extra decimal digits carried by the mpmath accumulation
SERIES_MAX_TERMS = 20_000
SERIES_SETTLE_GROWTH = 700.0  # largest |z|^(1/alpha) for which the series may arbitrate
ASYMPTOTIC_THRESHOLD = -50.0  # real z at or below which the asymptotic expansion is used
ASYMPTOTIC_MAX_TERMS = 400
QUAD_EPSREL = 1e-12
QUAD_EPSABS = 1e-300
QUAD_LIMIT = 400
RAY_GUARD = 1e-9  # distance in arg(z) from the ray |arg z| = alpha*pi treated as on-ray
ML_CACHE_SIZE = 1 << 16

# Matrix functions
SPECTRAL_COND_MAX = 1e8  # eigendecomposition fast path below this condition estimate
PARLETT_ERR_MAX = 1e-10  # accepted Schur-Parlett error estimate
CONTOUR_MIN_NODES = 64
CONTOUR_MAX_NODES = 4096
CONTOUR_TOL = 1e-10
SERIES_CHECK_NORM = 1.0  # 1-norm at or below which the matrix series cross-check runs
SERIES_CHECK_TOL = 1e-8

# Representations
SUBINTENSITY_TOL = 1e-12  # slack on sign and row-sum checks
BALANCE_TOL = 1e-12  # -C e = D e for feed-forward blocks
DOUBLY_STOCHASTIC_TOL = 1e-12
ZERO_REWARD_RTOL = 1e-14  # (Rw)_i <= tol * max(Rw) marks a zero-reward state

# Heavy-tail quadrature
TAIL_SPLIT_FACTOR = 50.0  # X = factor * scale^(-1/alpha)
TAIL_SPLIT_Z = 1e3  # minimum |z| at the split point so the first tail term dominates
LOG_QUAD_NODES = 96
LOG_QUAD_FLOOR = 1e-10
JOINT_LAPLACE_CUTOFF = 80.0  # upper limit of damped transform quadrature

# Power transform series
WRIGHT_MAX_TERMS = 400
WRIGHT_TOL = 1e-14
WRIGHT_ASYMPTOTIC_TOL = 1e-8  # accepted smallest term of an optimally truncated divergent series

# Sampling
DEFAULT_SEED = 20240521
RNG_ALGORITHM = "philox"
SAMPLE_CHUNK_SIZE = 8192  # rows per independently seeded chunk
STABLE_UNIFORM_GUARD = 1e-15
MAX_JUMPS = 1_000_000  # safety cap on embedded-chain steps per chunk
DEFAULT_THREADS = os.cpu_count() or 4  # Parallel workers for batch jobs
MOMENT_DRAWS = 100_000  # Monte Carlo column of the moments table
PEARSON_MC_TOLERANCE = 0.08  # sample correlation of heavy-tailed figure models
KS_TABLE_NODES = 512  # knots of the tabulated CDF in KS comparisons
KS_LEVEL = 0.99

# Output
CSV_SEPARATOR = ","
CSV_LINE_TERMINATOR = "\n"
CSV_COMMENT = "#"
SUMMARY_FILENAME = "summary.json"
DENSITY_FILENAME = "density.csv"
SAMPLES_FILENAME = "samples.csv"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_MODEL = 3

# Validation suite tolerances (overridable through the environment)
TOLERANCE_ENV_VAR = "MML_TOOLKIT_TOLERANCES"
TOLERANCES = {
    "ml_regime_overlap": 1e-8,
    "ml_exp_agreement": 1e-10,
    "ml_jordan_series": 1e-8,
    "ml_closed_form": 1e-10,
    "fractional_power_composition": 1e-9,
    "ml_functional_calculus": 1e-9,  # residual over 1 + cond(V)
    "ml_semigroup": 1e-10,
    "semigroup": 1e-10,
    "laplace_density_duality": 1e-6,
    "ff_marginalization": 1e-5,
    "alpha_one_collapse": 1e-10,
    "projection_identity": 1e-10,
    "joint_laplace_duality": 1e-3,
    "transform_factorization": 1e-12,
    "green_matrix": 1e-3,
    "tail_regular_variation": 1e-2,
    "figure_correlation": 1e-2,
    "figure_log_correlation": 1e-1,
    "ff_marginal_sum": 1e-12,
    "eigen_residual": 1e-10,
    "orderstat_equivalence": 1e-9,
    "density_normalization": 1e-3,
    "stable_ks": 1.0,  # KS statistic over its 1% critical value
    "ks_marginal": 1.0,
    "monte_carlo_se": 3.0,  # deviation in standard errors
    "tail_independence": 0.15,
}


def tolerances() -> dict[str, float]:
    """
    Returns the tolerance table with environment overrides applied.

    The environment variable holds a TOML document such as
    ``green_matrix = 1e-4``. Overrides are only meant for the validation suite.

    Returns:
        dict[str, float]: A fresh copy of the effective tolerance table.

    Raises:
        ConfigError: If the override cannot be parsed or names an unknown check.
    """
    table = dict(TOLERANCES)
    raw = os.environ.get(TOLERANCE_ENV_VAR, "").strip()
    if not raw:
        return table

    try:
        overrides = toml.loads(raw)
    except toml.TomlDecodeError as e:
        raise ConfigError(f"{TOLERANCE_ENV_VAR} is not valid TOML: {e}") from e

    for key, value in overrides.items():
        if key not in table:
            raise ConfigError(f"{TOLERANCE_ENV_VAR}: unknown tolerance '{key}'")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{TOLERANCE_ENV_VAR}: '{key}' must be a number")
        table[key] = float(value)
    return table
