"""Centralized configuration constants for the FAP channel toolkit. All
hardcoded numerical defaults should be defined here and imported where
needed.

The only environment state the toolkit reads is declared in this module.
None of it changes numerical results; it controls logging and how many
threads the Monte Carlo streams run on.
"""

import logging
import os

# =============================================================================
# ENVIRONMENT VALIDATION
# =============================================================================

# Global list to collect invalid environment variables
_invalid_env_vars: list[str] = []


def get_env(key: str, default: str, description: str | None = None) -> str:
    """Get an optional environment variable.

    Args:
        key: Environment variable name
        default: Value used when the variable is unset or empty
        description: Optional description for error messages

    Returns:
        Environment variable value or the default
    """
    value = os.getenv(key)
    if not value:
        return default
    return value


def get_env_int(key: str, default: int, description: str | None = None) -> int:
    """Get an optional environment variable as a positive integer or add to
    the invalid list.

    Args:
        key: Environment variable name
        default: Value used when the variable is unset or empty
        description: Optional description for error messages

    Returns:
        Environment variable value as integer, or the default
    """
    value = os.getenv(key)
    if not value:
        return default

    try:
        parsed = int(value)
    except ValueError:
        desc = f" ({description})" if description else ""
        _invalid_env_vars.append(f"  - {key}{desc} (invalid integer value: '{value}')")
        return default

    if parsed < 1:
        desc = f" ({description})" if description else ""
        _invalid_env_vars.append(f"  - {key}{desc} (must be >= 1, got {parsed})")
        return default
    return parsed


def validate_env() -> None:
    """Validate the declared environment variables.

    Raises ValueError listing every invalid variable if any are invalid.
    """
    if _invalid_env_vars:
        error_msg = "Invalid environment variables:\n" + "\n".join(_invalid_env_vars)
        error_msg += "\n\nUnset them or fix their values before running fapchan."
        raise ValueError(error_msg)


# =============================================================================
# RUNTIME ENVIRONMENT
# =============================================================================

FAPCHAN_ENV = get_env("FAPCHAN_ENV", "development", "Runtime environment (development/production)")
FAPCHAN_LOG_LEVEL = get_env("FAPCHAN_LOG_LEVEL", "", "Explicit log level name (overrides FAPCHAN_ENV)")
DEFAULT_WORKERS = os.cpu_count() or 1
FAPCHAN_WORKERS = get_env_int("FAPCHAN_WORKERS", DEFAULT_WORKERS, "Threads used for Monte Carlo streams")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def is_production() -> bool:
    """Check if running in production mode."""
    return os.getenv("FAPCHAN_ENV", FAPCHAN_ENV) == "production"


def resolve_log_level() -> int:
    """Log level for the entry point: explicit override, else by environment."""
    explicit = os.getenv("FAPCHAN_LOG_LEVEL", FAPCHAN_LOG_LEVEL).upper()
    if explicit:
        level = logging.getLevelName(explicit)
        if isinstance(level, int):
            return level
    return logging.ERROR if is_production() else logging.INFO


# =============================================================================
# SPECIAL FUNCTIONS
# =============================================================================

EULER_GAMMA = 0.57721566490153286061

# Ascending series below, continued fraction in between, asymptotic above
BESSEL_SERIES_SWITCH = 2.0
BESSEL_ASYMPTOTIC_SWITCH = 30.0
BESSEL_TARGET_RELATIVE_ERROR = 1e-10
BESSEL_MAX_TERMS = 500

# Integral-representation oracle
BESSEL_ORACLE_TAIL_EXPONENT = 45.0
BESSEL_ORACLE_RELATIVE_TOLERANCE = 1e-12
BESSEL_ORACLE_MAX_SUBDIVISIONS = 200

# =============================================================================
# ANALYTIC DENSITIES
# =============================================================================

# |v| r / sigma^2 below this uses the zero-drift limit branch
ZERO_DRIFT_THRESHOLD = 1e-8

# Exponent magnitude above which the drift factor is refused
MAX_EXPONENT = 700.0

# Quadrature defaults (relative, absolute, subdivisions)
DEFAULT_RELATIVE_TOLERANCE = 1e-10
DEFAULT_ABSOLUTE_TOLERANCE = 1e-14
DEFAULT_MAX_SUBDIVISIONS = 500

# Oracle integrals run on log-scaled integrands, so only relative error matters
ORACLE_RELATIVE_TOLERANCE = 1e-11
ORACLE_ABSOLUTE_TOLERANCE = 1e-300

# Half-line integrals use t = a + scale * e^u with u in [U_MIN, U_MAX]
HALF_LINE_U_MIN = -40.0
HALF_LINE_U_MAX = 40.0
HALF_LINE_PANEL_WIDTH = 2.0

# Full-line integrals use x = center + scale * tan(theta), split into panels
FULL_LINE_PANELS = 16

# Points of the tabulated arrival CDF
CDF_TABLE_POINTS = 801

# =============================================================================
# MONTE CARLO
# =============================================================================

DEFAULT_PARTICLE_COUNT = 100_000
DEFAULT_DT = 1e-3
DEFAULT_SEED = 7
DEFAULT_STREAMS = 8
# Default horizon in units of d^2 / sigma^2
DEFAULT_T_MAX_FACTOR = 200.0

# =============================================================================
# BOUNDARY VALUE PROBLEM
# =============================================================================

DEFAULT_GRID_HALF_WIDTH = 20.0
DEFAULT_GRID_HEIGHT = 8.0
DEFAULT_GRID_SPACING = 0.02
DEFAULT_SOLVER_TOLERANCE = 1e-10
DEFAULT_SOLVER_MAX_ITERATIONS = 20

# Boundary data below this is treated as outside the support
BOUNDARY_DECAY_LEVEL = 1e-12

# Largest |log rho| * n / 2 the spectral x1 transform accepts before the sparse direct fallback
SPECTRAL_SCALING_LIMIT = 12.0

# Spacing used by the bvp suite under --fast
FAST_GRID_SPACING = 0.1

# =============================================================================
# VALIDATION SUITES
# =============================================================================

SUITE_NAMES = ("bessel", "oracle2d", "oracle3d", "normalization", "montecarlo", "bvp")

# Divisor applied to Monte Carlo particle counts and grid resolution by --fast
FAST_SCALE = 10

FULL_TOLERANCES: dict[str, float] = {
    "bessel_rel_err": 1e-9,
    "derivative_rel_err": 1e-8,
    "oracle_rel_err": 1e-6,
    "old_method_rel_err": 1e-8,
    "normalization_abs_err": 1e-6,
    "limit_branch_rel_err": 1e-14,
    "limit_approach_rel_err": 1e-4,
    "generator_decay_ratio": 3.0,
    "ks_distance": 0.01,
    "chi2_p_value": 0.001,
    "absorbed_fraction_z": 4.0,
    "bvp_rel_err": 0.01,
    "bvp_convergence_ratio": 2.5,
}

# Wider only where the --fast scaling changes statistical or grid error
FAST_TOLERANCES: dict[str, float] = {
    **FULL_TOLERANCES,
    "ks_distance": 0.03,
    "bvp_rel_err": 0.05,
    "bvp_convergence_ratio": 2.0,
}

# =============================================================================
# OUTPUT
# =============================================================================

CLI_JSON_INDENT = 2
