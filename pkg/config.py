"""
Configuration settings for the uepframe toolkit.

This module loads configuration from environment variables (.env file or system env).
Every tolerance, grid size and solver default used by the library is defined here so
that runs can be tuned without code changes.
"""

import os
from pathlib import Path

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv

    script_env = Path(__file__).parent / ".env"
    if script_env.exists():
        load_dotenv(script_env)
except ImportError:
    # python-dotenv not available, will use system environment only
    pass


def _safe_int(key: str, default: int, min_val: int = None, max_val: int = None) -> int:
    raw = os.getenv(key)
    if raw is None:
        return default
    try:
        val = int(raw)
        if min_val is not None:
            val = max(min_val, val)
        if max_val is not None:
            val = min(max_val, val)
        return val
    except (ValueError, TypeError):
        return default

def _safe_float(key: str, default: float, min_val: float = None, max_val: float = None) -> float:
    raw = os.getenv(key)
    if raw is None:
        return default
    try:
        val = float(raw)
        if min_val is not None:
            val = max(min_val, val)
        if max_val is not None:
            val = min(max_val, val)
        return val
    except (ValueError, TypeError):
        return default

def _safe_bool(key: str, default: bool) -> bool:
    raw = os.getenv(key)
    if raw is None:
        return default
    return raw.lower() in ("true", "1", "yes")


# =============================================================================
# Laurent Polynomial Arithmetic
# =============================================================================

# Stored coefficients below this magnitude are swept after every operation
LAURENT_DROP_TOLERANCE = _safe_float("LAURENT_DROP_TOLERANCE", 1e-14, min_val=0.0, max_val=1e-6)

# Products switch to FFT convolution once the number of term pairs exceeds
# DENSE_PRODUCT_RATIO times the volume of the result's bounding box
DENSE_PRODUCT_RATIO = _safe_int("DENSE_PRODUCT_RATIO", 4, min_val=1, max_val=1024)
DENSE_PRODUCT_MAX_VOLUME = _safe_int("DENSE_PRODUCT_MAX_VOLUME", 1 << 24, min_val=1, max_val=1 << 28)


# =============================================================================
# Dilation Lattice and Masks
# =============================================================================

LATTICE_ANGLE_TOLERANCE = _safe_float("LATTICE_ANGLE_TOLERANCE", 1e-12, min_val=0.0, max_val=1e-3)

# |p(1) - 1| allowed for masks built without the unnormalized flag
MASK_NORMALIZATION_TOLERANCE = _safe_float("MASK_NORMALIZATION_TOLERANCE", 1e-10, min_val=0.0, max_val=1e-2)


# =============================================================================
# Verification
# =============================================================================

UEP_TOLERANCE = _safe_float("UEP_TOLERANCE", 1e-9, min_val=0.0, max_val=1.0)

# Sub-QMF grid resolution per axis, chosen by mask dimension
SUBQMF_GRID_POINTS_LOW_DIM = _safe_int("SUBQMF_GRID_POINTS_LOW_DIM", 64, min_val=2, max_val=4096)
SUBQMF_GRID_POINTS_3D = _safe_int("SUBQMF_GRID_POINTS_3D", 32, min_val=2, max_val=512)
SUBQMF_GRID_POINTS_HIGH_DIM = _safe_int("SUBQMF_GRID_POINTS_HIGH_DIM", 12, min_val=2, max_val=64)
SUBQMF_IMAG_TOLERANCE = _safe_float("SUBQMF_IMAG_TOLERANCE", 1e-10, min_val=0.0, max_val=1.0)

# Zero conditions: |D^mu p(sigma)| <= tol * max(1, sum |p(alpha)| |alpha^mu|)
SUM_RULES_TOLERANCE = _safe_float("SUM_RULES_TOLERANCE", 1e-9, min_val=0.0, max_val=1e-2)
SUM_RULES_MAX_ORDER = _safe_int("SUM_RULES_MAX_ORDER", 8, min_val=1, max_val=32)


# =============================================================================
# Frame Construction
# =============================================================================

GENERATOR_PRUNE_TOLERANCE = _safe_float("GENERATOR_PRUNE_TOLERANCE", 1e-13, min_val=0.0, max_val=1e-3)
SOS_TOLERANCE = _safe_float("SOS_TOLERANCE", 1e-9, min_val=0.0, max_val=1e-2)

# Dykstra alternating projections
SDP_MAX_ITERATIONS = _safe_int("SDP_MAX_ITERATIONS", 20000, min_val=1, max_val=10_000_000)
SDP_RESIDUAL_TOL = _safe_float("SDP_RESIDUAL_TOL", 1e-10, min_val=1e-16, max_val=1e-2)
SDP_RANK_TOL = _safe_float("SDP_RANK_TOL", 1e-9, min_val=0.0, max_val=1.0)
SDP_STALL_WINDOW = _safe_int("SDP_STALL_WINDOW", 500, min_val=1, max_val=1_000_000)
SDP_VERIFY_TOLERANCE = _safe_float("SDP_VERIFY_TOLERANCE", 1e-8, min_val=0.0, max_val=1.0)

# Bounding-box dilation used by the single retry after a stalled solve
SDP_SUPPORT_DILATION = _safe_int("SDP_SUPPORT_DILATION", 1, min_val=1, max_val=8)

# Gauss-Newton refinement of a low-rank factor when Dykstra stops short of the
# residual tolerance; skipped above SDP_POLISH_MAX_UNKNOWNS real unknowns
SDP_POLISH_ENABLED = _safe_bool("SDP_POLISH_ENABLED", True)
SDP_POLISH_MAX_STEPS = _safe_int("SDP_POLISH_MAX_STEPS", 60, min_val=1, max_val=10_000)
SDP_POLISH_MAX_UNKNOWNS = _safe_int("SDP_POLISH_MAX_UNKNOWNS", 4096, min_val=1, max_val=1 << 20)


# =============================================================================
# Existence Analysis
# =============================================================================

ZERO_CANDIDATE_FACTOR = _safe_float("ZERO_CANDIDATE_FACTOR", 100.0, min_val=1.0, max_val=1e6)
ZERO_LOCAL_MIN_THRESHOLD = _safe_float("ZERO_LOCAL_MIN_THRESHOLD", 1e-3, min_val=0.0, max_val=1.0)
ZERO_NEWTON_MAX_STEPS = _safe_int("ZERO_NEWTON_MAX_STEPS", 50, min_val=1, max_val=1000)
ZERO_DEDUP_RADIUS = _safe_float("ZERO_DEDUP_RADIUS", 1e-6, min_val=0.0, max_val=1.0)
HESSIAN_POSITIVE_THRESHOLD = _safe_float("HESSIAN_POSITIVE_THRESHOLD", 1e-8, min_val=0.0, max_val=1.0)


# =============================================================================
# Logging Configuration
# =============================================================================

LOGGING_ENABLED = _safe_bool("LOGGING_ENABLED", True)
LOGGING_LEVEL = os.getenv("LOGGING_LEVEL", "INFO").upper()
LOGGING_CONSOLE = _safe_bool("LOGGING_CONSOLE", True)
LOGGING_TO_FILE = _safe_bool("LOGGING_TO_FILE", False)
LOGGING_FILE = os.getenv("LOGGING_FILE", "logs/uepframe.log")
# Keep every digit of floats in log lines (residual dumps are shortened otherwise)
LOG_FULL_PRECISION = _safe_bool("LOG_FULL_PRECISION", False)


# =============================================================================
# File Formats
# =============================================================================

FORMAT_VERSION = "uepframe/1"
JSON_INDENT = _safe_int("JSON_INDENT", 2, min_val=0, max_val=8)
