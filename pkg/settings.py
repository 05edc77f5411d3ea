"""
Numerical defaults and optional environment overrides.

Nothing here is required: every field has a default, and any DELTAPRIME_*
variable (from the shell or a local .env file) replaces it.
"""

import os
import logging
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "DELTAPRIME_"


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances, grids and defaults shared by every module"""
    # kernels / delta arrays
    resonance_tol: float = 1e-9
    singular_gamma_tol: float = 1e-12
    singular_u_tol: float = 1e-12
    # spectra
    root_grid_points: int = 512
    kappa_min: float = 1e-3
    kappa_max: float = 10.0
    root_rtol: float = 1e-12
    a0_grid_points: int = 40
    a0_grid_min: float = 1e-4
    a0_grid_cap: float = 0.5
    # series
    series_order: int = 6
    series_zero_rtol: float = 1e-12
    # convergence
    hs_box_factor: float = 12.0
    hs_points: int = 240
    gauss_order: int = 8
    power_max_iter: int = 10_000
    power_rtol: float = 1e-6
    rate_window: Tuple[float, float] = (0.7, 1.3)
    deltaprime_rate_window: Tuple[float, float] = (0.4, 1.3)
    # potentials / schrodinger
    cells_per_bump: int = 16
    gauss_cutoff: float = 6.0
    form_min_samples: int = 32
    wronskian_rtol: float = 1e-8
    eigenvalue_tol: float = 1e-13
    max_log_growth: float = 700.0
    # execution
    threads: int = 1
    log_level: str = "WARNING"

    @property
    def series_resonance_tol(self) -> float:
        """Smallest |2 + beta kappa| at which a leading jet coefficient survives series_zero_rtol"""
        return 1e6 * self.series_zero_rtol


def _coerce(raw: str, current: Any) -> Any:
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(float(raw))
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        lo, hi = raw.split(",")
        return (float(lo), float(hi))
    return raw


def load_numerics_config(env_file: Optional[str] = None) -> NumericsConfig:
    """Load defaults, then apply DELTAPRIME_* overrides from the environment"""
    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()

    base = NumericsConfig()
    overrides: Dict[str, Any] = {}
    for f in fields(NumericsConfig):
        raw = os.getenv(ENV_PREFIX + f.name.upper())
        if raw is None:
            continue
        try:
            overrides[f.name] = _coerce(raw, getattr(base, f.name))
        except ValueError as e:
            logger.warning(f"Ignoring malformed {ENV_PREFIX}{f.name.upper()}={raw!r}: {e}")

    if overrides:
        logger.info(f"Numerics overrides from environment: {sorted(overrides)}")
    return replace(base, **overrides)


# modules bind this at import, so overrides must be in place before then
DEFAULTS = load_numerics_config()
