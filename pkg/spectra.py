"""
Bound states of the Cheon-Shigehara triple from its secular equations, and
the operational spectral threshold a0(kappa).

Roots are located on the pole-free factors F1, F2 of det Gamma (see
delta_arrays.secular_factors): a sign-change scan on a log-spaced kappa grid
followed by Brent refinement.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from delta_arrays import (
    CouplingConfig, cs_couplings, gamma_determinant, gamma_matrix,
    secular_factors, uvw_values,
)
from errors import (
    DegenerateCoupling, InvalidParameter, SingularU, ThresholdNotFound,
)
from kernels import SpectralPoint
from settings import DEFAULTS

logger = logging.getLogger(__name__)

SPEC1 = "spec1"
SPEC2 = "spec2"


@dataclass(frozen=True)
class BoundState:
    kappa_star: float
    energy: float
    branch: str


def secular_residuals(cfg: CouplingConfig, s: SpectralPoint) -> Tuple[float, float]:
    """
    LHS - RHS of e^{-2 kappa a} = 1 + u and e^{-2 kappa a} = (1+u)(1+v)/(1-v).

    For alpha != 1 the couplings alpha*A enter through u/alpha, v/alpha, which
    is the same as evaluating u and v at kappa/alpha.
    """
    p = uvw_values(cfg.beta, cfg.a, s.kappa)
    scale = 1.0 / cfg.alpha
    u, v = scale * p.u, scale * p.v
    lhs = math.exp(-2.0 * s.kappa * cfg.a)
    if abs(1.0 - v) < DEFAULTS.singular_u_tol:
        raise SingularU(f"1 - v vanishes at kappa={s.kappa}, cfg={cfg}")
    r1 = lhs - (1.0 + u)
    r2 = lhs - (1.0 + u) * (1.0 + v) / (1.0 - v)
    return r1, r2


def _factor(cfg: CouplingConfig, branch: str, kappa: float) -> float:
    f1, f2 = secular_factors(uvw_values(cfg.beta, cfg.a, kappa), 1.0 / cfg.alpha)
    return f1 if branch == SPEC1 else f2


def _factors_on_grid(cfg: CouplingConfig, kappas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scale = 1.0 / cfg.alpha
    a, beta = cfg.a, cfg.beta
    u = scale * 2.0 * beta * kappas * a / (2.0 * a - beta)
    v = scale * 2.0 * kappas * a ** 2 / beta
    w2 = np.exp(-2.0 * kappas * a)
    f1 = w2 - 1.0 - u
    f2 = (1.0 + u) * (1.0 + v) - w2 * (1.0 - v)
    return f1, f2


def kappa_grid(kappa_max: float, kappa_min: Optional[float] = None,
               points: Optional[int] = None) -> np.ndarray:
    kappa_min = DEFAULTS.kappa_min if kappa_min is None else kappa_min
    points = DEFAULTS.root_grid_points if points is None else points
    if not kappa_max > kappa_min:
        raise InvalidParameter(f"kappa_max={kappa_max} must exceed kappa_min={kappa_min}")
    return np.geomspace(kappa_min, kappa_max, points)


def find_bound_states(cfg: CouplingConfig, kappa_max: Optional[float] = None) -> List[BoundState]:
    """
    All zeros of det Gamma(i kappa) with kappa in (kappa_min, kappa_max].

    Deeper states (the central well alone binds near kappa = |beta|/(2a^2))
    lie outside the default window and are not reported.
    """
    kappa_max = DEFAULTS.kappa_max if kappa_max is None else kappa_max
    # validates a != beta/2 before scanning
    cs_couplings(cfg)
    uvw_values(cfg.beta, cfg.a, 1.0)

    grid = kappa_grid(kappa_max)
    f1, f2 = _factors_on_grid(cfg, grid)

    roots: List[BoundState] = []
    for branch, values in ((SPEC1, f1), (SPEC2, f2)):
        signs = np.sign(values)
        for i in range(len(grid) - 1):
            lo, hi = grid[i], grid[i + 1]
            if signs[i] == 0:
                kappa_star = lo
            elif signs[i] * signs[i + 1] < 0:
                kappa_star = brentq(
                    lambda k: _factor(cfg, branch, k), lo, hi,
                    xtol=1e-300, rtol=DEFAULTS.root_rtol, maxiter=500,
                )
            else:
                continue
            logger.debug(f"{branch} root at kappa={kappa_star:.12g} in [{lo:.4g}, {hi:.4g}]")
            roots.append(BoundState(kappa_star=float(kappa_star),
                                    energy=-float(kappa_star) ** 2, branch=branch))
        if signs[-1] == 0:
            roots.append(BoundState(kappa_star=float(grid[-1]),
                                    energy=-float(grid[-1]) ** 2, branch=branch))

    roots.sort(key=lambda b: b.kappa_star)
    deduped: List[BoundState] = []
    for b in roots:
        if deduped and math.isclose(b.kappa_star, deduped[-1].kappa_star, rel_tol=1e-9):
            continue
        deduped.append(b)

    logger.info(f"{len(deduped)} bound state(s) for {cfg} in (kappa_min, {kappa_max}]")
    return deduped


def a0_threshold(s: SpectralPoint, beta: float, alpha: float = 1.0,
                 kappa_max: Optional[float] = None) -> float:
    """
    Largest grid spacing a such that no bound state with kappa* >= kappa exists
    for any grid spacing a' <= a.

    The grid is geometric on [a0_grid_min, a0_grid_cap]; bound states are
    searched in [kappa, max(kappa_max, 4 kappa)].
    """
    if beta == 0:
        raise InvalidParameter("beta must be nonzero")
    if alpha == 1 and beta < 0 and s.kappa <= -2.0 / beta:
        raise ThresholdNotFound(
            f"kappa={s.kappa} <= -2/beta={-2.0 / beta}: the limiting delta-prime "
            f"eigenvalue lies below -kappa^2 for every small a"
        )

    window = max(DEFAULTS.kappa_max if kappa_max is None else kappa_max, 4.0 * s.kappa)
    grid = np.geomspace(DEFAULTS.a0_grid_min, DEFAULTS.a0_grid_cap, DEFAULTS.a0_grid_points)

    a0: Optional[float] = None
    for a in grid:
        cfg = CouplingConfig(beta=beta, a=float(a), alpha=alpha)
        try:
            states = find_bound_states(cfg, kappa_max=window)
        except (DegenerateCoupling, SingularU):
            # outer couplings vanish at a = beta/2; only the center delta remains
            center = alpha * beta / float(a) ** 2
            states = [] if center > 0 else [BoundState(kappa_star=-center / 2.0, energy=-(center / 2.0) ** 2,
                                                       branch="center")]
            logger.debug(f"degenerate spacing a={a}: single delta of strength {center:.4g}")
        if any(b.kappa_star >= s.kappa for b in states):
            break
        a0 = float(a)

    if a0 is None:
        raise ThresholdNotFound(
            f"bound state above kappa={s.kappa} already at a={grid[0]:.3g} "
            f"(beta={beta}, alpha={alpha})"
        )
    logger.info(f"a0(kappa={s.kappa}, beta={beta}, alpha={alpha}) = {a0:.6g}")
    return a0


def spectral_window_scan(cfg: CouplingConfig, kappas) -> pd.DataFrame:
    """det Gamma, F1, F2 and both secular residuals along a kappa grid"""
    rows = []
    for kappa in np.asarray(kappas, dtype=float):
        s = SpectralPoint(float(kappa))
        f1, f2 = secular_factors(uvw_values(cfg.beta, cfg.a, s.kappa), 1.0 / cfg.alpha)
        try:
            r1, r2 = secular_residuals(cfg, s)
        except SingularU:
            r1, r2 = float("nan"), float("nan")
        rows.append({
            "kappa": s.kappa,
            "det_gamma": gamma_determinant(gamma_matrix(cs_couplings(cfg), s)),
            "f1": f1,
            "f2": f2,
            "r1": r1,
            "r2": r2,
        })
    return pd.DataFrame(rows, columns=["kappa", "det_gamma", "f1", "f2", "r1", "r2"])
