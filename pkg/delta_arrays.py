"""
Krein-formula resolvents for finite arrays of delta interactions.

The Cheon-Shigehara triple {2/beta - 1/a, beta/a^2, 2/beta - 1/a} placed at
{y-a, y, y+a} converges to a delta-prime interaction of strength beta; scaling
all three couplings by alpha != 1 sends it to the Dirichlet-decoupled line.
"""

import math
import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from errors import DegenerateCoupling, InvalidParameter, SingularGamma, SingularU
from kernels import KernelValue, SpectralPoint, free_values
from settings import DEFAULTS

logger = logging.getLogger(__name__)

ARRAY = "delta-array"


@dataclass(frozen=True)
class CouplingConfig:
    """delta-prime strength beta, spacing a, disbalance alpha, center y"""
    beta: float
    a: float
    alpha: float = 1.0
    y: float = 0.0

    def __post_init__(self):
        for name in ("beta", "a", "alpha", "y"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameter(f"{name} must be finite, got {getattr(self, name)}")
        if self.beta == 0:
            raise InvalidParameter("beta must be nonzero")
        if self.a <= 0:
            raise InvalidParameter(f"spacing a must be positive, got {self.a}")
        if self.alpha == 0:
            raise InvalidParameter("alpha must be nonzero")

    def with_spacing(self, a: float) -> "CouplingConfig":
        return CouplingConfig(beta=self.beta, a=a, alpha=self.alpha, y=self.y)


@dataclass(frozen=True)
class DeltaArray:
    couplings: Tuple[float, ...]
    centers: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(c) for c in self.couplings))
        object.__setattr__(self, "centers", tuple(float(y) for y in self.centers))
        if len(self.couplings) != len(self.centers):
            raise InvalidParameter(
                f"{len(self.couplings)} couplings for {len(self.centers)} centers"
            )
        if any(c == 0 or not math.isfinite(c) for c in self.couplings):
            raise InvalidParameter(f"couplings must be nonzero and finite: {self.couplings}")
        if any(not math.isfinite(y) for y in self.centers):
            raise InvalidParameter(f"centers must be finite: {self.centers}")
        if any(b <= a for a, b in zip(self.centers, self.centers[1:])):
            raise InvalidParameter(f"centers must be strictly increasing: {self.centers}")

    def __len__(self) -> int:
        return len(self.centers)


@dataclass(eq=False)
class GammaMatrix:
    """Gamma_{jj'} = delta_{jj'}/alpha_j + G(y_j - y_j'), 1/(2 kappa) included"""
    entries: np.ndarray
    kappa: SpectralPoint

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class UVW:
    u: float
    v: float
    w: float


# ---------------------------------------------------------------- couplings

def _outer_coupling(beta: float, a: float) -> float:
    outer = 2.0 / beta - 1.0 / a
    if math.isclose(2.0 / beta, 1.0 / a, rel_tol=1e-12):
        raise DegenerateCoupling(
            f"outer coupling 2/beta - 1/a vanishes at beta={beta}, a={a} (a = beta/2)"
        )
    return outer


def cs_couplings(cfg: CouplingConfig) -> DeltaArray:
    """Cheon-Shigehara triple at {y-a, y, y+a}, every coupling scaled by alpha"""
    outer = cfg.alpha * _outer_coupling(cfg.beta, cfg.a)
    center = cfg.alpha * cfg.beta / cfg.a ** 2
    return DeltaArray(
        couplings=(outer, center, outer),
        centers=(cfg.y - cfg.a, cfg.y, cfg.y + cfg.a),
    )


def cs_couplings_perturbed(cfg: CouplingConfig, phi0: float, phi1: float) -> DeltaArray:
    """
    Triple with corrected couplings 2/beta - 1/a + phi1 (outer) and
    beta/a^2 (1 + phi0) (center).

    phi0 and phi1 are the caller's values of smooth O(a) corrections at cfg.a;
    their smallness is a caller contract and is not checked.
    """
    outer = _outer_coupling(cfg.beta, cfg.a) + phi1
    center = cfg.beta / cfg.a ** 2 * (1.0 + phi0)
    if outer == 0 or center == 0:
        raise DegenerateCoupling(f"perturbed coupling vanishes (outer={outer}, center={center})")
    return DeltaArray(
        couplings=(cfg.alpha * outer, cfg.alpha * center, cfg.alpha * outer),
        centers=(cfg.y - cfg.a, cfg.y, cfg.y + cfg.a),
    )


def uvw_values(beta: float, a: float, kappa: float) -> UVW:
    """u = 2 beta kappa a/(2a - beta), v = 2 kappa a^2/beta, w = e^{-kappa a}; a = 0 allowed"""
    denom = 2.0 * a - beta
    if abs(denom) < DEFAULTS.singular_u_tol * (abs(beta) + 2.0 * abs(a)):
        raise SingularU(f"2a - beta = {denom:.3e} vanishes at a={a}, beta={beta}")
    return UVW(
        u=2.0 * beta * kappa * a / denom,
        v=2.0 * kappa * a ** 2 / beta,
        w=math.exp(-kappa * a),
    )


def uvw(cfg: CouplingConfig, s: SpectralPoint) -> UVW:
    return uvw_values(cfg.beta, cfg.a, s.kappa)


# ---------------------------------------------------------------- Gamma

def gamma_matrix(arr: DeltaArray, s: SpectralPoint) -> GammaMatrix:
    centers = np.asarray(arr.centers, dtype=float)
    entries = free_values(s.kappa, centers[:, None], centers[None, :])
    entries = entries + np.diag(1.0 / np.asarray(arr.couplings, dtype=float))
    return GammaMatrix(entries=entries, kappa=s)


def gamma_from_uvw(p: UVW, s: SpectralPoint, scale: float = 1.0) -> GammaMatrix:
    """
    (1/2kappa) [[1+su, w, w^2], [w, 1+sv, w], [w^2, w, 1+su]] with s = scale.

    For the triple with couplings alpha * A this is reproduced by scale = 1/alpha,
    since the diagonal 1/(alpha alpha_j) = u/(2 kappa alpha).
    """
    u, v, w = scale * p.u, scale * p.v, p.w
    core = np.array([
        [1.0 + u, w, w * w],
        [w, 1.0 + v, w],
        [w * w, w, 1.0 + u],
    ])
    return GammaMatrix(entries=core / (2.0 * s.kappa), kappa=s)


def secular_factors(p: UVW, scale: float = 1.0) -> Tuple[float, float]:
    """
    F1 = w^2 - 1 - su and F2 = (1+su)(1+sv) - w^2 (1-sv).

    det of the bracketed 3x3 core is -F1*F2; both factors are pole-free in kappa.
    """
    u, v, w2 = scale * p.u, scale * p.v, p.w * p.w
    f1 = w2 - 1.0 - u
    f2 = (1.0 + u) * (1.0 + v) - w2 * (1.0 - v)
    return f1, f2


def _closed_form_adjugate(p: UVW, scale: float) -> np.ndarray:
    u, v, w = scale * p.u, scale * p.v, p.w
    w2 = w * w
    corner = w2 - (1.0 + u) * (1.0 + v)
    edge = -w * (w2 - 1.0 - u)
    center = (w2 + 1.0 + u) * (w2 - 1.0 - u)
    return np.array([
        [corner, edge, w2 * v],
        [edge, center, edge],
        [w2 * v, edge, corner],
    ])


def gamma_inverse_closed_form(cfg: CouplingConfig, s: SpectralPoint) -> GammaMatrix:
    """Explicit inverse M/D of the triple's Gamma, D = F1 F2/(2 kappa)"""
    p = uvw(cfg, s)
    scale = 1.0 / cfg.alpha
    f1, f2 = secular_factors(p, scale)
    d = f1 * f2 / (2.0 * s.kappa)
    if d == 0:
        raise SingularGamma(f"closed-form denominator vanishes at kappa={s.kappa}, cfg={cfg}")
    return GammaMatrix(entries=_closed_form_adjugate(p, scale) / d, kappa=s)


def gamma_inverse(gm: GammaMatrix) -> GammaMatrix:
    """
    Inverse through dense LU with partial pivoting.

    Raises SingularGamma when the smallest LU pivot falls below tol times the
    largest, i.e. -kappa^2 is numerically an eigenvalue of the array operator.
    det Gamma of a triple goes like a^4 even when well conditioned.
    """
    n = gm.size
    if n == 0:
        return GammaMatrix(entries=np.zeros((0, 0)), kappa=gm.kappa)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(gm.entries, check_finite=True)
    pivots = np.abs(np.diag(lu))
    spread = float(pivots.min() / pivots.max()) if pivots.max() > 0 else 0.0
    if not spread >= DEFAULTS.singular_gamma_tol:
        raise SingularGamma(
            f"LU pivot ratio {spread:.3e} at kappa={gm.kappa.kappa}: "
            f"-kappa^2 is an eigenvalue of the array operator"
        )
    inv = lu_solve((lu, piv), np.eye(n))
    return GammaMatrix(entries=0.5 * (inv + inv.T), kappa=gm.kappa)


def gamma_determinant(gm: GammaMatrix) -> float:
    return float(np.linalg.det(gm.entries))


# ---------------------------------------------------------------- kernels

def array_values(arr: DeltaArray, kappa: float, x, xp,
                 gamma_inv: Optional[np.ndarray] = None):
    """Krein kernel G(x-x') - sum_jj' [Gamma^-1]_jj' G(x-y_j) G(x'-y_j'), broadcasting"""
    base = free_values(kappa, x, xp)
    if len(arr) == 0:
        return base
    if gamma_inv is None:
        gamma_inv = gamma_inverse(gamma_matrix(arr, SpectralPoint(kappa))).entries
    centers = np.asarray(arr.centers)
    gx = free_values(kappa, np.asarray(x, dtype=float)[..., None], centers)
    gxp = free_values(kappa, np.asarray(xp, dtype=float)[..., None], centers)
    correction = np.einsum("...j,jk,...k->...", gx, gamma_inv, gxp)
    return base - correction


def array_resolvent_kernel(arr: DeltaArray, s: SpectralPoint, x: float, xp: float) -> KernelValue:
    return KernelValue(float(array_values(arr, s.kappa, x, xp)), ARRAY)


# ---------------------------------------------------------------- limits

OUTER = "outer"
MIXED = "mixed"


def lim_kern_coefficient(beta: float, kappa: float, region: str = OUTER) -> float:
    """
    a -> 0 limit of the sandwich (1/4kappa^2) N/D multiplying e^{-kappa|x|} e^{-kappa|x'|}.

    -beta/(2(2 + beta kappa)) when x, x' lie on the same side, the opposite sign
    when they straddle the triple.
    """
    c = -beta / (2.0 * (2.0 + beta * kappa))
    if region == OUTER:
        return c
    if region == MIXED:
        return -c
    raise InvalidParameter(f"region must be '{OUTER}' or '{MIXED}', got {region!r}")


def dirichlet_limit_coefficient(kappa: float) -> float:
    """Limit of the same-side sandwich for alpha not in {0, 1}: N/D -> 2 kappa"""
    return 1.0 / (2.0 * kappa)
