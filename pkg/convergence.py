"""
Hilbert-Schmidt and operator-norm convergence studies.

Kernels are sampled on composite Gauss-Legendre panels over a box [c-L, c+L]
whose edges sit on every kernel feature, and the weighted matrix
B = W^1/2 K W^1/2 carries both norms: ||B||_F is the HS distance and the top
singular value (power iteration on B^T B) estimates the operator norm. The
exterior of the box is covered by an analytic bound on the e^{-kappa(|x|+|x'|)}
envelope.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import norm as matrix_norm

from delta_arrays import CouplingConfig, cs_couplings, gamma_inverse, gamma_matrix
from errors import InvalidParameter, PowerIterationStall, RegimeViolation
from kernel_models import DeltaArrayModel, DeltaPrime, Dirichlet, KernelModel, PotentialModel
from kernels import SpectralPoint, delta_prime_coefficient
from potentials import (
    PotentialShape, ScaledPotential, c_of_a, diff0_bound, parse_shape_spec, tau, tau_alpha,
    uniform_shapes,
)
from quadrature import clip_edges, gauss_legendre_panels, refine_edges
from settings import DEFAULTS

logger = logging.getLogger(__name__)


class StudyId(str, Enum):
    TRIPLE_TO_DELTAPRIME = "triple-to-deltaprime"
    ALPHA_TO_DIRICHLET = "alpha-to-dirichlet"
    POTENTIAL_TO_TRIPLE = "potential-to-triple"
    POTENTIAL_TO_DELTAPRIME = "potential-to-deltaprime"
    POTENTIAL_TO_DIRICHLET = "potential-to-dirichlet"

    @property
    def is_potential(self) -> bool:
        return self.value.startswith("potential-")


def parse_study_id(raw: str) -> StudyId:
    try:
        return StudyId(raw.strip().lower())
    except ValueError:
        known = ", ".join(s.value for s in StudyId)
        raise InvalidParameter(f"unknown study {raw!r}; expected one of {known}")


@dataclass
class StudyParams:
    beta: float = -1.0
    kappa: float = 4.0
    alpha: float = 1.0
    y: float = 0.0
    a_grid: Tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125, 0.00625)
    eps_grid: Tuple[float, ...] = (1e-4, 1e-6, 1e-8)
    rule_power: float = 1.0 / 16.0
    shape: Tuple[str, ...] = ("box:h=0.5",)
    box_half_width: Optional[float] = None
    points: Optional[int] = None
    threads: int = 1
    cells_per_bump: Optional[int] = None


def default_params(study_id: StudyId) -> StudyParams:
    """Recommended parameters for each study"""
    if study_id == StudyId.TRIPLE_TO_DELTAPRIME:
        return StudyParams(beta=-1.0, kappa=4.0)
    if study_id == StudyId.ALPHA_TO_DIRICHLET:
        return StudyParams(beta=-1.0, kappa=2.0, alpha=2.0)
    if study_id == StudyId.POTENTIAL_TO_DIRICHLET:
        return StudyParams(beta=-1.0, kappa=3.0, alpha=2.0, rule_power=0.1)
    if study_id == StudyId.POTENTIAL_TO_DELTAPRIME:
        # kappa in 3..12 gives distances that grow along the default eps grid
        return StudyParams(beta=-1.0, kappa=2.5, rule_power=1.0 / 16.0)
    return StudyParams(beta=-1.0, kappa=8.0, rule_power=1.0 / 16.0)


@dataclass(frozen=True)
class HSResult:
    value: float
    tail_bound: float
    nodes: int


@dataclass(frozen=True)
class ConvergenceRow:
    param: float
    hs_distance: float
    op_norm: float
    tail_bound: float
    a: Optional[float] = None
    tau: Optional[float] = None
    bound: Optional[float] = None


@dataclass
class ConvergenceReport:
    study_id: StudyId
    rows: List[ConvergenceRow]
    fitted_rate: float
    config: Dict[str, object] = field(default_factory=dict)

    @property
    def is_decreasing(self) -> bool:
        d = [r.hs_distance for r in self.rows]
        return all(later < earlier for earlier, later in zip(d, d[1:]))

    @property
    def bound_holds(self) -> bool:
        """op_norm <= bound wherever a finite bound is reported"""
        return all(r.op_norm <= r.bound for r in self.rows
                   if r.bound is not None and math.isfinite(r.bound))

    def rate_window(self) -> Optional[Tuple[float, float]]:
        if self.study_id == StudyId.TRIPLE_TO_DELTAPRIME:
            return DEFAULTS.deltaprime_rate_window
        if self.study_id == StudyId.ALPHA_TO_DIRICHLET:
            return DEFAULTS.rate_window
        return None

    def failures(self) -> List[str]:
        """Acceptance checks that did not pass; empty when the study is accepted"""
        failed = []
        if not self.is_decreasing:
            failed.append("distances are not strictly decreasing")
        window = self.rate_window()
        if window is not None and not (window[0] <= self.fitted_rate <= window[1]):
            failed.append(f"fitted rate {self.fitted_rate:.3f} outside [{window[0]}, {window[1]}]")
        taus = [r.tau for r in self.rows if r.tau is not None]
        if any(later >= earlier for earlier, later in zip(taus, taus[1:])):
            failed.append("tau is not strictly decreasing")
        if self.study_id == StudyId.POTENTIAL_TO_TRIPLE and not self.bound_holds:
            failed.append("operator-norm distance exceeds the resolvent difference bound")
        return failed

    @property
    def accepted(self) -> bool:
        return not self.failures()


# ---------------------------------------------------------------- discretized norms

def _box(models: Sequence[KernelModel], s: SpectralPoint, half_width: Optional[float]):
    feats = [p for m in models for p in m.breakpoints()]
    center = 0.5 * (min(feats) + max(feats)) if feats else 0.0
    spread = 0.5 * (max(feats) - min(feats)) if feats else 0.0
    L = half_width if half_width is not None else max(DEFAULTS.hs_box_factor / s.kappa, 4.0 * spread)
    return center, L, feats


def weighted_difference(kA: KernelModel, kB: KernelModel, s: SpectralPoint,
                        L: Optional[float] = None, n: Optional[int] = None):
    """B = W^1/2 (K_A - K_B) W^1/2 on the panel grid, plus nodes, center and box half-width"""
    n = n or DEFAULTS.hs_points
    center, L, feats = _box((kA, kB), s, L)
    if L <= 0:
        raise InvalidParameter(f"box half-width must be positive, got {L}")
    order = DEFAULTS.gauss_order
    edges = clip_edges(feats, center - L, center + L)
    edges = refine_edges(edges, 2.0 * L * order / n)
    nodes, weights = gauss_legendre_panels(edges, order)

    X, Xp = nodes[:, None], nodes[None, :]
    diff = kA.evaluate(s, X, Xp) - kB.evaluate(s, X, Xp)
    root_w = np.sqrt(weights)
    return root_w[:, None] * diff * root_w[None, :], nodes, diff, center, L


def hs_distance(kA: KernelModel, kB: KernelModel, s: SpectralPoint,
                L: Optional[float] = None, n: Optional[int] = None) -> HSResult:
    """
    HS norm of the kernel difference on the box, with the squared-norm tail
    bound (M^2/kappa^2)(1 - (1 - e^{-2 kappa L})^2) where M is the largest
    |K_A - K_B| e^{kappa(|x-c|+|x'-c|)} seen on the grid.
    """
    return _hs_from(s, *weighted_difference(kA, kB, s, L, n))


def _hs_from(s: SpectralPoint, B, nodes, diff, center, L) -> HSResult:
    value = float(matrix_norm(B, "fro"))

    k = s.kappa
    r = np.abs(nodes - center)
    envelope = float(np.max(np.abs(diff) * np.exp(k * (r[:, None] + r[None, :]))))
    tail = envelope ** 2 / k ** 2 * (1.0 - (-math.expm1(-2.0 * k * L)) ** 2)
    return HSResult(value=value, tail_bound=tail, nodes=len(nodes))


def _top_singular_value(B: np.ndarray) -> float:
    if not np.any(B):
        return 0.0
    # fixed seed: a constant start vector is orthogonal to odd singular vectors
    v = np.random.default_rng(0).standard_normal(B.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for it in range(DEFAULTS.power_max_iter):
        w = B.T @ (B @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        sigma = math.sqrt(lam)
        if it > 0 and abs(sigma - estimate) <= DEFAULTS.power_rtol * sigma:
            return sigma
        estimate = sigma
    raise PowerIterationStall(
        f"power iteration did not settle in {DEFAULTS.power_max_iter} steps (last {estimate:.6g})"
    )


def op_norm_estimate(kA: KernelModel, kB: KernelModel, s: SpectralPoint,
                     L: Optional[float] = None, n: Optional[int] = None) -> float:
    B = weighted_difference(kA, kB, s, L, n)[0]
    return _top_singular_value(B)


def distances(kA: KernelModel, kB: KernelModel, s: SpectralPoint,
              L: Optional[float] = None, n: Optional[int] = None) -> Tuple[HSResult, float]:
    """HS result and operator-norm estimate from a single kernel sampling"""
    sampled = weighted_difference(kA, kB, s, L, n)
    return _hs_from(s, *sampled), _top_singular_value(sampled[0])


def quadrature_gate(kA: KernelModel, kB: KernelModel, s: SpectralPoint,
                    L: Optional[float] = None, n: Optional[int] = None) -> float:
    """Relative change of the HS distance when the node count doubles"""
    n = n or DEFAULTS.hs_points
    coarse = hs_distance(kA, kB, s, L, n).value
    fine = hs_distance(kA, kB, s, L, 2 * n).value
    return abs(fine - coarse) / max(abs(fine), np.finfo(float).tiny)


# ---------------------------------------------------------------- constants and fits

def measure_c_gamma(beta: float, alpha: float, s: SpectralPoint, a_grid: Sequence[float],
                    power: Optional[float] = None) -> float:
    """max over the grid of a^p ||Gamma^-1||_2, p = 2 for alpha = 1 and 1 otherwise"""
    if not len(a_grid):
        raise InvalidParameter("a_grid is empty")
    p = power if power is not None else (2.0 if alpha == 1.0 else 1.0)
    best = 0.0
    for a in a_grid:
        arr = cs_couplings(CouplingConfig(beta=beta, a=float(a), alpha=alpha))
        inv = gamma_inverse(gamma_matrix(arr, s)).entries
        best = max(best, float(a) ** p * float(matrix_norm(inv, 2)))
    logger.debug(f"C_Gamma(kappa={s.kappa}, alpha={alpha}) = {best:.6g} over {len(a_grid)} spacings")
    return best


def fit_rate(params: Sequence[float], distances: Sequence[float]) -> float:
    """Least-squares slope of log d against log param over the finest half of the grid"""
    p = np.asarray(params, dtype=float)
    d = np.asarray(distances, dtype=float)
    if p.shape != d.shape or len(p) < 2:
        raise InvalidParameter("fit_rate needs at least two (param, distance) pairs")
    if np.any(p <= 0) or np.any(d <= 0):
        raise InvalidParameter("fit_rate needs positive params and distances")
    order = np.argsort(p)
    keep = order[: max(2, math.ceil(len(p) / 2))]
    slope, _ = np.polyfit(np.log(p[keep]), np.log(d[keep]), 1)
    return float(slope)


# ---------------------------------------------------------------- studies

def regime_failures(study_id: StudyId, params: StudyParams) -> List[str]:
    beta, kappa, alpha = params.beta, params.kappa, params.alpha
    failed = []
    if study_id == StudyId.TRIPLE_TO_DELTAPRIME:
        if abs(2.0 + beta * kappa) < DEFAULTS.resonance_tol * (1.0 + abs(beta * kappa)):
            failed.append(f"kappa={kappa} is the delta-prime resonance -2/beta")
        if alpha != 1.0:
            failed.append(f"alpha={alpha} must be 1")
    elif study_id == StudyId.ALPHA_TO_DIRICHLET:
        if alpha in (0.0, 1.0):
            failed.append(f"alpha={alpha} must differ from 0 and 1")
    elif study_id in (StudyId.POTENTIAL_TO_TRIPLE, StudyId.POTENTIAL_TO_DELTAPRIME):
        floor = max(-2.0 / beta, 1.0)
        if kappa <= floor:
            failed.append(f"kappa={kappa} must exceed max(-2/beta, 1) = {floor:g}")
        if alpha != 1.0:
            failed.append(f"alpha={alpha} must be 1")
    elif study_id == StudyId.POTENTIAL_TO_DIRICHLET:
        if kappa <= 1.0:
            failed.append(f"kappa={kappa} must exceed 1")
        if alpha in (0.0, 1.0):
            failed.append(f"alpha={alpha} must differ from 0 and 1")
    if study_id.is_potential and not (0 < params.rule_power):
        failed.append(f"rule a = eps^p needs p > 0, got {params.rule_power}")
    return failed


def _target(study_id: StudyId, cfg: CouplingConfig) -> KernelModel:
    if study_id in (StudyId.TRIPLE_TO_DELTAPRIME, StudyId.POTENTIAL_TO_DELTAPRIME):
        return DeltaPrime(beta=cfg.beta, y=cfg.y)
    if study_id in (StudyId.ALPHA_TO_DIRICHLET, StudyId.POTENTIAL_TO_DIRICHLET):
        return Dirichlet(y=cfg.y)
    return DeltaArrayModel(arr=cs_couplings(cfg))


def _array_row(study_id: StudyId, params: StudyParams, s: SpectralPoint, a: float) -> ConvergenceRow:
    cfg = CouplingConfig(beta=params.beta, a=a, alpha=params.alpha, y=params.y)
    triple = DeltaArrayModel(arr=cs_couplings(cfg))
    target = _target(study_id, cfg)
    hs, op = distances(triple, target, s, params.box_half_width, params.points)
    logger.info(f"{study_id.value}: a={a:.4g} hs={hs.value:.6g} op={op:.6g}")
    return ConvergenceRow(param=a, hs_distance=hs.value, op_norm=op, tail_bound=hs.tail_bound)


@dataclass(frozen=True)
class TauRow:
    epsilon: float
    a: float
    c_of_a: float
    c_gamma: float
    tau: float
    bound: float


def study_shapes(specs: Sequence[str]) -> Tuple[PotentialShape, PotentialShape, PotentialShape]:
    """One spec for all three bumps, or three specs for V_-1, V_0, V_+1"""
    if len(specs) == 1:
        return uniform_shapes(parse_shape_spec(specs[0]))
    if len(specs) == 3:
        return tuple(parse_shape_spec(spec) for spec in specs)
    raise InvalidParameter(f"give one or three shape specs, got {len(specs)}")


def tau_table(params: StudyParams) -> List[TauRow]:
    """
    tau (alpha = 1) or tau_alpha along a = eps^p, largest eps first, with
    C_Gamma measured once over the spacings the grid visits.
    """
    if not params.eps_grid:
        raise InvalidParameter("eps_grid is empty")
    s = SpectralPoint(params.kappa)
    shapes = study_shapes(params.shape)
    grid = sorted({float(e) for e in params.eps_grid}, reverse=True)
    spacings = [e ** params.rule_power for e in grid]
    c_grid = np.union1d(np.geomspace(min(spacings), max(spacings), 8), spacings)
    c_gamma = measure_c_gamma(params.beta, params.alpha, s, c_grid)

    rows = []
    for eps, a in zip(grid, spacings):
        if params.alpha == 1.0:
            t = tau(eps, a, s, params.beta, shapes, c_gamma)
        else:
            t = tau_alpha(eps, a, s, params.beta, shapes, c_gamma)
        if params.alpha * t >= 1.0:
            logger.warning(f"tau={t:.4g} at eps={eps:.3g}: Neumann series not known to converge")
        rows.append(TauRow(epsilon=eps, a=a, c_of_a=c_of_a(params.beta, a, shapes),
                           c_gamma=c_gamma, tau=t, bound=diff0_bound(c_gamma, a, t, params.alpha)))
    return rows


def _potential_row(study_id: StudyId, params: StudyParams, s: SpectralPoint, t: TauRow) -> ConvergenceRow:
    cfg = CouplingConfig(beta=params.beta, a=t.a, alpha=params.alpha, y=params.y)
    sp = ScaledPotential(cfg=cfg, epsilon=t.epsilon, shapes=study_shapes(params.shape))
    model = PotentialModel(sp=sp, cells_per_bump=params.cells_per_bump)
    target = _target(study_id, cfg)

    hs, op = distances(model, target, s, params.box_half_width, params.points)
    logger.info(f"{study_id.value}: eps={t.epsilon:.3g} a={t.a:.4g} hs={hs.value:.6g} "
                f"op={op:.6g} tau={t.tau:.4g}")
    return ConvergenceRow(param=t.epsilon, hs_distance=hs.value, op_norm=op,
                          tail_bound=hs.tail_bound, a=t.a, tau=t.tau, bound=t.bound)


def study(study_id: StudyId, params: Optional[StudyParams] = None) -> ConvergenceReport:
    """
    Run one convergence study; rows are sorted by parameter, largest first.

    Raises RegimeViolation before any work when the parameters fall outside
    the regime the study's limit statement covers.
    """
    study_id = StudyId(study_id)
    params = params or default_params(study_id)
    failed = regime_failures(study_id, params)
    if failed:
        raise RegimeViolation(f"{study_id.value} outside its regime", failed)

    s = SpectralPoint(params.kappa)
    threads = max(1, params.threads)

    if study_id.is_potential:
        taus = tau_table(params)
        grid = [t.epsilon for t in taus]
        jobs = [(_potential_row, (study_id, params, s, t)) for t in taus]
    else:
        grid = sorted({float(a) for a in params.a_grid}, reverse=True)
        jobs = [(_array_row, (study_id, params, s, a)) for a in grid]
    if len(grid) < 2:
        raise InvalidParameter(f"{study_id.value} needs at least two grid points")

    logger.info(f"Running {study_id.value} over {len(grid)} points on {threads} thread(s)")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(fn, *args) for fn, args in jobs]
        rows = [f.result() for f in futures]
    rows.sort(key=lambda r: r.param, reverse=True)

    rate = fit_rate([r.param for r in rows], [r.hs_distance for r in rows])
    config = asdict(params)
    config["study_id"] = study_id.value
    report = ConvergenceReport(study_id=study_id, rows=rows, fitted_rate=rate, config=config)
    if report.failures():
        logger.warning(f"{study_id.value} not accepted: {'; '.join(report.failures())}")
    return report


# ---------------------------------------------------------------- controls

def negative_control_floor(beta: float, kappa: float) -> float:
    """Closed-form HS norm of the delta-prime minus Dirichlet kernel: sqrt(c^2 + d^2)/kappa"""
    c = delta_prime_coefficient(beta, kappa)
    d = 1.0 / (2.0 * kappa)
    return math.hypot(c, d) / kappa


def negative_control(params: StudyParams) -> Tuple[List[Tuple[float, float]], float]:
    """
    alpha != 1 triples measured against the delta-prime kernel instead of the
    Dirichlet one: the distances settle on the delta-prime/Dirichlet floor.
    """
    failed = regime_failures(StudyId.ALPHA_TO_DIRICHLET, params)
    if abs(2.0 + params.beta * params.kappa) < DEFAULTS.resonance_tol * (1.0 + abs(params.beta * params.kappa)):
        failed.append(f"kappa={params.kappa} is the delta-prime resonance -2/beta")
    if failed:
        raise RegimeViolation("negative control outside its regime", failed)

    s = SpectralPoint(params.kappa)
    wrong = DeltaPrime(beta=params.beta, y=params.y)
    rows = []
    for a in sorted(params.a_grid, reverse=True):
        cfg = CouplingConfig(beta=params.beta, a=float(a), alpha=params.alpha, y=params.y)
        hs = hs_distance(DeltaArrayModel(arr=cs_couplings(cfg)), wrong, s,
                         params.box_half_width, params.points)
        rows.append((float(a), hs.value))
    return rows, negative_control_floor(params.beta, params.kappa)


def pointwise_study(cfg: CouplingConfig, s: SpectralPoint, a_grid: Sequence[float],
                    points: Sequence[Tuple[float, float]]) -> Tuple[List[Tuple[float, float]], float]:
    """
    max over off-center sample points of |triple - delta-prime| for each
    spacing, with the fitted log-log rate. Points must stay outside the
    strip |x - y| <= max(a_grid).
    """
    x = np.asarray([p[0] for p in points], dtype=float)
    xp = np.asarray([p[1] for p in points], dtype=float)
    reach = max(a_grid)
    if np.any(np.abs(x - cfg.y) <= reach) or np.any(np.abs(xp - cfg.y) <= reach):
        raise InvalidParameter(f"sample points must satisfy |x - y| > {reach}")
    target = DeltaPrime(beta=cfg.beta, y=cfg.y).evaluate(s, x, xp)
    rows = []
    for a in sorted(a_grid, reverse=True):
        triple = DeltaArrayModel(arr=cs_couplings(cfg.with_spacing(float(a))))
        rows.append((float(a), float(np.max(np.abs(triple.evaluate(s, x, xp) - target)))))
    return rows, fit_rate([r[0] for r in rows], [r[1] for r in rows])
