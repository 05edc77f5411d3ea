"""
Scaled potential family approximating the Cheon-Shigehara triple.

    alpha * W(x) = sum_j alpha_j * (1/eps) V_j((x - y - j a)/eps),  j = -1, 0, +1

with the triple couplings alpha_j (scaled by alpha) and unit-mass profiles V_j.
Also holds the constants C(a), tau, tau_alpha, the Neumann-series bounds and
the W^{1,2} quadratic-form estimates.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gamma as gamma_fn

from delta_arrays import CouplingConfig, cs_couplings
from errors import GridTooCoarse, InvalidParameter, NormalizationFailure
from quadrature import gauss_legendre_panels
from settings import DEFAULTS

logger = logging.getLogger(__name__)

BOX = "box"
GAUSSIAN = "gaussian"
TRIANGLE = "triangle"
CUSTOM = "custom-sampled"

SHAPE_ALIASES = {"box": BOX, "gauss": GAUSSIAN, "gaussian": GAUSSIAN,
                 "triangle": TRIANGLE, "custom": CUSTOM}


@dataclass(frozen=True)
class PotentialShape:
    """Unit-mass profile V with its support half-width and interior kinks"""
    id: str
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    mass: float
    sqrt_moment: float
    l2_norm: float
    half_width: float
    kinks: Tuple[float, ...] = ()
    params: Dict[str, float] = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    @property
    def edges(self) -> np.ndarray:
        return np.unique(np.array([-self.half_width, *self.kinks, self.half_width]))


def _quadrature_mass(evaluate: Callable, edges: Sequence[float], panels: int = 64) -> float:
    fine = np.concatenate([np.linspace(lo, hi, panels + 1)[:-1] for lo, hi in zip(edges[:-1], edges[1:])])
    fine = np.append(fine, edges[-1])
    nodes, weights = gauss_legendre_panels(fine, DEFAULTS.gauss_order)
    return float(np.dot(weights, evaluate(nodes)))


def _box(h: float) -> PotentialShape:
    height = 1.0 / (2.0 * h)

    def evaluate(x):
        return np.where(np.abs(x) <= h, height, 0.0)

    return PotentialShape(
        id=BOX, evaluate=evaluate,
        mass=_quadrature_mass(evaluate, [-h, h]),
        sqrt_moment=(2.0 / 3.0) * math.sqrt(h),
        l2_norm=math.sqrt(height),
        half_width=h, params={"h": h},
    )


def _gaussian(sigma: float) -> PotentialShape:
    cutoff = DEFAULTS.gauss_cutoff * sigma
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def evaluate(x):
        return np.where(np.abs(x) <= cutoff, norm * np.exp(-0.5 * (x / sigma) ** 2), 0.0)

    # E|X|^{1/2} of N(0, sigma^2)
    sqrt_moment = math.sqrt(sigma) * 2.0 ** 0.25 * gamma_fn(0.75) / math.sqrt(math.pi)
    return PotentialShape(
        id=GAUSSIAN, evaluate=evaluate,
        mass=math.erf(DEFAULTS.gauss_cutoff / math.sqrt(2.0)),
        sqrt_moment=sqrt_moment,
        l2_norm=math.sqrt(1.0 / (2.0 * sigma * math.sqrt(math.pi))),
        half_width=cutoff, kinks=(0.0,), params={"sigma": sigma},
    )


def _triangle(h: float) -> PotentialShape:
    def evaluate(x):
        return np.clip(1.0 - np.abs(x) / h, 0.0, None) / h

    return PotentialShape(
        id=TRIANGLE, evaluate=evaluate,
        mass=_quadrature_mass(evaluate, [-h, 0.0, h]),
        sqrt_moment=(8.0 / 15.0) * math.sqrt(h),
        l2_norm=math.sqrt(2.0 / (3.0 * h)),
        half_width=h, kinks=(0.0,), params={"h": h},
    )


def _custom(x: Sequence[float], values: Sequence[float]) -> PotentialShape:
    grid = np.asarray(x, dtype=float)
    samples = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != samples.shape or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise InvalidParameter("custom shape needs matching, strictly increasing samples")

    def evaluate(t):
        return np.interp(t, grid, samples, left=0.0, right=0.0)

    return PotentialShape(
        id=CUSTOM, evaluate=evaluate,
        mass=float(trapezoid(samples, grid)),
        sqrt_moment=float(trapezoid(np.sqrt(np.abs(grid)) * np.abs(samples), grid)),
        l2_norm=math.sqrt(float(trapezoid(samples ** 2, grid))),
        half_width=float(max(abs(grid[0]), abs(grid[-1]))),
        params={"points": float(len(grid))},
    )


def make_shape(shape_id: str, params: Optional[Dict] = None) -> PotentialShape:
    """
    Build a unit-mass profile: box (1/(2h) on [-h, h]), gaussian (normal
    density, truncated at the configured number of sigmas), triangle (hat of
    mass 1 on [-h, h]) or custom-sampled (x, values).
    """
    params = dict(params or {})
    kind = SHAPE_ALIASES.get(shape_id, shape_id)
    for name in ("h", "sigma"):
        if name in params and not float(params[name]) > 0:
            raise InvalidParameter(f"shape parameter {name} must be positive, got {params[name]}")
    try:
        if kind == BOX:
            shape = _box(float(params.get("h", 0.5)))
        elif kind == GAUSSIAN:
            shape = _gaussian(float(params.get("sigma", 1.0)))
        elif kind == TRIANGLE:
            shape = _triangle(float(params.get("h", 1.0)))
        elif kind == CUSTOM:
            shape = _custom(params["x"], params["values"])
        else:
            raise InvalidParameter(f"unknown shape {shape_id!r}")
    except KeyError as e:
        raise InvalidParameter(f"shape {shape_id!r} is missing parameter {e}")

    tol = 1e-10 if kind != GAUSSIAN else 1e-8
    if abs(shape.mass - 1.0) > tol:
        raise NormalizationFailure(f"{shape.id} shape has mass {shape.mass:.12g}, expected 1")
    if kind == GAUSSIAN:
        logger.debug(f"gaussian truncated at {DEFAULTS.gauss_cutoff} sigma, tail mass {1 - shape.mass:.2e}")
    return shape


def parse_shape_spec(spec: str) -> PotentialShape:
    """'box:h=0.5', 'gauss:sigma=0.2', 'triangle:h=1'"""
    name, _, rest = spec.strip().partition(":")
    params: Dict[str, float] = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidParameter(f"malformed shape parameter {item!r} in {spec!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise InvalidParameter(f"shape parameter {key.strip()} is not a number in {spec!r}")
    if name not in ("box", "gauss", "triangle"):
        raise InvalidParameter(f"unknown shape spec {spec!r}; use box:h=, gauss:sigma= or triangle:h=")
    return make_shape(name, params)


# ---------------------------------------------------------------- scaled family

@dataclass(frozen=True)
class Bump:
    index: int
    center: float
    coupling: float
    shape: PotentialShape

    def support(self, epsilon: float) -> Tuple[float, float]:
        return (self.center - epsilon * self.shape.half_width,
                self.center + epsilon * self.shape.half_width)


@dataclass(frozen=True)
class ScaledPotential:
    cfg: CouplingConfig
    epsilon: float
    shapes: Tuple[PotentialShape, PotentialShape, PotentialShape]

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameter(f"epsilon must be positive, got {self.epsilon}")
        if len(self.shapes) != 3:
            raise InvalidParameter("need three shapes (V_-1, V_0, V_+1)")

    def bumps(self) -> List[Bump]:
        arr = cs_couplings(self.cfg)
        return [Bump(j, c, g, shape)
                for j, c, g, shape in zip((-1, 0, 1), arr.centers, arr.couplings, self.shapes)]

    def edges(self) -> np.ndarray:
        """Support ends and interior kinks of all three scaled bumps"""
        pts = [b.center + self.epsilon * e for b in self.bumps() for e in b.shape.edges]
        return np.unique(np.asarray(pts))


def uniform_shapes(shape: PotentialShape) -> Tuple[PotentialShape, PotentialShape, PotentialShape]:
    return (shape, shape, shape)


def w_eval(sp: ScaledPotential, x):
    """Pointwise alpha * W(x), translated to the center y"""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for b in sp.bumps():
        total = total + b.coupling / sp.epsilon * b.shape((x - b.center) / sp.epsilon)
    return total if total.ndim else float(total)


def potential_mass(sp: ScaledPotential) -> float:
    """Quadrature of alpha*W; alpha(beta/a^2 + 2(2/beta - 1/a)) up to shape truncation"""
    total = 0.0
    for b in sp.bumps():
        edges = b.center + sp.epsilon * np.linspace(-b.shape.half_width, b.shape.half_width, 65)
        edges = np.union1d(edges, b.center + sp.epsilon * np.asarray(b.shape.kinks))
        nodes, weights = gauss_legendre_panels(edges, DEFAULTS.gauss_order)
        total += float(np.dot(weights, w_eval(sp, nodes)))
    return total


# ---------------------------------------------------------------- constants

def c_of_a(beta: float, a: float, shapes: Sequence[PotentialShape]) -> float:
    """sqrt(2) (|beta|/a^2 m_0 + |2/beta - 1/a| (m_-1 + m_+1)) with m_j the sqrt-moments"""
    if a <= 0 or beta == 0:
        raise InvalidParameter(f"c_of_a needs a > 0 and beta != 0, got a={a}, beta={beta}")
    m_minus, m0, m_plus = (s.sqrt_moment for s in shapes)
    return math.sqrt(2.0) * (abs(beta) / a ** 2 * m0 + abs(2.0 / beta - 1.0 / a) * (m_minus + m_plus))


def tau(epsilon: float, a: float, s, beta: float, shapes: Sequence[PotentialShape],
        c_gamma: float) -> float:
    """4 sqrt(eps) C_Gamma(kappa) C(a) / a^2; the kappa dependence enters through c_gamma"""
    if c_gamma <= 0:
        raise InvalidParameter(f"c_gamma must be positive, got {c_gamma}")
    return 4.0 * math.sqrt(epsilon) * c_gamma * c_of_a(beta, a, shapes) / a ** 2


def tau_alpha(epsilon: float, a: float, s, beta: float, shapes: Sequence[PotentialShape],
              c_gamma: float) -> float:
    if c_gamma <= 0:
        raise InvalidParameter(f"c_gamma must be positive, got {c_gamma}")
    return 4.0 * math.sqrt(epsilon) * c_gamma * c_of_a(beta, a, shapes) / a


def neumann_bound(n: int, c_gamma: float, a: float, tau_value: float, power: int = 2) -> float:
    """Norm bound 2 C_Gamma a^-p tau^n on the n-th Neumann iterate"""
    return 2.0 * c_gamma * a ** (-power) * tau_value ** n


def diff0_bound(c_gamma: float, a: float, tau_value: float, alpha: float = 1.0) -> float:
    """
    Resolvent difference bound between the potential and the delta triple.

    alpha = 1: 2 C tau / (a^2 (1 - tau)); otherwise 2 alpha C tau / (a (1 - alpha tau)).
    Infinite when the Neumann series is not known to converge.
    """
    if alpha == 1.0:
        return math.inf if tau_value >= 1.0 else 2.0 * c_gamma * tau_value / (a ** 2 * (1.0 - tau_value))
    q = alpha * tau_value
    if q >= 1.0:
        return math.inf
    return 2.0 * abs(alpha) * c_gamma * tau_value / (a * (1.0 - q))


# ---------------------------------------------------------------- Sobolev estimates

def w12_norm(values, grid) -> float:
    """sqrt of the trapezoid integral of f^2 + f'^2; grid may be nonuniform"""
    f = np.asarray(values, dtype=float)
    x = np.asarray(grid, dtype=float)
    if f.shape != x.shape:
        raise InvalidParameter("values and grid must have the same shape")
    if not np.any(f):
        return 0.0
    df = np.gradient(f, x)
    return math.sqrt(float(trapezoid(f * f + df * df, x)))


def form_t(j: int, sp: ScaledPotential, grid, u, v) -> float:
    """
    t_j[u, v] = alpha_j (u(c_j) v(c_j) - int (1/eps) V_j((x - c_j)/eps) u v dx)

    with u, v sampled on grid. The integral uses Gauss-Legendre panels on the
    scaled support with linear interpolation of the samples.
    """
    if j not in (-1, 0, 1):
        raise InvalidParameter(f"j must be -1, 0 or +1, got {j}")
    bump = sp.bumps()[j + 1]
    x = np.asarray(grid, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)

    lo, hi = bump.support(sp.epsilon)
    inside = int(np.count_nonzero((x >= lo) & (x <= hi)))
    if inside < DEFAULTS.form_min_samples:
        raise GridTooCoarse(
            f"{inside} samples inside the scaled support [{lo:.3g}, {hi:.3g}] of bump {j}; "
            f"need at least {DEFAULTS.form_min_samples}"
        )

    edges = bump.center + sp.epsilon * np.linspace(-bump.shape.half_width, bump.shape.half_width, 33)
    edges = np.union1d(edges, bump.center + sp.epsilon * np.asarray(bump.shape.kinks))
    nodes, weights = gauss_legendre_panels(edges, DEFAULTS.gauss_order)
    density = bump.shape((nodes - bump.center) / sp.epsilon) / sp.epsilon
    uv = np.interp(nodes, x, u) * np.interp(nodes, x, v)
    point = float(np.interp(bump.center, x, u) * np.interp(bump.center, x, v))
    return bump.coupling * (point - float(np.dot(weights, density * uv)))


def form_bound(j: int, sp: ScaledPotential, u_norm: float, v_norm: float) -> float:
    """sqrt(2 eps) |alpha_j| m_j ||u|| ||v|| in the W^{1,2} norms"""
    bump = sp.bumps()[j + 1]
    return math.sqrt(2.0 * sp.epsilon) * abs(bump.coupling) * bump.shape.sqrt_moment * u_norm * v_norm


def sobolev_corpus() -> List[Tuple[str, Callable[[np.ndarray], np.ndarray]]]:
    """Twenty smooth or piecewise-smooth decaying test functions"""
    corpus: List[Tuple[str, Callable]] = []
    for k, amp, c in ((0.5, 1.0, 0.0), (2.0, 1.0, 0.0), (3.0, 0.5, 0.3),
                      (2.0, -1.5, -0.7), (0.5, 2.0, 1.0), (3.0, 1.0, -0.2)):
        corpus.append((f"exp(k={k},A={amp},c={c})",
                       lambda x, k=k, amp=amp, c=c: amp * np.exp(-k * np.abs(x - c))))
    for s, amp, c in ((0.3, 1.0, 0.0), (1.0, 1.0, 0.0), (0.1, 0.5, 0.05), (2.0, -1.0, 0.5),
                      (0.5, 2.0, -0.3), (0.05, 0.2, 0.0), (1.5, 1.0, 1.5)):
        corpus.append((f"gauss(s={s},A={amp},c={c})",
                       lambda x, s=s, amp=amp, c=c: amp * np.exp(-0.5 * ((x - c) / s) ** 2)))
    for w, amp, c in ((0.5, 1.0, 0.0), (1.0, -1.0, 0.2), (0.2, 0.7, -0.1),
                      (2.0, 1.0, 0.0), (0.1, 0.3, 0.0), (3.0, 2.0, -1.0), (0.4, 1.0, 0.1)):
        corpus.append((f"cosbump(w={w},A={amp},c={c})",
                       lambda x, w=w, amp=amp, c=c: amp * np.where(
                           np.abs(x - c) < w, np.cos(0.5 * np.pi * (x - c) / w) ** 2, 0.0)))
    return corpus
