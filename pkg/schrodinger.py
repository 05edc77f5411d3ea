"""
Resolvent kernel of H = -u'' + V u for piecewise-constant V, built from the two
decaying solutions and their Wronskian.

Each constant cell is crossed with its exact propagator (cosh/sinh when
V + kappa^2 > 0, cos/sin when negative). Solutions are stored as a unit-size
mantissa (u, u') plus a log-scale offset, so wells of depth beta/(eps a^2)
never overflow. Outside the outermost breakpoints the free exponentials are
used analytically.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import EigenvalueHit, InvalidParameter, OverflowGuard
from kernels import KernelValue, SpectralPoint
from potentials import ScaledPotential, w_eval
from quadrature import gauss_legendre_panels
from settings import DEFAULTS

logger = logging.getLogger(__name__)

POTENTIAL = "potential"


@dataclass(frozen=True)
class PiecewiseConstantPotential:
    """Value values[i] on [breakpoints[i], breakpoints[i+1]], zero outside"""
    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.values and len(self.breakpoints) != len(self.values) + 1:
            raise InvalidParameter(
                f"{len(self.values)} cells need {len(self.values) + 1} breakpoints, "
                f"got {len(self.breakpoints)}"
            )
        if not self.values and self.breakpoints:
            raise InvalidParameter("breakpoints given without cell values")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise InvalidParameter("breakpoints must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidParameter("cell values must be finite")

    @classmethod
    def empty(cls) -> "PiecewiseConstantPotential":
        return cls(breakpoints=(), values=())

    @property
    def cells(self) -> int:
        return len(self.values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not self.values:
            return np.zeros_like(x)
        edges = np.asarray(self.breakpoints)
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, self.cells - 1)
        inside = (x >= edges[0]) & (x <= edges[-1])
        return np.where(inside, np.asarray(self.values)[idx], 0.0)


def _trim_zero_ends(edges: np.ndarray, values: np.ndarray) -> PiecewiseConstantPotential:
    nonzero = np.nonzero(values)[0]
    if len(nonzero) == 0:
        return PiecewiseConstantPotential.empty()
    first, last = int(nonzero[0]), int(nonzero[-1])
    return PiecewiseConstantPotential(tuple(edges[first:last + 2]), tuple(values[first:last + 1]))


def discretize(sp: ScaledPotential, cells_per_bump: Optional[int] = None) -> PiecewiseConstantPotential:
    """
    Cell averages of alpha*W on a grid that splits each scaled bump into
    cells_per_bump equal cells, aligned with the bump's kinks and support ends.
    """
    cells_per_bump = DEFAULTS.cells_per_bump if cells_per_bump is None else int(cells_per_bump)
    if cells_per_bump < 8:
        raise InvalidParameter(f"cells_per_bump must be at least 8, got {cells_per_bump}")

    edges = []
    for bump in sp.bumps():
        hw = bump.shape.half_width
        local = np.linspace(-hw, hw, cells_per_bump + 1)
        local = np.union1d(local, np.asarray(bump.shape.kinks, dtype=float))
        edges.append(bump.center + sp.epsilon * local)
    edges = np.unique(np.concatenate(edges))

    nodes, weights = gauss_legendre_panels(edges, DEFAULTS.gauss_order)
    per_cell = (weights * w_eval(sp, nodes)).reshape(len(edges) - 1, DEFAULTS.gauss_order).sum(axis=1)
    values = per_cell / np.diff(edges)
    return _trim_zero_ends(edges, values)


def single_delta_box(coupling: float, epsilon: float, center: float = 0.0) -> PiecewiseConstantPotential:
    """Box of width eps and height c/eps: approaches a delta of coupling c"""
    return PiecewiseConstantPotential(
        breakpoints=(center - 0.5 * epsilon, center + 0.5 * epsilon),
        values=(coupling / epsilon,),
    )


# ---------------------------------------------------------------- propagation

def _propagate(u, du, q, d):
    """
    Advance -u'' + q u = 0 by distance d >= 0.

    Returns the new (u, u') divided by the exponential growth factor e^{k d}
    together with that growth exponent (zero for oscillatory cells).
    """
    u, du, q, d = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (u, du, q, d)))
    k = np.sqrt(np.abs(q))
    safe_k = np.where(k > 0, k, 1.0)
    kd = k * d

    # hyperbolic cells, scaled by e^{-kd}
    e = np.exp(-2.0 * np.where(q > 0, kd, 0.0))
    ch = 0.5 * (1.0 + e)
    sh = -0.5 * np.expm1(-2.0 * np.where(q > 0, kd, 0.0))
    u_h = ch * u + sh / safe_k * du
    du_h = safe_k * sh * u + ch * du

    # oscillatory cells
    c, s = np.cos(kd), np.sin(kd)
    u_o = c * u + s / safe_k * du
    du_o = -safe_k * s * u + c * du

    # free cells (q == 0)
    u_f = u + d * du

    u_new = np.where(q > 0, u_h, np.where(q < 0, u_o, u_f))
    du_new = np.where(q > 0, du_h, np.where(q < 0, du_o, du))
    growth = np.where(q > 0, kd, 0.0)
    return u_new, du_new, growth


def _normalize(u, du, kappa):
    scale = np.hypot(u, du / kappa)
    if np.any(~np.isfinite(scale)) or np.any(scale == 0):
        raise OverflowGuard("solution left the representable range during propagation")
    return u / scale, du / scale, np.log(scale)


@dataclass(frozen=True)
class DecayingSolutionPair:
    """
    u_minus ~ e^{kappa x} at -infinity and u_plus ~ e^{-kappa x} at +infinity,
    both of unit value at their anchoring breakpoint.

    Node arrays hold mantissas (u, u') with hypot(u, u'/kappa) = 1 and the
    log-scale offsets; the physical value is e^{offset} * mantissa.
    """
    potential: PiecewiseConstantPotential
    kappa: float
    nodes: np.ndarray
    minus: np.ndarray
    minus_log: np.ndarray
    plus: np.ndarray
    plus_log: np.ndarray
    wronskian_log: float
    wronskian_sign: float
    wronskian_drift: float

    @property
    def wronskian(self) -> float:
        """W = u_- u_+' - u_-' u_+, equal to -2 kappa for V = 0"""
        return self.wronskian_sign * math.exp(self.wronskian_log)

    # -- evaluation anywhere on the line
    def _minus_at(self, x: np.ndarray):
        k, nodes = self.kappa, self.nodes
        cell = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, max(len(nodes) - 2, 0))
        left = x < nodes[0]
        right = x > nodes[-1] if len(nodes) > 1 else x >= nodes[-1]

        # inside: propagate forward from the left node of the cell
        if len(nodes) > 1:
            q = np.asarray(self.potential.values)[cell] + k * k
            d = np.clip(x - nodes[cell], 0.0, None)
            u, du, growth = _propagate(self.minus[cell, 0], self.minus[cell, 1], q, d)
            log_in = self.minus_log[cell] + growth
        else:
            u = du = log_in = np.zeros_like(x)

        # left of support: e^{kappa (x - x0)}
        t_left = np.clip(nodes[0] - x, 0.0, None)
        # right of support: A e^{kappa t} + B e^{-kappa t}, factored by e^{kappa t}
        t_right = np.clip(x - nodes[-1], 0.0, None)
        a_coef = 0.5 * (self.minus[-1, 0] + self.minus[-1, 1] / k)
        b_coef = 0.5 * (self.minus[-1, 0] - self.minus[-1, 1] / k)
        e_right = np.exp(-2.0 * k * t_right)

        value = np.where(left, 1.0, np.where(right, a_coef + b_coef * e_right, u))
        log = np.where(left, -k * t_left,
                       np.where(right, self.minus_log[-1] + k * t_right, log_in))
        return value, log

    def _plus_at(self, x: np.ndarray):
        k, nodes = self.kappa, self.nodes
        cell = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, max(len(nodes) - 2, 0))
        left = x < nodes[0]
        right = x > nodes[-1] if len(nodes) > 1 else x >= nodes[-1]

        if len(nodes) > 1:
            q = np.asarray(self.potential.values)[cell] + k * k
            d = np.clip(nodes[cell + 1] - x, 0.0, None)
            u, du, growth = _propagate(self.plus[cell + 1, 0], -self.plus[cell + 1, 1], q, d)
            log_in = self.plus_log[cell + 1] + growth
        else:
            u = log_in = np.zeros_like(x)

        t_right = np.clip(x - nodes[-1], 0.0, None)
        t_left = np.clip(nodes[0] - x, 0.0, None)
        # left of support: A e^{-kappa(x - x0)} + B e^{kappa(x - x0)} with t = x0 - x
        a_coef = 0.5 * (self.plus[0, 0] - self.plus[0, 1] / k)
        b_coef = 0.5 * (self.plus[0, 0] + self.plus[0, 1] / k)
        e_left = np.exp(-2.0 * k * t_left)

        value = np.where(right, 1.0, np.where(left, a_coef + b_coef * e_left, u))
        log = np.where(right, -k * t_right,
                       np.where(left, self.plus_log[0] + k * t_left, log_in))
        return value, log

    def kernel_values(self, x, xp):
        """Green's function -u_-(min) u_+(max) / W, broadcasting over x and x'"""
        x, xp = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xp, dtype=float))
        lo = np.minimum(x, xp)
        hi = np.maximum(x, xp)
        m_val, m_log = self._minus_at(lo.ravel())
        p_val, p_log = self._plus_at(hi.ravel())
        exponent = m_log + p_log - self.wronskian_log
        if np.any(exponent > DEFAULTS.max_log_growth):
            raise OverflowGuard(
                f"kernel exponent {float(np.max(exponent)):.1f} exceeds {DEFAULTS.max_log_growth}; "
                f"box too large for kappa={self.kappa}"
            )
        out = -self.wronskian_sign * m_val * p_val * np.exp(exponent)
        return out.reshape(x.shape)


def decaying_solutions(pot: PiecewiseConstantPotential, s: SpectralPoint) -> DecayingSolutionPair:
    """
    Propagate u_minus forward from (1, kappa) and u_plus backward from (1, -kappa).

    Raises EigenvalueHit when the Wronskian is negligible against the solution
    sizes and OverflowGuard when the propagation leaves the float range.
    """
    k = s.kappa
    if pot.cells == 0:
        nodes = np.array([0.0])
        minus = np.array([[1.0, k]]) / math.hypot(1.0, 1.0)
        plus = np.array([[1.0, -k]]) / math.hypot(1.0, 1.0)
        offset = np.array([math.log(math.hypot(1.0, 1.0))])
        return DecayingSolutionPair(
            potential=pot, kappa=k, nodes=nodes,
            minus=minus, minus_log=offset, plus=plus, plus_log=offset.copy(),
            wronskian_log=math.log(2.0 * k), wronskian_sign=-1.0, wronskian_drift=0.0,
        )

    nodes = np.asarray(pot.breakpoints)
    widths = np.diff(nodes)
    q = np.asarray(pot.values) + k * k
    n = len(nodes)

    minus = np.zeros((n, 2))
    minus_log = np.zeros(n)
    u, du, log = _normalize(np.float64(1.0), np.float64(k), k)
    minus[0] = (u, du)
    minus_log[0] = log
    for i in range(n - 1):
        u, du, growth = _propagate(minus[i, 0], minus[i, 1], q[i], widths[i])
        u, du, log = _normalize(u, du, k)
        minus[i + 1] = (u, du)
        minus_log[i + 1] = minus_log[i] + growth + log

    plus = np.zeros((n, 2))
    plus_log = np.zeros(n)
    u, du, log = _normalize(np.float64(1.0), np.float64(-k), k)
    plus[-1] = (u, du)
    plus_log[-1] = log
    for i in range(n - 2, -1, -1):
        # backward sweep: forward propagation of x -> u(-x)
        u, du, growth = _propagate(plus[i + 1, 0], -plus[i + 1, 1], q[i], widths[i])
        u, du, log = _normalize(u, -du, k)
        plus[i] = (u, du)
        plus_log[i] = plus_log[i + 1] + growth + log

    if not (np.all(np.isfinite(minus_log)) and np.all(np.isfinite(plus_log))):
        raise OverflowGuard(f"non-finite log offsets at kappa={k}")

    w_hat = minus[:, 0] * plus[:, 1] - minus[:, 1] * plus[:, 0]
    size = np.abs(minus[:, 0] * plus[:, 1]) + np.abs(minus[:, 1] * plus[:, 0])
    if abs(w_hat[0]) < DEFAULTS.eigenvalue_tol * size[0]:
        raise EigenvalueHit(
            f"Wronskian vanishes at kappa={k}: -kappa^2 is an eigenvalue of the discretized operator"
        )

    w_log = np.log(np.abs(w_hat)) + minus_log + plus_log
    drift = float(np.max(np.abs(np.expm1(w_log - w_log[0]))))
    if np.any(np.sign(w_hat) != np.sign(w_hat[0])):
        drift = math.inf
    if drift > DEFAULTS.wronskian_rtol:
        logger.warning(f"Wronskian drift {drift:.2e} across {n - 1} cells at kappa={k}")

    return DecayingSolutionPair(
        potential=pot, kappa=k, nodes=nodes,
        minus=minus, minus_log=minus_log, plus=plus, plus_log=plus_log,
        wronskian_log=float(w_log[0]), wronskian_sign=float(np.sign(w_hat[0])),
        wronskian_drift=drift,
    )


def potential_resolvent_kernel(sp: ScaledPotential, s: SpectralPoint, x: float, xp: float,
                               cells_per_bump: Optional[int] = None) -> KernelValue:
    pair = decaying_solutions(discretize(sp, cells_per_bump), s)
    return KernelValue(float(pair.kernel_values(x, xp)), POTENTIAL)
