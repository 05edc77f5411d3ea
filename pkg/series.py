"""
Truncated power series ("jets") in the spacing a, and the expansion identities
of the Cheon-Shigehara triple verified order by order.

A Jet stores coefficients c_0..c_{n-1} of a^{v}..a^{v+n-1}; v may be negative
(Laurent jets), which the a^-2 pole of Gamma^-1 needs. Coefficients are binary64
values at fixed (kappa, beta, alpha).
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from delta_arrays import OUTER, MIXED, lim_kern_coefficient
from errors import (
    DivisionByZeroSeries, InvalidParameter, UnknownExpansionId, ValuationMismatch,
)
from kernels import SpectralPoint
from settings import DEFAULTS

logger = logging.getLogger(__name__)

Number = Union[int, float]


class Jet:
    """Truncated (Laurent) power series sum_k c_k a^(valuation + k)"""

    def __init__(self, coeffs: Iterable[float], valuation: int = 0):
        self.coeffs = np.array(list(coeffs), dtype=float)
        if self.coeffs.ndim != 1 or len(self.coeffs) == 0:
            raise InvalidParameter("jet needs at least one coefficient")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidParameter(f"jet coefficients must be finite: {self.coeffs}")
        self.valuation = int(valuation)

    # -- construction
    @classmethod
    def constant(cls, c: float, order: int) -> "Jet":
        coeffs = np.zeros(order + 1)
        coeffs[0] = c
        return cls(coeffs)

    @classmethod
    def from_poly(cls, coeffs: Sequence[float], order: int) -> "Jet":
        """Polynomial c_0 + c_1 a + ... truncated or zero-padded to `order`"""
        padded = np.zeros(order + 1)
        n = min(len(coeffs), order + 1)
        padded[:n] = coeffs[:n]
        return cls(padded)

    # -- shape
    @property
    def order(self) -> int:
        """Highest power of a whose coefficient is known"""
        return self.valuation + len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def coefficient(self, k: int) -> float:
        if k > self.order:
            raise InvalidParameter(f"a^{k} is beyond the jet order {self.order}")
        if k < self.valuation:
            return 0.0
        return float(self.coeffs[k - self.valuation])

    def __getitem__(self, k: int) -> float:
        return self.coefficient(k)

    def powers(self) -> List[int]:
        return list(range(self.valuation, self.order + 1))

    def truncate(self, order: int) -> "Jet":
        n = order - self.valuation + 1
        if n < 1:
            raise InvalidParameter(f"cannot truncate jet of valuation {self.valuation} to order {order}")
        return Jet(self.coeffs[:n], self.valuation)

    def stripped(self, rtol: Optional[float] = None) -> "Jet":
        """Drop leading coefficients that are zero relative to the largest one"""
        rtol = DEFAULTS.series_zero_rtol if rtol is None else rtol
        scale = float(np.max(np.abs(self.coeffs)))
        if scale == 0.0:
            raise DivisionByZeroSeries(f"jet vanishes identically up to a^{self.order}")
        nonzero = np.nonzero(np.abs(self.coeffs) > rtol * scale)[0]
        first = int(nonzero[0])
        return Jet(self.coeffs[first:], self.valuation + first)

    def leading(self) -> float:
        return float(self.coeffs[0])

    def __call__(self, a: float) -> float:
        """Partial sum at a"""
        return float(sum(c * a ** p for c, p in zip(self.coeffs, self.powers())))

    # -- arithmetic
    def _coerce(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.constant(float(other), max(self.order, 0))
        return NotImplemented

    def __add__(self, other: Any) -> "Jet":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        v = min(self.valuation, other.valuation)
        top = min(self.order, other.order)
        out = np.zeros(top - v + 1)
        for jet in (self, other):
            n = min(len(jet.coeffs), top - jet.valuation + 1)
            if n > 0:
                out[jet.valuation - v: jet.valuation - v + n] += jet.coeffs[:n]
        return Jet(out, v)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.valuation)

    def __sub__(self, other: Any) -> "Jet":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other: Any) -> "Jet":
        return (-self) + other

    def __mul__(self, other: Any) -> "Jet":
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.coeffs * float(other), self.valuation)
        if not isinstance(other, Jet):
            return NotImplemented
        n = min(len(self.coeffs), len(other.coeffs))
        out = np.convolve(self.coeffs[:n], other.coeffs[:n])[:n]
        return Jet(out, self.valuation + other.valuation)

    __rmul__ = __mul__

    def divide(self, other: Any, allow_laurent: bool = False) -> "Jet":
        """
        Quotient self/other after stripping vanishing leading terms of both.

        Raises DivisionByZeroSeries when the divisor vanishes to its order and
        ValuationMismatch when the quotient would have negative valuation
        without allow_laurent.
        """
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise DivisionByZeroSeries("division of a jet by zero")
            return Jet(self.coeffs / float(other), self.valuation)
        num = self.stripped()
        den = other.stripped()
        if num.valuation < den.valuation and not allow_laurent:
            raise ValuationMismatch(
                f"dividend valuation {num.valuation} is below divisor valuation {den.valuation}"
            )
        n = min(len(num.coeffs), len(den.coeffs))
        q = np.zeros(n)
        d0 = den.coeffs[0]
        for k in range(n):
            acc = num.coeffs[k]
            if k:
                acc -= np.dot(den.coeffs[1:k + 1], q[:k][::-1])
            q[k] = acc / d0
        return Jet(q, num.valuation - den.valuation)

    def __truediv__(self, other: Any) -> "Jet":
        return self.divide(other)

    def __rtruediv__(self, other: Any) -> "Jet":
        return Jet.constant(float(other), max(self.order, 0)).divide(self)

    def exp(self) -> "Jet":
        """exp of a jet with nonnegative valuation: f_k = (1/k) sum_j j g_j f_{k-j}"""
        if self.valuation < 0:
            raise ValuationMismatch("exp of a jet with negative valuation")
        g = np.concatenate([np.zeros(self.valuation), self.coeffs])
        f = np.zeros(len(g))
        f[0] = math.exp(g[0])
        for k in range(1, len(g)):
            j = np.arange(1, k + 1)
            f[k] = np.dot(j * g[1:k + 1], f[k - j]) / k
        return Jet(f)

    def scale(self, c: float) -> "Jet":
        return self * float(c)

    def __repr__(self) -> str:
        return f"Jet(valuation={self.valuation}, coeffs={self.coeffs.tolist()})"


def jet_arith(op: str, x: Jet, y: Union[Jet, Number, None] = None) -> Jet:
    """Named dispatch over add | sub | mul | div | exp | scale"""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x.divide(y)
    if op == "exp":
        return x.exp()
    if op == "scale":
        return x.scale(y)
    raise InvalidParameter(f"unknown jet operation {op!r}")


# ---------------------------------------------------------------- building blocks

@dataclass
class TripleJets:
    """u, v, w and w^-1 of the triple expanded in a, with u, v scaled by alpha"""
    u: Jet
    v: Jet
    w: Jet
    w_inv: Jet


def _triple_jets(kappa: float, beta: float, alpha: float, order: int) -> TripleJets:
    if beta == 0:
        raise InvalidParameter("beta must be nonzero")
    # 2 beta kappa a / (2a - beta), regular at a = 0 since 2a - beta -> -beta
    u = Jet.from_poly([0.0, 2.0 * beta * kappa], order).divide(Jet.from_poly([-beta, 2.0], order))
    u = Jet.from_poly([u.coefficient(k) for k in range(order + 1)], order)
    v = Jet.from_poly([0.0, 0.0, 2.0 * kappa / beta], order)
    w = Jet.from_poly([0.0, -kappa], order).exp()
    w_inv = Jet.constant(1.0, order).divide(w)
    return TripleJets(u=u * alpha, v=v * alpha, w=w, w_inv=w_inv)


def _check_order(order: int) -> int:
    if order < 1:
        raise InvalidParameter(f"series order must be positive, got {order}")
    return int(order)


def jet_D(s: SpectralPoint, beta: float, alpha: float = 1.0, order: Optional[int] = None) -> Jet:
    """
    D = (w^2 - 1 - u)[(1+u)(1+v) - w^2(1-v)] / (2 kappa) with u -> alpha u, v -> alpha v.

    The triple with couplings alpha*A corresponds to the substitution factor 1/alpha.
    """
    order = _check_order(DEFAULTS.series_order if order is None else order)
    t = _triple_jets(s.kappa, beta, alpha, order)
    w2 = t.w * t.w
    f1 = w2 - 1.0 - t.u
    f2 = (1.0 + t.u) * (1.0 + t.v) - w2 * (1.0 - t.v)
    return (f1 * f2).scale(1.0 / (2.0 * s.kappa))


def jet_N(s: SpectralPoint, beta: float, alpha: float = 1.0, region: str = OUTER,
          order: Optional[int] = None) -> Jet:
    """Sandwich numerator N for x, x' on one side (outer) or on both sides (mixed)"""
    order = _check_order(DEFAULTS.series_order if order is None else order)
    t = _triple_jets(s.kappa, beta, alpha, order)
    w2 = t.w * t.w
    f1 = w2 - 1.0 - t.u
    corner = w2 - (1.0 + t.u) * (1.0 + t.v)
    tail = f1 * (t.u - 1.0 - w2)
    if region == OUTER:
        w_inv2 = t.w_inv * t.w_inv
        return (w2 + w_inv2) * corner + (w2 * t.v).scale(2.0) + tail
    if region == MIXED:
        return (w2 * w2 + 1.0) * t.v + corner.scale(2.0) + tail
    raise InvalidParameter(f"region must be '{OUTER}' or '{MIXED}', got {region!r}")


def gamma_inv_jet(s: SpectralPoint, beta: float, alpha: float = 1.0,
                  order: Optional[int] = None) -> List[List[Jet]]:
    """
    Gamma^-1 = M/D entrywise as Laurent jets.

    Valuation is -2 for alpha = 1 and -1 otherwise.
    """
    order = _check_order(DEFAULTS.series_order if order is None else order)
    t = _triple_jets(s.kappa, beta, alpha, order)
    w2 = t.w * t.w
    f1 = w2 - 1.0 - t.u
    corner = w2 - (1.0 + t.u) * (1.0 + t.v)
    edge = -(t.w * f1)
    far = w2 * t.v
    center = (w2 + 1.0 + t.u) * f1
    d = jet_D(s, beta, alpha, order)
    entries = [[corner, edge, far], [edge, center, edge], [far, edge, corner]]
    return [[m.divide(d, allow_laurent=True) for m in row] for row in entries]


# ---------------------------------------------------------------- verification

class ExpansionId(str, Enum):
    DEXP = "dexp"
    NEXP = "nexp"
    NEXP2 = "nexp2"
    LIMKERN = "limkern"
    GAMMAINV = "gammainv"
    DALPHA = "dalpha"
    NALPHA = "nalpha"


@dataclass
class ExpansionRow:
    label: str
    order: int
    computed: float
    expected: float
    abs_error: float
    rel_error: float
    ok: bool


@dataclass
class VerificationReport:
    target: ExpansionId
    params: Dict[str, float]
    order: int
    rows: List[ExpansionRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.ok for r in self.rows)


LEADING_RTOL = 1e-9
VANISHING_RTOL = 1e-10


def parse_expansion_id(target: Union[str, ExpansionId]) -> ExpansionId:
    try:
        return ExpansionId(str(getattr(target, "value", target)).lower())
    except ValueError:
        names = ", ".join(e.value for e in ExpansionId)
        raise UnknownExpansionId(f"unknown expansion id {target!r}; expected one of {names}")


def _leading_row(label: str, order: int, computed: float, expected: float) -> ExpansionRow:
    err = abs(computed - expected)
    rel = err / abs(expected) if expected else err
    return ExpansionRow(label, order, computed, expected, err, rel, rel <= LEADING_RTOL)


def _vanishing_rows(jet: Jet, lead_order: int, label: str) -> List[ExpansionRow]:
    scale = abs(jet.coefficient(lead_order))
    rows = []
    for k in range(min(jet.valuation, lead_order), lead_order):
        c = jet.coefficient(k)
        rel = abs(c) / scale if scale else abs(c)
        rows.append(ExpansionRow(label, k, c, 0.0, abs(c), rel, rel <= VANISHING_RTOL))
    return rows


def _series_rows(jet: Jet, lead_order: int, expected: float, label: str) -> List[ExpansionRow]:
    rows = _vanishing_rows(jet, lead_order, label)
    rows.append(_leading_row(label, lead_order, jet.coefficient(lead_order), expected))
    return rows


def _require(params: Dict[str, float], *names: str) -> List[float]:
    missing = [n for n in names if n not in params]
    if missing:
        raise InvalidParameter(f"missing expansion parameters: {missing}")
    return [float(params[n]) for n in names]


def expected_gamma_inv_leading(kappa: float, beta: float) -> np.ndarray:
    """Coefficient of a^-2 in Gamma^-1 for alpha = 1"""
    pattern = np.array([
        [2 * kappa * (kappa + 1 / beta), -2 * kappa * (kappa + 2 / beta), 2 * kappa / beta],
        [-2 * kappa * (kappa + 2 / beta), 4 * kappa * (kappa + 2 / beta), -2 * kappa * (kappa + 2 / beta)],
        [2 * kappa / beta, -2 * kappa * (kappa + 2 / beta), 2 * kappa * (kappa + 1 / beta)],
    ])
    return -beta / (2.0 * kappa ** 2 * (2.0 + beta * kappa)) * pattern


def verify_expansion(target: Union[str, ExpansionId], params: Dict[str, float],
                     order: Optional[int] = None) -> VerificationReport:
    """
    Compare computed jet coefficients with the closed-form leading terms.

    params carries kappa and beta, plus alpha for dalpha/nalpha.
    """
    target = parse_expansion_id(target)
    order = DEFAULTS.series_order if order is None else int(order)
    kappa, beta = _require(params, "kappa", "beta")
    s = SpectralPoint(kappa)
    report = VerificationReport(target=target, params=dict(params), order=order)

    if target in (ExpansionId.DALPHA, ExpansionId.NALPHA):
        (alpha,) = _require(params, "alpha")
        if alpha in (0.0, 1.0):
            raise InvalidParameter(f"{target.value} needs alpha not in {{0, 1}}, got {alpha}")
    elif target in (ExpansionId.LIMKERN, ExpansionId.GAMMAINV):
        if abs(2.0 + beta * kappa) < DEFAULTS.series_resonance_tol:
            raise InvalidParameter(f"{target.value} needs kappa != -2/beta")

    if target is ExpansionId.DEXP:
        d = jet_D(s, beta, 1.0, order)
        report.rows = _series_rows(d, 4, -2 * kappa ** 2 * (kappa + 2 / beta), "D")
    elif target is ExpansionId.NEXP:
        n = jet_N(s, beta, 1.0, OUTER, order)
        report.rows = _series_rows(n, 4, 4 * kappa ** 4, "N")
    elif target is ExpansionId.NEXP2:
        n = jet_N(s, beta, 1.0, MIXED, order)
        report.rows = _series_rows(n, 4, -4 * kappa ** 4, "N2")
    elif target is ExpansionId.LIMKERN:
        d = jet_D(s, beta, 1.0, order)
        for region in (OUTER, MIXED):
            ratio = jet_N(s, beta, 1.0, region, order).divide(d)
            computed = ratio.coefficient(0) / (4 * kappa ** 2)
            report.rows.append(_leading_row(f"N/D {region}", 0, computed,
                                            lim_kern_coefficient(beta, kappa, region)))
    elif target is ExpansionId.GAMMAINV:
        inv = gamma_inv_jet(s, beta, 1.0, order)
        expected = expected_gamma_inv_leading(kappa, beta)
        for i in range(3):
            for j in range(i, 3):
                jet = inv[i][j]
                lead = float(expected[i, j])
                if abs(lead) > VANISHING_RTOL * float(np.max(np.abs(expected))):
                    report.rows.append(ExpansionRow(f"valuation[{i}{j}]", jet.valuation,
                                                    float(jet.valuation), -2.0,
                                                    abs(jet.valuation + 2.0), 0.0,
                                                    jet.valuation == -2))
                report.rows.append(_leading_row(f"Gamma^-1[{i}{j}]", -2, jet.coefficient(-2), lead))
    elif target is ExpansionId.DALPHA:
        d = jet_D(s, beta, alpha, order)
        report.rows = _series_rows(d, 2, -2 * kappa * (1 - alpha) ** 2, "D_alpha")
    elif target is ExpansionId.NALPHA:
        n = jet_N(s, beta, alpha, OUTER, order)
        d = jet_D(s, beta, alpha, order)
        report.rows = _series_rows(n, 2, -4 * kappa ** 2 * (1 - alpha) ** 2, "N_alpha")
        report.rows.append(_leading_row("N_alpha/D_alpha", 0, n.divide(d).coefficient(0), 2 * kappa))

    logger.info(f"verify_expansion({target.value}, {params}) passed={report.passed}")
    return report


# ---------------------------------------------------------------- numeric oracle

def _exact_pieces(kappa: float, beta: float, alpha: float, a: float) -> Dict[str, float]:
    u = alpha * 2 * beta * kappa * a / (2 * a - beta)
    v = alpha * 2 * kappa * a ** 2 / beta
    e = math.expm1(-2 * kappa * a)            # w^2 - 1
    w2 = 1.0 + e
    f1 = e - u
    f2 = u + 2 * v + u * v - e * (1 - v)
    corner = e - u - v - u * v
    tail = f1 * (u - 1 - w2)
    return {
        "D": f1 * f2 / (2 * kappa),
        "N": (w2 + 1.0 / w2) * corner + 2 * w2 * v + tail,
        "N2": (w2 * w2 + 1) * v + 2 * corner + tail,
    }


def exact_value(target: Union[str, ExpansionId], params: Dict[str, float], a: float) -> float:
    """Stable direct evaluation of the expression behind an expansion id"""
    target = parse_expansion_id(target)
    kappa, beta = _require(params, "kappa", "beta")
    alpha = float(params.get("alpha", 1.0))
    pieces = _exact_pieces(kappa, beta, alpha, a)
    if target in (ExpansionId.DEXP, ExpansionId.DALPHA):
        return pieces["D"]
    if target in (ExpansionId.NEXP, ExpansionId.NALPHA):
        return pieces["N"]
    if target is ExpansionId.NEXP2:
        return pieces["N2"]
    if target is ExpansionId.LIMKERN:
        return pieces["N"] / pieces["D"] / (4 * kappa ** 2)
    raise InvalidParameter(f"no scalar exact value for {target.value}")


def leading_prediction(target: Union[str, ExpansionId], params: Dict[str, float], a: float) -> float:
    target = parse_expansion_id(target)
    kappa, beta = _require(params, "kappa", "beta")
    alpha = float(params.get("alpha", 1.0))
    if target is ExpansionId.DEXP:
        return -2 * kappa ** 2 * (kappa + 2 / beta) * a ** 4
    if target is ExpansionId.NEXP:
        return 4 * kappa ** 4 * a ** 4
    if target is ExpansionId.NEXP2:
        return -4 * kappa ** 4 * a ** 4
    if target is ExpansionId.LIMKERN:
        return lim_kern_coefficient(beta, kappa, OUTER)
    if target is ExpansionId.DALPHA:
        return -2 * kappa * (1 - alpha) ** 2 * a ** 2
    if target is ExpansionId.NALPHA:
        return -4 * kappa ** 2 * (1 - alpha) ** 2 * a ** 2
    raise InvalidParameter(f"no scalar leading term for {target.value}")


def expansion_jet(target: Union[str, ExpansionId], params: Dict[str, float],
                  order: Optional[int] = None) -> Jet:
    """The jet behind a scalar expansion id, leading zeros stripped"""
    target = parse_expansion_id(target)
    kappa, beta = _require(params, "kappa", "beta")
    alpha = float(params.get("alpha", 1.0))
    s = SpectralPoint(kappa)
    if target in (ExpansionId.DEXP, ExpansionId.DALPHA):
        jet = jet_D(s, beta, alpha, order)
    elif target in (ExpansionId.NEXP, ExpansionId.NALPHA):
        jet = jet_N(s, beta, alpha, OUTER, order)
    elif target is ExpansionId.NEXP2:
        jet = jet_N(s, beta, alpha, MIXED, order)
    elif target is ExpansionId.LIMKERN:
        ratio = jet_N(s, beta, alpha, OUTER, order).divide(jet_D(s, beta, alpha, order))
        jet = ratio.scale(1.0 / (4 * kappa ** 2))
    else:
        raise InvalidParameter(f"no scalar jet for {target.value}")
    return jet.stripped()


def richardson_ratios(target: Union[str, ExpansionId], params: Dict[str, float],
                      a_values: Sequence[float] = (1e-2, 1e-3, 1e-4), kept: int = 0,
                      jet: Optional[Jet] = None) -> List[float]:
    """
    Ratios of successive relative residuals |exact - partial sum| / |exact|.

    The partial sum keeps the leading term and `kept` further orders of the jet
    (computed from the target unless given). With every kept coefficient right
    and the next one nonzero, a step a -> a/q gives a ratio near q^(kept+1); a
    wrong coefficient k orders past the leading one drops it to about q^k.
    """
    if kept < 0:
        raise InvalidParameter(f"kept must be nonnegative, got {kept}")
    jet = (expansion_jet(target, params) if jet is None else jet).stripped()
    if kept >= len(jet):
        raise InvalidParameter(f"jet of order {jet.order} cannot keep {kept} orders past a^{jet.valuation}")
    partial = jet.truncate(jet.valuation + kept)
    errors = []
    for a in a_values:
        exact = exact_value(target, params, a)
        errors.append(abs(partial(a) - exact) / abs(exact))
    logger.debug(f"richardson {parse_expansion_id(target).value} kept={kept}: residuals {errors}")
    return [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
