"""
Closed-form resolvent kernels of the exactly solvable 1D operators.

All kernels are evaluated on the imaginary axis k = i*kappa (kappa > 0), where
they are real. Scalar entry points return KernelValue; the *_values helpers
accept numpy arrays and are what the quadrature code calls.
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import InvalidParameter, ResonantSpectralPoint
from settings import DEFAULTS

logger = logging.getLogger(__name__)

FREE = "free"
SIGNED = "signed"
DELTA = "delta"
DELTA_PRIME = "delta-prime"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter k = i*kappa; the energy parameter is -kappa^2"""
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.kappa) or self.kappa <= 0:
            raise InvalidParameter(f"kappa must be positive and finite, got {self.kappa}")

    @property
    def energy(self) -> float:
        return -self.kappa ** 2


@dataclass(frozen=True)
class KernelValue:
    value: float
    model_tag: str

    def __float__(self) -> float:
        return self.value


def free_values(kappa: float, x, xp):
    """e^{-kappa|x-x'|} / (2 kappa), broadcasting over arrays"""
    return np.exp(-kappa * np.abs(np.subtract(x, xp))) / (2.0 * kappa)


def signed_values(kappa: float, x, xp):
    d = np.subtract(x, xp)
    return np.sign(d) * np.exp(-kappa * np.abs(d)) / (2.0 * kappa)


def delta_prime_coefficient(beta: float, kappa: float) -> float:
    """Weight beta / (2(2 + beta*kappa)) of the sgn*sgn*e*e correction"""
    if beta == 0 or not math.isfinite(beta):
        raise InvalidParameter(f"delta-prime strength must be nonzero and finite, got {beta}")
    denom = 2.0 + beta * kappa
    if abs(denom) < DEFAULTS.resonance_tol * (1.0 + abs(beta * kappa)):
        raise ResonantSpectralPoint(
            f"2 + beta*kappa = {denom:.3e} vanishes at beta={beta}, kappa={kappa}; "
            f"-kappa^2 is the delta-prime eigenvalue (kappa = -2/beta excluded)"
        )
    return beta / (2.0 * denom)


def delta_prime_values(beta: float, y: float, kappa: float, x, xp):
    c = delta_prime_coefficient(beta, kappa)
    dx = np.subtract(x, y)
    dxp = np.subtract(xp, y)
    corr = np.sign(dx) * np.sign(dxp) * np.exp(-kappa * (np.abs(dx) + np.abs(dxp)))
    return free_values(kappa, x, xp) + c * corr


def dirichlet_values(y: float, kappa: float, x, xp):
    """Half-line Dirichlet Green's functions glued at y, zero across y"""
    dx = np.subtract(x, y)
    dxp = np.subtract(xp, y)
    near = np.minimum(np.abs(dx), np.abs(dxp))
    far = np.maximum(np.abs(dx), np.abs(dxp))
    # e^{-k far} sinh(k near) / k without overflow
    same = -np.exp(-kappa * (far - near)) * np.expm1(-2.0 * kappa * near) / (2.0 * kappa)
    return np.where(dx * dxp > 0, same, 0.0)


def delta_values(coupling: float, y: float, kappa: float, x, xp):
    """Single delta of coupling c: G - [1/c + 1/(2 kappa)]^{-1} G(x-y) G(x'-y)"""
    gamma = 1.0 / coupling + 1.0 / (2.0 * kappa)
    return free_values(kappa, x, xp) - free_values(kappa, x, y) * free_values(kappa, xp, y) / gamma


def free_kernel(s: SpectralPoint, x: float, xp: float) -> KernelValue:
    return KernelValue(float(free_values(s.kappa, x, xp)), FREE)


def signed_kernel(s: SpectralPoint, x: float, xp: float) -> KernelValue:
    """sgn(x-x') e^{-kappa|x-x'|}/(2 kappa) with sgn(0) = 0"""
    return KernelValue(float(signed_values(s.kappa, x, xp)), SIGNED)


def delta_prime_kernel(beta: float, y: float, s: SpectralPoint, x: float, xp: float) -> KernelValue:
    """
    Resolvent kernel of the delta-prime interaction of strength beta at y.

    Raises ResonantSpectralPoint when 2 + beta*kappa is numerically zero.
    """
    return KernelValue(float(delta_prime_values(beta, y, s.kappa, x, xp)), DELTA_PRIME)


def dirichlet_kernel(y: float, s: SpectralPoint, x: float, xp: float) -> KernelValue:
    return KernelValue(float(dirichlet_values(y, s.kappa, x, xp)), DIRICHLET)


def delta_kernel(coupling: float, y: float, s: SpectralPoint, x: float, xp: float) -> KernelValue:
    if coupling == 0 or not math.isfinite(coupling):
        raise InvalidParameter(f"delta coupling must be nonzero and finite, got {coupling}")
    return KernelValue(float(delta_values(coupling, y, s.kappa, x, xp)), DELTA)


def delta_prime_jump_residual(beta: float, y: float, s: SpectralPoint, xp: float,
                              h: float = 1e-5) -> Tuple[float, float]:
    """
    Check the delta-prime matching conditions of x -> kernel(x, x') at y.

    Returns (derivative mismatch, jump residual) where the jump residual is
    [psi(y+) - psi(y-)] - beta * psi'(y). One-sided values and derivatives
    come from three-point extrapolation, so both residuals are O(h^2).
    """
    offsets = np.array([1.0, 2.0, 3.0]) * h
    right = delta_prime_values(beta, y, s.kappa, y + offsets, xp)
    left = delta_prime_values(beta, y, s.kappa, y - offsets, xp)

    psi_right = 3.0 * right[0] - 3.0 * right[1] + right[2]
    psi_left = 3.0 * left[0] - 3.0 * left[1] + left[2]
    d_right = (-5.0 * right[0] + 8.0 * right[1] - 3.0 * right[2]) / (2.0 * h)
    d_left = (5.0 * left[0] - 8.0 * left[1] + 3.0 * left[2]) / (2.0 * h)

    derivative_mismatch = d_right - d_left
    jump_residual = (psi_right - psi_left) - beta * 0.5 * (d_right + d_left)
    return float(derivative_mismatch), float(jump_residual)
