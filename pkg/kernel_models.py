"""
Kernel models: one evaluable object per resolvent family.

Every model answers evaluate(s, x, x') on broadcast arrays and lists the
points where its kernel has kinks, which the quadrature uses as panel edges.
Models are immutable descriptors; per-kappa work (Gamma^-1, decaying
solutions) is cached on first use.
"""

import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from delta_arrays import ARRAY, DeltaArray, array_values, gamma_inverse, gamma_matrix
from errors import InvalidParameter
from kernels import (
    DELTA_PRIME, DIRICHLET, FREE, SpectralPoint, delta_prime_values,
    dirichlet_values, free_values,
)
from potentials import ScaledPotential
from schrodinger import POTENTIAL, DecayingSolutionPair, decaying_solutions, discretize

logger = logging.getLogger(__name__)


class KernelModel(ABC):
    tag: str = ""

    @abstractmethod
    def evaluate(self, s: SpectralPoint, x, xp) -> np.ndarray:
        """Kernel values on broadcast (x, x')"""

    def breakpoints(self) -> List[float]:
        return []

    def describe(self) -> Dict[str, object]:
        return {"model": self.tag}


@dataclass(frozen=True)
class Free(KernelModel):
    tag = FREE

    def evaluate(self, s, x, xp):
        return free_values(s.kappa, x, xp)


@dataclass(frozen=True)
class DeltaPrime(KernelModel):
    beta: float
    y: float = 0.0
    tag = DELTA_PRIME

    def evaluate(self, s, x, xp):
        return delta_prime_values(self.beta, self.y, s.kappa, x, xp)

    def breakpoints(self):
        return [self.y]

    def describe(self):
        return {"model": self.tag, "beta": self.beta, "y": self.y}


@dataclass(frozen=True)
class Dirichlet(KernelModel):
    y: float = 0.0
    tag = DIRICHLET

    def evaluate(self, s, x, xp):
        return dirichlet_values(self.y, s.kappa, x, xp)

    def breakpoints(self):
        return [self.y]

    def describe(self):
        return {"model": self.tag, "y": self.y}


@dataclass(eq=False)
class DeltaArrayModel(KernelModel):
    arr: DeltaArray
    _inverse: Dict[float, np.ndarray] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    tag = ARRAY

    def gamma_inverse_at(self, s: SpectralPoint) -> np.ndarray:
        with self._lock:
            if s.kappa not in self._inverse:
                self._inverse[s.kappa] = gamma_inverse(gamma_matrix(self.arr, s)).entries
            return self._inverse[s.kappa]

    def evaluate(self, s, x, xp):
        return array_values(self.arr, s.kappa, x, xp, gamma_inv=self.gamma_inverse_at(s))

    def breakpoints(self):
        return list(self.arr.centers)

    def describe(self):
        return {"model": self.tag, "couplings": list(self.arr.couplings),
                "centers": list(self.arr.centers)}


@dataclass(eq=False)
class PotentialModel(KernelModel):
    sp: ScaledPotential
    cells_per_bump: Optional[int] = None
    _pairs: Dict[float, DecayingSolutionPair] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    tag = POTENTIAL

    def solutions(self, s: SpectralPoint) -> DecayingSolutionPair:
        with self._lock:
            if s.kappa not in self._pairs:
                pot = discretize(self.sp, self.cells_per_bump)
                self._pairs[s.kappa] = decaying_solutions(pot, s)
                logger.debug(f"decaying solutions over {pot.cells} cells at kappa={s.kappa}")
            return self._pairs[s.kappa]

    def evaluate(self, s, x, xp):
        return self.solutions(s).kernel_values(x, xp)

    def breakpoints(self):
        # support ends only; inside a bump the kernel is C^1
        pts = []
        for b in self.sp.bumps():
            pts.extend(b.support(self.sp.epsilon))
        return pts

    def describe(self):
        cfg = self.sp.cfg
        return {"model": self.tag, "beta": cfg.beta, "a": cfg.a, "alpha": cfg.alpha,
                "y": cfg.y, "epsilon": self.sp.epsilon,
                "shapes": [s.id for s in self.sp.shapes]}


def make_model(tag: str, **params) -> KernelModel:
    """Model from its tag: free, delta-prime, dirichlet, delta-array, potential"""
    if tag == FREE:
        return Free()
    if tag == DELTA_PRIME:
        return DeltaPrime(beta=float(params["beta"]), y=float(params.get("y", 0.0)))
    if tag == DIRICHLET:
        return Dirichlet(y=float(params.get("y", 0.0)))
    if tag == DeltaArrayModel.tag:
        return DeltaArrayModel(arr=params["arr"])
    if tag == PotentialModel.tag:
        return PotentialModel(sp=params["sp"], cells_per_bump=params.get("cells_per_bump"))
    raise InvalidParameter(f"unknown kernel model {tag!r}")
