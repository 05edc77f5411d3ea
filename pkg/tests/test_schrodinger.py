import math

import numpy as np
import pytest
from scipy.optimize import brentq

from delta_arrays import CouplingConfig, cs_couplings, array_values
from errors import EigenvalueHit, InvalidParameter
from kernels import SpectralPoint, delta_values, free_values
from potentials import ScaledPotential, make_shape, potential_mass, uniform_shapes
from schrodinger import (
    POTENTIAL, PiecewiseConstantPotential, decaying_solutions, discretize,
    potential_resolvent_kernel, single_delta_box,
)
from settings import DEFAULTS
from spectra import find_bound_states

X = np.linspace(-3.0, 3.0, 13)


def test_piecewise_potential_validation():
    with pytest.raises(InvalidParameter):
        PiecewiseConstantPotential((0.0, 1.0), (1.0, 2.0))
    with pytest.raises(InvalidParameter):
        PiecewiseConstantPotential((1.0, 0.0), (1.0,))
    pot = PiecewiseConstantPotential((0.0, 1.0, 2.0), (3.0, -1.0))
    np.testing.assert_allclose(pot(np.array([-0.5, 0.5, 1.5, 2.5])), [0.0, 3.0, -1.0, 0.0])


def test_empty_potential_is_free():
    pair = decaying_solutions(PiecewiseConstantPotential.empty(), SpectralPoint(1.5))
    assert pair.wronskian == pytest.approx(-3.0)
    Xa, Xb = np.meshgrid(X, X, indexing="ij")
    np.testing.assert_allclose(pair.kernel_values(Xa, Xb), free_values(1.5, Xa, Xb), rtol=1e-13)
    assert pair.kernel_values(0.0, 0.0) == pytest.approx(1.0 / 3.0)


def test_zero_cells_are_free():
    pot = PiecewiseConstantPotential((-1.0, 0.5, 2.0), (0.0, 0.0))
    pair = decaying_solutions(pot, SpectralPoint(2.0))
    Xa, Xb = np.meshgrid(X, X, indexing="ij")
    np.testing.assert_allclose(pair.kernel_values(Xa, Xb), free_values(2.0, Xa, Xb), rtol=1e-12)


def test_kernel_is_symmetric_with_constant_wronskian():
    pot = PiecewiseConstantPotential((-1.0, -0.2, 0.3, 1.0), (-5.0, 20.0, -3.0))
    pair = decaying_solutions(pot, SpectralPoint(2.5))
    assert pair.wronskian_drift < 1e-10
    Xa, Xb = np.meshgrid(X, X, indexing="ij")
    K = pair.kernel_values(Xa, Xb)
    np.testing.assert_allclose(K, K.T, rtol=1e-12)


def test_narrow_box_approaches_delta():
    s = SpectralPoint(2.0)
    pair = decaying_solutions(single_delta_box(-1.0, 1e-4), s)
    Xa, Xb = np.meshgrid(X, X, indexing="ij")
    err = np.max(np.abs(pair.kernel_values(Xa, Xb) - delta_values(-1.0, 0.0, 2.0, Xa, Xb)))
    assert err < 1e-3


def test_square_well_eigenvalue_is_detected():
    # even state of the well -V0 on [-1, 1] at kappa = 1: k tan k = 1, V0 = k^2 + 1
    k = brentq(lambda t: t * math.tan(t) - 1.0, 0.5, 1.2, xtol=1e-15)
    well = PiecewiseConstantPotential((-1.0, 1.0), (-(k * k + 1.0),))
    with pytest.raises(EigenvalueHit):
        decaying_solutions(well, SpectralPoint(1.0))
    decaying_solutions(well, SpectralPoint(1.2))


def test_discretize_conserves_mass():
    sp = ScaledPotential(CouplingConfig(beta=-1.0, a=0.1), 1e-3, uniform_shapes(make_shape("box")))
    pot = discretize(sp)
    widths = np.diff(pot.breakpoints)
    assert float(np.dot(widths, pot.values)) == pytest.approx(potential_mass(sp), rel=1e-10)
    # three bumps of 16 cells and the two gaps between them
    assert pot.cells == 50
    with pytest.raises(InvalidParameter):
        discretize(sp, cells_per_bump=4)


def test_potential_kernel_approaches_triple():
    cfg = CouplingConfig(beta=-1.0, a=0.5)
    sp = ScaledPotential(cfg, 1e-6, uniform_shapes(make_shape("box", {"h": 0.5})))
    s = SpectralPoint(8.0)
    arr = cs_couplings(cfg)
    for x, xp in [(-1.0, 0.7), (0.2, -0.4), (1.3, 0.7), (0.2, 0.2)]:
        kv = potential_resolvent_kernel(sp, s, x, xp)
        assert kv.model_tag == POTENTIAL
        assert kv.value == pytest.approx(float(array_values(arr, 8.0, x, xp)), abs=1e-4)


def test_narrow_box_error_shrinks_with_width():
    Xa, Xb = np.meshgrid(X, X, indexing="ij")
    reference = delta_values(-1.0, 0.0, 2.0, Xa, Xb)
    errors = []
    for eps in (1e-2, 1e-3, 1e-4):
        pair = decaying_solutions(single_delta_box(-1.0, eps), SpectralPoint(2.0))
        errors.append(float(np.max(np.abs(pair.kernel_values(Xa, Xb) - reference))))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-3


def test_wronskian_is_conserved_through_a_deep_triple():
    cfg = CouplingConfig(beta=-1.0, a=0.1)
    sp = ScaledPotential(cfg, 1e-3, uniform_shapes(make_shape("box")))
    levels = [b.kappa_star for b in find_bound_states(cfg, kappa_max=200.0)]
    kappa = max((3.0, 5.0, 8.0, 12.0),
                key=lambda k: min((abs(k - level) for level in levels), default=math.inf))
    pair = decaying_solutions(discretize(sp), SpectralPoint(kappa))
    assert pair.wronskian_drift < DEFAULTS.wronskian_rtol


def test_gaussian_discretization_converges_under_refinement():
    sp = ScaledPotential(CouplingConfig(beta=-1.0, a=0.5), 1e-2, uniform_shapes(make_shape("gauss")))
    s = SpectralPoint(8.0)
    points = np.array([-1.0, 0.2, 1.3]), np.array([0.7, -0.3, 0.3])
    reference = decaying_solutions(discretize(sp, 512), s).kernel_values(*points)
    errors = [
        float(np.max(np.abs(decaying_solutions(discretize(sp, n), s).kernel_values(*points) - reference)))
        for n in (16, 32, 64)
    ]
    assert errors[1] < 0.5 * errors[0]
    assert errors[2] < 0.5 * errors[1]
