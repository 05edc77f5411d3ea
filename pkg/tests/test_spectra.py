import numpy as np
import pytest

from delta_arrays import CouplingConfig, cs_couplings, gamma_matrix, gamma_determinant
from errors import InvalidParameter, ThresholdNotFound
from kernels import SpectralPoint
from settings import DEFAULTS
from spectra import (
    SPEC1, a0_threshold, find_bound_states, kappa_grid, secular_residuals,
    spectral_window_scan,
)


def test_attractive_triple_has_the_delta_prime_state():
    cfg = CouplingConfig(beta=-1.0, a=0.01)
    states = find_bound_states(cfg)
    assert len(states) == 1
    b = states[0]
    assert b.branch == SPEC1
    assert b.energy == pytest.approx(-4.0, abs=0.1)
    assert b.energy == pytest.approx(-b.kappa_star ** 2)


def test_bound_state_solves_the_secular_equation():
    cfg = CouplingConfig(beta=-1.0, a=0.01)
    (b,) = find_bound_states(cfg)
    r1, _ = secular_residuals(cfg, SpectralPoint(b.kappa_star))
    assert abs(r1) < 1e-10
    det = gamma_determinant(gamma_matrix(cs_couplings(cfg), SpectralPoint(b.kappa_star)))
    det_off = gamma_determinant(gamma_matrix(cs_couplings(cfg), SpectralPoint(1.1 * b.kappa_star)))
    assert abs(det) < 1e-6 * abs(det_off)


@pytest.mark.parametrize("beta, alpha", [(1.0, 1.0), (-1.0, 2.0), (-1.0, 0.5)])
@pytest.mark.parametrize("a", [0.01, 0.001])
def test_no_states_in_window(beta, alpha, a):
    assert find_bound_states(CouplingConfig(beta=beta, a=a, alpha=alpha)) == []


@pytest.mark.parametrize("a", [0.1, 0.05, 0.025])
def test_state_rises_toward_limit(a):
    coarse = find_bound_states(CouplingConfig(beta=-1.0, a=a))
    fine = find_bound_states(CouplingConfig(beta=-1.0, a=a / 2))
    assert len(coarse) == len(fine) == 1
    assert coarse[0].kappa_star < fine[0].kappa_star < 2.0


def test_kappa_grid_requires_a_window():
    with pytest.raises(InvalidParameter):
        kappa_grid(1e-4)


def test_a0_threshold():
    a0 = a0_threshold(SpectralPoint(3.0), -1.0)
    assert 0.1 < a0 < 0.3
    cfg = CouplingConfig(beta=-1.0, a=a0)
    assert all(b.kappa_star < 3.0 for b in find_bound_states(cfg, kappa_max=12.0))


def test_a0_threshold_below_limit_eigenvalue():
    with pytest.raises(ThresholdNotFound):
        a0_threshold(SpectralPoint(1.0), -1.0)


def test_a0_threshold_reaches_the_cap_for_repulsive_triples():
    # the cap a = beta/2 leaves a lone repulsive center and must still count
    assert DEFAULTS.a0_grid_cap == pytest.approx(1.0 / 2.0)
    assert a0_threshold(SpectralPoint(1.0), 1.0) == pytest.approx(DEFAULTS.a0_grid_cap)


def test_spectral_window_scan_columns():
    df = spectral_window_scan(CouplingConfig(beta=-1.0, a=0.05), [1.0, 2.0, 3.0])
    assert list(df.columns) == ["kappa", "det_gamma", "f1", "f2", "r1", "r2"]
    assert len(df) == 3
    np.testing.assert_allclose(df["r1"], df["f1"], atol=1e-12)


def test_bound_state_converges_at_first_order():
    grid = [0.1, 0.05, 0.025, 0.0125]
    gaps = [abs(find_bound_states(CouplingConfig(beta=-1.0, a=a))[0].kappa_star - 2.0) for a in grid]
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    slope, _ = np.polyfit(np.log(grid), np.log(gaps), 1)
    assert 0.7 <= slope <= 1.3
