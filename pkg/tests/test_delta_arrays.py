import math

import numpy as np
import pytest

from delta_arrays import (
    MIXED, OUTER, CouplingConfig, DeltaArray, GammaMatrix, array_resolvent_kernel, array_values,
    cs_couplings, cs_couplings_perturbed, dirichlet_limit_coefficient, gamma_determinant,
    gamma_from_uvw, gamma_inverse, gamma_inverse_closed_form, gamma_matrix,
    lim_kern_coefficient, secular_factors, uvw, uvw_values,
)
from errors import DegenerateCoupling, InvalidParameter, SingularGamma, SingularU
from kernels import SpectralPoint, delta_prime_values, dirichlet_values, free_values
from series import expected_gamma_inv_leading
from settings import DEFAULTS
from spectra import find_bound_states


def test_cs_couplings_values():
    arr = cs_couplings(CouplingConfig(beta=-1.0, a=0.1))
    assert arr.couplings == pytest.approx((-12.0, -100.0, -12.0))
    assert arr.centers == pytest.approx((-0.1, 0.0, 0.1))


def test_cs_couplings_scale_with_alpha_and_follow_center():
    arr = cs_couplings(CouplingConfig(beta=-1.0, a=0.1, alpha=2.0, y=1.0))
    assert arr.couplings == pytest.approx((-24.0, -200.0, -24.0))
    assert arr.centers == pytest.approx((0.9, 1.0, 1.1))


def test_outer_coupling_degenerates_at_half_beta():
    with pytest.raises(DegenerateCoupling):
        cs_couplings(CouplingConfig(beta=2.0, a=1.0))


def test_perturbed_couplings_reduce_to_plain_ones():
    cfg = CouplingConfig(beta=-1.0, a=0.05)
    assert cs_couplings_perturbed(cfg, 0.0, 0.0) == cs_couplings(cfg)
    arr = cs_couplings_perturbed(cfg, 0.1, 0.5)
    assert arr.couplings[1] == pytest.approx(-400.0 * 1.1)
    assert arr.couplings[0] == pytest.approx(-22.0 + 0.5)


@pytest.mark.parametrize("kwargs", [
    dict(beta=0.0, a=0.1),
    dict(beta=-1.0, a=0.0),
    dict(beta=-1.0, a=0.1, alpha=0.0),
    dict(beta=float("inf"), a=0.1),
])
def test_coupling_config_validation(kwargs):
    with pytest.raises(InvalidParameter):
        CouplingConfig(**kwargs)


def test_delta_array_validation():
    with pytest.raises(InvalidParameter):
        DeltaArray(couplings=(1.0, 2.0), centers=(0.5, 0.5))
    with pytest.raises(InvalidParameter):
        DeltaArray(couplings=(1.0,), centers=(0.0, 1.0))
    with pytest.raises(InvalidParameter):
        DeltaArray(couplings=(0.0,), centers=(0.0,))


def test_uvw_values_and_singular_u():
    p = uvw_values(-1.0, 0.1, 3.0)
    assert p.u == pytest.approx(2 * -1.0 * 3.0 * 0.1 / (0.2 + 1.0))
    assert p.v == pytest.approx(-0.06)
    assert p.w == pytest.approx(math.exp(-0.3))
    assert uvw_values(-1.0, 0.0, 3.0).u == 0.0
    with pytest.raises(SingularU):
        uvw_values(1.0, 0.5, 3.0)


@pytest.mark.parametrize("alpha", [1.0, 2.0, -0.5])
def test_gamma_from_uvw_matches_generic_gamma(alpha):
    cfg = CouplingConfig(beta=-1.0, a=0.2, alpha=alpha)
    s = SpectralPoint(3.0)
    generic = gamma_matrix(cs_couplings(cfg), s).entries
    structured = gamma_from_uvw(uvw(cfg, s), s, scale=1.0 / alpha).entries
    np.testing.assert_allclose(structured, generic, rtol=1e-13)


def test_determinant_factorizes():
    cfg = CouplingConfig(beta=-1.0, a=0.2)
    s = SpectralPoint(3.0)
    p = uvw(cfg, s)
    f1, f2 = secular_factors(p)
    det = gamma_determinant(gamma_from_uvw(p, s))
    assert det * (2.0 * s.kappa) ** 3 == pytest.approx(-f1 * f2, rel=1e-10)


@pytest.mark.parametrize("a", [0.3, 0.2, 0.1, 0.05, 0.02])
@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_closed_form_inverse_matches_lu(a, alpha):
    cfg = CouplingConfig(beta=-1.0, a=a, alpha=alpha)
    s = SpectralPoint(3.0)
    gm = gamma_matrix(cs_couplings(cfg), s)
    if np.linalg.cond(gm.entries) > 1e8:
        pytest.skip("too close to an eigenvalue for an entrywise comparison")
    lu = gamma_inverse(gm).entries
    closed = gamma_inverse_closed_form(cfg, s).entries
    np.testing.assert_allclose(closed, lu, rtol=1e-8, atol=1e-8 * np.max(np.abs(lu)))


def test_gamma_inverse_is_inverse():
    arr = DeltaArray(couplings=(1.5, -2.0, 0.7, 3.0), centers=(-1.0, 0.0, 0.4, 2.0))
    gm = gamma_matrix(arr, SpectralPoint(1.3))
    inv = gamma_inverse(gm).entries
    np.testing.assert_allclose(inv @ gm.entries, np.eye(4), atol=1e-12)


def test_singular_gamma_is_reported():
    with pytest.raises(SingularGamma):
        gamma_inverse(GammaMatrix(entries=np.ones((2, 2)), kappa=SpectralPoint(1.0)))


def test_small_spacing_gamma_is_not_singular():
    # det ~ 5e-17 here, yet the matrix is far from singular
    kappa, beta, a = 3.0, -1.0, 1e-4
    gm = gamma_matrix(cs_couplings(CouplingConfig(beta=beta, a=a)), SpectralPoint(kappa))
    assert abs(gamma_determinant(gm)) < 1e-15
    inv = gamma_inverse(gm).entries
    np.testing.assert_allclose(inv @ gm.entries, np.eye(3), atol=1e-6)
    np.testing.assert_allclose(a ** 2 * inv, expected_gamma_inv_leading(kappa, beta), atol=1e-2)


def test_empty_array_is_free():
    arr = DeltaArray(couplings=(), centers=())
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(array_values(arr, 2.0, x, 0.3), free_values(2.0, x, 0.3))


def test_array_kernel_is_symmetric():
    arr = cs_couplings(CouplingConfig(beta=-1.0, a=0.1))
    s = SpectralPoint(4.0)
    assert array_resolvent_kernel(arr, s, 0.3, -0.7).value == pytest.approx(
        array_resolvent_kernel(arr, s, -0.7, 0.3).value, rel=1e-12)


def test_lim_kern_coefficient():
    assert lim_kern_coefficient(-1.0, 3.0, OUTER) == pytest.approx(-0.5)
    assert lim_kern_coefficient(-1.0, 3.0, MIXED) == pytest.approx(0.5)
    assert dirichlet_limit_coefficient(2.0) == pytest.approx(0.25)
    with pytest.raises(InvalidParameter):
        lim_kern_coefficient(-1.0, 3.0, "inner")


@pytest.mark.parametrize("x, xp", [(0.5, 0.8), (-0.5, 0.8), (-0.3, -1.2)])
def test_triple_approaches_delta_prime_pointwise(x, xp):
    kappa, beta = 3.0, -1.0
    target = float(delta_prime_values(beta, 0.0, kappa, x, xp))
    errors = []
    for a in (1e-2, 1e-3):
        arr = cs_couplings(CouplingConfig(beta=beta, a=a))
        errors.append(abs(float(array_values(arr, kappa, x, xp)) - target))
    assert errors[1] < 0.2 * errors[0]
    assert errors[1] < 2e-3


def test_unbalanced_triple_decouples_the_half_lines():
    kappa = 1.0
    arr = cs_couplings(CouplingConfig(beta=-1.0, a=1e-4, alpha=2.0))
    same = float(array_values(arr, kappa, 0.5, 0.8))
    assert same == pytest.approx(float(dirichlet_values(0.0, kappa, 0.5, 0.8)), rel=0.01)
    assert abs(float(array_values(arr, kappa, -0.5, 0.8))) < 0.01


def test_closed_form_inverse_matches_lu_on_random_triples():
    rng = np.random.default_rng(2024)
    eps = np.finfo(float).eps
    checked = 0
    for _ in range(5000):
        if checked == 200:
            break
        beta = rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0])
        a, kappa = rng.uniform(0.0, 0.3), rng.uniform(0.5, 6.0)
        cfg = CouplingConfig(beta=beta, a=a)
        try:
            levels = [b.kappa_star for b in find_bound_states(cfg, kappa_max=max(DEFAULTS.kappa_max, 4 * kappa))]
            # below a0(kappa) and away from the lower levels
            if any(level >= 0.95 * kappa for level in levels):
                continue
            s = SpectralPoint(kappa)
            gm = gamma_matrix(cs_couplings(cfg), s)
            lu = gamma_inverse(gm).entries
            closed = gamma_inverse_closed_form(cfg, s).entries
        except (DegenerateCoupling, SingularU, SingularGamma):
            continue
        # both sides lose eps * cond to the a^-2 growth of the inverse
        tol = max(1e-10, 256 * eps * np.linalg.cond(gm.entries))
        scale = np.max(np.abs(lu))
        assert np.max(np.abs(closed - lu)) <= tol * scale, f"beta={beta}, a={a}, kappa={kappa}"
        checked += 1
    assert checked == 200
