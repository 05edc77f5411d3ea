import math

import numpy as np
import pytest

from delta_arrays import CouplingConfig
from errors import GridTooCoarse, InvalidParameter, NormalizationFailure
from potentials import (
    BOX, GAUSSIAN, ScaledPotential, c_of_a, diff0_bound, form_bound, form_t, make_shape,
    neumann_bound, parse_shape_spec, potential_mass, sobolev_corpus, tau, tau_alpha,
    uniform_shapes, w12_norm, w_eval,
)


@pytest.fixture
def box():
    return make_shape("box", {"h": 0.5})


@pytest.fixture
def scaled(box):
    return ScaledPotential(CouplingConfig(beta=-1.0, a=0.1), 1e-3, uniform_shapes(box))


@pytest.mark.parametrize("spec", ["box:h=0.5", "gauss:sigma=0.2", "triangle:h=1"])
def test_shapes_have_unit_mass(spec):
    shape = parse_shape_spec(spec)
    assert shape.mass == pytest.approx(1.0, abs=1e-8)


def test_shape_values(box):
    assert box(0.0) == pytest.approx(1.0)
    assert box(0.6) == 0.0
    tri = make_shape("triangle", {"h": 1.0})
    assert tri(0.0) == pytest.approx(1.0)
    assert tri(0.5) == pytest.approx(0.5)
    g = parse_shape_spec("gauss:sigma=0.2")
    assert g.id == GAUSSIAN
    assert g.half_width == pytest.approx(1.2)


def test_sqrt_moment_of_box(box):
    assert box.id == BOX
    assert box.sqrt_moment == pytest.approx((2.0 / 3.0) * math.sqrt(0.5))


def test_custom_shape_must_be_normalized():
    ok = make_shape("custom", {"x": [-1.0, 0.0, 1.0], "values": [0.0, 1.0, 0.0]})
    assert ok.mass == pytest.approx(1.0)
    with pytest.raises(NormalizationFailure):
        make_shape("custom", {"x": [-1.0, 0.0, 1.0], "values": [0.0, 2.0, 0.0]})


@pytest.mark.parametrize("spec", ["box:h", "box:h=abc", "circle:r=1", "box:h=-1"])
def test_bad_shape_specs(spec):
    with pytest.raises(InvalidParameter):
        parse_shape_spec(spec)


def test_scaled_potential_validation(box):
    cfg = CouplingConfig(beta=-1.0, a=0.1)
    with pytest.raises(InvalidParameter):
        ScaledPotential(cfg, 0.0, uniform_shapes(box))
    with pytest.raises(InvalidParameter):
        ScaledPotential(cfg, 1e-3, (box, box))


def test_potential_mass_is_total_coupling(scaled):
    # -100 + 2 * (-12)
    assert potential_mass(scaled) == pytest.approx(-124.0, rel=1e-10)


def test_w_eval_heights(scaled):
    assert w_eval(scaled, 0.0) == pytest.approx(-100.0 / 1e-3)
    assert w_eval(scaled, 0.1) == pytest.approx(-12.0 / 1e-3)
    assert w_eval(scaled, 0.05) == 0.0


def test_constants(box):
    shapes = uniform_shapes(box)
    m = (2.0 / 3.0) * math.sqrt(0.5)
    c = c_of_a(-1.0, 0.1, shapes)
    assert c == pytest.approx(math.sqrt(2.0) * 124.0 * m)
    t = tau(1e-8, 0.1, None, -1.0, shapes, 2.0)
    assert t == pytest.approx(4.0 * 1e-4 * 2.0 * c / 0.01)
    assert tau_alpha(1e-8, 0.1, None, -1.0, shapes, 2.0) == pytest.approx(t * 0.1)
    with pytest.raises(InvalidParameter):
        tau(1e-8, 0.1, None, -1.0, shapes, 0.0)


def test_bounds():
    assert neumann_bound(2, 1.0, 0.1, 0.5) == pytest.approx(2.0 * 100.0 * 0.25)
    assert diff0_bound(1.0, 0.1, 0.5) == pytest.approx(2.0 * 0.5 / (0.01 * 0.5))
    assert diff0_bound(1.0, 0.1, 1.0) == math.inf
    assert diff0_bound(1.0, 0.1, 0.4, alpha=2.0) == pytest.approx(4.0 * 0.4 / (0.1 * 0.2))
    assert diff0_bound(1.0, 0.1, 0.5, alpha=2.0) == math.inf


def test_w12_norm_of_gaussian():
    x = np.linspace(-10.0, 10.0, 20001)
    assert w12_norm(np.exp(-0.5 * x ** 2), x) == pytest.approx(math.sqrt(1.5 * math.sqrt(math.pi)), rel=1e-5)
    assert w12_norm(np.zeros_like(x), x) == 0.0


def _dense_grid(sp):
    parts = [np.linspace(-40.0, 40.0, 16001)]
    for b in sp.bumps():
        lo, hi = b.support(sp.epsilon)
        parts.append(np.linspace(lo, hi, 65))
    return np.unique(np.concatenate(parts))


@pytest.mark.parametrize("j", [-1, 0, 1])
def test_form_estimate_holds_on_corpus(scaled, j):
    grid = _dense_grid(scaled)
    corpus = sobolev_corpus()
    assert len(corpus) == 20
    for (name_u, u), (name_v, v) in zip(corpus, corpus[::-1]):
        uu, vv = u(grid), v(grid)
        t = abs(form_t(j, scaled, grid, uu, vv))
        bound = form_bound(j, scaled, w12_norm(uu, grid), w12_norm(vv, grid))
        assert t <= 1.001 * bound, f"{name_u} x {name_v}"


def test_form_needs_samples_inside_support(scaled):
    grid = np.linspace(-1.0, 1.0, 11)
    with pytest.raises(GridTooCoarse):
        form_t(0, scaled, grid, np.ones_like(grid), np.ones_like(grid))
    with pytest.raises(InvalidParameter):
        form_t(2, scaled, grid, grid, grid)


FINE = np.linspace(-40.0, 40.0, 160001)


def test_sup_norm_is_controlled_by_w12_norm():
    for name, f in sobolev_corpus():
        values = f(FINE)
        assert np.max(np.abs(values)) <= (1.0 + 1e-3) * w12_norm(values, FINE) / math.sqrt(2.0), name


def test_corpus_is_half_holder():
    rng = np.random.default_rng(11)
    inner = np.flatnonzero(np.abs(FINE) <= 5.0)
    for name, f in sobolev_corpus():
        values = f(FINE)
        norm = w12_norm(values, FINE)
        i, j = rng.choice(inner, size=(2, 200))
        gap = np.abs(values[i] - values[j])
        assert np.all(gap <= (1.0 + 1e-3) * norm * np.sqrt(np.abs(FINE[i] - FINE[j]))), name


@pytest.mark.parametrize("spec", ["box:h=0.5", "gauss:sigma=0.2"])
def test_form_estimate_holds_for_every_corpus_pair(spec):
    sp = ScaledPotential(CouplingConfig(beta=-1.0, a=0.1), 1e-3, uniform_shapes(parse_shape_spec(spec)))
    grid = _dense_grid(sp)
    samples = [(name, f(grid)) for name, f in sobolev_corpus()]
    norms = [w12_norm(values, grid) for _, values in samples]
    for j in (-1, 0, 1):
        for (name_u, uu), nu in zip(samples, norms):
            for (name_v, vv), nv in zip(samples, norms):
                t = abs(form_t(j, sp, grid, uu, vv))
                assert t <= 1.001 * form_bound(j, sp, nu, nv), f"{j}: {name_u} x {name_v}"
