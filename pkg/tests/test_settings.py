import pytest

from settings import DEFAULTS, NumericsConfig, load_numerics_config


def test_defaults():
    cfg = NumericsConfig()
    assert cfg.resonance_tol == 1e-9
    assert cfg.hs_points == 240
    assert cfg.rate_window == (0.7, 1.3)
    assert DEFAULTS.series_order == 6


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("DELTAPRIME_HS_POINTS", "480")
    monkeypatch.setenv("DELTAPRIME_RATE_WINDOW", "0.5,1.5")
    monkeypatch.setenv("DELTAPRIME_KAPPA_MAX", "not-a-number")
    cfg = load_numerics_config()
    assert cfg.hs_points == 480
    assert cfg.rate_window == (0.5, 1.5)
    assert cfg.kappa_max == 10.0


def test_series_tolerances_are_tied():
    cfg = NumericsConfig(series_zero_rtol=1e-13)
    assert cfg.series_resonance_tol == pytest.approx(1e-7)
    assert DEFAULTS.series_resonance_tol > DEFAULTS.series_zero_rtol
