import numpy as np
import pytest

from presto.errors import ConfigError, SeriesTooShort
from presto.forecast import ArimaForecaster, DriftForecaster, ForecasterSpec, _invertible, fit, forecast

SPECS = [ForecasterSpec("drift"), ForecasterSpec("robust-linear"), ForecasterSpec("arima", (1, 1, 0)),
         ForecasterSpec("arima", (2, 1, 1)), ForecasterSpec("arima", (1, 0, 0)), ForecasterSpec("arima", (0, 1, 2))]


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_constant_series(spec):
    out = forecast(fit(spec, [5.0] * 50), 10)
    assert np.allclose(out, 5.0, atol=1e-12)


def test_arithmetic_series_drift():
    out = forecast(fit(ForecasterSpec("drift"), np.arange(1, 101)), 3)
    assert out.tolist() == [101, 102, 103]


def test_drift_on_short_line():
    # two points are below the four-observation minimum
    with pytest.raises(SeriesTooShort):
        fit(ForecasterSpec("drift"), [0, 1])
    out = forecast(fit(ForecasterSpec("drift"), [0, 1, 2, 3]), 240)
    assert out.tolist() == list(range(4, 244))


def test_theil_sen_slope():
    rng = np.random.default_rng(42)
    t = np.arange(360)
    y = 0.2 * t + rng.normal(0, 0.1, 360)
    f = fit(ForecasterSpec("robust-linear"), y)
    assert abs(f.slope - 0.2) <= 0.02
    ls_slope = np.polyfit(t, y, 1)[0]
    assert abs(f.slope - ls_slope) <= 1e-3


@pytest.mark.parametrize("spec", [ForecasterSpec("drift"), ForecasterSpec("robust-linear")], ids=str)
def test_exact_lines(spec):
    y = 3.5 - 0.25 * np.arange(40)
    out = forecast(fit(spec, y), 20)
    assert np.allclose(out, 3.5 - 0.25 * np.arange(40, 60), atol=1e-12)


def test_exact_line_arima_is_degenerate():
    y = 1 + 0.5 * np.arange(30)
    f = fit(ForecasterSpec(), y)
    assert isinstance(f, DriftForecaster) and f.degenerate
    assert np.allclose(forecast(f, 5), 1 + 0.5 * np.arange(30, 35))


@pytest.mark.parametrize("spec", SPECS, ids=str)
@pytest.mark.parametrize("h", [1, 17, 240])
def test_forecast_length(spec, h):
    y = np.cumsum(np.random.default_rng(1).normal(0.1, 1, 100))
    assert len(forecast(fit(spec, y), h)) == h


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_shift_equivariance(spec):
    rng = np.random.default_rng(3)
    y = np.cumsum(rng.normal(0.05, 0.3, 200))
    base = forecast(fit(spec, y), 60)
    for c in (-7.5, 0.3, 123.0):
        assert np.max(np.abs(forecast(fit(spec, y + c), 60) - (base + c))) <= 1e-9


def test_arima_010_is_drift():
    rng = np.random.default_rng(4)
    for _ in range(20):
        y = np.cumsum(rng.normal(rng.uniform(-1, 1), 1, int(rng.integers(10, 300))))
        a = forecast(fit(ForecasterSpec("arima", (0, 1, 0)), y), 30)
        d = forecast(fit(ForecasterSpec("drift"), y), 30)
        assert np.allclose(a, d, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_arima_110_monotone_forecast(seed):
    rng = np.random.default_rng(seed)
    y = np.sort(rng.uniform(0, 1, 360))  # monotone like a degradation trend
    f = fit(ForecasterSpec(), y)
    if isinstance(f, DriftForecaster):
        pytest.skip("degenerate input")
    out = forecast(f, 240)
    phi = f.ar[0]
    if 0 <= phi < 1:
        # increments w_k = c + phi w_{k-1} stay on the sign of c once the last
        # observed increment and c agree in sign
        w_last = y[-1] - y[-2]
        inc = np.diff(np.r_[y[-1], out])
        if f.const >= 0 and w_last >= 0:
            assert np.all(inc >= -1e-15)
        assert np.all(np.abs(np.diff(inc)) <= np.abs(inc[0]) + abs(f.const) + 1e-12)


def test_arima_recovers_ar_coefficient():
    rng = np.random.default_rng(11)
    w = np.zeros(3000)
    for t in range(1, len(w)):
        w[t] = 0.2 + 0.6 * w[t - 1] + rng.normal()
    f = fit(ForecasterSpec("arima", (1, 0, 0)), w)
    assert isinstance(f, ArimaForecaster)
    assert f.ar[0] == pytest.approx(0.6, abs=0.05)
    assert f.const == pytest.approx(0.2, abs=0.1)
    assert f.sigma2 == pytest.approx(1.0, rel=0.1)
    # long-run forecast converges to the process mean c / (1 - phi)
    assert forecast(f, 500)[-1] == pytest.approx(f.const / (1 - f.ar[0]), rel=1e-6)


def test_arima_recovers_ma_coefficient():
    rng = np.random.default_rng(12)
    e = rng.normal(size=4001)
    w = e[1:] + 0.5 * e[:-1]
    f = fit(ForecasterSpec("arima", (0, 0, 1)), w)
    assert f.ma[0] == pytest.approx(0.5, abs=0.07)


def test_noisy_trend_ma_stays_stable():
    rng = np.random.default_rng(13)
    y = np.linspace(0, 1, 360) + rng.normal(0, 0.1, 360)
    f = fit(ForecasterSpec("arima", (1, 1, 1)), y)
    assert np.all(np.isfinite(forecast(f, 240)))
    roots = np.roots(np.r_[f.ma[::-1], 1.0])
    assert np.all(np.abs(roots) > 1)


def test_invertible_reflects_roots():
    assert _invertible(np.array([0.5])).tolist() == [0.5]
    assert _invertible(np.array([-2.0]))[0] == pytest.approx(-0.5)
    assert np.allclose(_invertible(np.array([-2.5, 1.0])), [-1.0, 0.25])


@pytest.mark.parametrize("bad", [("arima", (0, 0, 0)), ("arima", (1, 3, 0)), ("arima", (0, 1, 3)),
                                 ("arima", (-1, 1, 0)), ("holt", (1, 1, 0))])
def test_invalid_specs(bad):
    with pytest.raises(ConfigError):
        ForecasterSpec(*bad)


def test_spec_parse():
    assert ForecasterSpec.parse("ARIMA(2, 1, 1)") == ForecasterSpec("arima", (2, 1, 1))
    assert ForecasterSpec.parse("drift").method == "drift"
    assert str(ForecasterSpec()) == "arima(1,1,0)"


def test_too_short_and_non_finite():
    with pytest.raises(SeriesTooShort):
        fit(ForecasterSpec("arima", (2, 1, 1)), [1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(ValueError):
        fit(ForecasterSpec("drift"), [1.0, np.nan, 2.0, 3.0])
    with pytest.raises(ValueError):
        forecast(fit(ForecasterSpec("drift"), [1.0, 2.0, 3.0, 4.0]), 0)
