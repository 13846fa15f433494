"""Trend fitting and point forecasts for monitored parameter series.

Three forecasters share one interface:

``drift``
    random walk with drift; slope ``(last - first) / (n - 1)``.
``robust-linear``
    Theil-Sen line (median of pairwise slopes).
``arima``
    ARIMA(p, d, q) with intercept.  The series is differenced ``d`` times,
    AR terms come from ordinary least squares on the lagged regression and
    MA terms (q <= 2) from iterated residual regression.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import ConfigError, SeriesTooShort

METHODS = ("drift", "robust-linear", "arima")
MAX_MA_ORDER = 2
MA_ITERATIONS = 10
ROOT_LIMIT = 0.99  # largest allowed 1/|root| for AR and MA polynomials


@dataclass(frozen=True)
class ForecasterSpec:
    method: str = "arima"
    order: Tuple[int, int, int] = (1, 1, 0)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown forecasting method {self.method!r}; expected one of {METHODS}")
        p, d, q = self.order
        if p < 0 or q < 0 or d not in (0, 1, 2):
            raise ConfigError(f"invalid ARIMA order {self.order}")
        if self.method == "arima":
            if q > MAX_MA_ORDER:
                raise ConfigError(f"MA order above {MAX_MA_ORDER} is not supported")
            if p + q == 0 and d == 0:
                raise ConfigError("ARIMA(0,0,0) has nothing to fit")

    @classmethod
    def parse(cls, text: str) -> "ForecasterSpec":
        """Read ``drift``, ``robust-linear``, ``arima`` or ``arima(p,d,q)``."""
        text = text.strip().lower()
        m = re.fullmatch(r"arima\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)", text)
        if m:
            return cls("arima", tuple(int(g) for g in m.groups()))
        return cls(text)

    def min_length(self) -> int:
        p, d, q = self.order
        return max(4, p + d + q + 2) if self.method == "arima" else 4

    def __str__(self):
        if self.method == "arima":
            return "arima({},{},{})".format(*self.order)
        return self.method


class FittedForecaster:
    method = "base"
    degenerate = False

    def forecast(self, h: int) -> np.ndarray:
        raise NotImplementedError


@dataclass
class DriftForecaster(FittedForecaster):
    last: float
    slope: float
    degenerate: bool = False
    method = "drift"

    def forecast(self, h: int) -> np.ndarray:
        return self.last + self.slope * np.arange(1, h + 1)


@dataclass
class LinearForecaster(FittedForecaster):
    slope: float
    intercept: float
    n: int
    method = "robust-linear"

    def forecast(self, h: int) -> np.ndarray:
        x = np.arange(self.n, self.n + h)
        return self.intercept + self.slope * x


@dataclass
class ArimaForecaster(FittedForecaster):
    order: Tuple[int, int, int]
    const: float
    ar: np.ndarray
    ma: np.ndarray
    sigma2: float
    w_tail: np.ndarray  # last p differenced values
    e_tail: np.ndarray  # last q residuals
    level_tails: list = field(default_factory=list)  # last value of each differencing level
    method = "arima"

    def forecast(self, h: int) -> np.ndarray:
        p, d, q = self.order
        w_hist = list(self.w_tail)
        e_hist = list(self.e_tail)
        out = np.empty(h)
        for k in range(h):
            val = self.const
            for i in range(p):
                val += self.ar[i] * w_hist[-1 - i]
            for j in range(q):
                # future shocks have mean zero; only the known tail contributes
                idx = k - j - 1
                if idx < 0:
                    val += self.ma[j] * e_hist[len(e_hist) + idx]
            out[k] = val
            w_hist.append(val)
        for last in reversed(self.level_tails):
            out = last + np.cumsum(out)
        return out


def _drift(y: np.ndarray, degenerate=False) -> DriftForecaster:
    n = len(y)
    return DriftForecaster(float(y[-1]), float((y[-1] - y[0]) / (n - 1)), degenerate)


def _lagged(w: np.ndarray, lags: int, start: int) -> np.ndarray:
    return np.column_stack([w[start - i: len(w) - i] for i in range(1, lags + 1)]) if lags else np.empty((len(w) - start, 0))


def _residuals(w, const, ar, ma):
    """Recursive one-step residuals with pre-sample shocks set to zero."""
    p, q = len(ar), len(ma)
    e = np.zeros(len(w))
    for t in range(len(w)):
        pred = const
        for i in range(p):
            if t - 1 - i >= 0:
                pred += ar[i] * w[t - 1 - i]
            else:
                pred += ar[i] * w[0]
        for j in range(q):
            if t - 1 - j >= 0:
                pred += ma[j] * e[t - 1 - j]
        e[t] = w[t] - pred
    return e


def _roots_outside(coef: np.ndarray, sign: float) -> np.ndarray:
    """Move the roots of ``1 + sign * (c1 z + c2 z^2 + ...)`` outside the unit
    circle.

    Roots inside are reflected (1 / conj r), which keeps the autocorrelation
    structure; roots on or near the circle are pushed out to radius
    ``1 / ROOT_LIMIT`` so recursions stay stable.
    """
    if not len(coef):
        return coef
    if not np.all(np.isfinite(coef)):
        return np.zeros(len(coef))
    roots = np.roots(np.r_[sign * coef[::-1], 1.0])
    if np.all(np.abs(roots) >= 1.0 / ROOT_LIMIT):
        return coef
    poly = np.array([1.0 + 0j])  # ascending powers of z
    for r in roots:
        if abs(r) < 1.0:
            r = 1.0 / np.conj(r)
        if abs(r) < 1.0 / ROOT_LIMIT:
            r = r / abs(r) / ROOT_LIMIT
        poly = np.convolve(poly, np.array([1.0, -1.0 / r]))
    out = np.zeros(len(coef))
    out[:len(poly) - 1] = sign * np.real(poly[1:])
    return out


def _invertible(ma: np.ndarray) -> np.ndarray:
    return _roots_outside(ma, 1.0)


def _stationary(ar: np.ndarray) -> np.ndarray:
    return _roots_outside(ar, -1.0)


def _fit_arima(y: np.ndarray, order) -> FittedForecaster:
    p, d, q = order
    levels = [y]
    for _ in range(d):
        levels.append(np.diff(levels[-1]))
    w = levels[-1]
    tails = [float(lv[-1]) for lv in levels[:-1]]
    scale = max(1.0, float(np.max(np.abs(w))))
    if p + q >= 1 and np.var(w) <= (1e-12 * scale) ** 2:
        # no variation to explain (constant or exactly linear input)
        return _drift(y, degenerate=True)

    if p + q == 0:
        const = float(np.mean(w))
        resid = w - const
        return ArimaForecaster(order, const, np.zeros(0), np.zeros(0), float(np.var(resid)),
                               np.zeros(0), np.zeros(0), tails)

    if q == 0:
        X = np.column_stack([np.ones(len(w) - p), _lagged(w, p, p)])
        beta, *_ = np.linalg.lstsq(X, w[p:], rcond=None)
        ar = _stationary(beta[1:])
        # intercept given the (possibly constrained) AR part; equals beta[0] when unconstrained
        const = float(np.mean(w[p:] - _lagged(w, p, p) @ ar))
        resid = w[p:] - const - _lagged(w, p, p) @ ar
        return ArimaForecaster(order, const, ar, np.zeros(0), float(np.var(resid)),
                               w[len(w) - p:].copy(), np.zeros(0), tails)

    # long autoregression supplies first-pass innovations
    m = min(max(p + q + 2, 10), (len(w) - 1) // 3)
    if m < 1 or len(w) - m <= m + 1:
        raise SeriesTooShort("series too short for the MA stage")
    X = np.column_stack([np.ones(len(w) - m), _lagged(w, m, m)])
    beta, *_ = np.linalg.lstsq(X, w[m:], rcond=None)
    e = np.zeros(len(w))
    e[m:] = w[m:] - X @ beta
    start = m + q
    const, ar, ma = 0.0, np.zeros(p), np.zeros(q)
    for _ in range(MA_ITERATIONS):
        s = max(start, p)
        X = np.column_stack([np.ones(len(w) - s), _lagged(w, p, s), _lagged(e, q, s)])
        beta, *_ = np.linalg.lstsq(X, w[s:], rcond=None)
        new_ar, new_ma = _stationary(beta[1:1 + p]), _invertible(beta[1 + p:])
        new_const = float(np.mean(w[s:] - _lagged(w, p, s) @ new_ar - _lagged(e, q, s) @ new_ma))
        converged = (np.allclose(np.r_[new_ar, new_ma], np.r_[ar, ma], atol=1e-10)
                     and abs(new_const - const) < 1e-12)
        const, ar, ma = new_const, new_ar, new_ma
        e = _residuals(w, const, ar, ma)
        start = q
        if converged:
            break
    return ArimaForecaster(order, const, np.asarray(ar), np.asarray(ma), float(np.var(e[q:])),
                           w[len(w) - p:].copy() if p else np.zeros(0), e[len(e) - q:].copy(), tails)


def fit(spec: ForecasterSpec, series: Sequence[float]) -> FittedForecaster:
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or len(y) < spec.min_length():
        raise SeriesTooShort(f"need at least {spec.min_length()} observations, got {len(y)}")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    if spec.method == "drift":
        return _drift(y)
    if spec.method == "robust-linear":
        x = np.arange(len(y))
        res = stats.theilslopes(y, x)
        return LinearForecaster(float(res.slope), float(res.intercept), len(y))
    return _fit_arima(y, spec.order)


def forecast(f: FittedForecaster, h: int) -> np.ndarray:
    if h < 1:
        raise ValueError("forecast horizon must be at least 1")
    return f.forecast(h)
