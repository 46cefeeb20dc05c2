"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np
import pytest

import switchlevy as sl


def expm2_oracle(a: np.ndarray) -> np.ndarray:
    """Closed-form 2x2 matrix exponential through the traceless split.

    exp(A) = exp(m) (cosh(d) I + sinh(d)/d (A - m I)) with m = tr(A)/2 and
    d^2 = ((a11-a22)/2)^2 + a12 a21; the sinh(d)/d factor falls back to its
    series for near-defective matrices. Independent of the Pade route.
    """
    m = 0.5 * (a[0, 0] + a[1, 1])
    b = a - m * np.eye(2)
    d2 = b[0, 0] ** 2 + b[0, 1] * b[1, 0]
    d = np.sqrt(d2 + 0j)
    if abs(d) < 1e-6:
        sinhc = 1.0 + d2 / 6.0 + d2**2 / 120.0
        cosh = 1.0 + d2 / 2.0 + d2**2 / 24.0
    else:
        sinhc = np.sinh(d) / d
        cosh = np.cosh(d)
    return np.exp(m) * (cosh * np.eye(2) + sinhc * b)


def rn_regime(sigma: float, alpha: float, beta: float, family: sl.Family, r: float) -> sl.RegimeParams:
    """Regime parameters with the drift set by the martingale condition."""
    base = sl.RegimeParams(0.0, sigma, alpha, beta)
    return sl.RegimeParams(sl.risk_neutral_drift(base, family, r), sigma, alpha, beta)


def bs_reduced_model(r: float, sigma: float, s0: float = 20.0) -> sl.SwitchingModel:
    prm = sl.RegimeParams(r - 0.5 * sigma**2, sigma, 1.0, 1.0)
    return sl.SwitchingModel((prm, prm), 1.0, 1.0, sl.Family.IDENTITY, s0, r)


def single_regime_increments(
    params: sl.RegimeParams, family: sl.Family, dt: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Exact draws of z = mu dL + sigma sqrt(dL) N over a step dt."""
    spec = sl.SubordinatorSpec(family, params.alpha, params.beta)
    dl = sl.sample_increment(spec, dt, rng, size=n)
    return params.mu * dl + params.sigma * np.sqrt(dl) * rng.standard_normal(n)


@pytest.fixture
def fig2a_model() -> sl.SwitchingModel:
    """The trajectory-figure parameter set under an IG subordinator."""
    p1 = sl.RegimeParams(0.01, 1.0, 0.1, 0.1)
    p2 = sl.RegimeParams(-0.1, 5.0, 0.1, 10.0)
    return sl.SwitchingModel((p1, p2), 5.0, 2.0, sl.Family.INVERSE_GAUSSIAN, 20.0, 0.04)


REGIME1_WINDOWS = (
    (date(2012, 11, 16), date(2014, 11, 16)),
    (date(2017, 2, 6), date(2018, 6, 5)),
)


def synthetic_price_history(seed: int = 123):
    """Deterministic two-regime daily price series over 2012-2018 weekdays,
    calm inside the regime-1 date windows and turbulent outside."""
    rng = np.random.default_rng(seed)
    d = date(2012, 11, 16)
    end = date(2018, 6, 5)
    dates = []
    while d <= end:
        if d.weekday() < 5:
            dates.append(d)
        d += timedelta(days=1)
    in_one = np.array(
        [any(lo <= dd <= hi for lo, hi in REGIME1_WINDOWS) for dd in dates]
    )
    z = np.where(
        in_one,
        rng.normal(0.0002, 0.006, len(dates)),
        rng.normal(-0.0004, 0.02, len(dates)),
    )
    prices = 90.0 * np.exp(np.cumsum(z))
    return dates, prices


def write_price_csv(path, dates, prices) -> None:
    lines = ["date,price"] + [f"{d.isoformat()},{float(p)!r}" for d, p in zip(dates, prices)]
    path.write_text("\n".join(lines) + "\n")
