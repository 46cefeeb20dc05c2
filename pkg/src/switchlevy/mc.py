"""Monte Carlo engine for regime-switching time-changed paths.

Regime switch times are inserted into the time grid exactly, so every
increment is drawn under a single regime: within a regime-j span of
length d the log price moves by mu_j * dL + sigma_j * sqrt(dL) * N(0,1)
with dL a subordinator increment over d. Gamma and IG increments compose
exactly under subdivision, so terminal draws carry no discretization
bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cos import ContractSpec, OptionKind
from .regime import (
    TRADING_DT,
    Family,
    RegimeParams,
    SwitchingModel,
    simulate_regime_path,
)
from .subordinators import increment_from_draws, sample_increment, spec_for

Z95 = 1.959964  # two-sided 95% normal quantile
_BLOCK = 1 << 16


@dataclass(frozen=True)
class PricePath:
    """One simulated trajectory: log price Z (Z_0 = 0) on a time grid that
    contains every switch time; regimes[i] is active on [times[i], times[i+1])."""

    times: np.ndarray
    log_prices: np.ndarray
    regimes: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.log_prices) == len(self.regimes)):
            raise ValueError("times, log_prices and regimes must align")


@dataclass(frozen=True)
class McResult:
    price: float
    std_error: float
    ci95: tuple[float, float]
    n_paths: int
    seed: int | None = None


def simulate_path(
    model: SwitchingModel, horizon: float, dt: float, rng: np.random.Generator
) -> PricePath:
    """Simulate one path on the dt grid refined by the exact switch times."""
    if not 0 < dt <= horizon:
        raise ValueError("need 0 < dt <= horizon")
    rp = simulate_regime_path(model, horizon, rng)
    n_steps = int(math.ceil(horizon / dt - 1e-12))
    base = np.linspace(0.0, horizon, n_steps + 1)
    times = np.unique(np.concatenate([base, rp.switch_times]))
    # regime active at each grid time: count switches at or before t
    regime_idx = np.searchsorted(rp.switch_times, times, side="right")
    regimes = rp.states[regime_idx]

    specs = (spec_for(model.regimes[0], model.family), spec_for(model.regimes[1], model.family))
    z = np.zeros(len(times))
    for i in range(len(times) - 1):
        j = regimes[i] - 1
        dur = times[i + 1] - times[i]
        dl = float(sample_increment(specs[j], dur, rng))
        prm = model.regimes[j]
        z[i + 1] = z[i] + prm.mu * dl + prm.sigma * math.sqrt(dl) * rng.standard_normal()
    return PricePath(times, z, regimes)


def _draw_sojourns(rate: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if rate == 0.0:
        return np.full(size, np.inf)
    return rng.exponential(1.0 / rate, size)


def sample_terminal(
    model: SwitchingModel,
    horizon: float,
    n_paths: int,
    dt: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized terminal log returns Z_T for n_paths paths.

    Marches the dt grid; paths with a switch inside the current step are
    advanced segment by segment so each draw sees a single regime.
    """
    if not 0 < dt <= horizon:
        raise ValueError("need 0 < dt <= horizon")
    params = model.regimes
    specs = (spec_for(params[0], model.family), spec_for(params[1], model.family))
    z = np.zeros(n_paths)
    state = np.ones(n_paths, dtype=np.int8)
    next_switch = _draw_sojourns(model.lambda12, n_paths, rng)

    n_steps = int(math.ceil(horizon / dt - 1e-12))
    t = 0.0
    for step in range(n_steps):
        t_end = min(horizon, (step + 1) * dt)
        t_cur = np.full(n_paths, t)
        active = np.ones(n_paths, dtype=bool)
        for _pass in range(100000):
            ev = np.minimum(next_switch, t_end)
            dur = ev - t_cur
            move = np.nonzero(active & (dur > 0))[0]
            for j in (1, 2):
                grp = move[state[move] == j]
                if grp.size:
                    dl = sample_increment(specs[j - 1], dur[grp], rng)
                    z[grp] += params[j - 1].mu * dl + params[j - 1].sigma * np.sqrt(
                        dl
                    ) * rng.standard_normal(grp.size)
            t_cur[move] = ev[move]
            switching = active & (next_switch <= t_end)
            if not switching.any():
                break
            sw = np.nonzero(switching)[0]
            state[sw] = 3 - state[sw]
            rates = np.where(state[sw] == 1, model.lambda12, model.lambda21)
            fresh = np.where(
                rates > 0, rng.exponential(1.0, sw.size) / np.maximum(rates, 1e-300), np.inf
            )
            next_switch[sw] = ev[sw] + fresh
            active = switching
        else:  # pragma: no cover
            raise RuntimeError("switch handling did not terminate")
        t = t_end
    return z


def price_european_mc(
    model: SwitchingModel,
    contract: ContractSpec,
    n_paths: int,
    dt: float = TRADING_DT,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> McResult:
    """Discounted mean payoff with a 95% confidence interval.

    Paths are generated in fixed-size blocks with independent spawned
    streams, so the result for a given seed does not depend on how the
    blocks might be distributed over workers.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")
    if rng is None:
        rng = np.random.default_rng(seed)
    n_blocks = (n_paths + _BLOCK - 1) // _BLOCK
    streams = rng.spawn(n_blocks)
    chunks = []
    left = n_paths
    for child in streams:
        m = min(_BLOCK, left)
        chunks.append(sample_terminal(model, contract.maturity, m, dt, child))
        left -= m
    z = np.concatenate(chunks)

    s_t = model.s0 * np.exp(z)
    if contract.kind is OptionKind.CALL:
        payoff = np.maximum(s_t - contract.strike, 0.0)
    else:
        payoff = np.maximum(contract.strike - s_t, 0.0)
    disc = math.exp(-model.r * contract.maturity)
    price = disc * float(payoff.mean())
    se = disc * float(payoff.std(ddof=1)) / math.sqrt(n_paths)
    return McResult(price, se, (price - Z95 * se, price + Z95 * se), n_paths, seed)


class FrozenTerminalSampler:
    """Terminal sampler with frozen randomness for common-random-numbers.

    The regime trajectory depends only on the (fixed) intensities, so
    sojourns and all driving draws are frozen at construction; evaluate()
    maps regime parameters to terminal log returns through smooth
    inverse-CDF transforms of those draws. Used by objectives that are
    differenced numerically in the parameters.
    """

    def __init__(
        self,
        family: Family,
        lambda12: float,
        lambda21: float,
        horizon: float,
        n_paths: int,
        seed: int,
    ):
        self.family = family
        self.n_paths = n_paths
        rng = np.random.default_rng(seed)
        self._rounds: list[tuple] = []
        elapsed = np.zeros(n_paths)
        alive = np.arange(n_paths)
        k = 0
        while alive.size:
            state = 1 if k % 2 == 0 else 2
            rate = lambda12 if state == 1 else lambda21
            soj = _draw_sojourns(rate, alive.size, rng)
            remaining = horizon - elapsed[alive]
            dur = np.maximum(np.minimum(soj, remaining), 1e-300)
            draws = (
                rng.random(alive.size),
                rng.standard_normal(alive.size),
                rng.random(alive.size),
                rng.standard_normal(alive.size),
            )
            self._rounds.append((alive, dur, state, draws))
            elapsed[alive] += dur
            alive = alive[soj < remaining]
            k += 1

    def evaluate(self, theta1: RegimeParams, theta2: RegimeParams) -> np.ndarray:
        z = np.zeros(self.n_paths)
        for idx, dur, state, (u, nu, zz, nrm) in self._rounds:
            prm = theta1 if state == 1 else theta2
            dl = increment_from_draws(spec_for(prm, self.family), dur, u, nu, zz)
            z[idx] += prm.mu * dl + prm.sigma * np.sqrt(dl) * nrm
        return z
