"""Gamma and Inverse Gaussian subordinators: exponents and sampling.

The Laplace exponent ell is normalized so that E[exp(s * L_t)] =
exp(t * ell(s)):

    Gamma(alpha, beta):  ell(s) = -alpha * log(1 - s / beta)
    IG(alpha, beta):     ell(s) = -alpha * (sqrt(beta^2 - 2 s) - beta)
    Identity:            ell(s) = s          (L_t = t)

Both random clocks have mean alpha/beta per unit time; the IG variance
alpha/beta^3 exceeds the Gamma variance alpha/beta^2 exactly when
beta < 1. Complex arguments use principal branches; the preconditions
keep the argument off the cut and violations raise BranchCutError.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .regime import Family, RegimeParams


class BranchCutError(ValueError):
    """Raised when an exponent argument leaves the principal branch domain."""


@dataclass(frozen=True)
class SubordinatorSpec:
    family: Family
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


def spec_for(params: RegimeParams, family: Family) -> SubordinatorSpec:
    return SubordinatorSpec(family, params.alpha, params.beta)


def laplace_exponent(spec: SubordinatorSpec, s):
    """ell(s) with E[exp(s L_t)] = exp(t ell(s)); s scalar or array.

    Domain: Gamma requires Re(1 - s/beta) > 0, IG requires
    Re(beta^2 - 2 s) > 0. ell(0) = 0 for every family.
    """
    s = np.asarray(s, dtype=complex)
    if spec.family is Family.IDENTITY:
        out = s
    elif spec.family is Family.GAMMA:
        arg = 1.0 - s / spec.beta
        _check_branch(arg, spec, s)
        out = -spec.alpha * np.log(arg)
    elif spec.family is Family.INVERSE_GAUSSIAN:
        arg = spec.beta**2 - 2.0 * s
        _check_branch(arg, spec, s)
        out = -spec.alpha * (np.sqrt(arg) - spec.beta)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {spec.family}")
    return complex(out) if out.ndim == 0 else out


def _check_branch(arg, spec: SubordinatorSpec, s) -> None:
    bad = np.real(arg) <= 0
    if np.any(bad):
        offender = np.asarray(s).reshape(-1)[np.asarray(bad).reshape(-1)][0]
        raise BranchCutError(
            f"{spec.family.value} exponent argument s={offender} is outside "
            f"the principal branch domain (alpha={spec.alpha}, beta={spec.beta})"
        )


def laplace_exponent_derivatives(spec: SubordinatorSpec) -> tuple[float, float, float, float]:
    """First four derivatives of ell at 0 (cumulants of L_1)."""
    a, b = spec.alpha, spec.beta
    if spec.family is Family.IDENTITY:
        return (1.0, 0.0, 0.0, 0.0)
    if spec.family is Family.GAMMA:
        return (a / b, a / b**2, 2.0 * a / b**3, 6.0 * a / b**4)
    if spec.family is Family.INVERSE_GAUSSIAN:
        return (a / b, a / b**3, 3.0 * a / b**5, 15.0 * a / b**7)
    raise ValueError(f"unknown family {spec.family}")  # pragma: no cover


def real_domain_sup(spec: SubordinatorSpec) -> float:
    """Supremum of real s with ell(s) defined (open for Gamma, closed for IG)."""
    if spec.family is Family.GAMMA:
        return spec.beta
    if spec.family is Family.INVERSE_GAUSSIAN:
        return 0.5 * spec.beta**2
    return np.inf


def sample_increment(spec: SubordinatorSpec, dt, rng: np.random.Generator, size=None):
    """Draw L increments over steps dt (scalar or array, matching size).

    Gamma increments are Gamma(shape alpha*dt, rate beta). IG increments
    have mean alpha*dt/beta and IG shape (alpha*dt)^2, so mean and
    variance match ell'(0)*dt and ell''(0)*dt. Identity returns dt.
    """
    dt = np.asarray(dt, dtype=float)
    if np.any(dt <= 0):
        raise ValueError("dt must be > 0")
    if size is None and dt.ndim > 0:
        size = dt.shape
    if spec.family is Family.IDENTITY:
        return dt if size is None else np.broadcast_to(dt, size).copy()
    if spec.family is Family.GAMMA:
        return rng.gamma(shape=spec.alpha * dt, scale=1.0 / spec.beta, size=size)
    if spec.family is Family.INVERSE_GAUSSIAN:
        mean = spec.alpha * dt / spec.beta
        shape = (spec.alpha * dt) ** 2
        nu = rng.standard_normal(size)
        z = rng.random(size)
        return _ig_transform(mean, shape, nu, z)
    raise ValueError(f"unknown family {spec.family}")  # pragma: no cover


def _ig_transform(mean, shape, nu, z):
    """Michael-Schucany-Haas transform of a normal draw nu and uniform z."""
    y = nu * nu
    x = mean + mean * mean * y / (2.0 * shape) - (mean / (2.0 * shape)) * np.sqrt(
        4.0 * mean * shape * y + (mean * y) ** 2
    )
    # Numerical safety: x is a.s. positive; the sqrt cancellation can
    # produce tiny negatives for extreme draws. When x is clamped this
    # small, the selection probability mean/(mean+x) rounds to 1, so the
    # (possibly overflowing) mean^2/x branch is never the one selected.
    x = np.maximum(x, np.finfo(float).tiny)
    with np.errstate(over="ignore"):
        return np.where(z <= mean / (mean + x), x, mean * mean / x)


def increment_from_draws(spec: SubordinatorSpec, dt, u, nu, z):
    """Increment via inverse-CDF / smooth transforms of frozen draws.

    Used for common-random-numbers objectives: for fixed (u, nu, z) the
    output varies smoothly with (alpha, beta). u is uniform (Gamma
    inverse CDF), (nu, z) standard normal/uniform (IG transform).
    """
    dt = np.asarray(dt, dtype=float)
    if spec.family is Family.IDENTITY:
        return np.broadcast_to(dt, np.shape(u)).copy() if np.shape(u) else dt
    if spec.family is Family.GAMMA:
        return special.gammaincinv(spec.alpha * dt, u) / spec.beta
    if spec.family is Family.INVERSE_GAUSSIAN:
        mean = spec.alpha * dt / spec.beta
        shape = (spec.alpha * dt) ** 2
        return _ig_transform(mean, shape, nu, z)
    raise ValueError(f"unknown family {spec.family}")  # pragma: no cover
