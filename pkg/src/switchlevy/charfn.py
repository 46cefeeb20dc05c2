"""Characteristic function of the switching time-changed log price.

Per-regime characteristic exponents are composed through the subordinator
Laplace exponent,

    Psi_j(u) = ell_j(i mu_j u - sigma_j^2 u^2 / 2),

so exp(t Psi_j(u)) = E[exp(i u Y_t^j)] for the non-switching regime-j
process. The switching characteristic function couples the regimes through
the 2x2 matrix

    Phi(u) = [[-l12 + Psi_1(u),  l12           ],
              [ l21,             -l21 + Psi_2(u)]]

and, for a chain started in regime 1,

    phi(u) = exp(i u y0) * (e_1^T exp(t Phi(u)) [1, 1]^T),

i.e. the first entry of exp(t Phi(u)) summed across terminal regimes. At
u = 0 this reduces to a transition-matrix row sum, hence phi(0) = 1 for
any intensities. The matrix exponential uses scaling and squaring with a
[6/6] Pade approximant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .regime import Family, RegimeParams, SwitchingModel
from .subordinators import laplace_exponent, real_domain_sup, spec_for

# [6/6] Pade coefficients of exp(x): c_j = (12-j)! 6! / (12! (6-j)! j!)
_PADE_M = 6
_PADE_C = np.array(
    [
        math.factorial(12 - j) * math.factorial(6)
        / (math.factorial(12) * math.factorial(6 - j) * math.factorial(j))
        for j in range(_PADE_M + 1)
    ]
)
_SCALE_THRESHOLD = 0.5


def regime_char_exponent(params: RegimeParams, family: Family, u):
    """Characteristic exponent Psi(u) of one regime; u scalar or array."""
    u = np.asarray(u, dtype=complex)
    arg = 1j * params.mu * u - 0.5 * params.sigma**2 * u * u
    return laplace_exponent(spec_for(params, family), arg)


def phi_matrix(model: SwitchingModel, u: complex) -> np.ndarray:
    """Coupling matrix Phi(u); equals the generator Q at u = 0."""
    return phi_matrix_batch(model, np.asarray([u], dtype=complex))[0]


def phi_matrix_batch(model: SwitchingModel, u: np.ndarray) -> np.ndarray:
    """Phi(u) stacked over a vector of arguments, shape (n, 2, 2)."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    psi1 = np.asarray(regime_char_exponent(model.regimes[0], model.family, u))
    psi2 = np.asarray(regime_char_exponent(model.regimes[1], model.family, u))
    out = np.empty(u.shape + (2, 2), dtype=complex)
    out[:, 0, 0] = -model.lambda12 + psi1
    out[:, 0, 1] = model.lambda12
    out[:, 1, 0] = model.lambda21
    out[:, 1, 1] = -model.lambda21 + psi2
    return out


def matrix_exp(a: np.ndarray) -> np.ndarray:
    """exp(A) for a 2x2 complex matrix or a stack of them, shape (..., 2, 2).

    Scaling and squaring: the smallest s >= 0 with ||A / 2^s||_inf <= 0.5
    is chosen per matrix, the scaled matrix is fed through the [6/6] Pade
    approximant, and the result is squared s times.
    """
    a = np.asarray(a, dtype=complex)
    single = a.ndim == 2
    if single:
        a = a[None, ...]
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")

    norm = np.abs(a).sum(axis=-1).max(axis=-1)  # infinity norm per matrix
    s = np.zeros(norm.shape, dtype=int)
    big = norm > _SCALE_THRESHOLD
    s[big] = np.ceil(np.log2(norm[big] / _SCALE_THRESHOLD)).astype(int)
    x = a / (2.0 ** s)[..., None, None]

    eye = np.broadcast_to(np.eye(2, dtype=complex), x.shape).copy()
    powers = [eye, x]
    for _ in range(2, _PADE_M + 1):
        powers.append(powers[-1] @ x)
    p = sum(c * pw for c, pw in zip(_PADE_C, powers))
    q = sum(c * (-1) ** j * pw for j, (c, pw) in enumerate(zip(_PADE_C, powers)))
    r = np.linalg.solve(q, p)

    for k in range(int(s.max()) if s.size else 0):
        mask = s > k
        r[mask] = r[mask] @ r[mask]
    return r[0] if single else r


@dataclass(frozen=True)
class CharFn:
    """Characteristic function of y0 + Z_t for a switching model.

    y0 defaults to log(s0); pricing code recenters to log-moneyness by
    passing y0 = log(s0 / K).
    """

    model: SwitchingModel
    t: float
    y0: float | None = None

    def __post_init__(self) -> None:
        if self.t <= 0:
            raise ValueError("t must be > 0")
        if self.y0 is None:
            object.__setattr__(self, "y0", math.log(self.model.s0))


def switching_cf(cf: CharFn, u):
    """phi(u) = exp(i u y0) e_1^T exp(t Phi(u)) [1,1]^T; u scalar or array."""
    u_arr = np.asarray(u, dtype=complex).reshape(-1)
    phi = phi_matrix_batch(cf.model, u_arr)
    etphi = matrix_exp(cf.t * phi)
    vals = np.exp(1j * u_arr * cf.y0) * (etphi[:, 0, 0] + etphi[:, 0, 1])
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return complex(vals[0])
    return vals.reshape(np.asarray(u).shape)


def risk_neutral_drift(params: RegimeParams, family: Family, r: float) -> float:
    """Drift mu making the discounted single-regime price a martingale.

    Solves Psi(-i) = r, i.e. ell(mu + sigma^2/2) = r, by bracketed root
    finding in mu (Psi(-i) is strictly increasing in mu). For the IG
    family a solution requires beta >= r/alpha; otherwise the needed
    exponential moment does not exist.
    """
    spec = spec_for(params, family)
    half_var = 0.5 * params.sigma**2

    if family is Family.IDENTITY:
        return r - half_var
    if family is Family.INVERSE_GAUSSIAN and params.beta < r / params.alpha:
        raise ValueError(
            "no martingale drift: IG family requires beta >= r/alpha "
            f"(beta={params.beta}, r/alpha={r / params.alpha})"
        )

    def resid(mu: float) -> float:
        return float(np.real(laplace_exponent(spec, mu + half_var))) - r

    sup = real_domain_sup(spec)
    # Bracket the root: resid decreases to -inf as mu -> -inf and increases
    # toward +inf (Gamma) or alpha*beta - r >= 0 (IG) as mu + sigma^2/2
    # approaches the domain supremum.
    lo = -half_var  # ell(0) = 0 there
    if resid(lo) > 0.0:
        step = 1.0
        while resid(lo - step) > 0.0:
            step *= 2.0
            if step > 1e12:  # pragma: no cover
                raise RuntimeError("failed to bracket martingale drift")
        lo, hi = lo - step, lo
    else:
        gap = sup - half_var - lo
        hi = None
        for k in range(1, 46):
            cand = lo + gap * (1.0 - 0.5**k)
            if resid(cand) >= 0.0:
                hi = cand
                break
        if hi is None:
            raise ValueError(
                "no martingale drift found within the exponent domain "
                f"(family={family.value}, r={r})"
            )

    mu = brentq(resid, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    if abs(resid(mu)) > 1e-10:
        raise RuntimeError(f"martingale residual {resid(mu)} above tolerance")
    return float(mu)


def esscher_tilt(params: RegimeParams, family: Family, theta: float):
    """Exponentially tilted characteristic exponent of one regime.

    Returns the function u -> Psi(u - i theta) - Psi(-i theta), the
    exponent of the regime under the measure tilted by exp(theta X_t).
    Requires the exponential moment Psi(-i theta) to exist.
    """
    spec = spec_for(params, family)
    moment_arg = params.mu * theta + 0.5 * params.sigma**2 * theta**2
    if moment_arg >= real_domain_sup(spec):
        raise ValueError(
            f"exponential moment does not exist for theta={theta} "
            f"(requires mu*theta + sigma^2 theta^2/2 < {real_domain_sup(spec)})"
        )
    base = regime_char_exponent(params, family, -1j * theta)

    def tilted(u):
        return regime_char_exponent(params, family, np.asarray(u, dtype=complex) - 1j * theta) - base

    return tilted
