"""Asymptotic regimes of the sinh-weighted kernel and mollifier averages.

The kernel f(sigma) = int_0^inf e^{-sigma(cosh theta - 1)} (sinh theta)^alpha dtheta
admits closed leading terms for large and small sigma, an exact rewriting
through the modified Bessel function K_{alpha/2}, and defines (together with
its sin-weighted sibling) a family of probability measures concentrating at
the origin as sigma grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .quadrature import (
    DEFAULT_CONFIG,
    LogValue,
    QuadratureConfig,
    integrate_sinh_weighted,
    log_sin_kernel,
    log_sinh_kernel,
    sinh_theta_cutoff,
    tanh_sinh_sum,
)

LARGE_SIGMA_THRESHOLD = 10.0
SMALL_SIGMA_THRESHOLD = 0.1


class Regime(Enum):
    LARGE_SIGMA = "LARGE_SIGMA"
    SMALL_SIGMA_ALPHA_POS = "SMALL_SIGMA_ALPHA_POS"
    SMALL_SIGMA_ALPHA_ZERO = "SMALL_SIGMA_ALPHA_ZERO"
    SMALL_SIGMA_ALPHA_NEG = "SMALL_SIGMA_ALPHA_NEG"


@dataclass(frozen=True)
class AsymptoticBranch:
    """Leading asymptotic term of f in one regime.

    leading_value is the log of the leading term.  sign_discrepancy marks the
    small-sigma branch for -1 < alpha < 0, where the customary printed
    constant is negative while f itself is positive: the magnitude
    Gamma((alpha+1)/2) Gamma(-alpha/2) / (2 sqrt(pi)) is reported instead
    (it equals int_0^inf (sinh theta)^alpha dtheta, the true limit) and the
    flag records that a sign was dropped.
    """

    regime: Regime
    leading_value: float
    claimed_error_order: str
    sign_discrepancy: bool = False


def f_exact(sigma: float, alpha: float,
            config: QuadratureConfig = DEFAULT_CONFIG) -> LogValue:
    """The kernel itself, by adaptive quadrature; authoritative in all regimes."""
    return integrate_sinh_weighted(sigma, alpha, config=config)


def f_asymptotic(sigma: float, alpha: float) -> AsymptoticBranch:
    """Leading term of f for sigma >= 10 or sigma <= 0.1.

    In the gap (0.1, 10) no asymptotic claim is made and a ValueError points
    the caller at f_exact.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not alpha > -1.0:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    if sigma >= LARGE_SIGMA_THRESHOLD:
        log_lead = (0.5 * (alpha - 1.0) * math.log(2.0)
                    + gammaln(0.5 * (alpha + 1.0))
                    - 0.5 * (alpha + 1.0) * math.log(sigma))
        return AsymptoticBranch(Regime.LARGE_SIGMA, log_lead, "O(1/sigma)")
    if sigma <= SMALL_SIGMA_THRESHOLD:
        if alpha > 0.0:
            log_lead = -alpha * math.log(sigma) + gammaln(alpha)
            return AsymptoticBranch(Regime.SMALL_SIGMA_ALPHA_POS, log_lead,
                                    "o(1) relative")
        if alpha == 0.0:
            log_lead = math.log(math.log(1.0 / sigma))
            return AsymptoticBranch(Regime.SMALL_SIGMA_ALPHA_ZERO, log_lead,
                                    "O(1) additive in the log")
        log_lead = (gammaln(0.5 * (alpha + 1.0)) + gammaln(-0.5 * alpha)
                    - math.log(2.0) - 0.5 * math.log(math.pi))
        return AsymptoticBranch(Regime.SMALL_SIGMA_ALPHA_NEG, log_lead,
                                "o(1) relative", sign_discrepancy=True)
    raise ValueError(
        f"sigma = {sigma} lies in the gap ({SMALL_SIGMA_THRESHOLD}, "
        f"{LARGE_SIGMA_THRESHOLD}) where only f_exact applies")


def bessel_k_identity_residual(sigma: float, alpha: float,
                               config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """|f_exact / [pi^{-1/2} Gamma((a+1)/2) (sigma/2)^{-a/2} e^sigma K_{a/2}(sigma)] - 1|.

    K_{alpha/2} is evaluated through its own cosh-kernel integral
    int_0^inf e^{-sigma cosh t} cosh(alpha t / 2) dt, an independent route.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not alpha > -1.0:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    nu = 0.5 * alpha
    k_scaled = integrate_sinh_weighted(
        sigma, 0.0, g=lambda t: np.cosh(nu * t), config=config)
    log_rhs = (-0.5 * math.log(math.pi) + gammaln(0.5 * (alpha + 1.0))
               - nu * math.log(0.5 * sigma) + k_scaled.log_magnitude)
    log_lhs = f_exact(sigma, alpha, config=config).log_magnitude
    return abs(math.expm1(log_lhs - log_rhs))


class MollifierKind(Enum):
    NU = "NU"    # sinh-weighted on [0, inf)
    MU = "MU"    # sin-weighted on [0, pi]


def mollifier_expectation(g: Callable, sigma: float, alpha: float,
                          kind: MollifierKind,
                          config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """E[g] under the normalized kernel measure of the requested family.

    g must be bounded and continuous on the support (it may change sign); as
    sigma -> inf both families concentrate at 0 and the expectation tends to
    g(0).  Signed numerators run in the linear domain, so alpha is assumed
    nonnegative-or-mild (alpha > -1 is accepted, deep singularities are only
    exercised with g >= 0 elsewhere in the package).
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not alpha > -1.0:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    if kind is MollifierKind.MU:
        log_den = log_sin_kernel(sigma, alpha, config.rel_tol)

        def integrand(x, da, db, log_da, log_db):
            expo = -sigma * 2.0 * np.sin(0.5 * da) ** 2
            if alpha != 0.0:
                dmin = np.minimum(da, db)
                log_dmin = np.minimum(log_da, log_db)
                small = dmin < 1e-8
                logsin = np.where(small, log_dmin,
                                  np.log(np.sin(np.where(small, 1.0, dmin))))
                expo = expo + alpha * logsin
            return np.asarray(g(x), dtype=float) * np.exp(expo)

        num = tanh_sinh_sum(integrand, 0.0, math.pi, config,
                            beta=1.0 + min(alpha, 0.0))
        return num * math.exp(-log_den)

    if kind is MollifierKind.NU:
        log_den = log_sinh_kernel(sigma, alpha, config.rel_tol)
        theta_max = sinh_theta_cutoff(sigma, config)

        def integrand(x, da, db, log_da, log_db):
            expo = -sigma * 2.0 * np.sinh(0.5 * x) ** 2
            if alpha != 0.0:
                small = da < 1e-8
                logsinh = np.where(small, log_da,
                                   np.log(np.sinh(np.where(small, 1.0, x))))
                expo = expo + alpha * logsinh
            return np.asarray(g(x), dtype=float) * np.exp(expo)

        num = tanh_sinh_sum(integrand, 0.0, theta_max, config,
                            beta=1.0 + min(alpha, 0.0))
        return num * math.exp(-log_den)

    raise ValueError(f"unknown mollifier kind {kind!r}")


def mollifier_tail_mass(delta: float, sigma: float, alpha: float,
                        config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Mass of the sinh-weighted family beyond theta = delta."""
    if not delta > 0.0:
        raise ValueError(f"delta must be > 0, got {delta}")
    tail = integrate_sinh_weighted(sigma, alpha, config=config,
                                   theta_min=delta).log_magnitude
    full = log_sinh_kernel(sigma, alpha, config.rel_tol)
    return math.exp(tail - full)
