"""Adaptive tanh-sinh quadrature for the two weighted kernel families.

Everything here runs in the log domain: node weights, endpoint offsets and
integrand values are kept as logarithms and accumulated with logsumexp, so
endpoint singularities (sin theta)^alpha with alpha near -1 neither underflow
nor overflow.  The two public families are

    I(sigma) = int_0^pi  exp(-sigma (1 - cos theta)) (sin theta)^alpha g dtheta
    f(sigma) = int_0^inf exp(-sigma (cosh theta - 1)) (sinh theta)^alpha g dtheta

returned as LogValue.  A linear-domain engine backs signed integrands
(mollifier numerators), sharing the same node construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

_LOG_PI_HALF = math.log(math.pi / 2.0)
_BASE_STEP = 0.5


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and refinement budget of the adaptive engine.

    rel_tol is a relative target for the log of the integral between two
    refinement levels; abs_tol is an absolute floor below which integrals
    are accepted as converged; max_refinements counts level doublings after
    the coarse pass.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-300
    max_refinements: int = 10

    def __post_init__(self) -> None:
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.abs_tol < 0.0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_refinements < 1:
            raise ValueError(
                f"max_refinements must be >= 1, got {self.max_refinements}")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class LogValue:
    """A positive quantity stored as its natural logarithm."""

    log_magnitude: float

    def value(self) -> float:
        return math.exp(self.log_magnitude)


def log_ratio(numer: LogValue, denom: LogValue) -> float:
    """log(numer/denom) without leaving the log domain."""
    return numer.log_magnitude - denom.log_magnitude


class NonConvergenceError(RuntimeError):
    """Raised when refinement stalls; carries the last two estimates."""

    def __init__(self, message: str, last_estimate: float,
                 previous_estimate: float) -> None:
        super().__init__(
            f"{message} (last estimate {last_estimate!r}, "
            f"previous {previous_estimate!r})")
        self.last_estimate = last_estimate
        self.previous_estimate = previous_estimate


def _softplus(y: np.ndarray) -> np.ndarray:
    # log(1 + e^y), stable for both signs
    return np.maximum(y, 0.0) + np.log1p(np.exp(-np.abs(y)))


def _log_cosh(z: np.ndarray) -> np.ndarray:
    return np.abs(z) + np.log1p(np.exp(-2.0 * np.abs(z))) - math.log(2.0)


def _t_max_for(beta: float) -> float:
    # beta = 1 + min(alpha, 0): strength of the worst endpoint singularity.
    # Weight*integrand decays like exp(-2 z beta); 45 e-foldings suffice.
    beta = max(beta, 0.02)
    return min(7.0, max(3.3, math.asinh(45.0 / (math.pi * beta))))


def _level_abscissae(level: int, t_max: float) -> np.ndarray:
    """New abscissae introduced at this refinement level (symmetric in t)."""
    if level == 0:
        m = int(math.floor(t_max / _BASE_STEP))
        pos = _BASE_STEP * np.arange(1, m + 1)
        return np.concatenate([-pos[::-1], [0.0], pos])
    h = _BASE_STEP * 2.0 ** (-level)
    m = int(math.floor((t_max / h - 1.0) / 2.0))
    odd = h * (2.0 * np.arange(0, m + 1) + 1.0)
    return np.concatenate([-odd[::-1], odd])


def _node_geometry(t: np.ndarray, a: float, b: float):
    """Positions, endpoint offsets (linear and log) and h-free log weights."""
    span = b - a
    z = 0.5 * math.pi * np.sinh(t)
    log_w = _LOG_PI_HALF + _log_cosh(t) - 2.0 * _log_cosh(z)
    log_da = math.log(span) - _softplus(-2.0 * z)
    log_db = math.log(span) - _softplus(2.0 * z)
    da = np.exp(log_da)
    db = np.exp(log_db)
    x = np.where(z <= 0.0, a + da, b - db)
    return x, da, db, log_da, log_db, log_w


def tanh_sinh_log(log_f: Callable, a: float, b: float,
                  config: QuadratureConfig = DEFAULT_CONFIG,
                  beta: float = 1.0) -> float:
    """Log of int_a^b exp(log_f) dx by level-doubled tanh-sinh.

    log_f(x, da, db, log_da, log_db) -> array of log integrand values; da/db
    are exact distances to the endpoints (log_da/log_db never underflow).
    """
    if not b > a:
        raise ValueError(f"empty integration interval [{a}, {b}]")
    t_max = _t_max_for(beta)
    log_half_span = math.log(0.5 * (b - a))
    blocks: list[np.ndarray] = []
    prev = math.nan
    log_abs_floor = math.log(config.abs_tol) if config.abs_tol > 0 else -math.inf
    for level in range(config.max_refinements + 1):
        t = _level_abscissae(level, t_max)
        x, da, db, log_da, log_db, log_w = _node_geometry(t, a, b)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore",
                         under="ignore"):
            vals = np.asarray(log_f(x, da, db, log_da, log_db), dtype=float)
        terms = log_w + vals
        blocks.append(terms[~np.isnan(terms)])
        h = _BASE_STEP * 2.0 ** (-level)
        current = log_half_span + math.log(h) + logsumexp(
            np.concatenate(blocks))
        if level >= 3:
            if current == -math.inf and prev == -math.inf:
                return current
            if current < log_abs_floor and prev < log_abs_floor:
                return current
            if abs(current - prev) <= config.rel_tol:
                return current
        prev = current
    raise NonConvergenceError(
        "tanh-sinh refinement did not reach rel_tol", current, prev)


def tanh_sinh_sum(f: Callable, a: float, b: float,
                  config: QuadratureConfig = DEFAULT_CONFIG,
                  beta: float = 1.0) -> float:
    """Linear-domain twin of tanh_sinh_log for signed integrands."""
    if not b > a:
        raise ValueError(f"empty integration interval [{a}, {b}]")
    t_max = _t_max_for(beta)
    half_span = 0.5 * (b - a)
    blocks: list[np.ndarray] = []
    prev = math.nan
    for level in range(config.max_refinements + 1):
        t = _level_abscissae(level, t_max)
        x, da, db, log_da, log_db, log_w = _node_geometry(t, a, b)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore",
                         under="ignore"):
            vals = np.asarray(f(x, da, db, log_da, log_db), dtype=float)
        terms = np.exp(log_w) * vals
        blocks.append(terms[np.isfinite(terms)])
        h = _BASE_STEP * 2.0 ** (-level)
        current = half_span * h * float(np.sum(np.concatenate(blocks)))
        if level >= 3:
            if abs(current - prev) <= config.rel_tol * abs(current) + config.abs_tol:
                return current
        prev = current
    raise NonConvergenceError(
        "tanh-sinh refinement did not reach rel_tol", current, prev)


def _log_sin_theta(da: np.ndarray, db: np.ndarray,
                   log_da: np.ndarray, log_db: np.ndarray) -> np.ndarray:
    # sin(theta) = sin(min distance to {0, pi}); below 1e-8 the log offset
    # itself is the answer to full precision.
    dmin = np.minimum(da, db)
    log_dmin = np.minimum(log_da, log_db)
    small = dmin < 1e-8
    safe = np.where(small, 1.0, dmin)
    return np.where(small, log_dmin, np.log(np.sin(safe)))


def _log_sinh_theta(theta: np.ndarray, da: np.ndarray,
                    log_da: np.ndarray, singular_left: bool) -> np.ndarray:
    if singular_left:
        small = da < 1e-8
        safe = np.where(small, 1.0, theta)
        return np.where(small, log_da, np.log(np.sinh(safe)))
    return np.log(np.sinh(theta))


def integrate_sin_weighted(sigma: float, alpha: float,
                           g: Optional[Callable] = None,
                           config: QuadratureConfig = DEFAULT_CONFIG) -> LogValue:
    """LogValue of int_0^pi e^{-sigma(1-cos theta)} (sin theta)^alpha g(theta) dtheta.

    g, when given, must be nonnegative; it is evaluated pointwise and its log
    is taken by the engine (zeros are fine).
    """
    if not sigma >= 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if not alpha > -1.0:
        raise ValueError(f"alpha must be > -1, got {alpha}")

    def log_f(x, da, db, log_da, log_db):
        one_minus_cos = 2.0 * np.sin(0.5 * da) ** 2
        out = -sigma * one_minus_cos
        if alpha != 0.0:
            out = out + alpha * _log_sin_theta(da, db, log_da, log_db)
        if g is not None:
            out = out + np.log(np.asarray(g(x), dtype=float))
        return out

    beta = 1.0 + min(alpha, 0.0)
    return LogValue(tanh_sinh_log(log_f, 0.0, math.pi, config, beta=beta))


def sinh_theta_cutoff(sigma: float, config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Upper integration limit: sigma(cosh(theta)-1) = -log(rel_tol) + 50, >= 5."""
    target = 50.0 - math.log(config.rel_tol)
    return max(5.0, math.acosh(1.0 + target / sigma))


def integrate_sinh_weighted(sigma: float, alpha: float,
                            g: Optional[Callable] = None,
                            config: QuadratureConfig = DEFAULT_CONFIG,
                            theta_min: float = 0.0) -> LogValue:
    """LogValue of int_{theta_min}^inf e^{-sigma(cosh-1)} (sinh theta)^alpha g dtheta.

    theta_min defaults to 0 (the full family); a positive theta_min measures
    tail mass and removes the endpoint singularity.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not alpha > -1.0:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    if theta_min < 0.0:
        raise ValueError(f"theta_min must be >= 0, got {theta_min}")
    theta_max = sinh_theta_cutoff(sigma, config)
    if theta_min >= theta_max:
        return LogValue(-math.inf)
    singular_left = theta_min == 0.0 and alpha != 0.0

    def log_f(x, da, db, log_da, log_db):
        out = -sigma * 2.0 * np.sinh(0.5 * x) ** 2
        if alpha != 0.0:
            out = out + alpha * _log_sinh_theta(x, da, log_da, singular_left)
        if g is not None:
            out = out + np.log(np.asarray(g(x), dtype=float))
        return out

    beta = 1.0 + min(alpha, 0.0) if singular_left else 1.0
    return LogValue(tanh_sinh_log(log_f, theta_min, theta_max, config, beta=beta))


def integrate_sinh_weighted_substituted(
        sigma: float, alpha: float,
        config: QuadratureConfig = DEFAULT_CONFIG) -> LogValue:
    """Same integral as integrate_sinh_weighted via tau = sigma(cosh theta - 1).

    f(sigma) = sigma^{-1} int_0^inf e^{-tau} (2 tau/sigma + (tau/sigma)^2)^{(alpha-1)/2} dtau.
    Kept as an independent code path for cross-checks; never used internally.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not alpha > -1.0:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    tau_max = 60.0 + 10.0 * max(alpha, 0.0)
    half = 0.5 * (alpha - 1.0)

    def log_f(x, da, db, log_da, log_db):
        # log(2 tau/sigma + tau^2/sigma^2) via the log offset near tau = 0
        log_arg = (math.log(2.0) + log_da - math.log(sigma)
                   + np.log1p(0.5 * x / sigma))
        return -x + half * log_arg - math.log(sigma)

    beta = 1.0 + min(half, 0.0)
    return LogValue(tanh_sinh_log(log_f, 0.0, tau_max, config, beta=beta))


@lru_cache(maxsize=200_000)
def log_sin_kernel(sigma: float, alpha: float, rel_tol: float = 1e-10) -> float:
    """Memoized log I(sigma) with g = 1."""
    cfg = QuadratureConfig(rel_tol=rel_tol) if rel_tol != DEFAULT_CONFIG.rel_tol \
        else DEFAULT_CONFIG
    return integrate_sin_weighted(sigma, alpha, config=cfg).log_magnitude


@lru_cache(maxsize=200_000)
def log_sinh_kernel(sigma: float, alpha: float, rel_tol: float = 1e-10) -> float:
    """Memoized log f(sigma) with g = 1."""
    cfg = QuadratureConfig(rel_tol=rel_tol) if rel_tol != DEFAULT_CONFIG.rel_tol \
        else DEFAULT_CONFIG
    return integrate_sinh_weighted(sigma, alpha, config=cfg).log_magnitude
