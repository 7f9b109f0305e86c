"""Exact radial solutions of eps^2 Lap_p u = u with boundary value 1.

On a ball of radius R the solution is a ratio of sin-weighted kernels with a
peak factor exp(sqrt(p') (r - R)/eps); on the complement of a ball it is the
sinh-weighted analogue with the opposite peak.  At p = infinity the kernels
collapse to cosh and exp.  Everything is evaluated in the log domain so the
deep interior (u below 1e-300) stays meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from .params import ProblemParams
from .quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    log_sin_kernel,
    log_sinh_kernel,
)


class GeometryKind(Enum):
    BALL = "BALL"
    EXTERIOR = "EXTERIOR"


@dataclass(frozen=True)
class Geometry:
    kind: GeometryKind
    R: float

    def __post_init__(self) -> None:
        if not (isinstance(self.kind, GeometryKind)):
            raise ValueError(f"kind must be a GeometryKind, got {self.kind!r}")
        r = float(self.R)
        if not (r > 0.0 and math.isfinite(r)):
            raise ValueError(f"R must be positive and finite, got {self.R}")
        object.__setattr__(self, "R", r)

    @staticmethod
    def ball(R: float) -> "Geometry":
        return Geometry(GeometryKind.BALL, R)

    @staticmethod
    def exterior(R: float) -> "Geometry":
        return Geometry(GeometryKind.EXTERIOR, R)


@dataclass(frozen=True)
class RadialSolution:
    params: ProblemParams
    geometry: Geometry


def _log_cosh(x: float) -> float:
    return abs(x) + math.log1p(math.exp(-2.0 * abs(x))) - math.log(2.0)


def _check_radius(sol: RadialSolution, r: np.ndarray) -> None:
    R = sol.geometry.R
    if sol.geometry.kind is GeometryKind.BALL:
        if np.any(r < 0.0) or np.any(r > R * (1.0 + 1e-12)):
            raise ValueError(f"radius outside the closed ball [0, {R}]")
    else:
        if np.any(r < R * (1.0 - 1e-12)):
            raise ValueError(f"radius inside the excluded ball (< {R})")


def eval_log_u(sol: RadialSolution, r: Union[float, np.ndarray],
               config: QuadratureConfig = DEFAULT_CONFIG,
               kernel: Optional[Callable[[float], float]] = None
               ) -> Union[float, np.ndarray]:
    """log u at radius r (scalar or array).

    kernel, when given, must map sigma to the log of the geometry's kernel
    (sin-weighted for the ball, sinh-weighted for the exterior) and is used
    in place of direct quadrature; the default is the exact memoized path.

    Examples
    --------
    Ball, p=inf, R=1, eps=0.1 at the center: -log cosh(10) ~ -9.30685.
    Exterior, p=inf, R=1, eps=0.1 at r=1.2: exactly -2.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    _check_radius(sol, r_arr)
    p = sol.params
    R = sol.geometry.R
    eps = p.eps
    if p.is_infinity:
        if sol.geometry.kind is GeometryKind.BALL:
            out = np.array([_log_cosh(x / eps) - _log_cosh(R / eps)
                            for x in r_arr])
        else:
            out = -(r_arr - R) / eps
    else:
        root = math.sqrt(p.p_conjugate)
        a = p.alpha
        if sol.geometry.kind is GeometryKind.BALL:
            if kernel is None:
                log_kr = np.array([log_sin_kernel(root * x / eps, a,
                                                  config.rel_tol)
                                   for x in r_arr])
                log_kR = log_sin_kernel(root * R / eps, a, config.rel_tol)
            else:
                # custom kernels must accept array arguments
                log_kr = np.asarray(kernel(root * r_arr / eps), dtype=float)
                log_kR = float(kernel(root * R / eps))
            out = root * (r_arr - R) / eps + log_kr - log_kR
        else:
            if kernel is None:
                log_kr = np.array([log_sinh_kernel(root * x / eps, a,
                                                   config.rel_tol)
                                   for x in r_arr])
                log_kR = log_sinh_kernel(root * R / eps, a, config.rel_tol)
            else:
                log_kr = np.asarray(kernel(root * r_arr / eps), dtype=float)
                log_kR = float(kernel(root * R / eps))
            out = -root * (r_arr - R) / eps + log_kr - log_kR
    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return float(out[0])
    return out


def eval_u(sol: RadialSolution, r: Union[float, np.ndarray],
           config: QuadratureConfig = DEFAULT_CONFIG) -> Union[float, np.ndarray]:
    return np.exp(eval_log_u(sol, r, config))


def scaling_check(sol: RadialSolution, r_grid: np.ndarray,
                  scale: float = math.pi / 3.0,
                  config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Max |log u(r) - log u_scaled(scale*r)| when (eps, R, r) all scale.

    The solution depends on (r/eps, R/eps) only, so the result is pure
    numerical noise; callers assert it below 1e-9.
    """
    if not (scale > 0.0 and math.isfinite(scale)):
        raise ValueError(f"scale must be positive finite, got {scale}")
    scaled = RadialSolution(
        ProblemParams(sol.params.n, sol.params.p, sol.params.eps * scale),
        Geometry(sol.geometry.kind, sol.geometry.R * scale))
    a = eval_log_u(sol, np.asarray(r_grid), config)
    b = eval_log_u(scaled, np.asarray(r_grid) * scale, config)
    return float(np.max(np.abs(a - b)))


def ode_residual(sol: RadialSolution, r: float, h: Optional[float] = None,
                 config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Relative residual of the radial equation at r by central differences.

    The equation is checked in ratio form: with rho_pm = u(r ± h)/u(r),
        eps^2 [ (p-1)(rho_+ - 2 + rho_-)/h^2 + (N-1)(rho_+ - rho_-)/(2hr) ] / p = 1
    (p = infinity keeps only the pure second-difference term).  h defaults to
    eps/100 and anything above eps/10 is rejected: the solution varies on the
    scale eps, so coarser steps do not probe the equation.
    """
    eps = sol.params.eps
    if h is None:
        h = eps / 100.0
    if h > eps / 10.0:
        raise ValueError(f"step h = {h} too coarse; need h <= eps/10 = {eps/10}")
    if h <= 0.0:
        raise ValueError(f"step h must be positive, got {h}")
    R = sol.geometry.R
    if sol.geometry.kind is GeometryKind.BALL:
        if not (h < r and r + h < R):
            raise ValueError(f"need [r-h, r+h] inside (0, {R}), got r={r}, h={h}")
    else:
        if not r - h > R:
            raise ValueError(f"need r - h > {R}, got r={r}, h={h}")
    log_u = eval_log_u(sol, np.array([r - h, r, r + h]), config)
    rho_minus = math.exp(log_u[0] - log_u[1])
    rho_plus = math.exp(log_u[2] - log_u[1])
    d2 = (rho_plus - 2.0 + rho_minus) / h ** 2
    d1 = (rho_plus - rho_minus) / (2.0 * h)
    p = sol.params.p
    n = sol.params.n
    if sol.params.is_infinity:
        operator = d2
    else:
        operator = ((p - 1.0) * d2 + (n - 1.0) * d1 / r) / p
    return abs(eps ** 2 * operator - 1.0)


def varadhan_residual(sol: RadialSolution, r: Union[float, np.ndarray],
                      config: QuadratureConfig = DEFAULT_CONFIG
                      ) -> Union[float, np.ndarray]:
    """eps log u + sqrt(p') d_Gamma: the defect of the distance asymptotics.

    Nonnegative on the ball, nonpositive on the exterior, identically zero for
    the exterior at p = infinity.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    R = sol.geometry.R
    if sol.geometry.kind is GeometryKind.BALL:
        d_gamma = R - r_arr
    else:
        d_gamma = r_arr - R
    root = math.sqrt(sol.params.p_conjugate)
    out = sol.params.eps * eval_log_u(sol, r_arr, config) + root * d_gamma
    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return float(out[0])
    return out
