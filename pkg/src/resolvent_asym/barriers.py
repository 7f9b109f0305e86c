"""Comparison barriers sandwiching the resolvent between kernel ratios.

Two layers: the coarse envelope pair (E from above through the sin kernel,
e from below through the sinh kernel at an exterior witness point), and the
enhanced pair (U, V) available under uniform interior/exterior ball
conditions, which is tight enough to drive the q-mean limits.  All values are
logarithms of the corresponding barrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .params import ProblemParams
from .quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    log_sin_kernel,
    log_sinh_kernel,
)
from .radial import Geometry, GeometryKind, RadialSolution, eval_log_u


def _log_cosh(x: float) -> float:
    return abs(x) + math.log1p(math.exp(-2.0 * abs(x))) - math.log(2.0)


def upper_E(params: ProblemParams, dist: float,
            config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """log of the upper envelope at boundary distance dist.

    Finite p: E = I(0) / I(sqrt(p') dist / eps); at p = infinity
    E = 2 / (1 + exp(-2 dist/eps)).  Always in (0... 1]-reciprocal sense:
    E >= 1 with E(0) = 1, and eps log u + sqrt(p') d <= eps log E.
    """
    if dist < 0.0:
        raise ValueError(f"boundary distance must be >= 0, got {dist}")
    if params.is_infinity:
        return math.log(2.0) - math.log1p(math.exp(-2.0 * dist / params.eps))
    root = math.sqrt(params.p_conjugate)
    a = params.alpha
    rt = config.rel_tol
    return log_sin_kernel(0.0, a, rt) - log_sin_kernel(root * dist / params.eps, a, rt)


def lower_e(params: ProblemParams, dist_x_z: float, dist_gamma_z: float,
            config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """log of the lower envelope seen from a witness z outside the domain.

    e = f(sqrt(p') |x-z|/eps) / f(sqrt(p') d_Gamma(z)/eps) for finite p
    (requires |x-z| >= d_Gamma(z) > 0), identically 1 at p = infinity.
    """
    if not dist_gamma_z > 0.0:
        raise ValueError(f"d_Gamma(z) must be > 0, got {dist_gamma_z}")
    if dist_x_z < dist_gamma_z:
        raise ValueError(
            f"|x - z| = {dist_x_z} < d_Gamma(z) = {dist_gamma_z}; the witness "
            "must be no closer to x than to the boundary")
    if params.is_infinity:
        return 0.0
    root = math.sqrt(params.p_conjugate)
    a = params.alpha
    rt = config.rel_tol
    return (log_sinh_kernel(root * dist_x_z / params.eps, a, rt)
            - log_sinh_kernel(root * dist_gamma_z / params.eps, a, rt))


@dataclass(frozen=True)
class EnhancedBarriers:
    """Barrier pair under interior/exterior ball radii (r_i, r_e).

    U uses sigma_e = sqrt(p') r_e / eps, V uses sigma_i = sqrt(p') r_i / eps
    in its first branch; both are functions of the scaled boundary distance
    tau = sqrt(p') d_Gamma / eps.
    """

    params: ProblemParams
    r_i: float
    r_e: float

    def __post_init__(self) -> None:
        if not (self.r_i > 0.0 and self.r_e > 0.0):
            raise ValueError(
                f"ball radii must be positive, got r_i={self.r_i}, r_e={self.r_e}")

    @property
    def sigma_i(self) -> float:
        return math.sqrt(self.params.p_conjugate) * self.r_i / self.params.eps

    @property
    def sigma_e(self) -> float:
        return math.sqrt(self.params.p_conjugate) * self.r_e / self.params.eps


def enhanced_U(b: EnhancedBarriers, tau: Union[float, np.ndarray],
               config: QuadratureConfig = DEFAULT_CONFIG
               ) -> Union[float, np.ndarray]:
    """log U(tau) = -tau + log f(sigma_e + tau) - log f(sigma_e); p=inf: -tau.

    U(0) = 1 and e^tau U(tau) decreases from 1: the lower barrier.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau_arr < 0.0):
        raise ValueError("tau must be >= 0")
    if b.params.is_infinity:
        out = -tau_arr
    else:
        a = b.params.alpha
        rt = config.rel_tol
        se = b.sigma_e
        base = log_sinh_kernel(se, a, rt)
        out = -tau_arr + np.array(
            [log_sinh_kernel(se + t, a, rt) for t in tau_arr]) - base
    if np.isscalar(tau) or np.asarray(tau).ndim == 0:
        return float(out[0])
    return out


def enhanced_V(b: EnhancedBarriers, tau: Union[float, np.ndarray],
               config: QuadratureConfig = DEFAULT_CONFIG
               ) -> Union[float, np.ndarray]:
    """log V(tau): the upper barrier, piecewise across tau = sigma_i.

    Finite p:  tau <  sigma_i: -tau + log I(sigma_i - tau) - log I(sigma_i)
               tau >= sigma_i: -tau + log I(0) - log I(tau)
    p = infinity: cosh(sigma_i - tau)/cosh(sigma_i), then 1/cosh(tau).
    Continuity at the split is a numerical observation, not asserted here.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau_arr < 0.0):
        raise ValueError("tau must be >= 0")
    si = b.sigma_i
    if b.params.is_infinity:
        out = np.where(
            tau_arr < si,
            [_log_cosh(si - t) - _log_cosh(si) for t in tau_arr],
            [-_log_cosh(t) for t in tau_arr])
    else:
        a = b.params.alpha
        rt = config.rel_tol
        base = log_sin_kernel(si, a, rt)
        zero = log_sin_kernel(0.0, a, rt)
        vals = []
        for t in tau_arr:
            if t < si:
                vals.append(-t + log_sin_kernel(si - t, a, rt) - base)
            else:
                vals.append(-t + zero - log_sin_kernel(t, a, rt))
        out = np.asarray(vals)
    if np.isscalar(tau) or np.asarray(tau).ndim == 0:
        return float(out[0])
    return out


def _barriers_for(params: ProblemParams, geometry: Geometry,
                  r_i: float = None) -> EnhancedBarriers:
    R = geometry.R
    if geometry.kind is GeometryKind.BALL:
        return EnhancedBarriers(params, r_i=R, r_e=R)
    return EnhancedBarriers(params, r_i=R if r_i is None else r_i, r_e=R)


def sandwich_check(params: ProblemParams, geometry: Geometry,
                   r_grid: np.ndarray,
                   config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Max signed violation of log U <= log u <= log V over the radius grid.

    Positive return means a violation; exactness of one side per geometry
    (U on the exterior, the first V branch on the ball) keeps the result at
    rounding level for the radial benchmarks.
    """
    sol = RadialSolution(params, geometry)
    b = _barriers_for(params, geometry)
    r_arr = np.asarray(r_grid, dtype=float)
    if geometry.kind is GeometryKind.BALL:
        d = geometry.R - r_arr
    else:
        d = r_arr - geometry.R
    tau = math.sqrt(params.p_conjugate) * d / params.eps
    log_u = eval_log_u(sol, r_arr, config)
    log_low = enhanced_U(b, tau, config)
    log_high = enhanced_V(b, tau, config)
    worst = np.maximum(log_low - log_u, log_u - log_high)
    return float(np.max(worst))


def sandwich_table(params: ProblemParams, geometry: Geometry,
                   r_grid: np.ndarray,
                   config: QuadratureConfig = DEFAULT_CONFIG) -> list:
    """Rows (r, d_gamma, log_U, log_u, log_V, violation) for reporting."""
    sol = RadialSolution(params, geometry)
    b = _barriers_for(params, geometry)
    rows = []
    for r in np.asarray(r_grid, dtype=float):
        d = geometry.R - r if geometry.kind is GeometryKind.BALL else r - geometry.R
        tau = math.sqrt(params.p_conjugate) * d / params.eps
        lu = eval_log_u(sol, float(r), config)
        lo = enhanced_U(b, tau, config)
        hi = enhanced_V(b, tau, config)
        rows.append({"r": float(r), "d_gamma": float(d), "log_U": lo,
                     "log_u": lu, "log_V": hi,
                     "violation": max(lo - lu, lu - hi)})
    return rows


def comparison_chain(params: ProblemParams, geometry: Geometry,
                     r_x: float, r_z: float,
                     config: QuadratureConfig = DEFAULT_CONFIG) -> tuple:
    """(lower, middle, upper) of the eps-scaled comparison chain on the exterior.

    With x, z on the same ray through the origin, z inside the excluded ball:
      sqrt(p') (d_Gamma(x) + d_Gamma(z) - |x-z|) + eps log e
        <= eps log u(x) + sqrt(p') d_Gamma(x) <= eps log E(d_Gamma(x)).
    """
    if geometry.kind is not GeometryKind.EXTERIOR:
        raise ValueError("the witness chain is set on the exterior geometry")
    R = geometry.R
    if not (0.0 < r_z < R):
        raise ValueError(f"witness radius must lie in (0, {R}), got {r_z}")
    if not r_x >= R:
        raise ValueError(f"evaluation radius must be >= {R}, got {r_x}")
    root = math.sqrt(params.p_conjugate)
    eps = params.eps
    d_x = r_x - R
    d_z = R - r_z
    dist_xz = r_x - r_z
    sol = RadialSolution(params, geometry)
    middle = eps * eval_log_u(sol, r_x, config) + root * d_x
    lower = (root * (d_x + d_z - dist_xz)
             + eps * lower_e(params, dist_xz, d_z, config))
    upper = eps * upper_E(params, d_x, config)
    return lower, middle, upper
