"""Domain oracles: distances, curvatures, touching balls and level-set areas.

Three domain kinds are supported: the open ball of radius rho, the complement
of a closed ball of radius r_e, and implicit domains {phi < 0} with analytic
gradient and Hessian in dimensions 2 and 3.  Curvatures follow the
inward-normal convention throughout (ball: +1/rho, ball complement: -1/r_e).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import betainc, gamma

from .params import pi_gamma as _pi_gamma_product

_PROJECT_TOL = 1e-12
_PROJECT_MAX_ITER = 80
_DEFAULT_SEED = 20260815
_UNIQUENESS_DIRECTIONS = 10_000


def unit_sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n: 2 pi^{n/2}/Gamma(n/2)."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"ambient dimension must be an integer >= 1, got {n!r}")
    return 2.0 * math.pi ** (0.5 * n) / gamma(0.5 * n)


def ball_volume(n: int, radius: float) -> float:
    """Volume of the n-ball: pi^{n/2} R^n / Gamma(n/2 + 1)."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"ambient dimension must be an integer >= 1, got {n!r}")
    if not radius >= 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return math.pi ** (0.5 * n) * radius ** n / gamma(0.5 * n + 1.0)


@dataclass(frozen=True)
class BallDomain:
    """Open ball of radius rho centered at the origin."""
    rho: float

    def __post_init__(self) -> None:
        if not self.rho > 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class ExteriorBallDomain:
    """Complement of the closed ball of radius r_e centered at the origin."""
    r_e: float

    def __post_init__(self) -> None:
        if not self.r_e > 0.0:
            raise ValueError(f"r_e must be positive, got {self.r_e}")


@dataclass(frozen=True, eq=False)
class ImplicitDomain:
    """Domain {phi < 0} with analytic derivatives, dimensions 2 or 3.

    phi, grad and hess must be vectorized over a trailing point axis:
    phi (..., N) -> (...), grad -> (..., N), hess -> (..., N, N).
    """
    phi: Callable
    grad: Callable
    hess: Callable
    dim: int
    name: str = "implicit"

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"implicit domains support N in {{2, 3}}, got {self.dim}")


DomainOracle = Union[BallDomain, ExteriorBallDomain, ImplicitDomain]


def _project_implicit(domain: ImplicitDomain, points: np.ndarray) -> np.ndarray:
    """Nearest boundary points for a batch (m, N) of interior points.

    Newton iteration on the first-order system y - x = lambda grad(phi)(y),
    phi(y) = 0, started from one explicit linearization step.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    m, n = x.shape
    g0 = np.asarray(domain.grad(x), dtype=float)
    phi0 = np.asarray(domain.phi(x), dtype=float)
    gnorm2 = np.einsum("ij,ij->i", g0, g0)
    lam = -phi0 / gnorm2
    y = x + lam[:, None] * g0
    active = np.ones(m, dtype=bool)
    for _ in range(_PROJECT_MAX_ITER):
        if not np.any(active):
            break
        ya, xa, la = y[active], x[active], lam[active]
        g = np.asarray(domain.grad(ya), dtype=float)
        h = np.asarray(domain.hess(ya), dtype=float)
        phi = np.asarray(domain.phi(ya), dtype=float)
        k = ya.shape[0]
        jac = np.zeros((k, n + 1, n + 1))
        jac[:, :n, :n] = np.eye(n)[None, :, :] - la[:, None, None] * h
        jac[:, :n, n] = -g
        jac[:, n, :n] = g
        rhs = np.empty((k, n + 1))
        rhs[:, :n] = -(ya - xa - la[:, None] * g)
        rhs[:, n] = -phi
        delta = np.linalg.solve(jac, rhs[..., None])[..., 0]
        y[active] += delta[:, :n]
        lam[active] += delta[:, n]
        moved = np.max(np.abs(delta), axis=1)
        scale = 1.0 + np.max(np.abs(ya), axis=1)
        # written so that a NaN iterate stays active and is reported below
        still = ~(moved <= _PROJECT_TOL * scale)
        idx = np.where(active)[0]
        active[idx[~still]] = False
    if np.any(active):
        raise RuntimeError(
            f"nearest-point projection did not converge for "
            f"{int(np.sum(active))} of {m} points")
    return y


def distance_and_nearest(domain: DomainOracle,
                         x: Sequence[float]) -> Tuple[float, np.ndarray]:
    """(d_Gamma(x), nearest boundary point) for x in the closed domain.

    At the center of a ball every boundary point is nearest; a fixed
    representative (rho, 0, ...) is returned so the map stays deterministic.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(domain, BallDomain):
        r = float(np.linalg.norm(x))
        if r > domain.rho * (1.0 + 1e-12):
            raise ValueError(f"point at radius {r} outside the closed ball")
        if r < 1e-300:
            y = np.zeros_like(x)
            y[0] = domain.rho
            return domain.rho, y
        return domain.rho - r, x * (domain.rho / r)
    if isinstance(domain, ExteriorBallDomain):
        r = float(np.linalg.norm(x))
        if r < domain.r_e * (1.0 - 1e-12):
            raise ValueError(f"point at radius {r} inside the excluded ball")
        return r - domain.r_e, x * (domain.r_e / r)
    phi = float(domain.phi(x[None, :])[0])
    gn = float(np.linalg.norm(domain.grad(x[None, :])[0]))
    if phi > 1e-12 * max(1.0, gn):
        raise ValueError(f"point {x} lies outside the closed domain (phi={phi})")
    y = _project_implicit(domain, x[None, :])[0]
    return float(np.linalg.norm(y - x)), y


def boundary_distances(domain: DomainOracle, points: np.ndarray,
                       chunk: int = 200_000) -> np.ndarray:
    """Signed boundary distances for a batch; negative means outside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(domain, BallDomain):
        return domain.rho - np.linalg.norm(pts, axis=1)
    if isinstance(domain, ExteriorBallDomain):
        return np.linalg.norm(pts, axis=1) - domain.r_e
    out = np.empty(len(pts))
    for lo in range(0, len(pts), chunk):
        block = pts[lo:lo + chunk]
        y = _project_implicit(domain, block)
        d = np.linalg.norm(y - block, axis=1)
        sign = np.where(np.asarray(domain.phi(block)) <= 0.0, 1.0, -1.0)
        out[lo:lo + chunk] = sign * d
    return out


def principal_curvatures(domain: DomainOracle,
                         y: Sequence[float]) -> np.ndarray:
    """The N-1 principal curvatures at boundary point y, inward convention.

    For implicit domains: eigenvalues of the Hessian restricted to the
    tangent plane, divided by |grad phi| (phi < 0 inside makes the signs come
    out in the inward convention without extra flips).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if isinstance(domain, BallDomain):
        return np.full(n - 1, 1.0 / domain.rho)
    if isinstance(domain, ExteriorBallDomain):
        return np.full(n - 1, -1.0 / domain.r_e)
    g = np.asarray(domain.grad(y[None, :])[0], dtype=float)
    h = np.asarray(domain.hess(y[None, :])[0], dtype=float)
    gn = np.linalg.norm(g)
    if gn == 0.0:
        raise ValueError("gradient vanishes at the boundary point")
    q, _ = np.linalg.qr(np.column_stack([g / gn, np.eye(n)]))
    tangent = q[:, 1:n]
    shape_op = tangent.T @ h @ tangent / gn
    return np.linalg.eigvalsh(shape_op)


@dataclass(frozen=True, eq=False)
class TouchingBallConfig:
    """A ball B_R(x) inside the domain touching the boundary at exactly y_x."""

    x: np.ndarray
    R: float
    y_x: np.ndarray
    curvatures: np.ndarray
    domain: DomainOracle

    @property
    def n(self) -> int:
        return int(np.asarray(self.x).size)

    @property
    def pi_gamma(self) -> float:
        return _pi_gamma_product(np.asarray(self.curvatures), self.R)


def touching_ball(domain: DomainOracle, x: Sequence[float], R: float,
                  seed: int = _DEFAULT_SEED) -> TouchingBallConfig:
    """Validate and assemble a touching-ball configuration at x.

    Checks: d_Gamma(x) = R to 1e-9 relative; the closed ball stays inside the
    closed domain; the touching point is unique (probed along 10^4 random
    directions: everything more than 0.3 rad away from the contact direction
    keeps boundary distance >= 1e-4 R); all curvatures < 1/R.
    """
    x = np.asarray(x, dtype=float)
    if not R > 0.0:
        raise ValueError(f"R must be positive, got {R}")
    d, y = distance_and_nearest(domain, x)
    if abs(d - R) > 1e-9 * max(1.0, R):
        raise ValueError(f"x is at boundary distance {d}, not R = {R}")
    kappas = principal_curvatures(domain, y)
    _pi_gamma_product(kappas, R)  # raises when any kappa >= 1/R
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((_UNIQUENESS_DIRECTIONS, x.size))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    probes = x[None, :] + R * dirs
    dists = boundary_distances(domain, probes)
    if np.min(dists) < -1e-9 * max(1.0, R):
        raise ValueError("the closed ball B_R(x) leaves the domain")
    axis = (y - x) / R
    angles = np.arccos(np.clip(dirs @ axis, -1.0, 1.0))
    far = angles > 0.3
    if np.any(far) and np.min(dists[far]) < 1e-4 * R:
        raise ValueError(
            "touching point is not unique: a second near-contact exists "
            f"(min off-axis distance {np.min(dists[far]):.3e})")
    return TouchingBallConfig(x=x, R=float(R), y_x=y, curvatures=kappas,
                              domain=domain)


def _sin_power_integral(m: int, phi: float) -> float:
    """int_0^phi sin^m t dt for integer m >= 0, phi in [0, pi]."""
    if phi <= 0.0:
        return 0.0
    total = math.sqrt(math.pi) * gamma(0.5 * (m + 1)) / gamma(0.5 * m + 1.0)
    if phi >= math.pi:
        return total
    a = 0.5 * (m + 1)
    s2 = math.sin(phi) ** 2
    half = 0.5 * total * betainc(a, 0.5, s2)
    if phi <= 0.5 * math.pi:
        return half
    return total - 0.5 * total * betainc(a, 0.5, math.sin(math.pi - phi) ** 2)


def _sphere_cap_area(n: int, r1: float, c: float, window: float) -> float:
    """Area of {|p| = r1} cut to the ball of radius `window` centered at
    distance c from the origin (ambient dimension n)."""
    if r1 <= 0.0:
        return 0.0
    full = unit_sphere_area(n) * r1 ** (n - 1)
    if c < 1e-14 * max(1.0, r1):
        return full if r1 <= window else 0.0
    cos_phi = (r1 * r1 + c * c - window * window) / (2.0 * r1 * c)
    if cos_phi >= 1.0:
        return 0.0
    if cos_phi <= -1.0:
        return full
    phi = math.acos(cos_phi)
    return (unit_sphere_area(n - 1) * r1 ** (n - 1)
            * _sin_power_integral(n - 2, phi))


def level_set_area(domain: DomainOracle, cfg: TouchingBallConfig, s: float,
                   n_samples: int = 1_000_000,
                   seed: int = _DEFAULT_SEED,
                   half_width: Optional[float] = None) -> float:
    """Surface measure of {d_Gamma = s} inside B_R(x).

    Closed sphere-cap formulas for ball and ball-complement domains; Monte
    Carlo volume-derivative binning for implicit domains (the sampling
    parameters only matter there).  s >= 2R returns 0 (the level set has left
    the ball); s <= 0 is rejected.
    """
    if not s > 0.0:
        raise ValueError(f"level distance s must be > 0, got {s}")
    if s >= 2.0 * cfg.R:
        return 0.0
    c = float(np.linalg.norm(np.asarray(cfg.x, dtype=float)))
    if isinstance(domain, BallDomain):
        return _sphere_cap_area(cfg.n, domain.rho - s, c, cfg.R)
    if isinstance(domain, ExteriorBallDomain):
        return _sphere_cap_area(cfg.n, domain.r_e + s, c, cfg.R)
    area, _ = level_set_area_mc(domain, cfg, s, n_samples=n_samples,
                                seed=seed, half_width=half_width)
    return area


def level_set_area_mc(domain: DomainOracle, cfg: TouchingBallConfig, s: float,
                      n_samples: int = 10_000_000,
                      seed: int = _DEFAULT_SEED,
                      half_width: Optional[float] = None,
                      n_strata: int = 64) -> Tuple[float, float]:
    """Monte Carlo oracle (area, stderr) by binning boundary distances.

    Uniform samples in B_R(x), stratified over radius shells with one
    spawned bit-generator per stratum; the level-set measure is the fraction
    landing in [s - hw, s + hw] times vol(B_R)/(2 hw).
    """
    if not s > 0.0:
        raise ValueError(f"level distance s must be > 0, got {s}")
    hw = half_width if half_width is not None else 0.1 * s
    if not hw > 0.0:
        raise ValueError(f"half_width must be > 0, got {hw}")
    x = np.asarray(cfg.x, dtype=float)
    n = x.size
    vol = ball_volume(n, cfg.R)
    seqs = np.random.SeedSequence(seed).spawn(n_strata)
    base = n_samples // n_strata
    counts_total = 0
    var_sum = 0.0
    total = 0
    for j, seq in enumerate(seqs):
        m = base + (1 if j < n_samples % n_strata else 0)
        if m == 0:
            continue
        rng = np.random.default_rng(seq)
        u = (j + rng.random(m)) / n_strata
        radii = cfg.R * u ** (1.0 / n)
        dirs = rng.standard_normal((m, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = x[None, :] + radii[:, None] * dirs
        d = boundary_distances(domain, pts)
        hits = int(np.sum(np.abs(d - s) <= hw))
        p_hat = hits / m
        counts_total += hits
        var_sum += m * p_hat * (1.0 - p_hat)
        total += m
    area = counts_total / total * vol / (2.0 * hw)
    se = vol / (2.0 * hw) * math.sqrt(var_sum) / total
    return area, se


def area_ratio_limit(cfg: TouchingBallConfig) -> float:
    """Limit of area(s)/s^{(N-1)/2} as s -> 0 at a touching configuration:
    |S^{N-2}| (2R)^{(N-1)/2} (N-1)^{-1} Pi_Gamma^{-1/2}."""
    n = cfg.n
    return (unit_sphere_area(n - 1) * (2.0 * cfg.R) ** (0.5 * (n - 1))
            / (n - 1) / math.sqrt(cfg.pi_gamma))


@dataclass(frozen=True, eq=False)
class ModulusOfContinuity:
    """A strictly increasing modulus omega on (0, r] with omega(0+) = 0."""

    omega: Callable
    r: float

    def __post_init__(self) -> None:
        if not self.r > 0.0:
            raise ValueError(f"r must be positive, got {self.r}")
        probe = np.geomspace(self.r * 1e-8, self.r, 24)
        vals = np.asarray(self.omega(probe), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("omega must be finite on (0, r]")
        if not np.all(np.diff(vals) > 0.0):
            raise ValueError("omega must be strictly increasing on (0, r]")
        if vals[0] <= 0.0:
            raise ValueError("omega must be positive on (0, r]")


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def psi_of_eps(modulus: ModulusOfContinuity, eps: float,
               grid_size: int = 4000) -> float:
    """Distance from (0, eps) to the graph {(s, omega(s)): 0 < s <= r}.

    Requires 0 < eps <= omega(r).  Coarse log-grid localization followed by
    golden-section refinement in log s; the s -> 0 closure point contributes
    the candidate value eps.
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    omega_r = float(np.asarray(modulus.omega(np.array([modulus.r])))[0])
    if eps > omega_r:
        raise ValueError(f"eps = {eps} exceeds omega(r) = {omega_r}")

    def dist(s_arr: np.ndarray) -> np.ndarray:
        w = np.asarray(modulus.omega(s_arr), dtype=float)
        return np.hypot(s_arr, w - eps)

    s = np.geomspace(1e-280, modulus.r, grid_size)
    d = dist(s)
    best = int(np.argmin(d))
    lo = s[max(best - 1, 0)]
    hi = s[min(best + 1, grid_size - 1)]
    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    dd = a + _GOLDEN * (b - a)
    fc = float(dist(np.array([math.exp(c)]))[0])
    fd = float(dist(np.array([math.exp(dd)]))[0])
    for _ in range(120):
        if fc < fd:
            b, dd, fd = dd, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(dist(np.array([math.exp(c)]))[0])
        else:
            a, c, fc = c, dd, fd
            dd = a + _GOLDEN * (b - a)
            fd = float(dist(np.array([math.exp(dd)]))[0])
    refined = min(fc, fd, float(d[best]))
    return min(refined, eps)


def make_ellipse_domain(a: float = 2.0, b: float = 1.0) -> ImplicitDomain:
    """The ellipse x^2/a^2 + y^2/b^2 < 1 as an implicit domain."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError("semi-axes must be positive")
    inv_a2, inv_b2 = 1.0 / (a * a), 1.0 / (b * b)

    def phi(p):
        p = np.asarray(p, dtype=float)
        return p[..., 0] ** 2 * inv_a2 + p[..., 1] ** 2 * inv_b2 - 1.0

    def grad(p):
        p = np.asarray(p, dtype=float)
        out = np.empty_like(p)
        out[..., 0] = 2.0 * p[..., 0] * inv_a2
        out[..., 1] = 2.0 * p[..., 1] * inv_b2
        return out

    def hess(p):
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1] + (2, 2)
        out = np.zeros(shape)
        out[..., 0, 0] = 2.0 * inv_a2
        out[..., 1, 1] = 2.0 * inv_b2
        return out

    return ImplicitDomain(phi=phi, grad=grad, hess=hess, dim=2,
                          name=f"ellipse({a},{b})")
