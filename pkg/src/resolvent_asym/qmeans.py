"""q-means over touching balls and their small-scale limits.

The q-mean of a function on B_R(x) is the unique root mu of

    G(mu) = int [f - mu]_+^{q-1} - int [mu - f]_+^{q-1}.

For functions of the boundary distance the integrals collapse, by the
co-area formula, to one-dimensional integrals against the level-set area,
which is closed-form on radial domains.  Implicit domains fall back to an
empirical root search over a fixed Monte Carlo sample; the same sampler
doubles as an independent oracle for the co-area path.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

from .geometry import (
    BallDomain,
    ExteriorBallDomain,
    ImplicitDomain,
    TouchingBallConfig,
    boundary_distances,
    level_set_area,
)
from .params import INFINITY, ProblemParams, is_infinity, limit_constants
from .quadrature import (
    _BASE_STEP,
    _level_abscissae,
    _log_cosh,
    _node_geometry,
    _t_max_for,
    DEFAULT_CONFIG,
    QuadratureConfig,
    log_sin_kernel,
    log_sinh_kernel,
)
from .radial import Geometry, RadialSolution, eval_log_u

_DEFAULT_SEED = 20260815

_SIN_HEAD_MAX = 1.0
_SIN_SIGMA_MAX = 3.0e4
_SINH_SIGMA_MIN = 1.0e-4
_SINH_SIGMA_MAX = 2.0e4


def _fixed_tanh_sinh(f: Callable, a: float, b: float, level: int = 6,
                     beta: float = 1.0) -> float:
    """Tanh-sinh quadrature at a fixed refinement depth.

    Unlike the adaptive variants this is a smooth deterministic function of
    the interval endpoints, which keeps the root search below strictly
    monotone.
    """
    t_max = _t_max_for(beta)
    half_span = 0.5 * (b - a)
    total = 0.0
    for lv in range(level + 1):
        t = _level_abscissae(lv, t_max)
        x, da, db, log_da, log_db, log_w = _node_geometry(t, a, b)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore",
                         under="ignore"):
            vals = np.asarray(f(x, da, db, log_da, log_db), dtype=float)
        terms = np.exp(log_w) * vals
        total += float(np.sum(terms[np.isfinite(terms)]))
    h = _BASE_STEP * 2.0 ** (-level)
    return half_span * h * total


class _KernelTable:
    """Cubic-spline surrogate of a log kernel in sigma, self-checked at build.

    kind "sin" covers sigma in [0, 3e4] (linear head below 1, log-sigma
    tail above); kind "sinh" covers [1e-4, 2e4] in log sigma.  Out-of-range
    arguments fall back to the exact memoized integrals.
    """

    def __init__(self, kind: str, alpha: float, rel_tol: float = 1e-10):
        if kind not in ("sin", "sinh"):
            raise ValueError(f"kernel kind must be 'sin' or 'sinh', got {kind!r}")
        self.kind = kind
        self.alpha = float(alpha)
        self.rel_tol = float(rel_tol)
        if kind == "sin":
            head_x = np.linspace(0.0, _SIN_HEAD_MAX, 321)
            head_y = [self._exact(s) for s in head_x]
            self._head = CubicSpline(head_x, head_y)
            tail_t = np.linspace(0.0, math.log(_SIN_SIGMA_MAX), 1280)
            tail_y = [self._exact(math.exp(t)) for t in tail_t]
            self._tail = CubicSpline(tail_t, tail_y)
        else:
            self._head = None
            tail_t = np.linspace(math.log(_SINH_SIGMA_MIN),
                                 math.log(_SINH_SIGMA_MAX), 1400)
            tail_y = [self._exact(math.exp(t)) for t in tail_t]
            self._tail = CubicSpline(tail_t, tail_y)
        self._self_check()

    def _exact(self, sigma: float) -> float:
        if self.kind == "sin":
            return log_sin_kernel(float(sigma), self.alpha, self.rel_tol)
        return log_sinh_kernel(float(sigma), self.alpha, self.rel_tol)

    def _self_check(self) -> None:
        rng = np.random.default_rng(987654321)
        if self.kind == "sin":
            probes = np.concatenate([
                rng.uniform(1e-3, _SIN_HEAD_MAX, 8),
                np.exp(rng.uniform(0.0, math.log(_SIN_SIGMA_MAX), 12)),
            ])
        else:
            probes = np.exp(rng.uniform(math.log(_SINH_SIGMA_MIN),
                                        math.log(_SINH_SIGMA_MAX), 16))
        worst = max(abs(float(self(s)) - self._exact(s)) for s in probes)
        if worst > 1e-9:
            raise RuntimeError(
                f"kernel table self-check failed for kind={self.kind}, "
                f"alpha={self.alpha}: max log deviation {worst:.3e}")

    def __call__(self, sigma: Union[float, np.ndarray]
                 ) -> Union[float, np.ndarray]:
        scalar = np.isscalar(sigma) or np.asarray(sigma).ndim == 0
        arr = np.atleast_1d(np.asarray(sigma, dtype=float))
        out = np.empty_like(arr)
        if self.kind == "sin":
            low = arr <= _SIN_HEAD_MAX
            mid = (~low) & (arr <= _SIN_SIGMA_MAX)
            out[low] = self._head(arr[low])
            out[mid] = self._tail(np.log(arr[mid]))
            over = ~(low | mid)
        else:
            inside = (arr >= _SINH_SIGMA_MIN) & (arr <= _SINH_SIGMA_MAX)
            out[inside] = self._tail(np.log(arr[inside]))
            over = ~inside
        if np.any(over):
            out[over] = [self._exact(s) for s in arr[over]]
        return float(out[0]) if scalar else out


_TABLE_LOCK = threading.Lock()
_TABLE_CACHE: Dict[Tuple[str, float, float], _KernelTable] = {}


def kernel_table(kind: str, alpha: float,
                 rel_tol: float = 1e-10) -> _KernelTable:
    """Memoized kernel table; build once, reuse across eps sweeps."""
    key = (kind, float(alpha), float(rel_tol))
    with _TABLE_LOCK:
        if key not in _TABLE_CACHE:
            _TABLE_CACHE[key] = _KernelTable(kind, alpha, rel_tol)
        return _TABLE_CACHE[key]


def _s_max(cfg: TouchingBallConfig) -> float:
    """Largest boundary distance attained inside B_R(x)."""
    if isinstance(cfg.domain, BallDomain):
        return min(2.0 * cfg.R, cfg.domain.rho)
    return 2.0 * cfg.R


@dataclass(frozen=True, eq=False)
class QMeanQuery:
    """Input bundle for a q-mean over the touching ball B_R(x).

    Exactly one of `profile` (nonnegative nonincreasing function of the
    scaled distance tau = d_Gamma/xi, vectorized) and `raw` (arbitrary
    function of points on the ball, shape (m, N) -> (m,)) must be given.
    """

    cfg: TouchingBallConfig
    q: float
    xi: float
    profile: Optional[Callable] = None
    raw: Optional[Callable] = None

    def __post_init__(self) -> None:
        if not (is_infinity(self.q) or self.q > 1.0):
            raise ValueError(f"q must be > 1 or INFINITY, got {self.q}")
        if not self.xi > 0.0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if (self.profile is None) == (self.raw is None):
            raise ValueError("exactly one of profile and raw must be given")
        if self.profile is not None:
            tau = np.linspace(0.0, _s_max(self.cfg) / self.xi, 129)
            vals = np.asarray(self.profile(tau), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError("profile must be finite on the ball")
            span = float(vals.max() - vals.min())
            slack = 1e-9 * (span + 1e-30)
            if np.any(np.diff(vals) > slack):
                raise ValueError("profile must be nonincreasing in tau")
            if np.min(vals) < -1e-12 * max(1.0, float(vals[0])):
                raise ValueError("profile must be nonnegative")


@dataclass(frozen=True)
class QMeanResult:
    """mu, its (R/xi)^{(N+1)/(2(q-1))} scaling, and the root residual."""

    mu: float
    scaled: float
    residual: float
    path: str


def _scaled_exponent(n: int, q: float) -> float:
    if is_infinity(q):
        return 0.0
    return (n + 1.0) / (2.0 * (q - 1.0))


def _sample_ball(x: np.ndarray, R: float, n_samples: int,
                 seed: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size
    rng = np.random.default_rng(seed)
    radii = R * rng.random(n_samples) ** (1.0 / n)
    dirs = rng.standard_normal((n_samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return x[None, :] + radii[:, None] * dirs


def _empirical_qmean(values: np.ndarray, q: float) -> Tuple[float, float]:
    """Root of the sample version of G by bisection: (mu, residual/scale)."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi - lo <= 1e-14 * max(1.0, abs(hi)):
        return 0.5 * (lo + hi), 0.0
    qm1 = q - 1.0

    def G(mu: float) -> float:
        return float(np.mean(np.maximum(v - mu, 0.0) ** qm1)
                     - np.mean(np.maximum(mu - v, 0.0) ** qm1))

    scale = max(abs(G(lo)), abs(G(hi)), 1e-300)
    a, b = lo, hi
    for _ in range(60):
        mid = 0.5 * (a + b)
        if G(mid) > 0.0:
            a = mid
        else:
            b = mid
    mu = 0.5 * (a + b)
    return mu, G(mu) / scale


def _prof_at(profile: Callable, tau: float) -> float:
    return float(np.asarray(profile(np.array([tau])), dtype=float)[0])


def _crossing(profile: Callable, mu: float, xi: float, smax: float) -> float:
    """The distance s_c where the nonincreasing profile crosses mu."""
    if _prof_at(profile, 0.0) <= mu:
        return 0.0
    if _prof_at(profile, smax / xi) >= mu:
        return smax
    lo, hi = 0.0, smax
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if _prof_at(profile, mid / xi) > mu:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _coarea_G(mu: float, profile: Callable, xi: float, q: float,
              cfg: TouchingBallConfig, smax: float, level: int,
              beta: float) -> float:
    dom = cfg.domain
    sc = _crossing(profile, mu, xi, smax)

    def areas(svals: np.ndarray) -> np.ndarray:
        return np.array([level_set_area(dom, cfg, float(s)) if s > 0.0
                         else 0.0 for s in svals])

    qm1 = q - 1.0
    total = 0.0
    if sc > 0.0:
        total += _fixed_tanh_sinh(
            lambda x, *rest: np.maximum(profile(x / xi) - mu, 0.0) ** qm1
            * areas(x),
            0.0, sc, level=level, beta=beta)
    if smax - sc > 1e-15 * smax:
        total -= _fixed_tanh_sinh(
            lambda x, *rest: np.maximum(mu - profile(x / xi), 0.0) ** qm1
            * areas(x),
            sc, smax, level=level, beta=beta)
    return total


def q_mean(query: QMeanQuery, config: QuadratureConfig = DEFAULT_CONFIG,
           level: int = 6, n_samples: int = 400_000,
           seed: int = _DEFAULT_SEED) -> QMeanResult:
    """The q-mean of the query's function over B_R(x), q finite.

    Profiles on radial domains go through the co-area route with closed-form
    level-set areas; raw functions and implicit domains use the empirical
    root search (n_samples, seed).
    """
    if is_infinity(query.q):
        raise ValueError("q = INFINITY is handled by q_mean_infinity")
    cfg = query.cfg
    q = float(query.q)
    if query.raw is not None or isinstance(cfg.domain, ImplicitDomain):
        pts = _sample_ball(cfg.x, cfg.R, n_samples, seed)
        if query.raw is not None:
            values = np.asarray(query.raw(pts), dtype=float)
        else:
            d = np.maximum(boundary_distances(cfg.domain, pts), 0.0)
            values = np.asarray(query.profile(d / query.xi), dtype=float)
        mu, residual = _empirical_qmean(values, q)
        path = "bruteforce"
    else:
        mu, residual = _coarea_root(query, q, level)
        path = "coarea"
    scaled = (cfg.R / query.xi) ** _scaled_exponent(cfg.n, q) * mu
    return QMeanResult(mu=mu, scaled=scaled, residual=residual, path=path)


def _coarea_root(query: QMeanQuery, q: float, level: int
                 ) -> Tuple[float, float]:
    cfg = query.cfg
    xi = query.xi
    prof = query.profile
    smax = _s_max(cfg)
    f0 = _prof_at(prof, 0.0)
    fend = _prof_at(prof, smax / xi)
    if f0 - fend <= 1e-14 * max(1.0, abs(f0)):
        return 0.5 * (f0 + fend), 0.0
    beta = min(1.0, q - 1.0, 0.5 * (cfg.n - 1))

    def G(mu: float) -> float:
        return _coarea_G(mu, prof, xi, q, cfg, smax, level, beta)

    scale = max(abs(G(fend)), abs(G(f0)), 1e-300)
    a, b = fend, f0
    for _ in range(60):
        mid = 0.5 * (a + b)
        if G(mid) > 0.0:
            a = mid
        else:
            b = mid
    mu = 0.5 * (a + b)
    return mu, G(mu) / scale


def q_mean_infinity(query: QMeanQuery) -> float:
    """Midrange over the ball: (f(2R/xi) + f(0))/2 for monotone profiles."""
    if not is_infinity(query.q):
        raise ValueError(f"q_mean_infinity requires q = INFINITY, got {query.q}")
    if query.profile is None:
        raise ValueError("the midrange needs the monotone scaled profile")
    vals = np.asarray(query.profile(
        np.array([0.0, 2.0 * query.cfg.R / query.xi])), dtype=float)
    return 0.5 * float(vals[0] + vals[1])


def q_mean_bruteforce(cfg: TouchingBallConfig, q: float, raw: Callable,
                      n_samples: int = 1_000_000,
                      seed: int = _DEFAULT_SEED) -> Tuple[float, float]:
    """Monte Carlo oracle: (mu, standard error) for a raw function on the ball.

    The error is the delta-method estimate sd(g)/(sqrt(n) |E dG/dmu|) for the
    estimating function g(v, mu) = [v-mu]_+^{q-1} - [mu-v]_+^{q-1}; at q = 2
    this reduces to the usual sd/sqrt(n) of the sample mean.
    """
    if is_infinity(q):
        raise ValueError("the Monte Carlo oracle covers finite q only")
    if not q > 1.0:
        raise ValueError(f"q must be > 1, got {q}")
    pts = _sample_ball(np.asarray(cfg.x, dtype=float), cfg.R, n_samples, seed)
    v = np.asarray(raw(pts), dtype=float)
    mu, _ = _empirical_qmean(v, q)
    qm1 = q - 1.0
    g = np.maximum(v - mu, 0.0) ** qm1 - np.maximum(mu - v, 0.0) ** qm1
    dev = np.abs(v - mu)
    with np.errstate(divide="ignore", over="ignore"):
        slope_terms = qm1 * dev[dev > 0.0] ** (qm1 - 1.0)
    slope = float(np.sum(slope_terms[np.isfinite(slope_terms)])) / v.size
    se = math.sqrt(float(np.var(g)) / v.size) / max(slope, 1e-300)
    return mu, se


def qmean_profile_limit(cfg: TouchingBallConfig, q: float,
                        f: Callable) -> float:
    """Scaled q-mean limit for a limit profile f(tau):

    {2^{-(N+1)/2} N! / Gamma((N+1)/2)^2 * int_0^inf f^{q-1} tau^{(N-1)/2}}
    ^{1/(q-1)} * Pi_Gamma^{-1/(2(q-1))};  q = INFINITY gives f(0)/2.
    """
    n = cfg.n
    if is_infinity(q):
        return 0.5 * float(np.asarray(f(np.array([0.0])), dtype=float)[0])
    if not q > 1.0:
        raise ValueError(f"q must be > 1 or INFINITY, got {q}")
    qm1 = q - 1.0
    m = 0.5 * (n - 1)
    beta = min(1.0, m)

    def seg(a: float, b: float) -> float:
        return _fixed_tanh_sinh(
            lambda x, *rest: np.asarray(f(x), dtype=float) ** qm1 * x ** m,
            a, b, level=7, beta=beta)

    total = seg(0.0, 8.0)
    t_hi = 8.0
    converged = False
    for _ in range(15):
        inc = seg(t_hi, 2.0 * t_hi)
        total += inc
        t_hi *= 2.0
        if abs(inc) <= 1e-13 * max(abs(total), 1e-300):
            converged = True
            break
    if not converged:
        raise ValueError(
            f"profile integral does not converge (tail at T={t_hi:g} still "
            f"contributes)")
    if not total > 0.0:
        raise ValueError("profile integrates to zero")
    log_const = (-0.5 * (n + 1) * math.log(2.0) + gammaln(n + 1)
                 - 2.0 * gammaln(0.5 * (n + 1)))
    value = math.exp((log_const + math.log(total)) / qm1)
    return value * cfg.pi_gamma ** (-1.0 / (2.0 * qm1))


def solution_profile(params: ProblemParams,
                     domain: Union[BallDomain, ExteriorBallDomain],
                     config: QuadratureConfig = DEFAULT_CONFIG,
                     table: Optional[Callable] = None) -> Callable:
    """The exact radial solution as a profile of tau = d_Gamma/xi."""
    if isinstance(domain, BallDomain):
        sol = RadialSolution(params, Geometry.ball(domain.rho))

        def rmap(dist: np.ndarray) -> np.ndarray:
            return np.clip(domain.rho - dist, 0.0, domain.rho)
    elif isinstance(domain, ExteriorBallDomain):
        sol = RadialSolution(params, Geometry.exterior(domain.r_e))

        def rmap(dist: np.ndarray) -> np.ndarray:
            return domain.r_e + np.maximum(dist, 0.0)
    else:
        raise ValueError("exact solution profiles exist on radial domains only")
    xi = params.xi

    def prof(tau: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        scalar = np.isscalar(tau) or np.asarray(tau).ndim == 0
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
        r = rmap(xi * tau_arr)
        out = np.exp(np.asarray(eval_log_u(sol, r, config, kernel=table),
                                dtype=float))
        return float(out[0]) if scalar else out

    return prof


def _log_barrier_U(params: ProblemParams, r_e: float, tau: np.ndarray,
                   table_f: Optional[Callable]) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if params.is_infinity:
        return -tau
    sig_e = math.sqrt(params.p_conjugate) * r_e / params.eps
    return -tau + table_f(sig_e + tau) - table_f(sig_e)


def _log_barrier_V(params: ProblemParams, r_i: float, tau: np.ndarray,
                   table_i: Optional[Callable]) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if params.is_infinity:
        sig_i = r_i / params.eps
        first = _log_cosh(sig_i - tau) - _log_cosh(np.array(sig_i))
        second = -_log_cosh(tau)
        return np.where(tau < sig_i, first, second)
    sig_i = math.sqrt(params.p_conjugate) * r_i / params.eps
    first = -tau + table_i(np.maximum(sig_i - tau, 0.0)) - table_i(sig_i)
    second = -tau + table_i(0.0) - table_i(tau)
    return np.where(tau < sig_i, first, second)


def qmean_limit_experiment(params_seq: Sequence[ProblemParams],
                           cfg: TouchingBallConfig, q: float,
                           n_samples: int = 200_000,
                           seed: int = _DEFAULT_SEED,
                           config: QuadratureConfig = DEFAULT_CONFIG,
                           level: int = 6) -> List[dict]:
    """Scaled q-means along an eps sequence against the limit prediction.

    Radial domains evaluate the exact solution through the co-area route
    (path "coarea").  Implicit domains sample boundary distances once and
    report the barrier pair (paths "barrier-U", "barrier-V"), which brackets
    the solution's q-mean.  The scaled column is (R/eps)^{(N+1)/(2(q-1))} mu;
    the prediction carries the matching (p')^{(N+1)/2} factor.
    """
    params_seq = list(params_seq)
    if not params_seq:
        raise ValueError("empty parameter sequence")
    if len({pp.p for pp in params_seq}) != 1 or \
            len({pp.n for pp in params_seq}) != 1:
        raise ValueError("the sequence must vary eps only (same N and p)")
    n = cfg.n
    if params_seq[0].n != n:
        raise ValueError(
            f"params dimension {params_seq[0].n} does not match the "
            f"touching-ball dimension {n}")
    p = params_seq[0].p
    lim = limit_constants(n, p, q, cfg.curvatures, cfg.R)
    expo = _scaled_exponent(n, q)
    ill = bool((not is_infinity(q)) and q < 1.2)
    dom = cfg.domain
    rows: List[dict] = []

    def make_row(pp: ProblemParams, mu: float, residual: float,
                 path: str) -> dict:
        scaled = (cfg.R / pp.eps) ** expo * mu
        return {"eps": pp.eps, "xi": pp.xi, "mu": mu, "scaled": scaled,
                "prediction": lim.prediction,
                "ratio": scaled / lim.prediction, "residual": residual,
                "path": path, "ill_conditioned": ill}

    if isinstance(dom, (BallDomain, ExteriorBallDomain)):
        table = None
        if not params_seq[0].is_infinity:
            kind = "sin" if isinstance(dom, BallDomain) else "sinh"
            table = kernel_table(kind, params_seq[0].alpha, config.rel_tol)
        for pp in params_seq:
            prof = solution_profile(pp, dom, config=config, table=table)
            query = QMeanQuery(cfg=cfg, q=q, xi=pp.xi, profile=prof)
            if is_infinity(q):
                mu, residual = q_mean_infinity(query), 0.0
            else:
                res = q_mean(query, config=config, level=level)
                mu, residual = res.mu, res.residual
            rows.append(make_row(pp, mu, residual, "coarea"))
        return rows

    table_i = table_f = None
    if not params_seq[0].is_infinity:
        table_i = kernel_table("sin", params_seq[0].alpha, config.rel_tol)
        table_f = kernel_table("sinh", params_seq[0].alpha, config.rel_tol)
    pts = _sample_ball(np.asarray(cfg.x, dtype=float), cfg.R, n_samples, seed)
    d = np.maximum(boundary_distances(dom, pts), 0.0)
    for pp in params_seq:
        tau = d / pp.xi
        ends = np.array([0.0, 2.0 * cfg.R / pp.xi])
        for path, log_vals, log_ends in (
                ("barrier-U", _log_barrier_U(pp, cfg.R, tau, table_f),
                 _log_barrier_U(pp, cfg.R, ends, table_f)),
                ("barrier-V", _log_barrier_V(pp, cfg.R, tau, table_i),
                 _log_barrier_V(pp, cfg.R, ends, table_i))):
            if is_infinity(q):
                mu = 0.5 * float(np.sum(np.exp(log_ends)))
                residual = 0.0
            else:
                mu, residual = _empirical_qmean(np.exp(log_vals), float(q))
            rows.append(make_row(pp, mu, residual, path))
    return rows
