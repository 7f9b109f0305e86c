"""Parameter sweeps, rate fits against the regime models, and table emission.

Sweeps fan out over the eps grid with a thread pool (capped by the
RESOLVENT_ASYM_THREADS environment variable) and assemble rows in
deterministic order, so identical configs and seeds produce byte-identical
output files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .geometry import (
    BallDomain,
    ExteriorBallDomain,
    ModulusOfContinuity,
    TouchingBallConfig,
    psi_of_eps,
    touching_ball,
)
from .params import INFINITY, ProblemParams, is_infinity
from .qmeans import kernel_table, qmean_limit_experiment
from .radial import Geometry, RadialSolution, varadhan_residual

_DEFAULT_SEED = 20260815


class RateModel(Enum):
    """Convergence-rate shapes, one per uniform-rate regime in p."""

    EPS = "eps"
    EPS_LOG = "eps_log"
    EPS_LOGLOG_PSI = "eps_loglog_psi"
    EPS_LOG_PSI = "eps_log_psi"


@dataclass(frozen=True)
class RateFit:
    """Constant fit of |residual| = coefficient * model(eps) in log space."""

    model: RateModel
    coefficient: float
    r_squared: float
    max_ratio: float
    degenerate: bool = False

    @property
    def matched(self) -> bool:
        return (not self.degenerate) and self.r_squared >= 0.98


def _model_values(model: RateModel, eps: np.ndarray,
                  psi: Optional[np.ndarray]) -> np.ndarray:
    if model in (RateModel.EPS_LOGLOG_PSI, RateModel.EPS_LOG_PSI):
        if psi is None:
            raise ValueError(f"model {model.value} needs psi values")
        psi = np.asarray(psi, dtype=float)
        if psi.shape != eps.shape:
            raise ValueError("psi and eps lengths differ")
    if model is RateModel.EPS:
        vals = eps.copy()
    elif model is RateModel.EPS_LOG:
        vals = eps * np.log(1.0 / eps)
    elif model is RateModel.EPS_LOG_PSI:
        vals = eps * np.abs(np.log(psi))
    else:
        vals = eps * np.log(np.abs(np.log(psi)))
    if np.any(vals <= 0.0):
        raise ValueError(
            f"model {model.value} is nonpositive on this eps grid; "
            "rate fitting needs eps small enough for the regime shape")
    return vals


def fit_rate(model: RateModel, eps: Sequence[float],
             residuals: Sequence[float],
             psi: Optional[Sequence[float]] = None) -> RateFit:
    """Fit log|residual| = log coefficient + log model(eps), slope fixed at 1.

    Residuals at or below the underflow floor make the fit degenerate:
    coefficient 0 is reported and nothing is asserted about the rate.
    """
    eps_arr = np.asarray(eps, dtype=float)
    res = np.abs(np.asarray(residuals, dtype=float))
    if eps_arr.size < 2:
        raise ValueError("rate fitting needs at least two points")
    vals = _model_values(model, eps_arr, psi)
    if np.any(res < 1e-250):
        return RateFit(model=model, coefficient=0.0, r_squared=0.0,
                       max_ratio=float(np.max(res / vals)), degenerate=True)
    y = np.log(res)
    base = np.log(vals)
    log_c = float(np.mean(y - base))
    fitted = base + log_c
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot < 1e-28:
        r2 = 1.0 if ss_res < 1e-28 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(model=model, coefficient=math.exp(log_c), r_squared=r2,
                   max_ratio=float(np.max(res / vals)))


@dataclass(frozen=True)
class GeometrySpec:
    """Radial geometry for sweeps: the domain radius and the touching radius R."""

    kind: str
    domain_radius: float
    R: float

    def __post_init__(self) -> None:
        if self.kind not in ("ball", "exterior"):
            raise ValueError(f"geometry kind must be ball or exterior, "
                             f"got {self.kind!r}")
        if not (self.domain_radius > 0.0 and self.R > 0.0):
            raise ValueError("geometry radii must be positive")
        if self.kind == "ball" and not self.R < self.domain_radius:
            raise ValueError(
                f"touching radius R={self.R} must be smaller than the ball "
                f"radius {self.domain_radius}")


@dataclass(frozen=True)
class ModulusSpec:
    """Named modulus of continuity for psi-rate runs."""

    kind: str
    r: float
    slope: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "sqrt", "log_reciprocal"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if not self.r > 0.0:
            raise ValueError("modulus range r must be positive")
        if self.kind == "linear" and not (self.slope is not None
                                          and self.slope > 0.0):
            raise ValueError("linear modulus needs a positive slope")


def make_modulus(spec: ModulusSpec) -> ModulusOfContinuity:
    if spec.kind == "linear":
        slope = float(spec.slope)
        return ModulusOfContinuity(lambda s: slope * np.asarray(s), spec.r)
    if spec.kind == "sqrt":
        return ModulusOfContinuity(lambda s: np.sqrt(np.asarray(s)), spec.r)
    return ModulusOfContinuity(
        lambda s: 1.0 / np.log(1.0 / np.asarray(s)), spec.r)


def _parse_exponent(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity"):
            return INFINITY
        raise ValueError(f"cannot parse exponent {v!r}")
    return float(v)


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: parameter grid, geometric eps sequence, geometry, seed."""

    n_values: Tuple[int, ...]
    p_values: Tuple[float, ...]
    q_values: Tuple[float, ...]
    eps_start: float
    eps_factor: float
    eps_count: int
    geometry: GeometrySpec
    modulus: Optional[ModulusSpec] = None
    output: Optional[str] = None
    seed: int = _DEFAULT_SEED

    def __post_init__(self) -> None:
        if not self.n_values or any(
                isinstance(n, bool) or not isinstance(n, int) or n < 2
                for n in self.n_values):
            raise ValueError("N grid must be a nonempty list of integers >= 2")
        if not self.p_values or any(
                not (is_infinity(p) or p > 1.0) for p in self.p_values):
            raise ValueError("p grid entries must be > 1 or INFINITY")
        if not self.q_values or any(
                not (is_infinity(q) or q > 1.0) for q in self.q_values):
            raise ValueError("q grid entries must be > 1 or INFINITY")
        if not self.eps_start > 0.0:
            raise ValueError(f"eps_start must be positive, got {self.eps_start}")
        if not 0.0 < self.eps_factor < 1.0:
            raise ValueError(
                f"eps_factor must lie in (0, 1) so the sequence is strictly "
                f"decreasing, got {self.eps_factor}")
        if self.eps_count < 1:
            raise ValueError(f"eps_count must be >= 1, got {self.eps_count}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    @property
    def eps_sequence(self) -> Tuple[float, ...]:
        return tuple(self.eps_start * self.eps_factor ** k
                     for k in range(self.eps_count))

    @staticmethod
    def from_dict(d: dict) -> "SweepConfig":
        known = {"params_grid", "eps_sequence", "geometry", "modulus",
                 "output", "seed"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        try:
            grid = d["params_grid"]
            eps = d["eps_sequence"]
            geo = d["geometry"]
        except KeyError as e:
            raise ValueError(f"config is missing required key {e.args[0]!r}")
        geometry = GeometrySpec(kind=geo.get("kind", ""),
                                domain_radius=float(
                                    geo.get("domain_radius", 0.0)),
                                R=float(geo.get("R", 0.0)))
        modulus = None
        if d.get("modulus") is not None:
            m = d["modulus"]
            modulus = ModulusSpec(kind=m.get("kind", ""),
                                  r=float(m.get("r", 0.0)),
                                  slope=(float(m["slope"])
                                         if "slope" in m else None))
        return SweepConfig(
            n_values=tuple(int(n) for n in grid.get("N", [])),
            p_values=tuple(_parse_exponent(p) for p in grid.get("p", [])),
            q_values=tuple(_parse_exponent(q) for q in grid.get("q", [])),
            eps_start=float(eps.get("start", 0.0)),
            eps_factor=float(eps.get("factor", 0.0)),
            eps_count=int(eps.get("count", 0)),
            geometry=geometry,
            modulus=modulus,
            output=d.get("output"),
            seed=int(d.get("seed", _DEFAULT_SEED)),
        )


def _max_workers(n_tasks: int) -> int:
    raw = os.environ.get("RESOLVENT_ASYM_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(
                f"RESOLVENT_ASYM_THREADS must be an integer, got {raw!r}")
        cap = max(1, cap)
    return max(1, min(n_tasks, cap))


def _radial_geometry(geom: GeometrySpec) -> Geometry:
    if geom.kind == "ball":
        return Geometry.ball(geom.domain_radius)
    return Geometry.exterior(geom.domain_radius)


def _eval_radii(geom: GeometrySpec) -> Tuple[float, ...]:
    if geom.kind == "ball":
        return (0.0, 0.5 * geom.domain_radius)
    return (1.2 * geom.domain_radius, 2.0 * geom.domain_radius)


def touching_config(geom: GeometrySpec, n: int) -> TouchingBallConfig:
    """The axis-aligned touching-ball configuration for a radial geometry."""
    x = np.zeros(n)
    if geom.kind == "ball":
        domain = BallDomain(geom.domain_radius)
        x[0] = geom.domain_radius - geom.R
    else:
        domain = ExteriorBallDomain(geom.domain_radius)
        x[0] = geom.domain_radius + geom.R
    return touching_ball(domain, x, geom.R)


def run_varadhan_sweep(cfg: SweepConfig
                       ) -> Tuple[List[dict], Dict[Tuple[int, float], RateFit]]:
    """Distance-asymptotics residuals along the eps grid, with rate fits.

    Evaluates eps log u + sqrt(p') d_Gamma at fixed radii of the exact radial
    solution; fits the regime model (EPS for p = infinity, EPS_LOG otherwise)
    to the per-eps sup of |residual| and checks the ratio shows no growth
    trend (last <= 2x median).  Identically-zero residuals (exterior,
    p = infinity) produce a degenerate fit with coefficient 0.
    """
    if cfg.eps_count < 4:
        raise ValueError("rate fitting needs an eps sequence of count >= 4")
    eps_seq = cfg.eps_sequence
    geometry = _radial_geometry(cfg.geometry)
    r_eval = _eval_radii(cfg.geometry)
    rows: List[dict] = []
    fits: Dict[Tuple[int, float], RateFit] = {}
    for n in cfg.n_values:
        for p in cfg.p_values:
            model = RateModel.EPS if is_infinity(p) else RateModel.EPS_LOG
            if model is RateModel.EPS_LOG and max(eps_seq) >= 1.0:
                raise ValueError(
                    "the eps log(1/eps) model needs eps < 1 throughout")

            def one(eps: float) -> np.ndarray:
                params = ProblemParams(n=n, p=p, eps=eps)
                sol = RadialSolution(params, geometry)
                return np.asarray(varadhan_residual(sol, np.array(r_eval)))

            with ThreadPoolExecutor(_max_workers(len(eps_seq))) as pool:
                results = list(pool.map(one, eps_seq))
            sup = []
            for eps, res in zip(eps_seq, results):
                for r, val in zip(r_eval, res):
                    rows.append({"n": n, "p": p, "eps": eps, "r": r,
                                 "residual": float(val)})
                sup.append(float(res[int(np.argmax(np.abs(res)))]))
            fit = fit_rate(model, eps_seq, sup)
            if not fit.degenerate:
                ratios = np.abs(sup) / _model_values(
                    model, np.asarray(eps_seq), None)
                if ratios[-1] > 2.0 * float(np.median(ratios)):
                    raise RuntimeError(
                        f"residual/model ratio grows along the sweep for "
                        f"N={n}, p={p}: last {ratios[-1]:.3e} exceeds twice "
                        f"the median {float(np.median(ratios)):.3e}")
            fits[(n, p)] = fit
    return rows, fits


def run_psi_rate_table(modulus: ModulusOfContinuity,
                       eps_sequence: Sequence[float]
                       ) -> Tuple[List[dict], bool]:
    """(eps, psi, eps log psi, eps log|log psi|) rows plus a convergence flag.

    The flag records whether eps log psi(eps) tends to zero along the given
    sequence: the last magnitude must be the smallest and at most half the
    first.
    """
    eps_list = [float(e) for e in eps_sequence]
    if not eps_list:
        raise ValueError("empty eps sequence")
    rows = []
    vals = []
    for eps in eps_list:
        psi = psi_of_eps(modulus, eps)
        log_psi = math.log(psi)
        v = eps * log_psi
        vals.append(v)
        rows.append({"eps": eps, "psi": psi, "eps_log_psi": v,
                     "eps_loglog_psi": eps * math.log(abs(log_psi))})
    mags = [abs(v) for v in vals]
    converges = (mags[-1] <= 0.5 * mags[0]
                 and mags[-1] <= min(mags) * (1.0 + 1e-9))
    return rows, converges


def _add_richardson(rows: List[dict]) -> None:
    """Two-point extrapolation assuming a first-order correction in eps."""
    prev = None
    for row in rows:
        if prev is None:
            row["richardson"] = math.nan
        else:
            e0, s0 = prev["eps"], prev["scaled"]
            e1, s1 = row["eps"], row["scaled"]
            row["richardson"] = (s1 * e0 - s0 * e1) / (e0 - e1)
        prev = row


def run_qmean_sweep(cfg: SweepConfig) -> List[dict]:
    """Scaled q-means over the (N, p, q) grid with a Richardson column."""
    eps_seq = cfg.eps_sequence
    geom = cfg.geometry
    kind = "sin" if geom.kind == "ball" else "sinh"
    for n in cfg.n_values:
        for p in cfg.p_values:
            if not is_infinity(p):
                # warm the kernel cache before fanning out
                kernel_table(kind, ProblemParams(n=n, p=p, eps=1.0).alpha)
    rows: List[dict] = []
    for n in cfg.n_values:
        ball_cfg = touching_config(geom, n)
        for p in cfg.p_values:
            for q in cfg.q_values:

                def one(eps: float) -> List[dict]:
                    seq = [ProblemParams(n=n, p=p, eps=eps)]
                    return qmean_limit_experiment(seq, ball_cfg, q,
                                                  seed=cfg.seed)

                with ThreadPoolExecutor(_max_workers(len(eps_seq))) as pool:
                    chunks = list(pool.map(one, eps_seq))
                group = []
                for chunk in chunks:
                    for r in chunk:
                        group.append({"n": n, "p": p, "q": q, **r})
                _add_richardson(group)
                rows.extend(group)
    return rows


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return "nan" if math.isnan(x) else f"{x:.12g}"
    return str(v)


def _json_safe(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(v, dict):
        return {k: _json_safe(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(u) for u in v]
    return v


def emit(table: List[dict], fmt: str, path: str,
         config: Optional[SweepConfig] = None,
         seed: Optional[int] = None) -> None:
    """Write a table as CSV (12 significant digits) or JSON with metadata.

    Values that are not finite become "nan"/"inf" cells in CSV and
    null/"inf" in JSON.  Output is byte-identical for identical inputs.
    """
    fmt_u = fmt.upper()
    if fmt_u not in ("CSV", "JSON"):
        raise ValueError(f"format must be CSV or JSON, got {fmt!r}")
    if not table:
        raise ValueError("empty table")
    keys = list(table[0].keys())
    for row in table:
        if list(row.keys()) != keys:
            raise ValueError("rows have inconsistent columns")
    if fmt_u == "CSV":
        lines = [",".join(keys)]
        for row in table:
            lines.append(",".join(_format_cell(row[k]) for k in keys))
        content = "\n".join(lines) + "\n"
    else:
        meta = {
            "config": _json_safe(dataclasses.asdict(config))
            if config is not None else None,
            "seed": seed if seed is not None else
            (config.seed if config is not None else None),
            "versions": {
                "package": __version__,
                "numpy": np.__version__,
                "scipy": __import__("scipy").__version__,
            },
        }
        doc = {"metadata": meta,
               "rows": [_json_safe(dict(row)) for row in table]}
        content = json.dumps(doc, indent=2, sort_keys=True,
                             allow_nan=False) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as e:
        raise OSError(f"failed writing table to {path}: {e}") from e
