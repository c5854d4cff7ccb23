"""Monte Carlo estimators for the renormalization quantities.

Directions are exact rationals (integer displacement over integer height), so
all monotonicity claims about exceedance curves and thresholds are exact
statements about order statistics, not float comparisons.  Censoring is a
first-class third outcome everywhere: estimators report certified counts and
never silently drop capped walks.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import engine
from .environments import EnvironmentField, EnvironmentSpec, Window, materialize
from .errors import (CostGuardError, EstimationFailedError,
                     InvalidParameterError, WindowExceededError)
from .geometry import ScaleSchedule, block_sites, h_prime, round_point
from .randomness import UniformField, derive_seed

_ENV_STREAM = 2
_U_STREAM = 3
_BETA_STREAM = 4
_MAX_GROWTH = 24  # window-doubling attempts before giving up
_PAPER_SCALE = 10 ** 10  # simulation at this base scale is refused beyond k=0


def _frac(v) -> Fraction:
    """Exact rational from int/Fraction/str; decimal strings stay decimal.

    Floats are accepted but converted through repr so that 0.1 means 1/10,
    not the binary float it parses to.
    """
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def default_v_grid(lo=-2, hi=2, step=Fraction(1, 100)) -> tuple:
    lo, hi, step = _frac(lo), _frac(hi), _frac(step)
    n = int((hi - lo) / step)
    return tuple(lo + k * step for k in range(n + 1))


# ---------------------------------------------------------------------------
# Quenched runs with adaptive windows.
#
# Purity makes window growth exact: re-running the same (env seed, U seed,
# start) with a larger window reproduces the identical trajectory prefix, so
# a WINDOW status simply means "double the sides and rerun".


def _grown_bounds(x_lo, x_hi, y_lo, y_hi, res, floor_y, target_y):
    fx, fy = res.final
    if fx < x_lo or fx >= x_hi:
        cx = (x_lo + x_hi) // 2
        half = (x_hi - x_lo)
        x_lo, x_hi = cx - half, cx + half
    if fy >= y_hi and target_y is None:
        y_hi += (y_hi - y_lo)
    if fy < y_lo and floor_y is None:
        y_lo -= (y_hi - y_lo)
    return x_lo, x_hi, y_lo, y_hi


def simulate_hit(spec, useed, start, target_y, cap, *, floor_y=None,
                 record=False, counts=None, gamma=None, skip_counter=False,
                 x_half=64, y_half=64):
    """Run one zero-or-given-history walk under an environment spec.

    Handles materialization and window growth; ``counts`` (when given) is
    updated in place only after a successful (non-WINDOW) run, so retries are
    exact replays.  ``x_half``/``y_half`` only size the first window attempt
    (purity makes the result independent of them).  Returns the EngineResult.
    """
    gamma = gamma or {}
    base_counts = dict(counts) if counts else {}
    if isinstance(spec, EnvironmentField):
        attempt = dict(base_counts)
        res = engine.run(spec, useed, start, counts=attempt, gamma=gamma,
                         target_y=target_y, cap=cap, floor_y=floor_y,
                         record=record, skip_counter=skip_counter)
        if res.status == engine.WINDOW:
            raise WindowExceededError(res.final, spec.window)
        if counts is not None:
            counts.clear()
            counts.update(attempt)
        return res
    if spec.family == "constant":
        env = materialize(spec)
        attempt = dict(base_counts)
        res = engine.run(env, useed, start, counts=attempt, gamma=gamma,
                         target_y=target_y, cap=cap, floor_y=floor_y,
                         record=record, skip_counter=skip_counter)
        if counts is not None:
            counts.clear()
            counts.update(attempt)
        return res

    x0, y0 = start
    x_lo, x_hi = x0 - x_half, x0 + x_half
    y_lo = floor_y if floor_y is not None else y0 - y_half
    y_hi = target_y if target_y is not None else y0 + y_half
    y_lo = min(y_lo, y0)
    y_hi = max(y_hi, y0 + 1)
    for _ in range(_MAX_GROWTH):
        env = materialize(spec, Window.from_bounds(x_lo, x_hi, y_lo, y_hi))
        attempt = dict(base_counts)
        res = engine.run(env, useed, start, counts=attempt, gamma=gamma,
                         target_y=target_y, cap=cap, floor_y=floor_y,
                         record=record, skip_counter=skip_counter)
        if res.status != engine.WINDOW:
            if counts is not None:
                counts.clear()
                counts.update(attempt)
            return res
        x_lo, x_hi, y_lo, y_hi = _grown_bounds(x_lo, x_hi, y_lo, y_hi, res,
                                               floor_y, target_y)
    raise EstimationFailedError(
        f"window kept overflowing after {_MAX_GROWTH} growths (start {start})")


# ---------------------------------------------------------------------------
# Direction statistics.


@dataclass(frozen=True)
class DirectionStats:
    """Empirical exceedance curve of the block direction at one height.

    ``max_dirs``/``min_dirs`` hold, per certified sample, the largest and
    smallest direction over the started block (equal in origin mode).  The
    curve p̂(v) = fraction of samples with max direction >= v is exactly
    non-increasing in v because each sample contributes an indicator.
    """

    H: int
    v_grid: tuple
    p_hat: tuple
    ci: tuple
    n: int
    n_certified: int
    max_dirs: tuple
    min_dirs: tuple
    mode: str
    w: tuple

    @property
    def censor_rate(self) -> float:
        return 1.0 - self.n_certified / self.n

    def exceedance(self, v) -> float:
        """p̂(v) over certified samples (exact rational comparison)."""
        if self.n_certified == 0:
            raise EstimationFailedError("all samples censored")
        v = _frac(v)
        count = self.n_certified - bisect_left(sorted(self.max_dirs), v)
        return count / self.n_certified

    def undershoot(self, v) -> float:
        """p̃(v): fraction of samples whose min direction is <= v."""
        if self.n_certified == 0:
            raise EstimationFailedError("all samples censored")
        v = _frac(v)
        return bisect_right(sorted(self.min_dirs), v) / self.n_certified

    def csv_rows(self):
        rows = [("H", "v", "p_hat", "ci_lo", "ci_hi", "n", "n_certified")]
        for v, p, (lo, hi) in zip(self.v_grid, self.p_hat, self.ci):
            rows.append((self.H, float(v), p, lo, hi, self.n, self.n_certified))
        return rows


def _wilson(p: float, n: int, z: float = 1.959963984540054):
    if n == 0:
        return (0.0, 1.0)
    den = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, center - half), min(1.0, center + half))


def estimate_pH(spec: EnvironmentSpec, H: int, v_grid, n: int, cap: int, *,
                w=(0, 0), mode: str = "block") -> DirectionStats:
    """Estimate the exceedance curve p̂_H(v) over n seeded (env, U) pairs.

    Per sample, every site of the start block I_H(w) launches a zero-history
    walk over the shared (environment, uniform field); the sample's statistic
    is the max (and min) direction at the hitting height.  ``mode='origin'``
    starts only from w itself (the single-walk variant used for quantile
    estimates).  A sample with any censored walk counts as censored.
    """
    if n < 30:
        raise InvalidParameterError(f"need n >= 30 samples, got {n}")
    if H < 1:
        raise InvalidParameterError(f"H must be >= 1, got {H}")
    if mode not in ("block", "origin"):
        raise InvalidParameterError(f"unknown mode {mode!r}")
    v_grid = tuple(_frac(v) for v in v_grid)
    if any(v_grid[i] >= v_grid[i + 1] for i in range(len(v_grid) - 1)):
        raise InvalidParameterError("v_grid must be strictly increasing")

    wx, wy = w
    if mode == "origin":
        starts = [(int(wx), int(wy))]
    else:
        starts = block_sites(w, H)
    target = wy + H

    max_dirs = []
    min_dirs = []
    n_censored = 0
    for t in range(n):
        env_spec = replace(spec, seed=derive_seed(spec.seed, t, _ENV_STREAM))
        useed = derive_seed(spec.seed, t, _U_STREAM)
        best = None
        worst = None
        censored = False
        for y in starts:
            res = simulate_hit(env_spec, useed, y, target, cap)
            if res.status != engine.HIT:
                censored = True
                continue
            v = Fraction(res.final[0] - y[0], H)
            best = v if best is None or v > best else best
            worst = v if worst is None or v < worst else worst
        if censored:
            n_censored += 1
            continue
        max_dirs.append(best)
        min_dirs.append(worst)

    n_cert = len(max_dirs)
    smax = sorted(max_dirs)
    p_hat = []
    ci = []
    for v in v_grid:
        p = ((n_cert - bisect_left(smax, v)) / n_cert) if n_cert else 0.0
        p_hat.append(p)
        ci.append(_wilson(p, n_cert))
    return DirectionStats(H=H, v_grid=v_grid, p_hat=tuple(p_hat), ci=tuple(ci),
                          n=n, n_certified=n_cert, max_dirs=tuple(max_dirs),
                          min_dirs=tuple(min_dirs), mode=mode,
                          w=(wx, wy))


class VPMEstimate(NamedTuple):
    v_minus: Fraction
    v_plus: Fraction
    diagnostics: dict


def estimate_v_pm(spec: EnvironmentSpec, H_list, theta: float, n: int, *,
                  v_grid=None, cap=None, w=(0, 0),
                  mode: str = "block") -> VPMEstimate:
    """Threshold estimates of the limiting directions.

    v̂₊ is the smallest grid value with p̂_H(v) < θ at the largest tested H;
    v̂₋ the largest grid value with p̃_H(v) < θ.  For θ < 1/2 the ordering
    v̂₋ <= v̂₊ is automatic: a sample's min never exceeds its max, so the two
    tail fractions at a common v sum to at least 1.  The per-H crossing
    values are reported so the liminf-vs-limit gap stays visible.
    """
    if not 0.0 < theta < 0.5:
        raise InvalidParameterError(f"theta must lie in (0, 1/2), got {theta}")
    H_list = list(H_list)
    if not H_list or any(H_list[i] >= H_list[i + 1] for i in range(len(H_list) - 1)):
        raise InvalidParameterError("H_list must be nonempty and increasing")
    v_grid = tuple(_frac(v) for v in v_grid) if v_grid else default_v_grid()

    stats = {}
    crossings = []
    for H in H_list:
        cap_H = cap if cap is not None else 40 * H + 1000
        st = estimate_pH(spec, H, v_grid, n, cap_H, w=w, mode=mode)
        if st.n_certified == 0:
            raise EstimationFailedError(f"all samples censored at H={H}")
        stats[H] = st
        crossings.append((H, _cross_minus(st, theta), _cross_plus(st, theta)))

    top = stats[H_list[-1]]
    v_plus = _cross_plus(top, theta)
    v_minus = _cross_minus(top, theta)
    if v_plus is None or v_minus is None:
        raise EstimationFailedError(
            "exceedance never crosses theta on the grid; widen the v-grid")
    dirs = np.array([float(v) for v in top.max_dirs])
    sd = float(dirs.std(ddof=1)) if len(dirs) > 1 else float("inf")
    diag = {"per_H": crossings, "stats": stats, "theta": theta, "n": n,
            "direction_mean": float(dirs.mean()), "direction_sd": sd,
            "direction_se": sd / math.sqrt(len(dirs)),
            "censor_rate_max": max(s.censor_rate for s in stats.values())}
    return VPMEstimate(v_minus=v_minus, v_plus=v_plus, diagnostics=diag)


def _cross_plus(st: DirectionStats, theta):
    smax = sorted(st.max_dirs)
    n = st.n_certified
    for v in st.v_grid:
        if (n - bisect_left(smax, v)) / n < theta:
            return v
    return None


def _cross_minus(st: DirectionStats, theta):
    smin = sorted(st.min_dirs)
    n = st.n_certified
    for v in reversed(st.v_grid):
        if bisect_right(smin, v) / n < theta:
            return v
    return None


# ---------------------------------------------------------------------------
# Deviation decay fit.


@dataclass(frozen=True)
class DeviationFit:
    """OLS fit of log p̂_H(v_ref) against log H.

    Zero counts cannot enter a log fit; they are reported through
    rule-of-three upper bounds (3/n at confidence ~0.95) and flag the fit as
    one-sided.  ``degenerate_zero`` means every H had zero exceedances.
    """

    v_ref: Fraction
    points: tuple  # (H, p_hat, n_certified)
    slope: object
    intercept: object
    slope_se: object
    ci: object
    degenerate_zero: bool
    one_sided: bool
    rule_of_three: tuple
    benchmark: object = None

    def to_json_dict(self) -> dict:
        return {"v_ref": float(self.v_ref),
                "points": [(h, p, m) for h, p, m in self.points],
                "slope": self.slope, "intercept": self.intercept,
                "slope_se": self.slope_se,
                "ci": list(self.ci) if self.ci else None,
                "degenerate_zero": self.degenerate_zero,
                "one_sided": self.one_sided,
                "rule_of_three": [list(r) for r in self.rule_of_three],
                "benchmark": self.benchmark}


def deviation_fit(stats_list, v_plus, eps, *, alpha=None) -> DeviationFit:
    """Fit the decay exponent of p̂_H(v̂₊ + ε) across heights."""
    stats_list = sorted(stats_list, key=lambda s: s.H)
    if len(stats_list) < 3:
        raise InvalidParameterError("need stats at >= 3 heights")
    eps = _frac(eps)
    if eps <= 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    v_ref = _frac(v_plus) + eps
    points = []
    zeros = []
    for st in stats_list:
        p = st.exceedance(v_ref)
        points.append((st.H, p, st.n_certified))
        if p == 0.0:
            zeros.append((st.H, 3.0 / st.n_certified))
    benchmark = (-alpha / 4.0) if alpha is not None else None

    positive = [(h, p) for h, p, _ in points if p > 0.0]
    if not positive:
        return DeviationFit(v_ref=v_ref, points=tuple(points), slope=None,
                            intercept=None, slope_se=None, ci=None,
                            degenerate_zero=True, one_sided=True,
                            rule_of_three=tuple(zeros), benchmark=benchmark)
    x = np.log([h for h, _ in positive])
    y = np.log([p for _, p in positive])
    if len(positive) == 1:
        return DeviationFit(v_ref=v_ref, points=tuple(points), slope=None,
                            intercept=float(y[0]), slope_se=None, ci=None,
                            degenerate_zero=False, one_sided=True,
                            rule_of_three=tuple(zeros), benchmark=benchmark)
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = len(positive) - 2
    se = float(math.sqrt(float((resid ** 2).sum()) / dof / sxx)) if dof > 0 else float("inf")
    return DeviationFit(v_ref=v_ref, points=tuple(points), slope=slope,
                        intercept=intercept, slope_se=se,
                        ci=(slope - 2 * se, slope + 2 * se),
                        degenerate_zero=False, one_sided=bool(zeros),
                        rule_of_three=tuple(zeros), benchmark=benchmark)


# ---------------------------------------------------------------------------
# Renormalization parameters.


@dataclass(frozen=True)
class RenormParams:
    """The user-visible renormalization knobs.

    ``delta`` defaults to (v̂₊ − v̂₋)/(5(β+1)).  ``v_minus=None`` is the
    "condition 1 vacuous" surrogate (every direction passes); it requires an
    explicit delta.
    """

    beta: Fraction
    v_minus: object
    v_plus: Fraction
    r: int
    schedule: ScaleSchedule
    delta: Fraction = None

    def __post_init__(self):
        beta = _frac(self.beta)
        v_plus = _frac(self.v_plus)
        v_minus = None if self.v_minus is None else _frac(self.v_minus)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "v_plus", v_plus)
        object.__setattr__(self, "v_minus", v_minus)
        if beta <= 0:
            raise InvalidParameterError(f"beta must be positive, got {beta}")
        if self.r < 1:
            raise InvalidParameterError(f"threat range must be >= 1, got {self.r}")
        if self.delta is None:
            if v_minus is None:
                raise InvalidParameterError(
                    "delta must be given explicitly when v_minus is vacuous")
            if v_minus >= v_plus:
                raise InvalidParameterError(
                    f"need v_minus < v_plus to derive delta, got {v_minus} >= {v_plus}")
            delta = (v_plus - v_minus) / (5 * (beta + 1))
        else:
            delta = _frac(self.delta)
        object.__setattr__(self, "delta", delta)
        if not 0 < delta:
            raise InvalidParameterError(f"delta must be positive, got {delta}")
        if (v_minus is not None and -beta <= v_minus < v_plus <= beta
                and not delta <= Fraction(1, 2)):
            raise InvalidParameterError(
                f"delta={delta} escapes (0, 1/2] despite in-range directions")


# ---------------------------------------------------------------------------
# Traps.


@dataclass(frozen=True)
class TrapReport:
    """Outcome of one trap scan at reference point w and height H.

    ``outcomes`` maps each candidate start y to pass / fail_v / fail_band /
    unknown.  ``band`` is the (inclusive-floor, exclusive-top) height range
    that was read; nothing outside it was consumed.
    """

    w: tuple
    H: int
    z_w: tuple
    found: bool
    witness: object
    outcomes: dict
    unknown: int
    band: tuple
    delta: Fraction
    v_bound: object

    @property
    def n_candidates(self) -> int:
        return len(self.outcomes)

    def csv_rows(self):
        rows = [("w_x", "w_y", "H", "y_x", "y_y", "outcome")]
        for (yx, yy), out in sorted(self.outcomes.items()):
            rows.append((str(self.w[0]), self.w[1], self.H, yx, yy, out))
        return rows


def trap_scan(env, U: UniformField, w, H: int, params: RenormParams,
              cap: int) -> TrapReport:
    """Scan for a trap at w: a nearby walk with direction <= v̂₋ + δ that
    stays in the height band.

    Candidate starts are the block I_{δH} at z_w = w + (δH + 4βH', 2H'); each
    runs with a hard floor at π₂(w)+H' (dipping below it is a condition-2
    failure and the engine stops before reading that row) to the target
    height π₂(w)+H.  Only environment and uniform data in the band
    [π₂(w)+H', π₂(w)+H] can influence the report.
    """
    delta = params.delta
    wx, wy = w
    wy = int(wy)
    if H < math.ceil(4 / delta):
        raise InvalidParameterError(f"H={H} below ceil(4/delta)={math.ceil(4 / delta)}")
    hp = h_prime(H)
    if 2 * hp > H:
        raise InvalidParameterError(f"need H' <= H/2, got H'={hp} at H={H}")
    if H - 2 * hp < 1:
        raise InvalidParameterError(f"band height H-2H'={H - 2 * hp} too small")
    z_w = (_frac(wx) + delta * H + 4 * params.beta * hp, wy + 2 * hp)
    candidates = block_sites(z_w, delta * H)
    floor = wy + hp
    target = wy + H
    v_bound = None if params.v_minus is None else params.v_minus + delta
    rel_H = H - 2 * hp

    outcomes = {}
    found = False
    witness = None
    unknown = 0
    for y in candidates:
        res = _trap_run(env, U, y, target, floor, cap, wx, z_w, H, params)
        if res.status == engine.CENSORED:
            outcomes[y] = "unknown"
            unknown += 1
            continue
        if res.status == engine.FLOOR:
            outcomes[y] = "fail_band"
            continue
        v = Fraction(res.final[0] - y[0], rel_H)
        if v_bound is None or v <= v_bound:
            outcomes[y] = "pass"
            if not found:
                found, witness = True, y
        else:
            outcomes[y] = "fail_v"
    return TrapReport(w=(wx, wy), H=H, z_w=z_w, found=found, witness=witness,
                      outcomes=outcomes, unknown=unknown, band=(floor, target),
                      delta=delta, v_bound=v_bound)


def _trap_run(env, U, y, target, floor, cap, wx, z_w, H, params):
    if isinstance(env, EnvironmentField) or env.family == "constant":
        field = env if isinstance(env, EnvironmentField) else materialize(env)
        res = engine.run(field, U.seed, y, counts={}, gamma={}, target_y=target,
                         cap=cap, floor_y=floor, record=False)
        if res.status == engine.WINDOW:
            raise WindowExceededError(res.final, field.window)
        return res
    # spec path: materialize only the readable band, growing horizontally
    half = max(64, 2 * H)
    cx = math.floor(_frac(z_w[0]))
    for _ in range(_MAX_GROWTH):
        window = Window.from_bounds(cx - half, cx + half, floor, target)
        field = materialize(env, window)
        res = engine.run(field, U.seed, y, counts={}, gamma={}, target_y=target,
                         cap=cap, floor_y=floor, record=False)
        if res.status != engine.WINDOW:
            return res
        half *= 2
    raise EstimationFailedError(f"trap window kept overflowing at {y}")


# ---------------------------------------------------------------------------
# Threats.


@dataclass(frozen=True)
class ThreatReport:
    """Union-of-traps report along the slope-v̂₊ checkpoint line."""

    w: tuple
    H: int
    r: int
    threatened: bool
    reports: tuple
    unknown: int

    @property
    def certain(self) -> bool:
        """True when the verdict cannot change if unknowns were resolved."""
        return self.threatened or self.unknown == 0

    def csv_rows(self):
        rows = [("j", "w_x", "w_y", "H", "found", "unknown")]
        for j, rep in enumerate(self.reports):
            rows.append((j, str(rep.w[0]), rep.w[1], rep.H, rep.found, rep.unknown))
        return rows


def threat_scan(env, U: UniformField, w, H: int, r: int, v_plus,
                params: RenormParams, cap: int) -> ThreatReport:
    """True iff some checkpoint w_j = w + jH(v̂₊, 1), j < r, is H-trapped.

    Checkpoint reports are deterministic per (env, U, w_j), so enlarging r
    only appends reports — threat is exactly monotone in r on shared seeds.
    """
    if r < 1:
        raise InvalidParameterError(f"r must be >= 1, got {r}")
    v_plus = _frac(v_plus)
    wx, wy = _frac(w[0]), int(w[1])
    reports = []
    for j in range(r):
        w_j = (wx + j * H * v_plus, wy + j * H)
        reports.append(trap_scan(env, U, w_j, H, params, cap))
    threatened = any(rep.found for rep in reports)
    return ThreatReport(w=(wx, wy), H=H, r=r, threatened=threatened,
                        reports=tuple(reports),
                        unknown=sum(rep.unknown for rep in reports))


# ---------------------------------------------------------------------------
# Threatened density along a walk.


@dataclass(frozen=True)
class DensityReport:
    """Fraction of renormalized checkpoints whose rounded point is threatened.

    ``checkpoints`` holds (j, stop position, rounded point, verdict) with
    verdict in {threatened, clear, unknown}; the density counts only
    certified-threatened checkpoints, duplicates included as encountered.
    """

    y: tuple
    w: tuple
    h: int
    k: int
    k1: int
    n_checkpoints: int
    density: Fraction
    unknown_fraction: Fraction
    checkpoints: tuple

    def csv_rows(self):
        rows = [("j", "stop_x", "stop_y", "round_x", "round_y", "verdict")]
        for j, stop, rnd, verdict in self.checkpoints:
            sx, sy = (stop if stop is not None else ("", ""))
            rx, ry = (rnd if rnd is not None else ("", ""))
            rows.append((j, sx, sy, rx, ry, verdict))
        return rows


def threatened_density(env, U: UniformField, y, w, h: int, k: int,
                       params: RenormParams, cap: int, *, k1: int = 0,
                       threat_fn=None) -> DensityReport:
    """Walk from y to height h·L_k above w, stopping every h·L_{k1+1} rows.

    Each stopped position is rounded to the (⌊δH/4⌋, H') lattice at scan
    height H = h·L_{k1} and tested for (H, l_{k1})-threat; the density is the
    exact fraction of threatened checkpoints.  ``threat_fn(rounded)`` (→
    True/False/None) replaces the threat scans when injected, for oracle
    tests and forced-verdict experiments.  Censored walks leave the remaining
    checkpoints unknown.
    """
    sched = params.schedule
    if not 0 <= k1 < k <= sched.depth:
        raise InvalidParameterError(f"need 0 <= k1 < k <= depth={sched.depth}")
    if sched.L0 >= _PAPER_SCALE and k >= 1:
        raise CostGuardError(
            f"simulation refused: base scale {sched.L0} at k={k} is not a "
            "desk-scale computation (schedule arithmetic remains available)")
    wx, wy = w
    wy = int(wy)
    H_scan = h * sched.L[k1]
    stride = h * sched.L[k1 + 1]
    n_checkpoints = sched.L[k] // sched.L[k1 + 1]
    if not wy <= y[1] < wy + h_prime(h * sched.L[k]):
        raise InvalidParameterError(
            f"start height {y[1]} outside [{wy}, {wy + h_prime(h * sched.L[k])})")

    counts = {}
    pos = tuple(y)
    censored = False
    checkpoints = []
    n_threat = 0
    n_unknown = 0
    for j in range(n_checkpoints):
        if not censored:
            res = simulate_hit(env, U.seed, pos, wy + j * stride, cap,
                               counts=counts)
            if res.status == engine.HIT:
                pos = res.final
            else:
                censored = True
        if censored:
            checkpoints.append((j, None, None, "unknown"))
            n_unknown += 1
            continue
        rounded = round_point(pos, H_scan, params.delta)
        if threat_fn is not None:
            verdict = threat_fn(rounded)
        else:
            rep = threat_scan(env, U, rounded, H_scan, sched.l[k1],
                              params.v_plus, params, cap)
            verdict = True if rep.threatened else (None if rep.unknown else False)
        if verdict is True:
            n_threat += 1
            checkpoints.append((j, pos, rounded, "threatened"))
        elif verdict is False:
            checkpoints.append((j, pos, rounded, "clear"))
        else:
            n_unknown += 1
            checkpoints.append((j, pos, rounded, "unknown"))
    return DensityReport(y=tuple(y), w=(wx, wy), h=h, k=k, k1=k1,
                         n_checkpoints=n_checkpoints,
                         density=Fraction(n_threat, n_checkpoints),
                         unknown_fraction=Fraction(n_unknown, n_checkpoints),
                         checkpoints=tuple(checkpoints))


# ---------------------------------------------------------------------------
# The rho recursion and beta calibration.


@dataclass(frozen=True)
class RhoReport:
    k1: int
    values: tuple  # exact Fractions rho_{k1} .. rho_{k1+depth}
    stays_above_half: bool
    divergent: bool

    def csv_rows(self):
        rows = [("k", "rho")]
        for i, v in enumerate(self.values):
            rows.append((self.k1 + i, str(v)))
        return rows


def rho_sequence(schedule: ScaleSchedule, k1: int, depth: int) -> RhoReport:
    """Exact density-loss ladder: ρ_{k1} = 1, ρ_{k+1} = ρ_k − 5/l_k."""
    if depth < 1:
        raise InvalidParameterError(f"depth must be >= 1, got {depth}")
    if k1 < 0 or k1 + depth > schedule.depth:
        raise InvalidParameterError(
            f"schedule only provides l_0..l_{schedule.depth - 1}")
    values = [Fraction(1)]
    for k in range(k1, k1 + depth):
        values.append(values[-1] - Fraction(5, schedule.l[k]))
    used = schedule.l[k1:k1 + depth]
    return RhoReport(k1=k1, values=tuple(values),
                     stays_above_half=all(v >= Fraction(1, 2) for v in values),
                     divergent=any(l == 1 for l in used))


def calibrate_beta(spec: EnvironmentSpec, *, n: int = 200, T: int = 400) -> Fraction:
    """Ballisticity slope from the empirical vertical speed: β = 1.5/speed.

    Coarse by design (denominator capped) so downstream grid formulas stay
    exact; the value is logged with every run that uses it.
    """
    total = 0
    for t in range(n):
        env_spec = replace(spec, seed=derive_seed(spec.seed, t, _ENV_STREAM))
        useed = derive_seed(spec.seed, t, _BETA_STREAM)
        res = simulate_hit(env_spec, useed, (0, 0), None, T)
        total += res.final[1]
    speed = Fraction(total, n * T)
    if speed <= 0:
        raise EstimationFailedError(
            f"nonpositive empirical vertical speed {speed}; drift assumption violated?")
    return (Fraction(3, 2) / speed).limit_denominator(50)
