"""Property suites: the executable form of the package's correctness claims.

Each suite returns a SuiteReport with a pass flag, a summary dict, and
human-readable lines; the CLI maps a failed suite to exit code 1.  All suites
are fully deterministic given their master seed — every trial's sub-seeds
derive from (seed, trial index, stream), so any reported trial can be
replayed in isolation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np
from scipy import stats as sps

from . import engine
from .environments import (EnvironmentSpec, constant_spec, dynamic_spec,
                           iid_spec, materialize)
from .errors import InvalidConfigurationError
from .estimators import simulate_hit
from .geometry import Box, h_prime
from .kernels import TransitionKernel
from .mixing import BoxPair, clt_width, empirical_mixing_covariance
from .paths import VIOLATION, classify_barrier, loop_decompose
from .randomness import derive_seed
from .walk import PathRecord, UNCERTIFIED, cut_line_estimate, theta_shift, Walk

_TRIAL_STREAM = 12
_ENV_STREAM = 10
_U_STREAM = 11
_UNI_STREAM = 20
_THETA_ENV = 21
_THETA_U = 22
_ASSUME_ENV = 23
_ASSUME_U = 24


@dataclass(frozen=True)
class SuiteReport:
    name: str
    passed: bool
    summary: dict
    lines: tuple
    rows: tuple = ()

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "summary": self.summary}


# ---------------------------------------------------------------------------
# Barrier trichotomy.

_BARRIER_KERNELS = (
    TransitionKernel(0.15, 0.15, 0.6, 0.1),
    TransitionKernel(0.1, 0.2, 0.65, 0.05),
    TransitionKernel(0.2, 0.1, 0.6, 0.1),
)

BARRIER_FAMILIES = ("constant", "iid_site", "dynamic_1d")


def _barrier_spec(family: str, env_seed: int, rng: random.Random) -> EnvironmentSpec:
    a, b, c = _BARRIER_KERNELS
    if family == "constant":
        return constant_spec(rng.choice(_BARRIER_KERNELS), env_seed)
    if family == "iid_site":
        return iid_spec((a, b, c), (0.4, 0.3, 0.3), env_seed)
    if family == "dynamic_1d":
        return dynamic_spec("markov_flip", {"p0": 0.5, "p_flip": 0.3},
                            env_seed, a, b)
    raise InvalidConfigurationError(f"no barrier sampler for family {family!r}")


def barrier_trial(seed: int, t: int, *, H_max: int = 64, corrupt: bool = False,
                  families=BARRIER_FAMILIES) -> dict:
    """One randomized trichotomy trial; deterministic in (seed, t).

    Draws a family, seeds, geometry, and (half the time) a left-walk history
    supported well below both starts; walks both paths over the shared
    (environment, uniforms) and classifies.  Censored walks and realized
    history overlaps resample with a derived sub-index so the trial stays
    replayable.  ``corrupt`` breaks the coupling on the left walk only (its
    counters advance by 2), the suite's negative control.
    """
    family = families[t % len(families)]
    for attempt in range(50):
        sub = t * 64 + attempt
        rng = random.Random(derive_seed(seed, sub, _TRIAL_STREAM))
        env_seed = derive_seed(seed, sub, _ENV_STREAM)
        u_seed = derive_seed(seed, sub, _U_STREAM)
        spec = _barrier_spec(family, env_seed, rng)
        H = rng.randrange(8, H_max + 1)
        dx = rng.randrange(1, 6)
        dy = rng.randrange(-3, 4)
        gamma = {}
        if rng.random() < 0.5:
            base = min(0, dy) - 12
            for _ in range(rng.randrange(1, 4)):
                site = (rng.randrange(-5, 6), base - rng.randrange(0, 4))
                gamma[site] = gamma.get(site, 0) + rng.randrange(1, 4)
        cap = 40 * (H + 8) + 2000

        res_l = simulate_hit(spec, u_seed, (0, 0), H, cap, gamma=gamma,
                             record=True, skip_counter=corrupt)
        res_r = simulate_hit(spec, u_seed, (dx, dy), H, cap, record=True)
        if res_l.status != engine.HIT or res_r.status != engine.HIT:
            continue  # resample (censored walk)
        try:
            verdict = classify_barrier(PathRecord.from_engine(res_l),
                                       PathRecord.from_engine(res_r), H,
                                       gamma=gamma)
        except InvalidConfigurationError:
            continue  # realized right path touched the history support
        return {"t": t, "attempt": attempt, "family": family,
                "env_seed": env_seed, "u_seed": u_seed, "H": H,
                "dx": dx, "dy": dy, "gamma": sorted(gamma.items()),
                "scenario": verdict.scenario, "witness": repr(verdict.witness)}
    raise InvalidConfigurationError(f"trial {t} failed to realize preconditions")


def _barrier_worker(args):
    seed, t, h_max, corrupt = args
    return barrier_trial(seed, t, H_max=h_max, corrupt=corrupt)


def barrier_suite(n_trials: int, seed: int, *, H_max: int = 64,
                  corrupt: bool = False, workers: int = 1) -> SuiteReport:
    """Randomized trichotomy verdicts over >= 3 environment families.

    Passes when no VIOLATION occurs (or, under ``corrupt``, when at least one
    does).  Aggregation is a commutative count merge, so worker count cannot
    change the outcome.
    """
    jobs = [(seed, t, H_max, corrupt) for t in range(n_trials)]
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_barrier_worker, jobs, chunksize=256)
    else:
        results = [_barrier_worker(j) for j in jobs]
    counts = {}
    violations = []
    resamples = 0
    for row in results:
        counts[row["scenario"]] = counts.get(row["scenario"], 0) + 1
        resamples += row["attempt"]
        if row["scenario"] == VIOLATION:
            violations.append(row)
    n_viol = counts.get(VIOLATION, 0)
    passed = (n_viol >= 1) if corrupt else (n_viol == 0)
    mode = "corrupted-coupling control" if corrupt else "coupling"
    lines = [f"barrier {mode}: {n_trials} trials, verdicts {counts}, "
             f"{resamples} resampled attempts",
             f"violations: {n_viol} -> {'PASS' if passed else 'FAIL'}"]
    return SuiteReport(name="barrier", passed=passed,
                       summary={"n_trials": n_trials, "verdicts": counts,
                                "violations": n_viol, "resamples": resamples,
                                "corrupt": corrupt},
                       lines=tuple(lines), rows=tuple(violations))


# ---------------------------------------------------------------------------
# Loop decomposition vs the naive oracle.


def naive_loop_erase(sites) -> list:
    """Brute-force oracle: repeatedly delete the first minimal cycle.

    Scans the current site list from scratch each round, deletes the slice
    between the first repeated site's first occurrence and its revisit, and
    repeats until injective.  Deliberately naive — this is the independent
    check for loop_decompose, not a fast path.
    """
    cur = list(sites)
    while True:
        seen = {}
        hit = None
        for idx, s in enumerate(cur):
            if s in seen:
                hit = (seen[s], idx)
                break
            seen[s] = idx
        if hit is None:
            return cur
        del cur[hit[0]:hit[1]]


def _check_one_path(sites) -> bool:
    """Full decomposition checks on one path; True iff all hold."""
    dec = loop_decompose(sites)
    residual_sites = [sites[t] for t in dec.residual]
    if residual_sites != naive_loop_erase(sites):
        return False
    if len(set(residual_sites)) != len(residual_sites):
        return False
    if residual_sites[0] != sites[0] or residual_sites[-1] != sites[-1]:
        return False
    covered = set(dec.residual)
    total = len(covered)
    for loop in dec.loops:
        if sites[loop.t_in] != sites[loop.t_out]:
            return False
        if covered & loop.indices:
            return False
        covered |= loop.indices
        total += len(loop.indices)
    return total == len(sites) and covered == set(range(len(sites)))


def loops_exhaustive(window: int = 5, max_len: int = 12) -> SuiteReport:
    """Oracle equality on every path of length <= max_len whose bounding box
    fits in a window x window box (anchored at the origin, i.e. paths up to
    translation).

    Two reductions keep this exact but tractable.  Both the decomposition and
    the oracle read sites only through equality, so a path is fully
    determined for them by its first-appearance pattern (site ids in order of
    first visit); each distinct pattern is checked once.  And a 90-degree
    rotation about the origin carries any nonempty constrained path to one
    whose first step is +x without changing its pattern or its box spans, so
    the enumeration fixes the first step.
    """
    span = window - 1
    moves = ((1, 0), (-1, 0), (0, 1), (0, -1))
    n_paths = 1  # the length-0 path, handled explicitly below
    n_checked = 0
    mismatches = 0
    seen = set()
    ids = {}
    pattern = bytearray()
    path = []
    max_sites = max_len + 1

    def visit():
        nonlocal n_checked, mismatches
        key = bytes(pattern)
        if key in seen:
            return
        seen.add(key)
        n_checked += 1
        if not _check_one_path(list(path)):
            mismatches += 1

    def rec(x, y, min_x, max_x, min_y, max_y):
        nonlocal n_paths
        visit()
        if len(pattern) >= max_sites:
            return
        for dx, dy in moves:
            nx, ny = x + dx, y + dy
            n_min_x, n_max_x = min(min_x, nx), max(max_x, nx)
            if n_max_x - n_min_x > span:
                continue
            n_min_y, n_max_y = min(min_y, ny), max(max_y, ny)
            if n_max_y - n_min_y > span:
                continue
            site = (nx, ny)
            sid = ids.get(site)
            fresh = sid is None
            if fresh:
                sid = len(ids)
                ids[site] = sid
            pattern.append(sid)
            path.append(site)
            n_paths += 1
            rec(nx, ny, n_min_x, n_max_x, n_min_y, n_max_y)
            pattern.pop()
            path.pop()
            if fresh:
                del ids[site]

    if not _check_one_path([(0, 0)]):
        mismatches += 1
    n_checked += 1
    ids[(0, 0)] = 0
    ids[(1, 0)] = 1
    pattern.extend((0, 1))
    path.extend(((0, 0), (1, 0)))
    rec(1, 0, 0, 1, 0, 0)
    passed = mismatches == 0
    lines = [f"loops exhaustive: {n_paths} paths (len<={max_len}, "
             f"{window}x{window} box, +x first step), {n_checked} distinct "
             f"patterns, {mismatches} mismatches -> {'PASS' if passed else 'FAIL'}"]
    return SuiteReport(name="loops-exhaustive", passed=passed,
                       summary={"n_paths": n_paths, "n_patterns": n_checked,
                                "mismatches": mismatches},
                       lines=tuple(lines))


def loops_random(n_paths: int, seed: int, max_len: int = 200) -> SuiteReport:
    """Oracle equality on random paths of length <= max_len."""
    rng = random.Random(seed)
    moves = ((1, 0), (-1, 0), (0, 1), (0, -1))
    mismatches = 0
    for _ in range(n_paths):
        length = rng.randrange(1, max_len + 1)
        x, y = 0, 0
        sites = [(0, 0)]
        for _ in range(length):
            dx, dy = moves[rng.randrange(4)]
            x += dx
            y += dy
            sites.append((x, y))
        if not _check_one_path(sites):
            mismatches += 1
    passed = mismatches == 0
    lines = [f"loops random: {n_paths} paths (len<={max_len}), "
             f"{mismatches} mismatches -> {'PASS' if passed else 'FAIL'}"]
    return SuiteReport(name="loops-random", passed=passed,
                       summary={"n_paths": n_paths, "mismatches": mismatches},
                       lines=tuple(lines))


def loops_suite(seed: int, *, n_random: int = 100_000, max_len: int = 200,
                window: int = 5, exhaust_len: int = 12) -> SuiteReport:
    ex = loops_exhaustive(window=window, max_len=exhaust_len)
    rnd = loops_random(n_random, seed, max_len=max_len)
    passed = ex.passed and rnd.passed
    return SuiteReport(name="loops", passed=passed,
                       summary={"exhaustive": ex.summary, "random": rnd.summary},
                       lines=ex.lines + rnd.lines)


# ---------------------------------------------------------------------------
# Consumed-uniform stream i.i.d. checks.

_UNIFORM_KERNEL = TransitionKernel(0.3, 0.3, 0.25, 0.15)


def uniforms_suite(seed: int, *, n_walks: int = 100, n_steps: int = 10_000,
                   alpha: float = 0.01, max_rejections: int = 4) -> SuiteReport:
    """KS uniformity and lag-1 correlation on per-walk consumed uniforms.

    The site-heavy kernel revisits sites constantly, so the stream mixes
    fresh and continuation indices; each consumed (site, index) pair is
    distinct, hence the stream should look i.i.d. uniform.
    """
    env = materialize(constant_spec(_UNIFORM_KERNEL, 0))
    z = sps.norm.ppf(1.0 - alpha / 2.0)
    ks_rej = 0
    lag_rej = 0
    for t in range(n_walks):
        useed = derive_seed(seed, t, _UNI_STREAM)
        res = engine.run(env, useed, (0, 0), target_y=None, cap=n_steps,
                         record=True)
        us = res.us
        if sps.kstest(us, "uniform").pvalue < alpha:
            ks_rej += 1
        r = float(np.corrcoef(us[:-1], us[1:])[0, 1])
        if abs(r) * math.sqrt(len(us) - 1) > z:
            lag_rej += 1
    passed = ks_rej <= max_rejections and lag_rej <= max_rejections
    lines = [f"uniform stream: {n_walks} walks x {n_steps} steps, "
             f"KS rejections {ks_rej}, lag-1 rejections {lag_rej} "
             f"(allowed <= {max_rejections} each) -> {'PASS' if passed else 'FAIL'}"]
    return SuiteReport(name="uniforms", passed=passed,
                       summary={"ks_rejections": ks_rej, "lag1_rejections": lag_rej,
                                "n_walks": n_walks, "n_steps": n_steps},
                       lines=tuple(lines))


# ---------------------------------------------------------------------------
# Theta continuation identity.

_THETA_KERNELS = (TransitionKernel(0.15, 0.15, 0.55, 0.15),
                  TransitionKernel(0.1, 0.1, 0.7, 0.1))


def theta_suite(seed: int, *, n: int = 1000) -> SuiteReport:
    """Exact continuation identity: the walk restarted at its hitting time
    with history Γ + N reproduces the original future site by site."""
    mismatches = 0
    censored = 0
    for t in range(n):
        rng = random.Random(derive_seed(seed, t, _TRIAL_STREAM))
        spec = iid_spec(_THETA_KERNELS, (0.5, 0.5),
                        derive_seed(seed, t, _THETA_ENV))
        useed = derive_seed(seed, t, _THETA_U)
        H = rng.randrange(3, 20)
        m = rng.randrange(5, 200)

        walk = Walk(start=(0, 0))
        res = simulate_hit(spec, useed, (0, 0), H, 40 * H + 2000,
                           counts=walk.counter)
        if res.status != engine.HIT:
            censored += 1
            continue
        walk.position = res.final
        walk.last_status = engine.HIT
        shifted = theta_shift(walk)

        future = simulate_hit(spec, useed, walk.position, None, m,
                              counts=dict(walk.counter))
        replay = simulate_hit(spec, useed, shifted.start, None, m,
                              gamma=shifted.history.as_dict(),
                              record=True)
        future_rec = simulate_hit(spec, useed, walk.position, None, m,
                                  counts=dict(walk.counter), record=True)
        if not (np.array_equal(future_rec.xs, replay.xs)
                and np.array_equal(future_rec.ys, replay.ys)):
            mismatches += 1
        assert future.final == future_rec.final
    passed = mismatches == 0
    lines = [f"theta identity: {n} walks, {mismatches} mismatches, "
             f"{censored} censored-skipped -> {'PASS' if passed else 'FAIL'}"]
    return SuiteReport(name="theta", passed=passed,
                       summary={"n": n, "mismatches": mismatches,
                                "censored": censored},
                       lines=tuple(lines))


# ---------------------------------------------------------------------------
# Drift-assumption verifiers: cut-line and backtrack decay.

_ASSUME_KERNELS = (TransitionKernel(0.0, 0.0, 0.6, 0.4),
                   TransitionKernel(0.0, 0.0, 0.62, 0.38))


def assumptions_suite(seed: int, *, zeta: float = 0.1, H_list=(4, 8, 16, 32),
                      n: int = 10_000, T: int = 400) -> SuiteReport:
    """Empirical P(Ξ̂ >= H) and P(not E_H) curves under the drift condition.

    Slowest admissible decay under the north bound 1/2+ζ comes from purely
    vertical kernels (p_S = 1 − p_N), which is why the suite's environment
    moves only vertically; anything with horizontal mass decays faster and
    zeroes out the large-H bins.  Passing means both curves are strictly
    decreasing along H_list.
    """
    H_list = tuple(H_list)
    margin = 2 * h_prime(max(H_list))
    spec0 = iid_spec(_ASSUME_KERNELS, (0.5, 0.5), seed)
    xi_counts = {H: 0 for H in H_list}
    not_e_counts = {H: 0 for H in H_list}
    uncertified = 0
    for t in range(n):
        spec = iid_spec(_ASSUME_KERNELS, (0.5, 0.5),
                        derive_seed(seed, t, _ASSUME_ENV))
        useed = derive_seed(seed, t, _ASSUME_U)
        res = simulate_hit(spec, useed, (0, 0), None, T, record=True,
                           x_half=2, y_half=T + 60)
        rel_min = res.min_y  # start at height 0
        for H in H_list:
            if rel_min < -H:
                not_e_counts[H] += 1
        xi, _ = cut_line_estimate(PathRecord.from_engine(res), margin)
        if xi is UNCERTIFIED:
            uncertified += 1
            continue
        for H in H_list:
            if xi >= H:
                xi_counts[H] += 1
    p_xi = [xi_counts[H] / n for H in H_list]
    p_not_e = [not_e_counts[H] / n for H in H_list]
    xi_strict = all(p_xi[i] > p_xi[i + 1] for i in range(len(H_list) - 1))
    e_strict = all(p_not_e[i] > p_not_e[i + 1] for i in range(len(H_list) - 1))
    passed = xi_strict and e_strict
    lines = [f"assumption decay (zeta={zeta}, n={n}): "
             f"P(cutline>=H)={p_xi} strict={xi_strict}; "
             f"P(not E_H)={p_not_e} strict={e_strict} -> "
             f"{'PASS' if passed else 'FAIL'}"]
    return SuiteReport(name="assumptions", passed=passed,
                       summary={"H_list": list(H_list), "p_xi": p_xi,
                                "p_not_e": p_not_e, "uncertified": uncertified,
                                "zeta": zeta, "n": n, "T": T,
                                "spec_seed": spec0.seed},
                       lines=tuple(lines))


def tau_tail_curve(spec: EnvironmentSpec, beta, H_list, n: int, seed: int) -> list:
    """Empirical P(τ_H >= βH) per H (the slowdown fact check)."""
    out = []
    for H in H_list:
        thresh = math.ceil(beta * H)
        slow = 0
        for t in range(n):
            env_spec = EnvironmentSpec(spec.family, spec.kernels,
                                       derive_seed(seed, t, _ENV_STREAM),
                                       spec.params)
            useed = derive_seed(seed, t, _U_STREAM)
            res = simulate_hit(env_spec, useed, (0, 0), H, thresh)
            if res.status != engine.HIT:
                slow += 1  # tau exceeds the cap beta*H
        out.append(slow / n)
    return out


# ---------------------------------------------------------------------------
# Mixing scans.

_MIX_KERNELS = (TransitionKernel(0.25, 0.25, 0.25, 0.25),
                TransitionKernel(0.1, 0.1, 0.7, 0.1))


def _site_stat(site):
    def f(view):
        return float(view.state(site))
    return f


def mixing_iid_suite(seed: int, *, n: int = 10_000, seps=(1, 4, 9)) -> SuiteReport:
    """Single-site covariances across separated boxes on an iid field."""
    spec = iid_spec(_MIX_KERNELS, (0.5, 0.5), seed)
    width = clt_width(n)
    results = []
    ok = True
    for h in seps:
        pair = BoxPair(Box(0, 1, 0, 1), Box(0, 1, 1 + h, 2 + h))
        est = empirical_mixing_covariance(spec, pair, _site_stat((0, 0)),
                                          _site_stat((0, 1 + h)), n)
        results.append((h, est.cov, est.se))
        ok = ok and abs(est.cov) <= width
    lines = [f"mixing iid: n={n}, width 4/sqrt(n)={width:.4f}, "
             f"(sep, cov, se)={[(h, round(c, 5), round(s, 5)) for h, c, s in results]} "
             f"-> {'PASS' if ok else 'FAIL'}"]
    return SuiteReport(name="mixing-iid", passed=ok,
                       summary={"n": n, "width": width,
                                "results": [(h, c, s) for h, c, s in results]},
                       lines=tuple(lines))


def _gauss_q(rho: int = 8, scale: float = 8.0) -> list:
    q = []
    for dx in range(-rho, rho + 1):
        for dy in range(-rho, rho + 1):
            d = math.hypot(dx, dy)
            if d <= rho:
                q.append((dx, dy, math.exp(-d / scale)))
    return q


def mixing_gaussian_suite(seed: int, *, n: int = 2500, seps=(4, 8, 16)) -> SuiteReport:
    """Sign-field covariance must not increase with vertical separation.

    The kernel support has radius 8, so the largest tested separation puts
    the two driving-noise windows fully apart (true covariance exactly 0),
    while the slow decay keeps the 4-vs-8 and 8-vs-16 gaps many standard
    errors wide.
    """
    from .environments import gaussian_spec
    spec = gaussian_spec(_gauss_q(), 3.0, seed, *_MIX_KERNELS)
    results = []
    for h in seps:
        pair = BoxPair(Box(0, 1, 0, 1), Box(0, 1, 1 + h, 2 + h))
        est = empirical_mixing_covariance(spec, pair, _site_stat((0, 0)),
                                          _site_stat((0, 1 + h)), n)
        results.append((h, est.cov, est.se))
    covs = [c for _, c, _ in results]
    ok = all(covs[i] >= covs[i + 1] for i in range(len(covs) - 1))
    lines = [f"mixing gaussian: n={n}, (sep, cov, se)="
             f"{[(h, round(c, 5), round(s, 5)) for h, c, s in results]}, "
             f"non-increasing={ok} -> {'PASS' if ok else 'FAIL'}"]
    return SuiteReport(name="mixing-gaussian", passed=ok,
                       summary={"n": n, "results": [(h, c, s) for h, c, s in results]},
                       lines=tuple(lines))


def mixing_suite(seed: int, *, n_iid: int = 10_000, n_gauss: int = 2500) -> SuiteReport:
    iid = mixing_iid_suite(seed, n=n_iid)
    gauss = mixing_gaussian_suite(seed, n=n_gauss)
    passed = iid.passed and gauss.passed
    return SuiteReport(name="mixing", passed=passed,
                       summary={"iid": iid.summary, "gaussian": gauss.summary},
                       lines=iid.lines + gauss.lines)


SUITES = {
    "barrier": lambda seed, **kw: barrier_suite(kw.pop("n_trials", 10_000), seed, **kw),
    "loops": lambda seed, **kw: loops_suite(seed, **kw),
    "uniforms": lambda seed, **kw: uniforms_suite(seed, **kw),
    "theta": lambda seed, **kw: theta_suite(seed, **kw),
    "assumptions": lambda seed, **kw: assumptions_suite(seed, **kw),
    "mixing": lambda seed, **kw: mixing_suite(seed, **kw),
}
