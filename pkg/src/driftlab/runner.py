"""Experiment orchestration: configs, seed derivation, workers, persistence.

Every subcommand follows the same shape: resolve an ExperimentConfig (JSON
file + flag overrides), derive one (environment seed, uniform seed) pair per
trial from the master seed, run trials (optionally on a worker pool whose
results merge commutatively), and write CSV/JSONL/JSON artifacts stamped with
the config hash plus a manifest sufficient to replay any single trial.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from multiprocessing import Pool

from . import engine, io
from . import verify as verify_mod
from ._version import __version__
from .environments import EnvironmentSpec, spec_from_config, spec_to_config
from .errors import ConfigError, DriftlabError
from .estimators import (RenormParams, _frac, default_v_grid, estimate_v_pm,
                         rho_sequence, simulate_hit, threat_scan,
                         threatened_density, trap_scan)
from .geometry import scale_table
from .randomness import UniformField, derive_seed

_SIM_ENV = 30
_SIM_U = 31
_SCAN_ENV = 32
_SCAN_U = 33

_CONFIG_KEYS = ("environment", "seed", "cap", "n", "H", "H_list", "v_grid",
                "theta", "start", "mode", "workers", "out", "record")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully-resolved run configuration; serializable and hashable.

    ``extra`` carries command-specific knobs (trap geometry, schedule depth,
    separations, ...) so one config format serves every subcommand.
    """

    environment: EnvironmentSpec
    seed: int = 0
    cap: int = None
    n: int = 1
    H: int = None
    H_list: tuple = ()
    v_grid: tuple = None
    theta: Fraction = Fraction(1, 20)
    start: tuple = (0, 0)
    mode: str = "block"
    workers: int = 1
    out: str = "run-out"
    record: bool = True
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict, overrides: dict = None) -> "ExperimentConfig":
        d = dict(raw)
        for key, val in (overrides or {}).items():
            if val is not None:
                d[key] = val
        if "environment" not in d:
            raise ConfigError("config needs an 'environment' section")
        try:
            env = spec_from_config(d["environment"])
        except DriftlabError as exc:
            raise ConfigError(f"bad environment section: {exc}") from exc
        try:
            kw = dict(
                environment=env,
                seed=int(d.get("seed", 0)),
                cap=None if d.get("cap") is None else int(d["cap"]),
                n=int(d.get("n", 1)),
                H=None if d.get("H") is None else int(d["H"]),
                H_list=tuple(int(h) for h in d.get("H_list", ())),
                v_grid=_parse_v_grid(d.get("v_grid")),
                theta=_frac(d.get("theta", "1/20")),
                start=_parse_pair(d.get("start", (0, 0)), "start"),
                mode=str(d.get("mode", "block")),
                workers=int(d.get("workers", 1)),
                out=str(d.get("out", "run-out")),
                record=bool(d.get("record", True)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        if kw["workers"] < 1:
            raise ConfigError(f"workers must be >= 1, got {kw['workers']}")
        if kw["n"] < 1:
            raise ConfigError(f"trial count must be >= 1, got {kw['n']}")
        if kw["mode"] not in ("block", "origin"):
            raise ConfigError(f"mode must be block or origin, got {kw['mode']!r}")
        extra = {k: v for k, v in d.items() if k not in _CONFIG_KEYS}
        return cls(extra=extra, **kw)

    def to_dict(self) -> dict:
        d = {
            "environment": spec_to_config(self.environment),
            "seed": self.seed, "cap": self.cap, "n": self.n, "H": self.H,
            "H_list": list(self.H_list),
            "v_grid": None if self.v_grid is None else [str(v) for v in self.v_grid],
            "theta": str(self.theta),
            "start": list(self.start), "mode": self.mode,
            "workers": self.workers, "out": self.out, "record": self.record,
        }
        d.update(self.extra)
        return d


def _parse_pair(v, name) -> tuple:
    try:
        a, b = v
        return (int(a), int(b))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a pair of integers, got {v!r}") from exc


def _parse_v_grid(v):
    if v is None:
        return None
    if isinstance(v, dict):
        try:
            return default_v_grid(_frac(v.get("lo", -2)), _frac(v.get("hi", 2)),
                                  _frac(v.get("step", "1/100")))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad v_grid: {exc}") from exc
    try:
        return tuple(_frac(x) for x in v)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad v_grid: {exc}") from exc


def _extra(cfg: ExperimentConfig, key, *, cast=None, default=_CONFIG_KEYS):
    if key not in cfg.extra:
        if default is _CONFIG_KEYS:  # sentinel: required
            raise ConfigError(f"config key {key!r} is required for this command")
        return default
    v = cfg.extra[key]
    try:
        return cast(v) if cast is not None else v
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


@dataclass(frozen=True)
class RunManifest:
    """Replay record: config + per-trial seeds + outcome summary."""

    config: dict
    config_hash: str
    version: str
    seed_rule: str
    trial_seeds: tuple  # (index, env_seed, u_seed)
    censoring: dict
    wall_clock: float

    def to_json_dict(self) -> dict:
        return {"config": self.config, "config_hash": self.config_hash,
                "version": self.version, "seed_rule": self.seed_rule,
                "trial_seeds": [list(t) for t in self.trial_seeds],
                "censoring": self.censoring, "wall_clock": self.wall_clock}


def _trial_seeds(master: int, n: int, env_stream: int, u_stream: int):
    return tuple((i, derive_seed(master, i, env_stream),
                  derive_seed(master, i, u_stream)) for i in range(n))


def _manifest(cfg: ExperimentConfig, seeds, censoring: dict, t0: float,
              env_stream: int, u_stream: int) -> RunManifest:
    d = cfg.to_dict()
    return RunManifest(
        config=d, config_hash=io.config_hash(d), version=__version__,
        seed_rule=(f"env_seed=derive_seed(seed, index, {env_stream}); "
                   f"u_seed=derive_seed(seed, index, {u_stream})"),
        trial_seeds=seeds, censoring=censoring,
        wall_clock=round(time.perf_counter() - t0, 3))


def _write_manifest(cfg: ExperimentConfig, man: RunManifest) -> str:
    path = os.path.join(cfg.out, "manifest.json")
    io.write_json(path, man.to_json_dict())
    return path


# ---------------------------------------------------------------------------
# simulate


def _simulate_trial(args):
    spec, useed, start, target_y, cap, record = args
    res = simulate_hit(spec, useed, start, target_y, cap, record=record)
    return res


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    """Run n independent (environment, walk) trials; write paths + summaries."""
    t0 = time.perf_counter()
    cap = 10_000 if cfg.cap is None else cfg.cap
    target_y = None if cfg.H is None else cfg.start[1] + cfg.H
    seeds = _trial_seeds(cfg.seed, cfg.n, _SIM_ENV, _SIM_U)
    jobs = [(replace(cfg.environment, seed=es), us, cfg.start, target_y, cap,
             cfg.record) for (_, es, us) in seeds]
    if cfg.workers > 1:
        with Pool(cfg.workers) as pool:
            results = pool.map(_simulate_trial, jobs, chunksize=64)
    else:
        results = [_simulate_trial(j) for j in jobs]

    cfg_d = cfg.to_dict()
    csv_rows = [("walk", "env_seed", "u_seed", "status", "n_steps",
                 "final_x", "final_y", "min_y", "max_abs_dx")]
    n_hit = 0
    path_lines = []
    for (i, es, us), res in zip(seeds, results):
        n_hit += int(res.status == engine.HIT)
        csv_rows.append((i, es, us, res.status_name, res.n_steps,
                         res.final[0], res.final[1], res.min_y, res.max_abs_dx))
        if cfg.record:
            xs, ys, idxs = res.xs, res.ys, res.idxs
            for t in range(len(xs)):
                path_lines.append({"walk": i, "n": t, "x": int(xs[t]),
                                   "y": int(ys[t]),
                                   "i": int(idxs[t]) if t < len(idxs) else None})
    out = {}
    if cfg.record:
        out["paths"] = os.path.join(cfg.out, "paths.jsonl")
        io.write_jsonl(out["paths"], path_lines, config=cfg_d)
    out["walks"] = os.path.join(cfg.out, "walks.csv")
    io.write_csv(out["walks"], csv_rows, config=cfg_d)
    censoring = {"n": cfg.n, "hit": n_hit, "censored": cfg.n - n_hit}
    out["summary"] = os.path.join(cfg.out, "summary.json")
    io.write_json(out["summary"], {
        "n_walks": cfg.n, "n_hit": n_hit, "n_censored": cfg.n - n_hit,
        "mean_steps": sum(r.n_steps for r in results) / cfg.n,
        "target_y": target_y, "cap": cap}, config=cfg_d)
    out["manifest"] = _write_manifest(
        cfg, _manifest(cfg, seeds, censoring, t0, _SIM_ENV, _SIM_U))
    return out


# ---------------------------------------------------------------------------
# estimate-direction


def cmd_estimate_direction(cfg: ExperimentConfig) -> dict:
    """Exceedance curves over cfg.H_list plus the v̂± threshold summary."""
    t0 = time.perf_counter()
    if not cfg.H_list:
        raise ConfigError("estimate-direction needs a non-empty H_list")
    est = estimate_v_pm(cfg.environment, cfg.H_list, cfg.theta, cfg.n,
                        v_grid=cfg.v_grid, cap=cfg.cap, w=cfg.start,
                        mode=cfg.mode)
    cfg_d = cfg.to_dict()
    diag = est.diagnostics
    rows = []
    for H in cfg.H_list:
        st = diag["stats"][H]
        rows.extend(st.csv_rows() if not rows else st.csv_rows()[1:])
    out = {"curve": os.path.join(cfg.out, "direction_curve.csv")}
    io.write_csv(out["curve"], rows, config=cfg_d)
    censor = {"censor_rate_max": diag["censor_rate_max"]}
    out["summary"] = os.path.join(cfg.out, "summary.json")
    io.write_json(out["summary"], {
        "v_minus": str(est.v_minus), "v_plus": str(est.v_plus),
        "theta": str(cfg.theta), "n": cfg.n, "mode": cfg.mode,
        "H_list": list(cfg.H_list),
        "crossings": [[h, None if a is None else str(a),
                       None if b is None else str(b)]
                      for h, a, b in diag["per_H"]],
        "direction_mean": diag["direction_mean"],
        "direction_sd": diag["direction_sd"],
        "direction_se": diag["direction_se"],
        "censor_rate_max": diag["censor_rate_max"]}, config=cfg_d)
    seeds = _trial_seeds(cfg.seed, 0, _SIM_ENV, _SIM_U)  # estimator derives its own
    out["manifest"] = _write_manifest(
        cfg, _manifest(cfg, seeds, censor, t0, _SIM_ENV, _SIM_U))
    return out


# ---------------------------------------------------------------------------
# trap-scan / threat-scan / density


def _renorm_params(cfg: ExperimentConfig) -> RenormParams:
    beta = _extra(cfg, "beta", cast=_frac, default=Fraction(3, 2))
    v_plus = _extra(cfg, "v_plus", cast=_frac)
    v_minus = _extra(cfg, "v_minus", cast=_frac, default=None)
    delta = _extra(cfg, "delta", cast=_frac, default=None)
    r = _extra(cfg, "r", cast=int, default=2)
    L0 = _extra(cfg, "L0", cast=int, default=256)
    depth = _extra(cfg, "depth", cast=int, default=3)
    try:
        sched = scale_table(L0, depth)
        return RenormParams(beta=beta, v_minus=v_minus, v_plus=v_plus, r=r,
                            schedule=sched, delta=delta)
    except DriftlabError as exc:
        raise ConfigError(f"bad renormalization parameters: {exc}") from exc


def cmd_trap_scan(cfg: ExperimentConfig) -> dict:
    """Per-trial trap reports at w over n seeded environments."""
    t0 = time.perf_counter()
    params = _renorm_params(cfg)
    w = _parse_pair(_extra(cfg, "w", default=(0, 0)), "w")
    if cfg.H is None:
        raise ConfigError("trap-scan needs H")
    cap = cfg.cap if cfg.cap is not None else 40 * cfg.H + 1000
    seeds = _trial_seeds(cfg.seed, cfg.n, _SCAN_ENV, _SCAN_U)
    cfg_d = cfg.to_dict()
    rows = [("trial",) + tuple(TrapReport_HEADER)]
    found = 0
    unknown_trials = 0
    for i, es, us in seeds:
        rep = trap_scan(replace(cfg.environment, seed=es), UniformField(us),
                        w, cfg.H, params, cap)
        found += int(rep.found)
        unknown_trials += int(rep.unknown > 0)
        rows.extend((i,) + r for r in rep.csv_rows()[1:])
    out = {"outcomes": os.path.join(cfg.out, "trap_outcomes.csv")}
    io.write_csv(out["outcomes"], rows, config=cfg_d)
    out["summary"] = os.path.join(cfg.out, "summary.json")
    io.write_json(out["summary"], {
        "n": cfg.n, "H": cfg.H, "w": list(w), "found": found,
        "found_rate": found / cfg.n, "trials_with_unknown": unknown_trials,
        "delta": str(params.delta)}, config=cfg_d)
    out["manifest"] = _write_manifest(
        cfg, _manifest(cfg, seeds, {"trials_with_unknown": unknown_trials},
                       t0, _SCAN_ENV, _SCAN_U))
    return out


TrapReport_HEADER = ("w_x", "w_y", "H", "y_x", "y_y", "outcome")


def cmd_threat_scan(cfg: ExperimentConfig) -> dict:
    """Union-of-traps verdicts along the slope-v̂₊ line, per trial."""
    t0 = time.perf_counter()
    params = _renorm_params(cfg)
    w = _parse_pair(_extra(cfg, "w", default=(0, 0)), "w")
    if cfg.H is None:
        raise ConfigError("threat-scan needs H")
    cap = cfg.cap if cfg.cap is not None else 40 * cfg.H + 1000
    seeds = _trial_seeds(cfg.seed, cfg.n, _SCAN_ENV, _SCAN_U)
    cfg_d = cfg.to_dict()
    rows = [("trial", "j", "w_x", "w_y", "H", "found", "unknown")]
    threatened = 0
    for i, es, us in seeds:
        rep = threat_scan(replace(cfg.environment, seed=es), UniformField(us),
                          w, cfg.H, params.r, params.v_plus, params, cap)
        threatened += int(rep.threatened)
        rows.extend((i,) + r for r in rep.csv_rows()[1:])
    out = {"verdicts": os.path.join(cfg.out, "threat_verdicts.csv")}
    io.write_csv(out["verdicts"], rows, config=cfg_d)
    out["summary"] = os.path.join(cfg.out, "summary.json")
    io.write_json(out["summary"], {
        "n": cfg.n, "H": cfg.H, "r": params.r,
        "threatened_rate": threatened / cfg.n}, config=cfg_d)
    out["manifest"] = _write_manifest(
        cfg, _manifest(cfg, seeds, {}, t0, _SCAN_ENV, _SCAN_U))
    return out


def cmd_density(cfg: ExperimentConfig) -> dict:
    """Threatened-checkpoint densities along renormalized climbs."""
    t0 = time.perf_counter()
    params = _renorm_params(cfg)
    w = _parse_pair(_extra(cfg, "w", default=(0, 0)), "w")
    y0 = _parse_pair(_extra(cfg, "y", default=w), "y")
    h = _extra(cfg, "h", cast=int, default=4)
    k = _extra(cfg, "k", cast=int)
    k1 = _extra(cfg, "k1", cast=int, default=0)
    cap = cfg.cap if cfg.cap is not None else 0
    if cap <= 0:
        raise ConfigError("density needs an explicit positive cap")
    seeds = _trial_seeds(cfg.seed, cfg.n, _SCAN_ENV, _SCAN_U)
    cfg_d = cfg.to_dict()
    rows = [("trial", "j", "stop_x", "stop_y", "round_x", "round_y", "verdict")]
    densities = []
    for i, es, us in seeds:
        rep = threatened_density(replace(cfg.environment, seed=es),
                                 UniformField(us), y0, w, h, k, params, cap,
                                 k1=k1)
        densities.append(rep.density)
        rows.extend((i,) + r for r in rep.csv_rows()[1:])
    rho = rho_sequence(params.schedule, k1, params.schedule.depth - k1)
    out = {"checkpoints": os.path.join(cfg.out, "density_checkpoints.csv")}
    io.write_csv(out["checkpoints"], rows, config=cfg_d)
    out["summary"] = os.path.join(cfg.out, "summary.json")
    io.write_json(out["summary"], {
        "n": cfg.n, "h": h, "k": k, "k1": k1,
        "densities": [str(d) for d in densities],
        "mean_density": float(sum(densities) / len(densities)),
        "rho": [str(v) for v in rho.values],
        "rho_stays_above_half": rho.stays_above_half}, config=cfg_d)
    out["manifest"] = _write_manifest(
        cfg, _manifest(cfg, seeds, {}, t0, _SCAN_ENV, _SCAN_U))
    return out


# ---------------------------------------------------------------------------
# mixing-scan


def cmd_mixing_scan(cfg: ExperimentConfig) -> dict:
    """Single-site covariance versus vertical separation (exploratory)."""
    from .geometry import Box
    from .mixing import BoxPair, clt_width, empirical_mixing_covariance
    t0 = time.perf_counter()
    seps = tuple(int(s) for s in _extra(cfg, "seps", default=(1, 4, 9)))
    if any(s < 1 for s in seps):
        raise ConfigError(f"separations must be >= 1, got {seps}")
    width = clt_width(cfg.n)
    cfg_d = cfg.to_dict()
    rows = [("sep", "cov", "se", "clt_width")]
    for s in seps:
        pair = BoxPair(Box(0, 1, 0, 1), Box(0, 1, 1 + s, 2 + s))

        def f1(view):
            return float(view.state((0, 0)))

        def f2(view, s=s):
            return float(view.state((0, 1 + s)))

        est = empirical_mixing_covariance(cfg.environment, pair, f1, f2, cfg.n)
        rows.append((s, est.cov, est.se, width))
    out = {"curve": os.path.join(cfg.out, "mixing_curve.csv")}
    io.write_csv(out["curve"], rows, config=cfg_d)
    out["summary"] = os.path.join(cfg.out, "summary.json")
    io.write_json(out["summary"], {
        "n": cfg.n, "seps": list(seps), "clt_width": width,
        "rows": [list(r) for r in rows[1:]]}, config=cfg_d)
    out["manifest"] = _write_manifest(
        cfg, _manifest(cfg, (), {}, t0, _SCAN_ENV, _SCAN_U))
    return out


# ---------------------------------------------------------------------------
# verify


_SUITE_DEFAULTS = {
    "barrier": 10_000,
    "loops": 100_000,
    "uniforms": 100,
    "theta": 1000,
    "assumptions": 10_000,
    "mixing": 10_000,
}

VERIFY_SUITES = tuple(_SUITE_DEFAULTS)


def cmd_verify(cfg: ExperimentConfig, suite: str, *, trials: int = None,
               corrupt: bool = False) -> verify_mod.SuiteReport:
    """Run one property suite; the caller maps `passed` to the exit code."""
    if suite not in _SUITE_DEFAULTS:
        raise ConfigError(f"unknown suite {suite!r}; choose from {VERIFY_SUITES}")
    n = trials if trials is not None else _SUITE_DEFAULTS[suite]
    seed = cfg.seed
    if suite == "barrier":
        rep = verify_mod.barrier_suite(n, seed, corrupt=corrupt,
                                       workers=cfg.workers)
    elif suite == "loops":
        rep = verify_mod.loops_suite(seed, n_random=n)
    elif suite == "uniforms":
        rep = verify_mod.uniforms_suite(seed, n_walks=n)
    elif suite == "theta":
        rep = verify_mod.theta_suite(seed, n=n)
    elif suite == "assumptions":
        rep = verify_mod.assumptions_suite(seed, n=n)
    else:
        rep = verify_mod.mixing_suite(seed, n_iid=n)
    if cfg.out:
        cfg_d = cfg.to_dict()
        cfg_d["suite"] = suite
        cfg_d["trials"] = n
        cfg_d["corrupt"] = corrupt
        io.write_json(os.path.join(cfg.out, f"verify_{suite}.json"),
                      rep.to_json_dict(), config=cfg_d)
        if rep.rows:
            io.write_jsonl(os.path.join(cfg.out, f"verify_{suite}_rows.jsonl"),
                           rep.rows, config=cfg_d)
    return rep
