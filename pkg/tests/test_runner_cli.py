"""Experiment runner and CLI: configs, artifacts, replay, exit codes."""

import json
import os
from fractions import Fraction

import pytest

from driftlab import simulate_hit
from driftlab.cli import main
from driftlab.environments import spec_from_config
from driftlab.errors import ConfigError
from driftlab.io import config_hash, read_csv
from driftlab.runner import ExperimentConfig, cmd_simulate

NORTH_ENV = {"family": "constant", "kernels": [[0.0, 0.0, 1.0, 0.0]]}
DRIFT_ENV = {"family": "constant", "kernels": [[0.1, 0.1, 0.7, 0.1]]}
IID_ENV = {"family": "iid_site",
           "kernels": [[0.2, 0.2, 0.4, 0.2], [0.1, 0.1, 0.7, 0.1]],
           "params": {"weights": [0.4, 0.6]}}


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


# -- ExperimentConfig --------------------------------------------------------------


def test_from_dict_requires_environment():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"seed": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"environment": {"family": "nope"}})


def test_from_dict_validation():
    base = {"environment": NORTH_ENV}
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "workers": 0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "n": 0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "mode": "corner"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "start": [1, 2, 3]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "v_grid": ["1/0"]})


def test_v_grid_forms():
    base = {"environment": NORTH_ENV}
    assert ExperimentConfig.from_dict(base).v_grid is None
    listed = ExperimentConfig.from_dict({**base, "v_grid": ["-1/2", 0, "1/2"]})
    assert listed.v_grid == (Fraction(-1, 2), Fraction(0), Fraction(1, 2))
    stepped = ExperimentConfig.from_dict(
        {**base, "v_grid": {"lo": -1, "hi": 1, "step": "1/2"}})
    assert stepped.v_grid == (Fraction(-1), Fraction(-1, 2), Fraction(0),
                              Fraction(1, 2), Fraction(1))


def test_overrides_and_extra_keys():
    raw = {"environment": NORTH_ENV, "seed": 7, "out": "a", "v_plus": "1/2"}
    cfg = ExperimentConfig.from_dict(raw, {"seed": None, "out": "b",
                                           "cap": None})
    assert cfg.seed == 7          # None overrides are ignored
    assert cfg.out == "b"
    assert cfg.extra == {"v_plus": "1/2"}
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


# -- simulate -----------------------------------------------------------------------


def _north_cfg(out, **kw):
    raw = {"environment": NORTH_ENV, "seed": 5, "n": 1, "H": 5, "out": out}
    raw.update(kw)
    return ExperimentConfig.from_dict(raw)


def test_simulate_straight_walk_artifacts(tmp_path):
    out = str(tmp_path / "run")
    written = cmd_simulate(_north_cfg(out))
    assert set(written) == {"paths", "walks", "summary", "manifest"}

    lines = [json.loads(s) for s in open(written["paths"], encoding="utf-8")]
    assert lines[0]["meta"] is True
    body = lines[1:]
    assert [(r["x"], r["y"]) for r in body] == [(0, y) for y in range(6)]
    assert [r["i"] for r in body] == [1, 1, 1, 1, 1, None]
    assert {r["walk"] for r in body} == {0}

    header, rows, meta = read_csv(written["walks"])
    assert header == ["walk", "env_seed", "u_seed", "status", "n_steps",
                      "final_x", "final_y", "min_y", "max_abs_dx"]
    assert len(rows) == 1
    assert rows[0][3] == "HIT" and rows[0][4] == "5"
    assert meta["config_hash"] == config_hash(_north_cfg(out).to_dict())

    summary = json.load(open(written["summary"], encoding="utf-8"))
    assert summary["n_hit"] == 1 and summary["n_censored"] == 0
    assert summary["target_y"] == 5


def test_simulate_reruns_byte_identical(tmp_path):
    out = str(tmp_path / "run")
    first = cmd_simulate(_north_cfg(out, n=3))
    blobs = {k: open(p, "rb").read() for k, p in first.items()
             if k != "manifest"}
    second = cmd_simulate(_north_cfg(out, n=3))
    for k, p in second.items():
        if k != "manifest":
            assert open(p, "rb").read() == blobs[k]


def test_simulate_worker_count_changes_nothing_but_the_stamp(tmp_path):
    runs = {}
    for workers in (1, 2):
        out = str(tmp_path / f"w{workers}")
        cfg = ExperimentConfig.from_dict(
            {"environment": IID_ENV, "seed": 3, "n": 6, "H": 12, "out": out,
             "workers": workers})
        written = cmd_simulate(cfg)
        runs[workers] = {
            "paths": open(written["paths"], encoding="utf-8").read().splitlines()[1:],
            "walks": open(written["walks"], encoding="utf-8").read().splitlines()[1:],
        }
    assert runs[1] == runs[2]


def test_simulate_record_false_drops_paths(tmp_path):
    written = cmd_simulate(_north_cfg(str(tmp_path / "r"), record=False))
    assert "paths" not in written
    assert os.path.exists(written["walks"])


def test_manifest_replays_a_trial(tmp_path):
    out = str(tmp_path / "run")
    written = cmd_simulate(ExperimentConfig.from_dict(
        {"environment": IID_ENV, "seed": 11, "n": 4, "H": 9, "out": out,
         "cap": 500}))
    man = json.load(open(written["manifest"], encoding="utf-8"))
    assert man["config_hash"] == config_hash(man["config"])
    assert "derive_seed(seed, index, 30)" in man["seed_rule"]

    _, rows, _ = read_csv(written["walks"])
    idx, env_seed, u_seed = man["trial_seeds"][2]
    spec = spec_from_config(man["config"]["environment"])
    from dataclasses import replace
    res = simulate_hit(replace(spec, seed=env_seed), u_seed, (0, 0), 9, 500)
    row = rows[idx]
    assert row[:3] == (str(idx), str(env_seed), str(u_seed))
    assert (row[3], int(row[4])) == (res.status_name, res.n_steps)
    assert (int(row[5]), int(row[6])) == res.final


# -- CLI ----------------------------------------------------------------------------


def test_cli_estimate_direction(tmp_path, capsys):
    out = str(tmp_path / "dir")
    cfg_path = _write_config(tmp_path, {
        "environment": NORTH_ENV, "seed": 1, "n": 40, "H_list": [4, 8],
        "theta": "1/20", "mode": "origin",
        "v_grid": ["-1", "-1/2", "0", "1/2", "1"], "out": out})
    assert main(["estimate-direction", "--config", cfg_path]) == 0
    capsys.readouterr()

    summary = json.load(open(os.path.join(out, "summary.json"),
                             encoding="utf-8"))
    assert summary["v_minus"] == "-1/2" and summary["v_plus"] == "1/2"
    assert summary["direction_mean"] == 0.0
    assert summary["censor_rate_max"] == 0.0
    assert [c[0] for c in summary["crossings"]] == [4, 8]

    header, rows, meta = read_csv(os.path.join(out, "direction_curve.csv"))
    assert header == ["H", "v", "p_hat", "ci_lo", "ci_hi", "n", "n_certified"]
    assert len(rows) == 10  # 5 grid points per H
    assert "config_hash" in meta


def test_cli_estimate_direction_needs_heights(tmp_path):
    cfg_path = _write_config(tmp_path, {"environment": NORTH_ENV, "n": 30})
    assert main(["estimate-direction", "--config", cfg_path,
                 "--out", str(tmp_path / "x")]) == 2


def test_cli_bad_config_path(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


def test_cli_out_parent_is_a_file(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    cfg_path = _write_config(tmp_path, {"environment": NORTH_ENV, "n": 1,
                                        "H": 3})
    rc = main(["simulate", "--config", cfg_path,
               "--out", str(blocker / "sub")])
    assert rc == 1


def test_cli_verify_suite(tmp_path, capsys):
    out = str(tmp_path / "v")
    rc = main(["verify", "uniforms", "--trials", "5", "--seed", "5",
               "--out", out])
    assert rc == 0
    assert "PASS" in capsys.readouterr().out
    rep = json.load(open(os.path.join(out, "verify_uniforms.json"),
                         encoding="utf-8"))
    assert rep["name"] == "uniforms" and rep["passed"] is True
    assert rep["summary"]["n_walks"] == 5


def test_cli_trap_and_threat_scan(tmp_path, capsys):
    out_t = str(tmp_path / "trap")
    cfg_path = _write_config(tmp_path, {
        "environment": NORTH_ENV, "seed": 2, "n": 2, "H": 16,
        "v_plus": "1/2", "delta": "1/4", "out": out_t})
    assert main(["trap-scan", "--config", cfg_path]) == 0
    summary = json.load(open(os.path.join(out_t, "summary.json"),
                             encoding="utf-8"))
    assert summary["found"] == 2 and summary["found_rate"] == 1.0
    assert summary["delta"] == "1/4"
    header, rows, meta = read_csv(os.path.join(out_t, "trap_outcomes.csv"))
    assert header == ["trial", "w_x", "w_y", "H", "y_x", "y_y", "outcome"]
    assert {r[0] for r in rows} == {"0", "1"}
    assert "config_hash" in meta

    out_h = str(tmp_path / "threat")
    assert main(["threat-scan", "--config", cfg_path, "--out", out_h]) == 0
    summary = json.load(open(os.path.join(out_h, "summary.json"),
                             encoding="utf-8"))
    assert summary["threatened_rate"] == 1.0 and summary["r"] == 2
    header, _, _ = read_csv(os.path.join(out_h, "threat_verdicts.csv"))
    assert header == ["trial", "j", "w_x", "w_y", "H", "found", "unknown"]
    capsys.readouterr()


def test_cli_density(tmp_path, capsys):
    out = str(tmp_path / "dens")
    raw = {"environment": NORTH_ENV, "seed": 2, "n": 1, "h": 1, "k": 3,
           "k1": 0, "L0": 16, "depth": 3, "v_plus": "1/2", "delta": "1/4",
           "out": out}
    cfg_path = _write_config(tmp_path, raw)
    assert main(["density", "--config", cfg_path]) == 2  # cap is mandatory
    assert main(["density", "--config", cfg_path, "--cap", "2000"]) == 0
    summary = json.load(open(os.path.join(out, "summary.json"),
                             encoding="utf-8"))
    assert summary["densities"] == ["1"]  # north drift: every checkpoint threatened
    assert summary["rho"][0] == "1"
    header, rows, _ = read_csv(os.path.join(out, "density_checkpoints.csv"))
    assert header == ["trial", "j", "stop_x", "stop_y", "round_x", "round_y",
                      "verdict"]
    assert len(rows) == 4  # L_3 / L_1 checkpoints
    capsys.readouterr()


def test_cli_mixing_scan(tmp_path, capsys):
    out = str(tmp_path / "mix")
    cfg_path = _write_config(tmp_path, {
        "environment": IID_ENV, "seed": 6, "n": 100, "seps": [1, 3],
        "out": out})
    assert main(["mixing-scan", "--config", cfg_path]) == 0
    header, rows, _ = read_csv(os.path.join(out, "mixing_curve.csv"))
    assert header == ["sep", "cov", "se", "clt_width"]
    assert [r[0] for r in rows] == ["1", "3"]
    summary = json.load(open(os.path.join(out, "summary.json"),
                             encoding="utf-8"))
    assert summary["clt_width"] == pytest.approx(0.4)
    capsys.readouterr()
