"""Canonical serialization, config hashing, and stamped artifact files."""

import json
from fractions import Fraction

import numpy as np
import pytest

from driftlab.errors import ConfigError
from driftlab.io import (
    canonical_json,
    config_hash,
    load_config,
    read_csv,
    write_csv,
    write_json,
    write_jsonl,
)


def test_canonical_json_is_sorted_and_compact():
    assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'
    assert canonical_json([1, 2.5, "x", None, True]) == '[1,2.5,"x",null,true]'


def test_canonical_json_extended_types():
    assert canonical_json(Fraction(-3, 7)) == '"-3/7"'
    assert canonical_json(np.int64(5)) == "5"
    assert canonical_json(np.float64(0.25)) == "0.25"
    assert canonical_json(np.array([1, 2])) == "[1,2]"
    assert canonical_json({3, 1, 2}) == "[1,2,3]"
    with pytest.raises(TypeError):
        canonical_json(object())


def test_config_hash_is_stable_and_short():
    cfg = {"seed": 1, "H_list": [4, 8], "theta": Fraction(1, 20)}
    h = config_hash(cfg)
    assert h == config_hash(dict(reversed(list(cfg.items()))))
    assert len(h) == 16
    assert all(c in "0123456789abcdef" for c in h)
    assert h != config_hash({**cfg, "seed": 2})


def test_write_read_csv_round_trip(tmp_path):
    path = str(tmp_path / "curve.csv")
    cfg = {"seed": 9}
    rows = [("H", "v", "p_hat"), (4, Fraction(-1, 2), 0.75), (8, 0, 0.5)]
    write_csv(path, rows, config=cfg)
    header, body, meta = read_csv(path)
    assert header == ["H", "v", "p_hat"]
    assert body == [("4", "-1/2", "0.75"), ("8", "0", "0.5")]
    assert meta == {"config_hash": config_hash(cfg)}


def test_read_csv_without_stamp(tmp_path):
    path = str(tmp_path / "plain.csv")
    write_csv(path, [("a", "b"), (1, 2)])
    header, body, meta = read_csv(path)
    assert header == ["a", "b"]
    assert body == [("1", "2")]
    assert meta == {}


def test_write_jsonl_meta_first(tmp_path):
    path = str(tmp_path / "rows.jsonl")
    cfg = {"seed": 9}
    write_jsonl(path, [{"i": 0, "w": Fraction(1, 3)}, {"i": 1}], config=cfg)
    lines = [json.loads(s) for s in open(path, encoding="utf-8")]
    assert lines[0] == {"meta": True, "config_hash": config_hash(cfg)}
    assert lines[1] == {"i": 0, "w": "1/3"}
    assert lines[2] == {"i": 1}


def test_write_json_stamps_hash(tmp_path):
    path = str(tmp_path / "summary.json")
    write_json(path, {"v_plus": Fraction(1, 2)}, config={"seed": 9})
    payload = json.loads(open(path, encoding="utf-8").read())
    assert payload == {"v_plus": "1/2", "config_hash": config_hash({"seed": 9})}
    write_json(path, {"n": 3})
    assert json.loads(open(path, encoding="utf-8").read()) == {"n": 3}


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(str(arr))
    good = tmp_path / "good.json"
    good.write_text('{"seed": 3}')
    assert load_config(str(good)) == {"seed": 3}
