"""Engine contract: stop statuses, counter law, recording, engine parity."""

import hashlib
import os
import subprocess
import sys

import numpy as np
import pytest

from driftlab import (
    FLOOR,
    HIT,
    STATUS_CENSORED,
    TransitionKernel,
    Window,
    WINDOW,
    constant_spec,
    engine_kind,
    iid_spec,
    materialize,
    uniform,
)
from driftlab.engine import run
from driftlab import _fallback
from driftlab.errors import InvalidParameterError
from driftlab.kernels import NORTH
from driftlab.randomness import TAG_UNIFORM

from conftest import DRIFT

SOUTH_ONLY = TransitionKernel(0.0, 0.0, 0.0, 1.0)
EW = TransitionKernel(0.5, 0.5, 0.0, 0.0)


def _north_field():
    return materialize(constant_spec(NORTH, 0))


def test_deterministic_north_hits_target():
    res = run(_north_field(), 1, (0, 0), target_y=7, cap=100)
    assert res.status == HIT and res.hit
    assert res.n_steps == 7
    assert res.final == (0, 7)
    assert res.min_y == 0 and res.max_abs_dx == 0
    assert list(res.ys) == list(range(8))
    assert list(res.xs) == [0] * 8
    assert list(res.idxs) == [1] * 7  # every site visited once


def test_censored_when_cap_exhausted():
    res = run(_north_field(), 1, (0, 0), target_y=50, cap=10)
    assert res.status == STATUS_CENSORED
    assert res.n_steps == 10
    assert res.final == (0, 10)


def test_start_at_target_is_immediate_hit():
    res = run(_north_field(), 1, (3, 9), target_y=9, cap=5)
    assert res.status == HIT and res.n_steps == 0 and res.final == (3, 9)


def test_start_below_floor_is_immediate_floor():
    res = run(_north_field(), 1, (0, -4), target_y=10, cap=5, floor_y=0)
    assert res.status == FLOOR and res.n_steps == 0 and res.final == (0, -4)


def test_target_checked_before_floor_at_start():
    res = run(_north_field(), 1, (0, -5), target_y=-5, cap=5, floor_y=0)
    assert res.status == HIT and res.n_steps == 0


def test_floor_site_is_never_read():
    field = materialize(constant_spec(SOUTH_ONLY, 0))

    def u_fn(x, y, i):
        if y < 0:
            raise AssertionError(f"consumed a uniform below the floor at {(x, y)}")
        return 0.5

    res = run(field, 1, (0, 0), target_y=5, cap=100, floor_y=0, u_fn=u_fn)
    assert res.status == FLOOR
    assert res.n_steps == 1
    assert res.final == (0, -1)  # arrival recorded, never consulted


def test_window_exit_reported_with_the_offending_site():
    spec = iid_spec([NORTH], [1.0], seed=3)
    field = materialize(spec, Window(0, 0, 5, 5))
    res = run(field, 1, (2, 2), target_y=10, cap=100)
    assert res.status == WINDOW
    assert res.final == (2, 5)  # first site outside the window
    assert res.n_steps == 3


def test_counter_law_total_departures_equals_steps():
    counts = {}
    res = run(materialize(constant_spec(DRIFT, 0)), 7, (0, 0),
              counts=counts, target_y=40, cap=5000)
    assert res.status == HIT
    assert sum(counts.values()) == res.n_steps
    assert all(v >= 1 for v in counts.values())


def test_recorded_uniforms_match_the_hash():
    useed = 99
    res = run(materialize(constant_spec(DRIFT, 0)), useed, (2, -1),
              target_y=20, cap=5000)
    assert res.status == HIT
    for t in range(res.n_steps):
        x, y, i = int(res.xs[t]), int(res.ys[t]), int(res.idxs[t])
        assert res.us[t] == uniform(useed, TAG_UNIFORM, x, y, i)
    # per-site indices are 1,2,3,... in visit order
    seen = {}
    for t in range(res.n_steps):
        site = (int(res.xs[t]), int(res.ys[t]))
        seen[site] = seen.get(site, 0) + 1
        assert int(res.idxs[t]) == seen[site]


def test_gamma_shifts_the_first_index():
    res = run(_north_field(), 5, (0, 0), gamma={(0, 0): 4}, target_y=1, cap=10)
    assert res.status == HIT
    assert list(res.idxs) == [5]  # N + Γ + 1 with N=0, Γ=4


def _ew_indices(skip_counter):
    calls = []

    def u_fn(x, y, i):
        calls.append(((x, y), i))
        return 0.0 if len(calls) % 2 == 1 else 0.6  # E, W, E, W, ...

    run(materialize(constant_spec(EW, 0)), 1, (0, 0), target_y=99, cap=4,
        skip_counter=skip_counter, u_fn=u_fn)
    return [i for site, i in calls if site == (0, 0)]


def test_skip_counter_advances_by_two():
    assert _ew_indices(skip_counter=False) == [1, 2]
    assert _ew_indices(skip_counter=True) == [1, 3]


def test_u_fn_zero_walks_east_forever():
    flat = TransitionKernel(0.25, 0.25, 0.25, 0.25)
    res = run(materialize(constant_spec(flat, 0)), 1, (0, 0),
              target_y=5, cap=12, u_fn=lambda x, y, i: 0.0)
    assert res.status == STATUS_CENSORED
    assert res.final == (12, 0)
    assert res.max_abs_dx == 12


def test_record_false_drops_arrays():
    res = run(_north_field(), 1, (0, 0), target_y=4, cap=10, record=False)
    assert res.status == HIT and res.n_steps == 4
    assert res.xs is None and res.us is None


def test_parameter_validation():
    field = _north_field()
    with pytest.raises(InvalidParameterError):
        run(field, 1, (0, 0), target_y=5, cap=-1)
    with pytest.raises(InvalidParameterError):
        run(field, 1, (0, 0), target_y=5, cap=30_000_000, record=True)
    with pytest.raises(InvalidParameterError):
        run(field, 1, (2**31, 0), target_y=5, cap=10)
    # huge caps are fine when not recording
    res = run(field, 1, (0, 0), target_y=3, cap=30_000_000, record=False)
    assert res.status == HIT


def _raw_args(field, useed, start, target_y, cap):
    """Arguments for calling the engine modules directly, python flavour."""
    cdf = [tuple(row) for row in field.cdf_table]
    return (None, 0, 0, 1, 1, True, cdf, useed, start[0], start[1],
            {}, {}, target_y, cap, None, True, False, None)


def test_compiled_and_python_engines_agree_exactly():
    try:
        from driftlab import _core
    except ImportError:
        pytest.skip("compiled engine not built")
    field = materialize(constant_spec(DRIFT, 0))
    for useed in (1, 2, 3, 17):
        py = _fallback.run_walk(*_raw_args(field, useed, (0, 0), 60, 20_000))
        args = list(_raw_args(field, useed, (0, 0), 60, 20_000))
        args[6] = np.ascontiguousarray(field.cdf_table, dtype=np.float64)
        co = _core.run_walk(*args)
        assert py[:6] == tuple(co[:6])
        assert list(py[6]) == list(co[6]) and list(py[7]) == list(co[7])
        assert list(py[8]) == list(co[8])
        assert all(a == b for a, b in zip(py[9], co[9]))  # uniforms bit-equal


_SUBPROCESS_SNIPPET = """
import hashlib, sys
from driftlab import constant_spec, materialize, engine_kind
from driftlab.engine import run
from conftest import DRIFT
res = run(materialize(constant_spec(DRIFT, 0)), 42, (0, 0), target_y=80, cap=50000)
h = hashlib.sha256()
h.update(bytes(str((res.status, res.n_steps, res.final, res.min_y, res.max_abs_dx)), 'ascii'))
h.update(bytes(str(list(res.xs) + list(res.ys) + list(res.idxs)), 'ascii'))
print(engine_kind(), h.hexdigest())
"""


def test_engine_choice_env_var_yields_identical_walks():
    env = dict(os.environ, DRIFTLAB_ENGINE="python",
               PYTHONPATH=os.path.dirname(__file__))
    out = subprocess.run([sys.executable, "-c", _SUBPROCESS_SNIPPET],
                         capture_output=True, text=True, env=env,
                         cwd=os.path.dirname(__file__), check=True)
    kind, digest = out.stdout.split()
    assert kind == "python"

    res = run(materialize(constant_spec(DRIFT, 0)), 42, (0, 0),
              target_y=80, cap=50000)
    h = hashlib.sha256()
    h.update(bytes(str((res.status, res.n_steps, res.final, res.min_y,
                        res.max_abs_dx)), "ascii"))
    h.update(bytes(str(list(res.xs) + list(res.ys) + list(res.idxs)), "ascii"))
    assert h.hexdigest() == digest


def test_engine_choice_rejects_unknown_value():
    env = dict(os.environ, DRIFTLAB_ENGINE="hardware")
    out = subprocess.run([sys.executable, "-c", "import driftlab"],
                         capture_output=True, text=True, env=env)
    assert out.returncode != 0
    assert "DRIFTLAB_ENGINE" in out.stderr


def test_engine_kind_reports_a_known_engine():
    assert engine_kind() in ("compiled", "python")
