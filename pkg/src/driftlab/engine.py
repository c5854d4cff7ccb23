"""Engine selection and the public single-walk entry point.

Two interchangeable engines run the quenched walk: a compiled one
(``driftlab._core``, Cython/C++) and a pure-Python reference
(``driftlab._fallback``).  The compiled engine is picked at import time when
present; set ``DRIFTLAB_ENGINE=python`` or ``=compiled`` to force a choice.
Both produce bit-identical trajectories.

An environment handed to :func:`run` needs four attributes:

* ``cdf_table`` — float64 array of shape (n_states, 3), row s holding the
  cumulative probabilities (pE, pE+pW, pE+pW+pN) of kernel s;
* ``unbounded`` — True for a spatially constant environment (state 0
  everywhere, no window);
* ``window`` — (ox, oy, nx, ny) when bounded: sites with ox <= x < ox+nx and
  oy <= y < oy+ny are materialized;
* ``states`` — flat int32 array of length nx*ny, row-major in y, mapping each
  window site to its kernel row.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _fallback
from .errors import InvalidParameterError

HIT = _fallback.HIT
CENSORED = _fallback.CENSORED
WINDOW = _fallback.WINDOW
FLOOR = _fallback.FLOOR
STATUS_NAMES = {HIT: "HIT", CENSORED: "CENSORED", WINDOW: "WINDOW", FLOOR: "FLOOR"}

_RECORD_CAP_LIMIT = 20_000_000
_COORD_LIMIT = 1 << 31  # site coordinates are packed into 32 bits per axis


def _load_impl():
    choice = os.environ.get("DRIFTLAB_ENGINE", "auto").lower()
    if choice not in ("auto", "compiled", "python"):
        raise InvalidParameterError(f"DRIFTLAB_ENGINE must be auto/compiled/python, got {choice!r}")
    if choice == "python":
        return _fallback.run_walk, "python"
    try:
        from . import _core
        return _core.run_walk, "compiled"
    except ImportError:
        if choice == "compiled":
            raise
        return _fallback.run_walk, "python"


_RUN, ENGINE_KIND = _load_impl()


def engine_kind() -> str:
    """Which engine this process selected: 'compiled' or 'python'."""
    return ENGINE_KIND


@dataclass
class EngineResult:
    """Outcome of one engine run.

    ``xs``/``ys`` have length ``n_steps + 1`` and ``idxs``/``us`` length
    ``n_steps`` when recorded, else all four are None.  ``idxs[t]`` is the
    1-based uniform index consumed at time t, ``us[t]`` the uniform itself.
    """

    status: int
    n_steps: int
    final: tuple
    min_y: int
    max_abs_dx: int
    xs: object = None
    ys: object = None
    idxs: object = None
    us: object = None

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]

    @property
    def hit(self) -> bool:
        return self.status == HIT


def run(env, useed: int, start, *, counts=None, gamma=None, target_y=None,
        cap: int, floor_y=None, record: bool = True, skip_counter: bool = False,
        u_fn=None) -> EngineResult:
    """Run one quenched walk from ``start`` under environment ``env``.

    ``counts`` (mutated in place) are the departure counters N; ``gamma`` the
    inherited history.  The walk stops on reaching ``target_y`` (HIT), on
    exhausting ``cap`` (CENSORED), on trying to consume outside the window
    (WINDOW), or on arriving strictly below ``floor_y`` (FLOOR — that site is
    never read, so runs with a floor are measurable w.r.t. the band above it).
    ``u_fn(x, y, i)`` overrides the hashed uniforms (test hook; forces the
    python engine).
    """
    if cap < 0:
        raise InvalidParameterError(f"cap must be >= 0, got {cap}")
    if record and cap > _RECORD_CAP_LIMIT:
        raise InvalidParameterError(
            f"recording caps above {_RECORD_CAP_LIMIT} steps is not supported")
    x0, y0 = start
    if not (-_COORD_LIMIT <= x0 < _COORD_LIMIT and -_COORD_LIMIT <= y0 < _COORD_LIMIT):
        raise InvalidParameterError(f"start {start} outside the 32-bit site range")
    counts = {} if counts is None else counts
    gamma = {} if gamma is None else gamma

    if u_fn is not None:
        fn = _fallback.run_walk
    else:
        fn = _RUN

    cdf = env.cdf_table
    if fn is _fallback.run_walk:
        cdf_arg = [tuple(row) for row in cdf]
    else:
        cdf_arg = np.ascontiguousarray(cdf, dtype=np.float64)

    if env.unbounded:
        raw = fn(None, 0, 0, 1, 1, True, cdf_arg, useed, x0, y0,
                 counts, gamma, target_y, cap, floor_y, record, skip_counter, u_fn)
    else:
        ox, oy, nx, ny = env.window
        states = env.states
        if fn is not _fallback.run_walk:
            states = np.ascontiguousarray(states, dtype=np.int32)
        raw = fn(states, ox, oy, nx, ny, False, cdf_arg, useed, x0, y0,
                 counts, gamma, target_y, cap, floor_y, record, skip_counter, u_fn)

    status, n, fx, fy, min_y, max_adx, xs, ys, idxs, us = raw
    return EngineResult(status=status, n_steps=int(n), final=(int(fx), int(fy)),
                        min_y=int(min_y), max_abs_dx=int(max_adx),
                        xs=xs, ys=ys, idxs=idxs, us=us)
