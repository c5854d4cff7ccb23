"""Coupled walks over a shared uniform field: steps, hitting times, shifts.

A walk owns its position, its departure counters N, and an inherited history
Γ.  The uniform consumed when departing site x is U(x, N(x) + Γ(x) + 1); the
counter then advances.  Two walks over the same (environment, uniform-field)
seeds therefore read identical uniforms whenever they agree on (site,
effective index) — that shared randomness is the coupling everything else is
built on.

CENSORED (step cap exhausted) and UNCERTIFIED (no cut line certifiable within
the record) are ordinary return values, not errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from . import engine
from .environments import EnvironmentField, kernel_of
from .errors import InvalidParameterError, InvalidStateError, WindowExceededError
from .kernels import jump
from .randomness import UniformField


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name


CENSORED = _Sentinel("CENSORED")
UNCERTIFIED = _Sentinel("UNCERTIFIED")


# ---------------------------------------------------------------------------
# History and walk state.


class History:
    """Sparse site → count map Γ (absent sites mean 0; counts >= 0)."""

    __slots__ = ("_counts",)

    def __init__(self, counts=None):
        self._counts = {}
        if counts:
            for site, c in dict(counts).items():
                if c < 0:
                    raise InvalidParameterError(f"history count at {site} is negative")
                if c > 0:
                    self._counts[site] = int(c)

    def count(self, site) -> int:
        return self._counts.get(site, 0)

    def added(self, other) -> "History":
        """Pointwise sum with another sparse map (History or dict)."""
        merged = dict(self._counts)
        items = other.items() if isinstance(other, (dict,)) else other._counts.items()
        for site, c in items:
            merged[site] = merged.get(site, 0) + c
        return History(merged)

    def items(self):
        return self._counts.items()

    def as_dict(self) -> dict:
        return dict(self._counts)

    @property
    def support_size(self) -> int:
        return len(self._counts)

    def __eq__(self, other):
        return isinstance(other, History) and self._counts == other._counts

    def __repr__(self):
        return f"History({self._counts!r})"


@dataclass
class Walk:
    """Mutable walk state (single-owner; run helpers mutate in place)."""

    start: tuple
    history: History = dc_field(default_factory=History)
    position: tuple = None
    counter: dict = dc_field(default_factory=dict)
    n_steps: int = 0
    last_status: object = None

    def __post_init__(self):
        if self.position is None:
            self.position = self.start

    @property
    def total_departures(self) -> int:
        return sum(self.counter.values())


# ---------------------------------------------------------------------------
# Path records.


@dataclass
class PathRecord:
    """Recorded trajectory: sites Z_0..Z_n plus per-step consumption log.

    ``consumed[t]`` is ((x, y), i): the site departed at step t and the
    1-based uniform index read there.  ``us`` keeps the uniforms themselves
    for coupling cross-checks.
    """

    sites: list
    consumed: list
    us: list = None

    @classmethod
    def from_engine(cls, res: engine.EngineResult) -> "PathRecord":
        if res.xs is None:
            raise InvalidStateError("engine run was not recorded")
        sites = list(zip(res.xs.tolist(), res.ys.tolist()))
        idxs = res.idxs.tolist()
        consumed = [(sites[t], idxs[t]) for t in range(len(idxs))]
        return cls(sites=sites, consumed=consumed, us=res.us.tolist())

    @property
    def n_steps(self) -> int:
        return len(self.sites) - 1

    def heights(self) -> list:
        y0 = self.sites[0][1]
        return [y - y0 for _, y in self.sites]

    def validate(self) -> None:
        """Invariant check: unit steps; per-site indices strictly increasing."""
        last_index = {}
        for t, ((x, y), i) in enumerate(self.consumed):
            nx, ny = self.sites[t + 1]
            if abs(nx - x) + abs(ny - y) != 1:
                raise InvalidStateError(f"non-unit step at t={t}")
            if i <= last_index.get((x, y), 0):
                raise InvalidStateError(f"non-increasing uniform index at {(x, y)}")
            last_index[(x, y)] = i

    def to_jsonl(self, path) -> None:
        """One step per line: n, x, y, consumed index (final line: i null)."""
        with open(path, "w") as fh:
            for t, (x, y) in enumerate(self.sites):
                i = self.consumed[t][1] if t < len(self.consumed) else None
                fh.write(json.dumps({"n": t, "x": x, "y": y, "i": i}) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "PathRecord":
        sites = []
        idxs = []
        with open(path) as fh:
            for line in fh:
                row = json.loads(line)
                sites.append((row["x"], row["y"]))
                if row["i"] is not None:
                    idxs.append(row["i"])
        consumed = [(sites[t], idxs[t]) for t in range(len(idxs))]
        return cls(sites=sites, consumed=consumed)


# ---------------------------------------------------------------------------
# Single-step evolution (reference semantics; the engine mirrors this).


def step(walk: Walk, env: EnvironmentField, U: UniformField) -> Walk:
    """Advance the walk one step in place (returned for chaining).

    Consumes U(Z, N(Z) + Γ(Z) + 1) at the current position, then advances the
    counter there and moves by the jump rule.
    """
    z = walk.position
    kernel = kernel_of(env, z)  # raises outside the window
    c = walk.counter.get(z, 0)
    i = c + walk.history.count(z) + 1
    u = U.value(z, i)
    walk.counter[z] = c + 1
    dx, dy = jump(kernel, u)
    walk.position = (z[0] + dx, z[1] + dy)
    walk.n_steps += 1
    return walk


def run_until_height(walk: Walk, H: int, w, cap: int, *, env: EnvironmentField,
                     U: UniformField, record: bool = True):
    """Run until the walk's height reaches π₂(w) + H, or cap steps.

    Returns (τ, PathRecord) where τ counts the steps taken by this call
    (0 when already at or above the target, per the hitting-time convention)
    or CENSORED with the partial path.  The walk is advanced in place.
    """
    if H < 0:
        raise InvalidParameterError(f"H must be >= 0, got {H}")
    if cap < 1:
        raise InvalidParameterError(f"cap must be >= 1, got {cap}")
    target = w[1] + H
    res = engine.run(env, U.seed, walk.position, counts=walk.counter,
                     gamma=walk.history.as_dict(), target_y=target, cap=cap,
                     record=record)
    walk.position = res.final
    walk.n_steps += res.n_steps
    if res.status == engine.WINDOW:
        walk.last_status = engine.WINDOW
        raise WindowExceededError(res.final, env.window)
    record_obj = PathRecord.from_engine(res) if record else None
    if res.status == engine.HIT:
        walk.last_status = engine.HIT
        return res.n_steps, record_obj
    walk.last_status = CENSORED
    return CENSORED, record_obj


def theta_shift(walk: Walk) -> Walk:
    """The shifted walk: start at the current position, history Γ + N, fresh
    counter.  Running it reproduces the original walk's future exactly."""
    if walk.last_status is CENSORED:
        raise InvalidStateError("cannot shift a censored walk")
    return Walk(start=walk.position,
                history=walk.history.added(walk.counter))


# ---------------------------------------------------------------------------
# Path functionals.


def _relative_heights(path: PathRecord):
    return path.heights()


def cut_line_estimate(path: PathRecord, margin: int):
    """Within-record cut-line estimate.

    Returns (Ξ̂, T̂): the smallest relative level a >= 0 such that after its
    first hit the path never goes strictly below a and the final height is at
    least a + margin; T̂ is that first hitting step.  (UNCERTIFIED, None) when
    no level qualifies — certification needs the unseen future, so the margin
    is the knob trading record length for false-certification risk.
    """
    if margin < 0:
        raise InvalidParameterError(f"margin must be >= 0, got {margin}")
    r = _relative_heights(path)
    n = len(r) - 1
    final = r[-1]
    # suffix minima: suf[t] = min_{s >= t} r[s]
    suf = list(r)
    for t in range(n - 1, -1, -1):
        if suf[t + 1] < suf[t]:
            suf[t] = suf[t + 1]
    first_hit = {}
    for t, level in enumerate(r):
        if level not in first_hit:
            first_hit[level] = t
    a = 0
    while a + margin <= final:
        t = first_hit.get(a)
        if t is not None and suf[t] >= a:
            return a, t
        a += 1
    return UNCERTIFIED, None


def event_E(path: PathRecord, H) -> bool:
    """True iff the walk never went more than H below its start height."""
    if H < 0:
        raise InvalidParameterError(f"H must be >= 0, got {H}")
    return min(_relative_heights(path)) >= -H


def _first_hit_step(path: PathRecord, target_rel: int):
    for t, level in enumerate(_relative_heights(path)):
        if level >= target_rel:
            return t
    raise InvalidStateError(
        f"path never reaches relative height {target_rel} (censored?)")


def event_D(path: PathRecord, H, beta) -> bool:
    """True iff |ΔX| stayed within βH up to the hitting time of height H."""
    tau = _first_hit_step(path, H)
    x0 = path.sites[0][0]
    max_adx = max(abs(x - x0) for x, _ in path.sites[:tau + 1])
    return Fraction(max_adx) <= Fraction(beta) * H


def direction_V(path: PathRecord, H, w) -> Fraction:
    """Exact direction (X_τ − X_0)/H at the hitting time of π₂(w) + H."""
    if H <= 0:
        raise InvalidParameterError(f"H must be positive, got {H}")
    target_rel = w[1] + H - path.sites[0][1]
    tau = _first_hit_step(path, target_rel)
    return Fraction(path.sites[tau][0] - path.sites[0][0], H)
