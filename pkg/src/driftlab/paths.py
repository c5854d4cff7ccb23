"""Deterministic path combinatorics: loop decomposition and the barrier
scenario classifier.

Everything here is pure lattice-path bookkeeping — no randomness, no
environment.  The loop recursion repeatedly finds the first self-intersection
of the path restricted to the surviving index set, removes the loop's
indices, and recurses; the classifier reports which of the three coupling
scenarios a pair of recorded walks realized.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidConfigurationError, InvalidStateError

S1 = "S1_left_walk_passes_below"
S2 = "S2_right_walk_passes_below"
S3 = "S3_order_preserved"
VIOLATION = "VIOLATION"


def _check_path(sites):
    if not sites:
        raise InvalidStateError("empty path")
    for t in range(len(sites) - 1):
        (x, y), (nx, ny) = sites[t], sites[t + 1]
        if abs(nx - x) + abs(ny - y) != 1:
            raise InvalidStateError(f"non-adjacent step at t={t}")


@dataclass(frozen=True)
class Loop:
    """One extracted loop, in original-path indexing.

    ``indices`` are the removed steps (entry T_in up to but excluding exit
    T_out, intersected with the surviving set); ``sites`` the loop's sites
    including the shared entry/exit site once.
    """

    t_in: int
    t_out: int
    indices: frozenset
    sites: frozenset


@dataclass(frozen=True)
class LoopDecomposition:
    loops: tuple
    residual: tuple  # surviving original-path indices, increasing

    @property
    def n_loops(self) -> int:
        return len(self.loops)


def loop_decompose(sites) -> LoopDecomposition:
    """Extract loops until the restricted path is self-avoiding.

    Conceptually each round works on the path restricted to the surviving
    index set P: the exit T_out is the first index (in P-order) whose site
    already appeared at an earlier surviving index, T_in that earlier first
    occurrence, and the removed indices are [T_in, T_out) ∩ P.  Because the
    indices before T_in are untouched by a removal, the rounds collapse into
    one forward pass with a stack: on revisiting a stacked site, pop the
    stack back to its first occurrence — that popped segment is exactly the
    round's loop.  Reported indices are original-path indices.
    """
    sites = list(sites)
    _check_path(sites)
    stack = []  # surviving indices so far
    depth = {}  # site -> position in stack
    loops = []
    for t, s in enumerate(sites):
        pos = depth.get(s)
        if pos is not None:
            removed = stack[pos:]
            for r in removed:
                del depth[sites[r]]
            del stack[pos:]
            loop_sites = frozenset(sites[r] for r in removed) | {s}
            loops.append(Loop(t_in=removed[0], t_out=t,
                              indices=frozenset(removed), sites=loop_sites))
        depth[s] = len(stack)
        stack.append(t)
    return LoopDecomposition(loops=tuple(loops), residual=tuple(stack))


def loop_erased(sites):
    """The residual path itself (sites in surviving order)."""
    dec = loop_decompose(sites)
    sites = list(sites)
    return [sites[t] for t in dec.residual]


# ---------------------------------------------------------------------------
# Barrier scenario classifier.


@dataclass(frozen=True)
class BarrierVerdict:
    scenario: str
    witness: object

    @property
    def ok(self) -> bool:
        return self.scenario != VIOLATION


def _tau_to_height(sites, target_y: int, label: str) -> int:
    for t, (_, y) in enumerate(sites):
        if y >= target_y:
            return t
    raise InvalidConfigurationError(
        f"{label} path never reaches height {target_y} (censored input?)")


def classify_barrier(path_left, path_right, H: int, *, gamma=None) -> BarrierVerdict:
    """Classify a coupled pair of recorded walks at common target height.

    ``path_left``/``path_right`` are PathRecord-like objects (need ``sites``).
    The left walk must start strictly left of the right walk, H must put the
    target strictly above the right start, and the left walk's history must
    not touch the right path (checked when ``gamma`` is given).  Scenario
    precedence is S1, then S2, then S3; VIOLATION (impossible under a correct
    coupling) carries the final positions as witness.
    """
    lsites = list(path_left.sites)
    rsites = list(path_right.sites)
    x0 = lsites[0]
    x0p = rsites[0]
    if not x0[0] < x0p[0]:
        raise InvalidConfigurationError(
            f"left start {x0} must lie strictly left of right start {x0p}")
    if not H > x0p[1] - x0[1]:
        raise InvalidConfigurationError(
            f"H={H} does not clear the right start offset {x0p[1] - x0[1]}")
    target = x0[1] + H
    tau_l = _tau_to_height(lsites, target, "left")
    tau_r = _tau_to_height(rsites, target, "right")
    if gamma is not None:
        rset = set(rsites)
        overlap = [site for site, _ in gamma.items() if site in rset]
        if overlap:
            raise InvalidConfigurationError(
                f"history support touches the right path at {overlap[:3]}")

    for t in range(tau_l + 1):
        x, y = lsites[t]
        if x == x0p[0] and y < x0p[1]:
            return BarrierVerdict(S1, witness=t)
    for t in range(tau_r + 1):
        x, y = rsites[t]
        if x == x0[0] and y < x0[1]:
            return BarrierVerdict(S2, witness=t)
    if lsites[tau_l][0] <= rsites[tau_r][0]:
        return BarrierVerdict(S3, witness=(lsites[tau_l], rsites[tau_r]))
    return BarrierVerdict(VIOLATION, witness=(lsites[tau_l], rsites[tau_r]))
