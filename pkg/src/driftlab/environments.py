"""Seeded random environments on Z^2.

Every family derives all of its randomness from a counter-based keyed hash of
(seed, role-tag, coordinates), so fields are pure: the state of a site is a
function of (spec, seed, site) alone, independent of the window it was
materialized through, of query order, and of thread count.  Materializing a
window produces a flat int32 state array plus the kernel cumulative table —
exactly what the walk engine consumes.

Families
--------
constant             one kernel everywhere (engine runs unbounded)
iid_site             i.i.d. states with given weights
boolean_percolation  occupied = covered by a Poisson process of balls
gaussian_sign        sign of a finite convolution of a kernel q with i.i.d. normals
factor_iid           local function (radius r0) of an i.i.d. uniform field
dynamic_1d           rows = a 1D environment evolving upward in time
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import ndtri

from .errors import (CostGuardError, InvalidParameterError, InvalidSpecError,
                     WindowExceededError)
from .kernels import TransitionKernel, cdf_table
from .randomness import (TAG_FLIP, TAG_NORMAL, TAG_POINT, TAG_POISSON,
                         TAG_ROW0, TAG_STATE, TAG_YFIELD, uniform_grid)

FAMILIES = ("constant", "iid_site", "boolean_percolation", "gaussian_sign",
            "factor_iid", "dynamic_1d")

DRIFT_TOL = 1e-12  # absorbs float noise in 1/2 + zeta comparisons
_BALL_QUANTILE = 1.0 - 1e-9  # radius clip quantile for the Poisson balls
_POINT_BUDGET = 10_000_000  # Poisson point guard per materialization
_MIN_UNIT = 2.0 ** -54  # floor for uniforms fed into the normal inverse CDF


# ---------------------------------------------------------------------------
# Windows.


@dataclass(frozen=True)
class Window:
    """Integer site rectangle: ox <= x < ox+nx, oy <= y < oy+ny."""

    ox: int
    oy: int
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise InvalidParameterError(f"empty window {self}")

    @classmethod
    def from_bounds(cls, x_lo: int, x_hi: int, y_lo: int, y_hi: int) -> "Window":
        return cls(x_lo, y_lo, x_hi - x_lo, y_hi - y_lo)

    def contains(self, site) -> bool:
        x, y = site
        return self.ox <= x < self.ox + self.nx and self.oy <= y < self.oy + self.ny

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    def grids(self):
        """Absolute coordinate grids of shape (ny, nx), row-major in y."""
        ys, xs = np.mgrid[self.oy:self.oy + self.ny, self.ox:self.ox + self.nx]
        return xs, ys

    def grown(self, dx: int, dy: int) -> "Window":
        return Window(self.ox - dx, self.oy - dy, self.nx + 2 * dx, self.ny + 2 * dy)


# ---------------------------------------------------------------------------
# Radius families for the Boolean model.


@dataclass(frozen=True)
class ConstantRadius:
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise InvalidSpecError(f"radius must be positive, got {self.r}")

    def quantile(self, p: float) -> float:
        return self.r

    def moment_finite(self, order: float) -> bool:
        return True

    def to_dict(self):
        return {"kind": "constant", "r": self.r}


@dataclass(frozen=True)
class ParetoRadius:
    """P(Z > z) = (x_m / z)^exponent for z >= x_m."""

    x_m: float
    exponent: float

    def __post_init__(self):
        if self.x_m <= 0 or self.exponent <= 0:
            raise InvalidSpecError(f"bad Pareto parameters {self}")

    def quantile(self, p: float) -> float:
        return self.x_m * (1.0 - p) ** (-1.0 / self.exponent)

    def moment_finite(self, order: float) -> bool:
        return self.exponent > order

    def to_dict(self):
        return {"kind": "pareto", "x_m": self.x_m, "exponent": self.exponent}


def radius_from_dict(d) -> object:
    kind = d.get("kind")
    if kind == "constant":
        return ConstantRadius(float(d["r"]))
    if kind == "pareto":
        return ParetoRadius(float(d["x_m"]), float(d["exponent"]))
    raise InvalidSpecError(f"unknown radius family {kind!r}")


# ---------------------------------------------------------------------------
# Specs.


@dataclass(frozen=True)
class EnvironmentSpec:
    """Declarative description of an environment family.

    ``kernels[s]`` is the transition kernel of state s; ``params`` carries the
    family-specific knobs (already validated by the builder that produced the
    spec, re-validated on config load).
    """

    family: str
    kernels: tuple
    seed: int
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown family {self.family!r}")
        if not self.kernels:
            raise InvalidSpecError("spec needs at least one kernel")
        for k in self.kernels:
            if not isinstance(k, TransitionKernel):
                raise InvalidSpecError(f"kernels must be TransitionKernel, got {k!r}")

    @property
    def n_states(self) -> int:
        return len(self.kernels)


def _q_offsets_validate(offsets) -> tuple:
    """Normalize a gaussian q table to a sorted tuple of (dx, dy, weight)."""
    table = {}
    for dx, dy, w in offsets:
        dx, dy, w = int(dx), int(dy), float(w)
        if w < 0:
            raise InvalidSpecError(f"q table has a negative weight at {(dx, dy)}")
        if (dx, dy) in table:
            raise InvalidSpecError(f"duplicate q offset {(dx, dy)}")
        table[(dx, dy)] = w
    if not any(w > 0 for w in table.values()):
        raise InvalidSpecError("q table is identically zero")
    for (dx, dy), w in table.items():
        if table.get((-dx, dy)) != w:
            raise InvalidSpecError(f"q not symmetric in the first coordinate at {(dx, dy)}")
    return tuple(sorted((dx, dy, w) for (dx, dy), w in table.items() if w > 0))


def _ball_offsets(r0: float) -> tuple:
    rr = float(r0) ** 2
    m = math.floor(float(r0))
    return tuple(sorted((dx, dy) for dx in range(-m, m + 1)
                 for dy in range(-m, m + 1) if dx * dx + dy * dy <= rr))


# -- builders ----------------------------------------------------------------


def constant_spec(kernel: TransitionKernel, seed: int = 0) -> EnvironmentSpec:
    return EnvironmentSpec("constant", (kernel,), seed)


def iid_spec(kernels, weights, seed: int) -> EnvironmentSpec:
    weights = tuple(float(w) for w in weights)
    if len(weights) != len(kernels):
        raise InvalidSpecError("one weight per kernel required")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise InvalidSpecError(f"weights must be a probability vector, got {weights}")
    return EnvironmentSpec("iid_site", tuple(kernels), seed,
                           {"weights": weights})


def boolean_spec(lam: float, sigma, alpha: float, seed: int,
                 vacant: TransitionKernel, occupied: TransitionKernel) -> EnvironmentSpec:
    if lam <= 0:
        raise InvalidSpecError(f"intensity must be positive, got {lam}")
    if not sigma.moment_finite(2.0 + alpha):
        raise InvalidSpecError(
            f"radius family {sigma} lacks a finite moment of order {2.0 + alpha}")
    return EnvironmentSpec("boolean_percolation", (vacant, occupied), seed,
                           {"lam": float(lam), "sigma": sigma.to_dict(),
                            "alpha": float(alpha)})


def gaussian_spec(q_offsets, lambda_decay: float, seed: int,
                  minus: TransitionKernel, plus: TransitionKernel) -> EnvironmentSpec:
    offsets = _q_offsets_validate(q_offsets)
    # witness constant for the declared polynomial decay (finite tables always
    # admit one; recorded so configs carry the claim they make)
    c = max((w * (dx * dx + dy * dy) ** (lambda_decay / 2.0)
             for dx, dy, w in offsets if (dx, dy) != (0, 0)), default=0.0)
    return EnvironmentSpec("gaussian_sign", (minus, plus), seed,
                           {"q": offsets, "lambda_decay": float(lambda_decay),
                            "decay_witness": float(c)})


def factor_spec(rule: str, r0: float, threshold: float, seed: int,
                low: TransitionKernel, high: TransitionKernel) -> EnvironmentSpec:
    if rule not in ("threshold_mean", "parity_count"):
        raise InvalidSpecError(f"unknown factor rule {rule!r}")
    if r0 < 0:
        raise InvalidSpecError(f"radius must be >= 0, got {r0}")
    return EnvironmentSpec("factor_iid", (low, high), seed,
                           {"rule": rule, "r0": float(r0),
                            "threshold": float(threshold)})


def dynamic_spec(row_law: str, params: dict, seed: int,
                 zero: TransitionKernel, one: TransitionKernel) -> EnvironmentSpec:
    if row_law == "independent":
        p = float(params["p"])
        if not 0.0 <= p <= 1.0:
            raise InvalidSpecError(f"p must be a probability, got {p}")
        keep = {"row_law": row_law, "p": p}
    elif row_law == "markov_flip":
        p0, pf = float(params["p0"]), float(params["p_flip"])
        if not (0.0 <= p0 <= 1.0 and 0.0 <= pf <= 1.0):
            raise InvalidSpecError(f"probabilities out of range: {params}")
        keep = {"row_law": row_law, "p0": p0, "p_flip": pf}
    else:
        raise InvalidSpecError(f"unknown row law {row_law!r}")
    return EnvironmentSpec("dynamic_1d", (zero, one), seed, keep)


# ---------------------------------------------------------------------------
# Materialized fields.


class EnvironmentField:
    """A window of a seeded environment, ready for the walk engine.

    Satisfies the engine protocol (``cdf_table``, ``unbounded``, ``window``,
    ``states``).  Immutable after construction; safe to share across threads.
    """

    def __init__(self, spec: EnvironmentSpec, window, states):
        self.spec = spec
        self.cdf_table = cdf_table(spec.kernels)
        if window is None:
            self.unbounded = True
            self.window = None
            self.states = None
            self._win = None
        else:
            self.unbounded = False
            self._win = window
            self.window = (window.ox, window.oy, window.nx, window.ny)
            st = np.ascontiguousarray(states, dtype=np.int32).ravel()
            st.setflags(write=False)
            self.states = st

    def state_at(self, site) -> int:
        if self.unbounded:
            return 0
        x, y = site
        w = self._win
        if not w.contains(site):
            raise WindowExceededError(site, self.window)
        return int(self.states[(y - w.oy) * w.nx + (x - w.ox)])

    def state_grid(self) -> np.ndarray:
        if self.unbounded:
            raise InvalidParameterError("constant fields have no state grid")
        w = self._win
        return self.states.reshape(w.ny, w.nx)

    def write_csv(self, path) -> None:
        """Flat (x, y, state) snapshot of the window."""
        if self.unbounded:
            raise InvalidParameterError("snapshot needs a bounded window")
        w = self._win
        grid = self.state_grid()
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(("x", "y", "state"))
            for j in range(w.ny):
                for i in range(w.nx):
                    out.writerow((w.ox + i, w.oy + j, int(grid[j, i])))


def kernel_of(env: EnvironmentField, x) -> TransitionKernel:
    """The transition kernel acting at site x (errors outside the window)."""
    return env.spec.kernels[env.state_at(x)]


# -- per-family state generation --------------------------------------------


def _states_iid(spec, window):
    weights = np.asarray(spec.params["weights"], dtype=np.float64)
    cum = np.cumsum(weights[:-1])
    xs, ys = window.grids()
    u = uniform_grid(spec.seed, TAG_STATE, xs, ys)
    return np.searchsorted(cum, u, side="right").astype(np.int32)


def _states_boolean(spec, window):
    lam = spec.params["lam"]
    sigma = radius_from_dict(spec.params["sigma"])
    r_max = sigma.quantile(_BALL_QUANTILE)
    m = math.ceil(r_max) + 1
    cx_lo, cx_hi = window.ox - m, window.ox + window.nx + m
    cy_lo, cy_hi = window.oy - m, window.oy + window.ny + m
    n_cells = (cx_hi - cx_lo) * (cy_hi - cy_lo)
    if lam * n_cells > _POINT_BUDGET:
        raise CostGuardError(
            f"Boolean materialization would draw ~{lam * n_cells:.2e} points "
            f"(budget {_POINT_BUDGET:.0e}); shrink the window or intensity")

    # All Poisson counts at once: per-cell k is the number of CDF partial
    # sums <= u, capped at kmax — searchsorted(side="right") over the exact
    # partial-sum floats reproduces the sequential `while u >= cdf` draw,
    # ties included.
    kmax = int(lam + 20.0 * math.sqrt(lam) + 50.0)
    cdfs = np.empty(kmax + 1, dtype=np.float64)
    p = math.exp(-lam)
    cdf = p
    cdfs[0] = cdf
    for k in range(1, kmax + 1):
        p *= lam / k
        cdf += p
        cdfs[k] = cdf
    cys, cxs = np.mgrid[cy_lo:cy_hi, cx_lo:cx_hi]
    u = uniform_grid(spec.seed, TAG_POISSON, cxs, cys).ravel()
    counts = np.minimum(np.searchsorted(cdfs, u, side="right"), kmax)

    occ = np.zeros((window.ny, window.nx), dtype=np.int32)
    seed = spec.seed
    ox, oy, nx, ny = window.ox, window.oy, window.nx, window.ny
    flat_x = cxs.ravel()
    flat_y = cys.ravel()
    quantile = sigma.quantile
    for j in range(int(counts.max(initial=0))):
        live = counts > j
        cell_x = flat_x[live]
        cell_y = flat_y[live]
        pxs = cell_x + uniform_grid(seed, TAG_POINT, cell_x, cell_y, 3 * j + 1)
        pys = cell_y + uniform_grid(seed, TAG_POINT, cell_x, cell_y, 3 * j + 2)
        rus = uniform_grid(seed, TAG_POINT, cell_x, cell_y, 3 * j + 3)
        for px, py, ru in zip(pxs.tolist(), pys.tolist(), rus.tolist()):
            # radii above the 1-1e-9 quantile are clipped so that a site's
            # coverage depends only on cells within r_max of it — this is
            # what makes occupancy window-independent
            r = min(quantile(ru), r_max)
            for ix in range(max(math.ceil(px - r), ox),
                            min(math.floor(px + r), ox + nx - 1) + 1):
                half = math.sqrt(max(r * r - (ix - px) ** 2, 0.0))
                for iy in range(max(math.ceil(py - half), oy),
                                min(math.floor(py + half), oy + ny - 1) + 1):
                    occ[iy - oy, ix - ox] = 1
    return occ


def _states_gaussian(spec, window):
    offsets = spec.params["q"]
    rho = max(max(abs(dx), abs(dy)) for dx, dy, _ in offsets)
    big = window.grown(rho, rho)
    xs, ys = big.grids()
    u = np.maximum(uniform_grid(spec.seed, TAG_NORMAL, xs, ys), _MIN_UNIT)
    w_field = ndtri(u)
    g = np.zeros((window.ny, window.nx), dtype=np.float64)
    # fixed (sorted) accumulation order keeps each site's sum bit-identical
    # across windows
    for dx, dy, wgt in offsets:
        g += wgt * w_field[rho - dy:rho - dy + window.ny,
                           rho - dx:rho - dx + window.nx]
    return (g >= 0.0).astype(np.int32)


def _states_factor(spec, window):
    r0 = spec.params["r0"]
    rule = spec.params["rule"]
    thr = spec.params["threshold"]
    offsets = _ball_offsets(r0)
    rho = math.floor(r0)
    big = window.grown(rho, rho)
    xs, ys = big.grids()
    y_field = uniform_grid(spec.seed, TAG_YFIELD, xs, ys)
    if rule == "threshold_mean":
        acc = np.zeros((window.ny, window.nx), dtype=np.float64)
        for dx, dy in offsets:
            acc += y_field[rho + dy:rho + dy + window.ny,
                           rho + dx:rho + dx + window.nx]
        return (acc / len(offsets) >= thr).astype(np.int32)
    # parity_count: parity of high sites in the ball (exact integer sums)
    bits = (y_field >= 0.5).astype(np.int64)
    acc = np.zeros((window.ny, window.nx), dtype=np.int64)
    for dx, dy in offsets:
        acc += bits[rho + dy:rho + dy + window.ny,
                    rho + dx:rho + dx + window.nx]
    return (acc & 1).astype(np.int32)


def _states_dynamic(spec, window):
    seed = spec.seed
    xcols = np.arange(window.ox, window.ox + window.nx, dtype=np.int64)
    if spec.params["row_law"] == "independent":
        xs, ys = window.grids()
        u = uniform_grid(seed, TAG_ROW0, xs, ys)
        return (u < spec.params["p"]).astype(np.int32)

    # markov_flip: anchored at absolute row 0, flips attached to row edges.
    p0 = spec.params["p0"]
    pf = spec.params["p_flip"]
    base = (uniform_grid(seed, TAG_ROW0, xcols, np.int64(0)) < p0).astype(np.int32)
    out = np.empty((window.ny, window.nx), dtype=np.int32)
    lo, hi = window.oy, window.oy + window.ny

    def flip_row(m):
        return (uniform_grid(seed, TAG_FLIP, xcols, np.int64(m)) < pf).astype(np.int32)

    cur = base.copy()
    for n in range(0, max(hi, 1)):
        if lo <= n < hi:
            out[n - lo] = cur
        if n + 1 < hi:
            cur ^= flip_row(n + 1)
    cur = base.copy()
    for n in range(0, min(lo, 0) - 1, -1):
        if n < 0:
            cur ^= flip_row(n + 1)
        if lo <= n < hi and n < 0:
            out[n - lo] = cur
    return out


_GENERATORS = {
    "iid_site": _states_iid,
    "boolean_percolation": _states_boolean,
    "gaussian_sign": _states_gaussian,
    "factor_iid": _states_factor,
    "dynamic_1d": _states_dynamic,
}


def materialize(spec: EnvironmentSpec, window: Window = None) -> EnvironmentField:
    """Build the engine-ready field of ``spec`` on ``window``.

    Constant environments ignore the window and run unbounded.
    """
    if spec.family == "constant":
        return EnvironmentField(spec, None, None)
    if window is None:
        raise InvalidParameterError(f"family {spec.family} needs a window")
    states = _GENERATORS[spec.family](spec, window)
    return EnvironmentField(spec, window, states)


# -- spec-level convenience constructors (build + materialize) ---------------


def gen_boolean_percolation(lam, sigma, window: Window, seed: int, *,
                            alpha: float = 1.0,
                            vacant: TransitionKernel = None,
                            occupied: TransitionKernel = None) -> EnvironmentField:
    vacant = vacant if vacant is not None else TransitionKernel(0.25, 0.25, 0.25, 0.25)
    occupied = occupied if occupied is not None else TransitionKernel(0.1, 0.1, 0.7, 0.1)
    return materialize(boolean_spec(lam, sigma, alpha, seed, vacant, occupied), window)


def gen_gaussian_sign_field(q_offsets, rho_q: int, seed: int, *, window: Window,
                            lambda_decay: float = 3.0,
                            minus: TransitionKernel = None,
                            plus: TransitionKernel = None) -> EnvironmentField:
    """Sign-of-convolution field; offsets beyond sup-norm radius rho_q are
    dropped before validation (the declared truncation)."""
    kept = [(dx, dy, w) for dx, dy, w in q_offsets
            if max(abs(dx), abs(dy)) <= rho_q]
    minus = minus if minus is not None else TransitionKernel(0.25, 0.25, 0.25, 0.25)
    plus = plus if plus is not None else TransitionKernel(0.1, 0.1, 0.7, 0.1)
    return materialize(gaussian_spec(kept, lambda_decay, seed, minus, plus), window)


def gen_factor_iid(rule: str, r0: float, seed: int, *, window: Window,
                   threshold: float = 0.5,
                   low: TransitionKernel = None,
                   high: TransitionKernel = None) -> EnvironmentField:
    low = low if low is not None else TransitionKernel(0.25, 0.25, 0.25, 0.25)
    high = high if high is not None else TransitionKernel(0.1, 0.1, 0.7, 0.1)
    return materialize(factor_spec(rule, r0, threshold, seed, low, high), window)


def gen_dynamic_1d(row_law: str, seed: int, *, window: Window, params: dict = None,
                   zero: TransitionKernel = None,
                   one: TransitionKernel = None) -> EnvironmentField:
    params = params if params is not None else {"p": 0.5}
    zero = zero if zero is not None else TransitionKernel(0.25, 0.25, 0.25, 0.25)
    one = one if one is not None else TransitionKernel(0.1, 0.1, 0.7, 0.1)
    return materialize(dynamic_spec(row_law, params, seed, zero, one), window)


# ---------------------------------------------------------------------------
# Drift condition.


def drift_condition_check(env: EnvironmentField, zeta: float, region=None) -> bool:
    """True iff every site in ``region`` has north-probability >= 1/2 + zeta.

    The comparison absorbs 1e-12 of float noise so that e.g. p_N = 0.6 passes
    zeta = 0.1 even though 0.5 + 0.1 > 0.6 in binary.
    """
    if not 0.0 < zeta <= 0.5:
        raise InvalidParameterError(f"zeta must lie in (0, 1/2], got {zeta}")
    bound = 0.5 + zeta - DRIFT_TOL
    if env.unbounded or region is None:
        states = range(env.spec.n_states) if env.unbounded else set(
            int(s) for s in np.unique(env.states))
        return all(env.spec.kernels[s].p_north >= bound for s in states)
    return all(kernel_of(env, site).p_north >= bound for site in region)


# ---------------------------------------------------------------------------
# Config (de)serialization.


def spec_to_config(spec: EnvironmentSpec) -> dict:
    d = {"family": spec.family, "seed": spec.seed,
         "kernels": [list(k.probs) for k in spec.kernels]}
    params = dict(spec.params)
    if "q" in params:
        params["q"] = [list(t) for t in params["q"]]
    if "weights" in params:
        params["weights"] = list(params["weights"])
    d["params"] = params
    return d


def spec_from_config(d: dict) -> EnvironmentSpec:
    """Rebuild a spec from its config dict, re-running all validation."""
    try:
        family = d["family"]
        seed = int(d.get("seed", 0))
        kernels = [TransitionKernel(*map(float, row)) for row in d["kernels"]]
        params = d.get("params", {})
        if family == "constant":
            if len(kernels) != 1:
                raise InvalidSpecError("constant family takes exactly one kernel")
            return constant_spec(kernels[0], seed)
        if family == "iid_site":
            return iid_spec(tuple(kernels), params["weights"], seed)
        if family == "boolean_percolation":
            return boolean_spec(params["lam"], radius_from_dict(params["sigma"]),
                                params["alpha"], seed, kernels[0], kernels[1])
        if family == "gaussian_sign":
            return gaussian_spec(params["q"], params["lambda_decay"], seed,
                                 kernels[0], kernels[1])
        if family == "factor_iid":
            return factor_spec(params["rule"], params["r0"], params["threshold"],
                               seed, kernels[0], kernels[1])
        if family == "dynamic_1d":
            return dynamic_spec(params["row_law"], params, seed,
                                kernels[0], kernels[1])
        raise InvalidSpecError(f"unknown family {family!r}")
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise InvalidSpecError(f"malformed environment config: {exc}") from exc
