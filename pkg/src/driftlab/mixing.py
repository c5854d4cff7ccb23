"""Empirical vertical-mixing measurements.

The mixing definition bounds E[f1 f2] - E[f1]E[f2] for statistics measurable
on vertically separated boxes.  Only finitely many pairs are testable, so the
package reports per-pair estimates with jackknife errors and never claims a
uniform certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .environments import EnvironmentSpec, Window, materialize
from .errors import InvalidGeometryError, InvalidParameterError
from .geometry import Box, int_range, sep
from .randomness import derive_seed

_MIXING_STREAM = 1  # sub-seed stream id for independent mixing trials


@dataclass(frozen=True)
class BoxPair:
    """Two half-open boxes whose vertical separation is being probed."""

    b1: Box
    b2: Box

    @property
    def separation(self):
        return sep(self.b1, self.b2)


class FieldView:
    """Read-only view of a field restricted to one box.

    Mixing statistics receive views, not fields, so a statistic physically
    cannot read outside its box — measurability is enforced, not assumed.
    """

    def __init__(self, field, box: Box):
        self._field = field
        self.box = box

    def state(self, site) -> int:
        if not self.box.contains(site):
            raise InvalidGeometryError(f"site {site} outside the view's box {self.box}")
        return self._field.state_at(site)

    def sites(self):
        return self.box.lattice_sites()

    def states(self) -> np.ndarray:
        """All states in the box, row-major (the common fast path)."""
        return np.asarray([self._field.state_at(s) for s in self.sites()],
                          dtype=np.int32)


class MixingEstimate(NamedTuple):
    cov: float
    se: float


def _lattice_window(pair: BoxPair) -> Window:
    xs = []
    ys = []
    for b in (pair.b1, pair.b2):
        xr = int_range(b.x_lo, b.x_hi)
        yr = int_range(b.y_lo, b.y_hi)
        if len(xr) == 0 or len(yr) == 0:
            raise InvalidGeometryError(f"box {b} contains no lattice sites")
        xs += [xr[0], xr[-1]]
        ys += [yr[0], yr[-1]]
    return Window.from_bounds(min(xs), max(xs) + 1, min(ys), max(ys) + 1)


def empirical_mixing_covariance(spec: EnvironmentSpec, pair: BoxPair, f1, f2,
                                n: int) -> MixingEstimate:
    """Monte Carlo estimate of Cov(f1, f2) over n independently seeded fields.

    f1 and f2 are called with a FieldView of their box and must return 0/1
    (any real value is accepted; the CLT width calibration assumes bounded
    statistics).  Returns the plug-in covariance with its jackknife standard
    error.
    """
    if n < 100:
        raise InvalidParameterError(f"need n >= 100 samples, got {n}")
    if pair.separation < 1:
        raise InvalidGeometryError(
            f"boxes must be vertically separated by at least 1, got {pair.separation}")
    window = _lattice_window(pair)

    a = np.empty(n, dtype=np.float64)
    b = np.empty(n, dtype=np.float64)
    for t in range(n):
        field = materialize(replace(spec, seed=derive_seed(spec.seed, t, _MIXING_STREAM)),
                            window)
        a[t] = f1(FieldView(field, pair.b1))
        b[t] = f2(FieldView(field, pair.b2))

    s1 = a.sum()
    s2 = b.sum()
    ab = a * b
    s12 = ab.sum()
    cov = s12 / n - (s1 / n) * (s2 / n)

    # leave-one-out covariances, vectorized
    m = n - 1
    cov_i = (s12 - ab) / m - ((s1 - a) / m) * ((s2 - b) / m)
    se = float(np.sqrt((n - 1) / n * np.sum((cov_i - cov_i.mean()) ** 2)))
    return MixingEstimate(cov=float(cov), se=se)


def clt_width(n: int) -> float:
    """The 4/sqrt(n) acceptance width for covariance of bounded statistics."""
    return 4.0 / np.sqrt(n)
