"""Transition kernels on the four lattice directions and the jump map.

The direction order is fixed package-wide as E, W, N, S — i.e.
(1,0), (-1,0), (0,1), (0,-1) — and the jump map partitions [0,1) into four
half-open subintervals, cumulative in that order.  The order is a documented
convention (any fixed order gives the same marginal law).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidKernelError

#: Unit steps in the fixed interval order E, W, N, S.
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))

SUM_TOL = 1e-12


@dataclass(frozen=True)
class TransitionKernel:
    """Step distribution at a site: probabilities for E, W, N, S."""

    p_east: float
    p_west: float
    p_north: float
    p_south: float

    def __post_init__(self):
        probs = self.probs
        for p in probs:
            if not (0.0 <= p <= 1.0):
                raise InvalidKernelError(f"probability {p} outside [0,1] in {probs}")
        if abs(sum(probs) - 1.0) > SUM_TOL:
            raise InvalidKernelError(f"probabilities {probs} sum to {sum(probs)!r}")

    @property
    def probs(self) -> tuple[float, float, float, float]:
        return (self.p_east, self.p_west, self.p_north, self.p_south)

    def cdf(self) -> tuple[float, float, float]:
        """Cumulative interval endpoints after E, after W, after N.

        Built with the exact same float additions the engine table uses, so
        the Python jump() and the compiled loop branch identically.
        """
        c0 = self.p_east
        c1 = c0 + self.p_west
        c2 = c1 + self.p_north
        return (c0, c1, c2)

    @property
    def vertical_drift(self) -> float:
        return self.p_north - self.p_south

    @property
    def horizontal_drift(self) -> float:
        return self.p_east - self.p_west


#: All-north kernel, handy in tests and trivial examples.
NORTH = TransitionKernel(0.0, 0.0, 1.0, 0.0)


def jump(kernel: TransitionKernel, u: float) -> tuple[int, int]:
    """Direction whose half-open subinterval of [0,1) contains u.

    Intervals are cumulative in the order E, W, N, S; a boundary value
    belongs to the interval on its right (e.g. u = p_east selects W).
    """
    if not (0.0 <= u < 1.0):
        raise ValueError(f"u must lie in [0,1), got {u}")
    c0, c1, c2 = kernel.cdf()
    if u < c0:
        return DIRECTIONS[0]
    if u < c1:
        return DIRECTIONS[1]
    if u < c2:
        return DIRECTIONS[2]
    return DIRECTIONS[3]


def cdf_table(kernels) -> np.ndarray:
    """(n_states, 3) float64 array of cumulative endpoints for the engine."""
    return np.array([k.cdf() for k in kernels], dtype=np.float64)
