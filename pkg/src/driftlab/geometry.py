"""Deterministic lattice geometry: boxes, blocks, grids, scales, rounding.

Conventions
-----------
* Boxes are half-open in both axes: [x_lo, x_hi) x [y_lo, y_hi).  A point on
  a right/top boundary belongs to the adjacent box only.
* Reference points w live in R x Z: real first coordinate (kept exact as
  int/Fraction where it matters), integer second coordinate.
* All scale arithmetic is exact integer arithmetic — no floats anywhere near
  ⌊L^(1/4)⌋.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidGeometryError, InvalidParameterError


def _exact(v):
    """Exact rational view of a bound (floats converted exactly)."""
    if isinstance(v, float):
        return Fraction(v)
    return v


def h_prime(H) -> int:
    """⌈√H⌉, exact for integers and rationals (H > 0)."""
    if H <= 0:
        raise InvalidParameterError(f"H must be positive, got {H}")
    H = _exact(H)
    n = math.isqrt(math.ceil(H))
    if n * n < H:
        n += 1
    return n


def isqrt4(n: int) -> int:
    """⌊n^(1/4)⌋ via two exact integer square roots."""
    if n < 0:
        raise InvalidParameterError("fourth root of a negative integer")
    return math.isqrt(math.isqrt(n))


def int_range(lo, hi) -> range:
    """Integers n with lo <= n < hi (bounds may be rationals/floats)."""
    return range(math.ceil(_exact(lo)), math.ceil(_exact(hi)))


@dataclass(frozen=True)
class Box:
    """Half-open box [x_lo, x_hi) x [y_lo, y_hi)."""

    x_lo: object
    x_hi: object
    y_lo: object
    y_hi: object

    def __post_init__(self):
        if not (self.x_hi > self.x_lo and self.y_hi > self.y_lo):
            raise InvalidGeometryError(f"degenerate box {self}")

    @property
    def diam(self):
        return self.x_hi - self.x_lo

    @property
    def height(self):
        return self.y_hi - self.y_lo

    def contains(self, point) -> bool:
        x, y = point
        return self.x_lo <= x < self.x_hi and self.y_lo <= y < self.y_hi

    def lattice_sites(self):
        """All integer sites inside the (half-open) box, row-major."""
        return [(x, y)
                for y in int_range(self.y_lo, self.y_hi)
                for x in int_range(self.x_lo, self.x_hi)]


def sep(b1: Box, b2: Box):
    """Vertical separation: the gap between the boxes' height ranges.

    Zero when the vertical ranges overlap; otherwise the distance from the
    lower box's top to the upper box's bottom.
    """
    if b2.y_lo >= b1.y_hi:
        return b2.y_lo - b1.y_hi
    if b1.y_lo >= b2.y_hi:
        return b1.y_lo - b2.y_hi
    return 0


# ---------------------------------------------------------------------------
# Blocks attached to a reference point w in R x Z.


def _check_ref(w):
    wx, wy = w
    if not isinstance(wy, int) and not (isinstance(wy, Fraction) and wy.denominator == 1):
        raise InvalidGeometryError(f"reference point {w} needs an integer height")
    return _exact(wx), int(wy)


def block_sites(w, H) -> list:
    """I_H(w): lattice sites of (w + [0,H) x [0,H')) — the start block."""
    wx, wy = _check_ref(w)
    hp = h_prime(H)
    return [(x, y)
            for y in int_range(wy, wy + hp)
            for x in int_range(wx, wx + _exact(H))]


def row_sites(w, H) -> list:
    """𝓘-style row block: lattice sites of (w + [0,H) x {0})."""
    wx, wy = _check_ref(w)
    return [(x, wy) for x in int_range(wx, wx + _exact(H))]


def walk_box(w, H, beta) -> Box:
    """B_H(w) = w + [-βH, (β+1)H) x [-H', H) — the confinement box.

    Half-open per the package box convention; bounds match the defining
    rectangle so diam = (2β+1)H and height = H + H'.
    """
    wx, wy = _check_ref(w)
    b = _exact(beta)
    H = _exact(H)
    return Box(wx - b * H, wx + (b + 1) * H, wy - h_prime(H), wy + H)


def round_point(y, H, delta) -> tuple[int, int]:
    """Coarse-grained lattice projection of a point.

    Horizontal cell H̃ = ⌊δH/4⌋, vertical cell H' = ⌈√H⌉; both coordinates
    floored toward -∞.  Requires H ⩾ 4/δ so the horizontal cell is nonempty.
    """
    d = _exact(delta)
    H = _exact(H)
    if d <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if d * H < 4:
        raise InvalidParameterError(f"H={H} below 4/delta={float(4 / d):.6g}")
    h_tilde = math.floor(d * H / 4)
    hp = h_prime(H)
    px, py = y
    return (math.floor(_exact(px) / h_tilde) * h_tilde,
            math.floor(_exact(py) / hp) * hp)


# ---------------------------------------------------------------------------
# Scale schedule L_{k+1} = ⌊L_k^(1/4)⌋ · L_k.


@dataclass(frozen=True)
class ScaleSchedule:
    """Exact renormalization ladder from a base scale L0."""

    L0: int
    L: tuple  # L_0 .. L_depth
    l: tuple  # l_0 .. l_{depth-1}

    @property
    def depth(self) -> int:
        return len(self.l)

    @property
    def degenerate(self) -> bool:
        """True when some l_k = 1, i.e. the ladder stalls."""
        return any(v == 1 for v in self.l)

    def csv_rows(self):
        rows = [("k", "L_k", "l_k")]
        for k, Lk in enumerate(self.L):
            lk = self.l[k] if k < len(self.l) else ""
            rows.append((k, Lk, lk))
        return rows


def scale_table(L0: int, depth: int) -> ScaleSchedule:
    """Exact integer schedule to the requested depth (arbitrary precision)."""
    if L0 < 2:
        raise InvalidParameterError(f"L0 must be >= 2, got {L0}")
    if depth < 1:
        raise InvalidParameterError(f"depth must be >= 1, got {depth}")
    Ls = [L0]
    ls = []
    for _ in range(depth):
        lk = isqrt4(Ls[-1])
        ls.append(lk)
        Ls.append(lk * Ls[-1])
    return ScaleSchedule(L0=L0, L=tuple(Ls), l=tuple(ls))


# ---------------------------------------------------------------------------
# Renormalization grids.


@dataclass(frozen=True)
class GridSpec:
    """Rectangle of reference points anchor + (i·cell, j·cell)."""

    anchor: tuple
    cell: int
    i_lo: int
    i_hi: int
    j_lo: int
    j_hi: int

    def __post_init__(self):
        if self.cell < 1:
            raise InvalidGeometryError(f"cell must be >= 1, got {self.cell}")
        if self.i_hi <= self.i_lo or self.j_hi <= self.j_lo:
            raise InvalidGeometryError(f"empty index ranges in {self}")

    @property
    def cardinality(self) -> int:
        return (self.i_hi - self.i_lo) * (self.j_hi - self.j_lo)


def grid_points(spec: GridSpec) -> list:
    """All reference points of the grid, ordered by (j, i)."""
    ax, ay = spec.anchor
    return [(ax + i * spec.cell, ay + j * spec.cell)
            for j in range(spec.j_lo, spec.j_hi)
            for i in range(spec.i_lo, spec.i_hi)]


def grid_for_scales(anchor, H_k: int, l_k: int, beta) -> GridSpec:
    """The scale-k covering grid for the scale-(k+1) confinement box.

    Index ranges: i over [-⌈βl_k⌉, ⌈(β+1)l_k⌉), j over [-⌊H'_{k+1}/H_k⌋, l_k)
    with H_{k+1} = l_k·H_k.  (The source formula reuses one index letter for
    both ranges; they are independent horizontal/vertical ranges.)
    """
    if H_k < 1 or l_k < 1:
        raise InvalidGeometryError(f"scales must be positive, got H_k={H_k}, l_k={l_k}")
    b = _exact(beta)
    i_lo = -math.ceil(b * l_k)
    i_hi = math.ceil((b + 1) * l_k)
    H_next = l_k * H_k
    j_lo = -(h_prime(H_next) // H_k)
    j_hi = l_k
    return GridSpec(anchor=tuple(anchor), cell=H_k,
                    i_lo=i_lo, i_hi=i_hi, j_lo=j_lo, j_hi=j_hi)
