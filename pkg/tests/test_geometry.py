"""Integer lattice geometry: boxes, separations, rounding, scale ladders."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from driftlab import (
    Box,
    GridSpec,
    block_sites,
    grid_for_scales,
    grid_points,
    h_prime,
    round_point,
    scale_table,
    sep,
    walk_box,
)
from driftlab.geometry import ScaleSchedule, int_range, isqrt4, row_sites
from driftlab.errors import InvalidGeometryError, InvalidParameterError


def test_h_prime_values():
    assert h_prime(9) == 3
    assert h_prime(10) == 4
    assert h_prime(1) == 1
    assert h_prime(16) == 4
    assert h_prime(17) == 5


def test_h_prime_rejects_nonpositive():
    with pytest.raises(InvalidParameterError):
        h_prime(0)
    with pytest.raises(InvalidParameterError):
        h_prime(-3)


@given(st.integers(1, 10**6))
def test_h_prime_is_ceil_sqrt(H):
    k = h_prime(H)
    assert (k - 1) ** 2 < H <= k ** 2


def test_isqrt4():
    assert isqrt4(1) == 1
    assert isqrt4(15) == 1
    assert isqrt4(16) == 2
    assert isqrt4(10**10) == 316
    assert 316 ** 4 <= 10**10 < 317 ** 4


def test_sep_examples():
    a = Box(0, 1, 0, 1)
    assert sep(a, Box(0, 1, 3, 4)) == 2
    assert sep(a, Box(0, 2, 0, 2)) == 0  # vertically overlapping
    assert sep(Box(0, 1, 9, 10), Box(0, 1, 0, 4)) == 5  # first box above
    # separation is vertical: horizontal distance alone does not count
    assert sep(a, Box(100, 101, 0, 1)) == 0
    assert sep(Box(0, 1, 3, 4), a) == sep(a, Box(0, 1, 3, 4)) == 2


def test_box_is_half_open_and_tiles_the_plane():
    boxes = [Box(x, x + 1, y, y + 1) for x in range(-2, 2) for y in range(-2, 2)]
    for px in range(-2, 2):
        for py in range(-2, 2):
            owners = [b for b in boxes if b.contains((px, py))]
            assert len(owners) == 1
            assert owners[0] == Box(px, px + 1, py, py + 1)


def test_box_validation_and_metrics():
    with pytest.raises(InvalidGeometryError):
        Box(0, 0, 0, 1)
    with pytest.raises(InvalidGeometryError):
        Box(0, 1, 2, 2)
    b = Box(-1, 3, 2, 4)
    assert b.diam == 4
    assert b.height == 2
    assert b.lattice_sites() == [(x, y) for y in (2, 3) for x in (-1, 0, 1, 2)]


def test_block_and_row_sites():
    # H = 4 gives a 4-wide, 2-tall block anchored at w
    sites = block_sites((10, -3), 4)
    assert sites == [(10 + dx, -3 + dy) for dy in range(2) for dx in range(4)]
    assert row_sites((0, 0), 3) == [(0, 0), (1, 0), (2, 0)]


def test_walk_box_rational_bounds():
    b = walk_box((5, 2), 9, Fraction(3, 2))
    assert (b.x_lo, b.x_hi) == (Fraction(-17, 2), Fraction(55, 2))
    assert (b.y_lo, b.y_hi) == (-1, 11)
    assert b.diam == 36
    assert b.height == 12


def test_walk_box_exact_bounds():
    for beta in (Fraction(1), Fraction(3, 2), Fraction(5, 2)):
        H = 8
        b = walk_box((0, 0), H, beta)
        assert b.x_lo == -beta * H
        assert b.x_hi == (beta + 1) * H
        assert b.y_lo == -h_prime(H)
        assert b.y_hi == H
        assert b.diam == (2 * beta + 1) * H
        assert b.height == H + h_prime(H)
        # target row H is outside (half-open top at exactly H)
        assert not b.contains((0, H))
        assert b.contains((0, H - 1))


def test_walk_box_height_bound_when_hprime_small():
    # once H' <= H/2 the box height is at most 3H/2, exactly
    for H in (4, 9, 16, 100, 10**6):
        assert 2 * h_prime(H) <= H
        b = walk_box((0, 0), H, Fraction(1))
        assert 2 * b.height <= 3 * H


def test_round_point_examples():
    # H=100, delta=0.1: tilde=floor(10/4)=2, h'=10
    assert round_point((7, 5), 100, Fraction(1, 10)) == (6, 0)
    assert round_point((-1, -1), 100, Fraction(1, 10)) == (-2, -10)
    # idempotent on its own image
    p = round_point((137, 41), 64, Fraction(1, 4))
    assert round_point(p, 64, Fraction(1, 4)) == p


def test_round_point_projection_gap():
    H, delta = 100, Fraction(1, 10)
    tilde = int(delta * H) // 4
    hp = h_prime(H)
    for x in range(-25, 25):
        for y in range(-25, 25):
            qx, qy = round_point((x, y), H, delta)
            assert 0 <= x - qx < tilde
            assert 0 <= y - qy < hp
            assert qx % tilde == 0 and qy % hp == 0


def test_round_point_domain_errors():
    with pytest.raises(InvalidParameterError):
        round_point((0, 0), 100, Fraction(0))
    with pytest.raises(InvalidParameterError):
        round_point((0, 0), 30, Fraction(1, 10))  # delta*H < 4


def test_scale_table_large_anchor():
    sched = scale_table(10**10, 1)
    assert sched.l[0] == 316
    assert sched.L[0] == 10**10
    assert sched.L[1] == 316 * 10**10
    assert sched.L[1] == 3_160_000_000_000
    assert not sched.degenerate


def test_scale_table_small_anchor():
    sched = scale_table(16, 2)
    assert sched.L == (16, 32, 64)
    assert sched.l == (2, 2)
    assert sched.depth == 2
    assert scale_table(2, 1).degenerate  # l_0 = floor(2^(1/4)) = 1


def test_scale_table_validation():
    with pytest.raises(InvalidParameterError):
        scale_table(1, 1)
    with pytest.raises(InvalidParameterError):
        scale_table(100, 0)


def test_scale_table_growth_is_exact_integer_arithmetic():
    sched = scale_table(10**10, 3)
    for k in range(sched.depth):
        assert sched.L[k + 1] == sched.l[k] * sched.L[k]
        assert sched.l[k] == isqrt4(sched.L[k])


def test_schedule_csv_rows():
    rows = scale_table(16, 2).csv_rows()
    assert rows[0] == ("k", "L_k", "l_k")
    assert rows[1] == (0, 16, 2)
    assert rows[2] == (1, 32, 2)
    assert rows[3] == (2, 64, "")


def test_int_range_uses_exact_rationals():
    assert list(int_range(Fraction(1, 2), Fraction(7, 2))) == [1, 2, 3]
    assert list(int_range(Fraction(-3, 2), Fraction(2))) == [-1, 0, 1]
    assert list(int_range(2, 2)) == []
    # exact endpoints: integer hi is excluded by the half-open convention
    assert list(int_range(0, 3)) == [0, 1, 2]


def test_grid_points_single_cell():
    g = GridSpec(anchor=(3, 4), cell=2, i_lo=0, i_hi=1, j_lo=0, j_hi=1)
    assert g.cardinality == 1
    assert grid_points(g) == [(3, 4)]


def test_grid_points_order_and_cardinality():
    g = GridSpec(anchor=(0, 0), cell=2, i_lo=-1, i_hi=2, j_lo=0, j_hi=2)
    pts = grid_points(g)
    assert g.cardinality == 6 == len(pts)
    assert pts == [(-2, 0), (0, 0), (2, 0), (-2, 2), (0, 2), (2, 2)]


def test_grid_spec_validation():
    with pytest.raises(InvalidGeometryError):
        GridSpec(anchor=(0, 0), cell=0, i_lo=0, i_hi=1, j_lo=0, j_hi=1)
    with pytest.raises(InvalidGeometryError):
        GridSpec(anchor=(0, 0), cell=1, i_lo=1, i_hi=1, j_lo=0, j_hi=1)


def _covering_misses(anchor, H_k, l_k, beta):
    """Lattice points of B_{H_{k+1}} on the y-sublattice anchor_y + H_k·ℤ
    that do not lie in exactly one block of the covering grid."""
    g = grid_for_scales(anchor, H_k, l_k, beta)
    pts = grid_points(g)
    hp = h_prime(H_k)
    H_next = l_k * H_k
    box = walk_box(anchor, H_next, beta)
    bad = []
    for x in int_range(box.x_lo, box.x_hi):
        for j in range(-(h_prime(H_next) // H_k) - 2, l_k + 2):
            y = anchor[1] + j * H_k
            if not box.contains((x, y)):
                continue
            owners = [p for p in pts
                      if 0 <= x - p[0] < H_k and 0 <= y - p[1] < hp]
            if len(owners) != 1:
                bad.append((x, y, owners))
    return bad


def test_grid_for_scales_covers_sublattice_exactly_once():
    # small exhaustive cases, the second with a j-band below the anchor
    assert _covering_misses((0, 0), 4, 2, Fraction(1)) == []
    assert _covering_misses((5, -3), 2, 4, Fraction(1)) == []


def test_grid_for_scales_bounds():
    g = grid_for_scales((0, 0), 4, 2, Fraction(1))
    assert g.cell == 4
    assert g.i_lo == -2 and g.i_hi == 4
    assert g.j_lo == 0 and g.j_hi == 2
    g2 = grid_for_scales((0, 0), 2, 4, Fraction(1))
    assert g2.j_lo == -1  # one band of blocks below the anchor
    with pytest.raises(InvalidGeometryError):
        grid_for_scales((0, 0), 0, 2, Fraction(1))
