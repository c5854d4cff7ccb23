"""Pure-Python walk engine (reference implementation).

The compiled engine in ``_core`` mirrors this function exactly; both must
produce bit-identical trajectories for the same arguments.  Keep the two in
lockstep — any behavioural change here must be ported there.

Statuses (shared literal values with the compiled engine):
    0 HIT      reached a row >= target_y
    1 CENSORED step cap exhausted
    2 WINDOW   tried to consume outside the materialized window
    3 FLOOR    arrived strictly below floor_y (that row is never read)
"""

from __future__ import annotations

import numpy as np

HIT = 0
CENSORED = 1
WINDOW = 2
FLOOR = 3

_MASK = 0xFFFFFFFFFFFFFFFF
_PHI = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53
_TAG_UNIFORM_HI = 1 << 56


def run_walk(states, ox, oy, nx, ny, unbounded, cdf, useed, x0, y0,
             counts, gamma, target_y, cap, floor_y, record,
             skip_counter, u_fn):
    """Run one quenched walk; returns the raw engine tuple.

    ``counts`` is mutated in place (departure counters).  ``gamma`` is the
    inherited history and is read-only.  The uniform consumed at site z is
    U(z, counts[z] + gamma[z] + 1); the counter advances on departure.  With
    ``skip_counter`` the counter advances by 2 per departure (the
    coupling-breaking control).

    Returns ``(status, n, fx, fy, min_y, max_abs_dx, xs, ys, idxs, us)`` with
    xs/ys of length n+1 and idxs/us of length n when ``record``, else None.
    """
    x = x0
    y = y0
    min_y = y0
    max_adx = 0
    if record:
        xs = [x]
        ys = [y]
        idxs = []
        us = []
    seed = useed & _MASK
    n = 0
    status = CENSORED

    if target_y is not None and y >= target_y:
        status = HIT
    elif floor_y is not None and y < floor_y:
        status = FLOOR
    else:
        while n < cap:
            if unbounded:
                s = 0
            else:
                if not (ox <= x < ox + nx and oy <= y < oy + ny):
                    status = WINDOW
                    break
                s = states[(y - oy) * nx + (x - ox)]

            site = (x, y)
            c = counts.get(site, 0)
            i = c + gamma.get(site, 0) + 1
            if u_fn is not None:
                u = u_fn(x, y, i)
            else:
                # uniform(seed, TAG_UNIFORM, x, y, i), inlined
                h = (seed ^ _PHI) & _MASK
                h = (h + (((x & 0xFFFFFFFF) << 32) | (y & 0xFFFFFFFF))) & _MASK
                h = ((h ^ (h >> 30)) * _MIX1) & _MASK
                h = ((h ^ (h >> 27)) * _MIX2) & _MASK
                h ^= h >> 31
                h = (h + (_TAG_UNIFORM_HI | (i & 0x00FFFFFFFFFFFFFF))) & _MASK
                h = ((h ^ (h >> 30)) * _MIX1) & _MASK
                h = ((h ^ (h >> 27)) * _MIX2) & _MASK
                h ^= h >> 31
                u = (h >> 11) * _INV53
            counts[site] = c + (2 if skip_counter else 1)

            row = cdf[s]
            if u < row[0]:
                x += 1
            elif u < row[1]:
                x -= 1
            elif u < row[2]:
                y += 1
            else:
                y -= 1
            n += 1
            if record:
                xs.append(x)
                ys.append(y)
                idxs.append(i)
                us.append(u)
            if y < min_y:
                min_y = y
            adx = x - x0
            if adx < 0:
                adx = -adx
            if adx > max_adx:
                max_adx = adx
            if target_y is not None and y >= target_y:
                status = HIT
                break
            if floor_y is not None and y < floor_y:
                status = FLOOR
                break

    if record:
        return (status, n, x, y, min_y, max_adx,
                np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64),
                np.asarray(idxs, dtype=np.int64), np.asarray(us, dtype=np.float64))
    return (status, n, x, y, min_y, max_adx, None, None, None, None)
