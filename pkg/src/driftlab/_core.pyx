# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled walk engine.

Exact mirror of ``_fallback.run_walk`` — same argument list, same return
tuple, bit-identical trajectories.  Counters and histories live in sparse
hash maps so huge windows cost nothing per unvisited site.
"""

import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference as deref, preincrement as inc
from libcpp.unordered_map cimport unordered_map

ctypedef unsigned long long u64
ctypedef long long i64

cdef enum:
    HIT = 0
    CENSORED = 1
    WINDOW = 2
    FLOOR = 3

cdef u64 _MASK = 0xFFFFFFFFFFFFFFFFULL
cdef u64 _PHI = 0x9E3779B97F4A7C15ULL
cdef u64 _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef u64 _MIX2 = 0x94D049BB133111EBULL
cdef double _INV53 = 2.0 ** -53
cdef u64 _TAG_UNIFORM_HI = (<u64>1) << 56
cdef u64 _CTR_MASK = 0x00FFFFFFFFFFFFFFULL


cdef inline u64 _site_key(i64 x, i64 y) nogil:
    return ((<u64>(<unsigned int>x)) << 32) | (<u64>(<unsigned int>y))


cdef inline double _uniform(u64 seed, i64 x, i64 y, u64 i) nogil:
    cdef u64 h = seed ^ _PHI
    h = h + _site_key(x, y)
    h = (h ^ (h >> 30)) * _MIX1
    h = (h ^ (h >> 27)) * _MIX2
    h = h ^ (h >> 31)
    h = h + (_TAG_UNIFORM_HI | (i & _CTR_MASK))
    h = (h ^ (h >> 30)) * _MIX1
    h = (h ^ (h >> 27)) * _MIX2
    h = h ^ (h >> 31)
    return <double>(h >> 11) * _INV53


def run_walk(states, i64 ox, i64 oy, i64 nx, i64 ny, bint unbounded,
             cnp.ndarray[double, ndim=2] cdf, useed, i64 x0, i64 y0,
             dict counts, dict gamma, target_y, cap, floor_y, bint record,
             bint skip_counter, u_fn):
    if u_fn is not None:
        raise ValueError("u_fn hooks require the python engine")

    cdef u64 seed = <u64>(useed & 0xFFFFFFFFFFFFFFFF)
    cdef i64 x = x0, y = y0, min_y = y0, max_adx = 0, adx
    cdef i64 n = 0, ncap = <i64>cap
    cdef int status = CENSORED
    cdef bint has_target = target_y is not None
    cdef bint has_floor = floor_y is not None
    cdef i64 tgt = <i64>target_y if has_target else 0
    cdef i64 flr = <i64>floor_y if has_floor else 0
    cdef i64 c, i, s, dx, dy
    cdef double u
    cdef u64 key

    cdef const int[::1] st
    cdef double[:, ::1] table = cdf
    if unbounded:
        st = np.zeros(1, dtype=np.int32)
    else:
        st = states

    cdef unordered_map[u64, i64] cmap
    cdef unordered_map[u64, i64] gmap
    cdef unordered_map[u64, i64].iterator it
    for site, v in counts.items():
        cmap[_site_key(site[0], site[1])] = v
    for site, v in gamma.items():
        gmap[_site_key(site[0], site[1])] = v

    cdef cnp.ndarray[cnp.int64_t, ndim=1] xs_a, ys_a, idxs_a
    cdef cnp.ndarray[double, ndim=1] us_a
    cdef cnp.int64_t[::1] xs_v, ys_v, idxs_v
    cdef double[::1] us_v
    if record:
        xs_a = np.empty(ncap + 1, dtype=np.int64)
        ys_a = np.empty(ncap + 1, dtype=np.int64)
        idxs_a = np.empty(ncap, dtype=np.int64) if ncap > 0 else np.empty(0, dtype=np.int64)
        us_a = np.empty(ncap, dtype=np.float64) if ncap > 0 else np.empty(0, dtype=np.float64)
        xs_v = xs_a
        ys_v = ys_a
        idxs_v = idxs_a
        us_v = us_a
        xs_v[0] = x
        ys_v[0] = y

    if has_target and y >= tgt:
        status = HIT
    elif has_floor and y < flr:
        status = FLOOR
    else:
        while n < ncap:
            if unbounded:
                s = 0
            else:
                if not (ox <= x < ox + nx and oy <= y < oy + ny):
                    status = WINDOW
                    break
                s = st[(y - oy) * nx + (x - ox)]

            key = _site_key(x, y)
            it = cmap.find(key)
            c = 0 if it == cmap.end() else deref(it).second
            it = gmap.find(key)
            i = c + (0 if it == gmap.end() else deref(it).second) + 1
            u = _uniform(seed, x, y, <u64>i)
            cmap[key] = c + (2 if skip_counter else 1)

            if u < table[s, 0]:
                x += 1
            elif u < table[s, 1]:
                x -= 1
            elif u < table[s, 2]:
                y += 1
            else:
                y -= 1
            n += 1
            if record:
                xs_v[n] = x
                ys_v[n] = y
                idxs_v[n - 1] = i
                us_v[n - 1] = u
            if y < min_y:
                min_y = y
            adx = x - x0
            if adx < 0:
                adx = -adx
            if adx > max_adx:
                max_adx = adx
            if has_target and y >= tgt:
                status = HIT
                break
            if has_floor and y < flr:
                status = FLOOR
                break

    counts.clear()
    it = cmap.begin()
    while it != cmap.end():
        key = deref(it).first
        counts[(<i64><int>(key >> 32), <i64><int>(key & 0xFFFFFFFFULL))] = deref(it).second
        inc(it)

    if record:
        return (status, n, x, y, min_y, max_adx,
                xs_a[:n + 1].copy(), ys_a[:n + 1].copy(),
                idxs_a[:n].copy(), us_a[:n].copy())
    return (status, n, x, y, min_y, max_adx, None, None, None, None)
