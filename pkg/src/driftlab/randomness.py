"""Counter-based randomness.

Every random quantity in the package is a pure function

    value(seed, role-tag, coordinates) -> 64-bit -> uniform in [0,1)

computed with a splitmix64-style keyed hash.  There is no sequential RNG
state anywhere: re-reads are bit-identical, queries are order- and
thread-independent, and parallel workers derive sub-seeds without
coordination.  The scalar functions here are mirrored exactly by the
numpy-vectorized variants (for field materialization) and by the C loop in
``driftlab._core`` (for walk stepping); test_randomness.py pins the three
against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1
_PHI = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# Role tags: one per consumer so distinct uses of the same coordinates never
# collide.  Tag occupies the top byte of the second hash word.
TAG_UNIFORM = 1  # the coupling's U(x, i)
TAG_STATE = 2  # iid site states
TAG_POISSON = 3  # Boolean percolation cell counts
TAG_POINT = 4  # Boolean percolation point coordinates/radii
TAG_NORMAL = 5  # Gaussian field driving normals
TAG_YFIELD = 6  # factor-of-iid underlying field
TAG_ROW0 = 7  # dynamic-1d initial row
TAG_FLIP = 8  # dynamic-1d Markov flips
TAG_TRIAL = 9  # per-trial seed derivation
TAG_GENERIC = 10


def mix64(z: int) -> int:
    """Finalizing 64-bit mixer (splitmix64's output stage)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def keyed64(seed: int, a: int, b: int) -> int:
    """Hash two 64-bit words under a seed; the package-wide keyed hash."""
    h = (seed ^ _PHI) & _MASK
    h = mix64((h + (a & _MASK)) & _MASK)
    h = mix64((h + (b & _MASK)) & _MASK)
    return h


def site_key(x: int, y: int) -> int:
    """Pack a lattice site into one 64-bit word (|x|,|y| < 2^31)."""
    return ((x & 0xFFFFFFFF) << 32) | (y & 0xFFFFFFFF)


def tag_word(tag: int, counter: int = 0) -> int:
    """Second hash word: role tag in the top byte, counter below (< 2^56)."""
    return ((tag & 0xFF) << 56) | (counter & 0x00FFFFFFFFFFFFFF)


def u64_to_unit(h: int) -> float:
    """Top 53 bits of a hash as a float in [0, 1); exact and portable."""
    return (h >> 11) * _INV53


def uniform(seed: int, tag: int, x: int, y: int, counter: int = 0) -> float:
    return u64_to_unit(keyed64(seed, site_key(x, y), tag_word(tag, counter)))


def derive_seed(master: int, index: int, stream: int = 0) -> int:
    """Per-trial/per-stream sub-seed: hash(master, index, stream)."""
    return keyed64(master, index, tag_word(TAG_TRIAL, stream))


# ---------------------------------------------------------------------------
# numpy-vectorized mirror (used by field materialization; must match scalar
# results bit for bit).

_U64 = np.uint64
_NP_PHI = _U64(_PHI)
_NP_MIX1 = _U64(_MIX1)
_NP_MIX2 = _U64(_MIX2)


def mix64_np(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> _U64(30)
    z *= _NP_MIX1
    z ^= z >> _U64(27)
    z *= _NP_MIX2
    z ^= z >> _U64(31)
    return z


def keyed64_np(seed: int, a: np.ndarray, b) -> np.ndarray:
    """Vectorized keyed64; a, b broadcastable uint64 arrays/scalars."""
    a = np.asarray(a).astype(np.uint64)
    b = np.asarray(b).astype(np.uint64)
    h0 = _U64(seed & _MASK) ^ _NP_PHI
    h = mix64_np(h0 + a)
    h = mix64_np(h + b)
    return h


def site_key_np(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xs = np.asarray(x, dtype=np.int64).astype(np.uint64) & _U64(0xFFFFFFFF)
    ys = np.asarray(y, dtype=np.int64).astype(np.uint64) & _U64(0xFFFFFFFF)
    return (xs << _U64(32)) | ys


def unit_np(h: np.ndarray) -> np.ndarray:
    return (h >> _U64(11)).astype(np.float64) * _INV53


def uniform_grid(seed: int, tag: int, xs: np.ndarray, ys: np.ndarray,
                 counter: int = 0) -> np.ndarray:
    """Uniform values for broadcastable coordinate arrays."""
    return unit_np(keyed64_np(seed, site_key_np(xs, ys), _U64(tag_word(tag, counter))))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformField:
    """The coupling's U(x, i): one uniform per (site, visit index).

    Purely functional: same (seed, x, i) always returns the same value.
    Indices start at 1 (a walk's first consumption at a site with zero
    history is U(x, 1)).
    """

    seed: int

    def value(self, site: tuple[int, int], i: int) -> float:
        if i < 1:
            raise ValueError(f"uniform index must be >= 1, got {i}")
        x, y = site
        return uniform(self.seed, TAG_UNIFORM, x, y, i)

    def raw64(self, site: tuple[int, int], i: int) -> int:
        x, y = site
        return keyed64(self.seed, site_key(x, y), tag_word(TAG_UNIFORM, i))
