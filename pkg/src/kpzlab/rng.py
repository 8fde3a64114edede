"""Counter-based random number generation (Philox4x64-10).

Every normal draw in the package is addressed, not streamed: the value at
(seed, stream, row, col) is a pure function of those four integers, so any
block of a noise matrix, driver path, or bridge ensemble can be produced in
any order, on any thread, with bit-identical results.

Layout: key = (seed, stream), counter = (row, col_block, 0, 0).  Each counter
yields four 64-bit words; word ``col % 4`` of block ``col // 4`` feeds one
double via the top 53 bits and the inverse normal CDF.  numpy's own Philox is
the reference for the round function (its block i equals our counter i + 1
because it increments before generating).
"""

import os

import numpy as np
from scipy.special import ndtri

# the workqueue layer is fork-safe (worker pools fork); OpenMP is not
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

# Stream tags: disjoint key halves give independent streams per seed.
STREAM_NOISE = 0x01
STREAM_DRIVER = 0x02
STREAM_BRIDGE = 0x03
STREAM_INIT = 0x04

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_ROUNDS = 10


def _philox_words_numpy(c0, c1, key0, key1):
    """Pure-numpy Philox4x64-10. c0, c1, key0, key1: uint64 arrays (broadcast).

    Returns an (n, 4) uint64 array of output words.
    """
    c0 = np.asarray(c0, dtype=np.uint64).ravel()
    c1 = np.asarray(c1, dtype=np.uint64).ravel()
    key0 = np.broadcast_to(np.asarray(key0, dtype=np.uint64), c0.shape).copy()
    key1 = np.broadcast_to(np.asarray(key1, dtype=np.uint64), c0.shape).copy()
    c2 = np.zeros_like(c0)
    c3 = np.zeros_like(c0)
    with np.errstate(over="ignore"):
        for _ in range(_ROUNDS):
            # 64x64 -> high word via 32-bit limbs; low word wraps natively.
            a_lo = _M0 & _MASK32
            a_hi = _M0 >> np.uint64(32)
            b_lo = c0 & _MASK32
            b_hi = c0 >> np.uint64(32)
            hi_lo = a_hi * b_lo
            cross = ((a_lo * b_lo) >> np.uint64(32)) + (hi_lo & _MASK32) + a_lo * b_hi
            hi0 = a_hi * b_hi + (hi_lo >> np.uint64(32)) + (cross >> np.uint64(32))
            lo0 = _M0 * c0

            a_lo = _M1 & _MASK32
            a_hi = _M1 >> np.uint64(32)
            b_lo = c2 & _MASK32
            b_hi = c2 >> np.uint64(32)
            hi_lo = a_hi * b_lo
            cross = ((a_lo * b_lo) >> np.uint64(32)) + (hi_lo & _MASK32) + a_lo * b_hi
            hi1 = a_hi * b_hi + (hi_lo >> np.uint64(32)) + (cross >> np.uint64(32))
            lo1 = _M1 * c2

            c0, c1, c2, c3 = hi1 ^ c1 ^ key0, lo1, hi0 ^ c3 ^ key1, lo0
            key0 = key0 + _W0
            key1 = key1 + _W1
    return np.stack([c0, c1, c2, c3], axis=1)


try:  # pragma: no cover - exercised indirectly; fallback tested explicitly
    from numba import njit, prange, uint64 as _nb_u64

    @njit(_nb_u64(_nb_u64, _nb_u64), inline="always", cache=True)
    def _mulhi(a, b):
        a_lo = a & _MASK32
        a_hi = a >> np.uint64(32)
        b_lo = b & _MASK32
        b_hi = b >> np.uint64(32)
        hi_lo = a_hi * b_lo
        cross = ((a_lo * b_lo) >> np.uint64(32)) + (hi_lo & _MASK32) + a_lo * b_hi
        return a_hi * b_hi + (hi_lo >> np.uint64(32)) + (cross >> np.uint64(32))

    @njit(cache=True, parallel=True)
    def _philox_kernel(c0s, c1s, key0s, key1s):
        n = c0s.shape[0]
        out = np.empty((n, 4), dtype=np.uint64)
        for i in prange(n):
            c0 = c0s[i]
            c1 = c1s[i]
            c2 = np.uint64(0)
            c3 = np.uint64(0)
            k0 = key0s[i]
            k1 = key1s[i]
            for _ in range(_ROUNDS):
                hi0 = _mulhi(_M0, c0)
                lo0 = _M0 * c0
                hi1 = _mulhi(_M1, c2)
                lo1 = _M1 * c2
                c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
                k0 += _W0
                k1 += _W1
            out[i, 0] = c0
            out[i, 1] = c1
            out[i, 2] = c2
            out[i, 3] = c3
        return out

    def _philox_words(c0, c1, key0, key1):
        c0 = np.ascontiguousarray(np.asarray(c0, dtype=np.uint64).ravel())
        c1 = np.ascontiguousarray(np.asarray(c1, dtype=np.uint64).ravel())
        key0 = np.ascontiguousarray(
            np.broadcast_to(np.asarray(key0, dtype=np.uint64), c0.shape)
        )
        key1 = np.ascontiguousarray(
            np.broadcast_to(np.asarray(key1, dtype=np.uint64), c0.shape)
        )
        return _philox_kernel(c0, c1, key0, key1)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _philox_words = _philox_words_numpy
    HAVE_NUMBA = False


def philox_words(c0, c1, key0, key1):
    """Raw Philox4x64-10 output words for counter arrays (c0, c1, 0, 0)."""
    return _philox_words(c0, c1, key0, key1)


def words_to_uniform(words):
    """Map 64-bit words to doubles in (0, 1), using the top 53 bits."""
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


def words_to_normal(words):
    return ndtri(words_to_uniform(words))


def normal_matrix(seed, stream, n_rows, n_cols, row0=0, col0=0, key1_extra=0):
    """Standard-normal matrix addressed by (seed, stream, row, col).

    Rows index counter word c0 = row0 + r, columns map to counter c1 =
    (col0 + c) // 4 and word lane (col0 + c) % 4.  The same (seed, stream,
    row, col) always yields the same double regardless of the requested
    block, which is what makes parallel and out-of-order generation safe.

    ``key1_extra`` packs a sub-stream (e.g. a Monte Carlo sample index) into
    the high bits of the second key word.
    """
    if n_rows <= 0 or n_cols <= 0:
        return np.zeros((max(n_rows, 0), max(n_cols, 0)))
    b0 = col0 // 4
    b1 = (col0 + n_cols - 1) // 4
    n_blocks = b1 - b0 + 1
    rows = np.arange(row0, row0 + n_rows, dtype=np.uint64)
    blocks = np.arange(b0, b0 + n_blocks, dtype=np.uint64)
    c0 = np.repeat(rows, n_blocks)
    c1 = np.tile(blocks, n_rows)
    key0 = np.uint64(seed)
    key1 = np.uint64(stream) + (np.uint64(key1_extra) << np.uint64(20))
    w = philox_words(c0, c1, key0, key1)
    z = words_to_normal(w).reshape(n_rows, n_blocks * 4)
    lo = col0 - 4 * b0
    return np.ascontiguousarray(z[:, lo:lo + n_cols])


def normal_matrix_multiseed(seeds, stream, row, n_cols, col0=0, key1_extra=0):
    """One row of normals per seed, vectorized over seeds.

    Returns shape (len(seeds), n_cols); row s is identical to
    ``normal_matrix(seeds[s], stream, 1, n_cols, row0=row, ...)``.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    b0 = col0 // 4
    b1 = (col0 + n_cols - 1) // 4
    n_blocks = b1 - b0 + 1
    blocks = np.arange(b0, b0 + n_blocks, dtype=np.uint64)
    c0 = np.full(len(seeds) * n_blocks, row, dtype=np.uint64)
    c1 = np.tile(blocks, len(seeds))
    key0 = np.repeat(seeds, n_blocks)
    key1 = np.uint64(stream) + (np.uint64(key1_extra) << np.uint64(20))
    w = philox_words(c0, c1, key0, key1)
    z = words_to_normal(w).reshape(len(seeds), n_blocks * 4)
    lo = col0 - 4 * b0
    return np.ascontiguousarray(z[:, lo:lo + n_cols])
