"""Counter-based uniform random streams (Philox4x32-10).

Every path of a Monte Carlo run owns a stream identified by
(master_seed, stream_id).  Draw j of a stream is a pure function of
(master_seed, stream_id, j): the Philox key is a hash of the master
seed and the 64-bit stream id sits in the counter's upper words, so
streams are independent counter blocks of one keyed generator.  No
generator object or state is carried around, which keeps path-level
parallelism order-independent and bit-reproducible.
"""

import numpy as np
from numba import njit, prange, config

# keep the threading layer portable; 'workqueue' is always available
config.THREADING_LAYER = "workqueue"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_U32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_INV53 = 2.0 ** -53


def splitmix64(z: int) -> int:
    """One SplitMix64 finalizer round; bijective on 64-bit ints."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def philox_key(master_seed: int) -> tuple[np.uint32, np.uint32]:
    """64-bit Philox key (two 32-bit words) derived from the master seed."""
    k = splitmix64(master_seed & _MASK64)
    return np.uint32(k & 0xFFFFFFFF), np.uint32(k >> 32)


@njit(inline="always", cache=True)
def _crank(i, s_lo, s_hi, k0, k1):
    """One Philox4x32-10 block: counter (i_lo, i_hi, s_lo, s_hi) -> 2 uint64."""
    c0 = np.uint32(i & _U32)
    c1 = np.uint32(i >> _SH32)
    c2 = s_lo
    c3 = s_hi
    kk0 = k0
    kk1 = k1
    for _ in range(10):
        p0 = np.uint64(0xD2511F53) * np.uint64(c0)
        p1 = np.uint64(0xCD9E8D57) * np.uint64(c2)
        c0 = np.uint32(np.uint32(p1 >> _SH32) ^ c1 ^ kk0)
        c1 = np.uint32(p1 & _U32)
        c2 = np.uint32(np.uint32(p0 >> _SH32) ^ c3 ^ kk1)
        c3 = np.uint32(p0 & _U32)
        kk0 = np.uint32(kk0 + np.uint32(0x9E3779B9))
        kk1 = np.uint32(kk1 + np.uint32(0xBB67AE85))
    a = (np.uint64(c0) << _SH32) | np.uint64(c1)
    b = (np.uint64(c2) << _SH32) | np.uint64(c3)
    return a, b


@njit(cache=True, parallel=True)
def fill_uniforms(k0, k1, stream_start, offset, out):
    """Fill out[r, j] with draw (offset + j) of stream (stream_start + r).

    Uniforms are (k + 0.5) * 2^-53 with k the top 53 bits of a Philox
    word, so they lie strictly inside (0, 1).
    """
    n_rows, n_cols = out.shape
    for r in prange(n_rows):
        s = np.uint64(stream_start + r)
        s_lo = np.uint32(s & _U32)
        s_hi = np.uint32(s >> _SH32)
        j = 0
        base = np.uint64(offset)
        # draws come in pairs per crank; re-crank on an odd offset boundary
        if offset % 2 == 1:
            a, b = _crank((base - np.uint64(1)) >> np.uint64(1), s_lo, s_hi, k0, k1)
            out[r, 0] = (np.float64(b >> np.uint64(11)) + 0.5) * _INV53
            j = 1
        while j < n_cols:
            idx = (base + np.uint64(j)) >> np.uint64(1)
            a, b = _crank(idx, s_lo, s_hi, k0, k1)
            out[r, j] = (np.float64(a >> np.uint64(11)) + 0.5) * _INV53
            if j + 1 < n_cols:
                out[r, j + 1] = (np.float64(b >> np.uint64(11)) + 0.5) * _INV53
            j += 2


@njit(cache=True, parallel=True)
def besq3_paths(z, u_exp, x0sq, dts, out):
    """Exact squared-Bessel(3) paths on (possibly nonuniform) step sizes.

    One transition over dt > 0 is dt * ((Z + sqrt(X/dt))^2 + chi2_2)
    with chi2_2 = -2 log U, the noncentral chi-squared(3) decomposition.
    A zero step keeps the state.  out has one more column than z; column
    0 is x0sq.
    """
    n_rows, n_steps = z.shape
    for r in prange(n_rows):
        x = x0sq
        out[r, 0] = x
        for i in range(n_steps):
            dt = dts[i]
            if dt > 0.0:
                w = z[r, i] + np.sqrt(x / dt)
                x = dt * (w * w - 2.0 * np.log(u_exp[r, i]))
            out[r, i + 1] = x
