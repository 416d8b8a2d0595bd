"""Counter-based random streams (Philox4x32-10) for reproducible Monte Carlo.

Every random number is a pure function of ``(seed, job, particle, step, tag,
index)``.  The 64-bit seed becomes the Philox key; the remaining coordinates
fill the 128-bit counter::

    word 0 : step index
    word 1 : particle (stream) index
    word 2 : job index (trial, replicate or solver id)
    word 3 : tag << 24 | block

so results never depend on evaluation order, thread count or batching.
"""

import numpy as np
from scipy import stats

_MASK = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_SHIFT32 = np.uint64(32)

# stream purposes
BROWNIAN = 1
JUMP_COUNT = 2
JUMP_ATOM = 3
INITIAL = 4
RESAMPLE = 5
PROBE = 6
PROBE_JUMP = 7

# reserved job ids; trial/replicate jobs count up from 0
MEAN_FIELD_JOB = 0xFFFF0000
REFERENCE_JOB = 0xFFFF0001

MAX_BLOCKS = 1 << 24


def split_seed(seed):
    """Split a 64-bit seed into the two 32-bit Philox key words."""
    seed = int(seed)
    if seed < 0 or seed >= 1 << 64:
        raise ValueError("seed must lie in [0, 2**64)")
    return seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    Parameters
    ----------
    counter : array_like of shape (..., 4)
        Counter words, each in [0, 2**32).
    key : sequence of two ints
        Key words, each in [0, 2**32).
    rounds : int, optional
        Number of rounds (10 is the standard choice).

    Returns
    -------
    out : ndarray of uint32, shape (..., 4)
    """
    c = np.asarray(counter, dtype=np.uint64) & _MASK
    c0, c1, c2, c3 = c[..., 0], c[..., 1], c[..., 2], c[..., 3]
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for _ in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SHIFT32) ^ c1 ^ np.uint64(k0), p1 & _MASK,
                          (p0 >> _SHIFT32) ^ c3 ^ np.uint64(k1), p0 & _MASK)
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def _blocks(seed, job, particle, step, tag, nblocks):
    if nblocks > MAX_BLOCKS:
        raise ValueError("too many values requested from one stream")
    job, particle, step = np.broadcast_arrays(
        np.asarray(job, dtype=np.uint64), np.asarray(particle, dtype=np.uint64),
        np.asarray(step, dtype=np.uint64))
    shape = job.shape
    ctr = np.empty(shape + (nblocks, 4), dtype=np.uint64)
    ctr[..., 0] = step[..., None]
    ctr[..., 1] = particle[..., None]
    ctr[..., 2] = job[..., None]
    ctr[..., 3] = (np.uint64(tag) << np.uint64(24)) | np.arange(nblocks, dtype=np.uint64)
    return philox4x32(ctr, split_seed(seed))


def uniforms(seed, job, particle, step, tag, count):
    """Open-interval uniforms on (0, 1) with 53-bit resolution.

    ``job``, ``particle`` and ``step`` broadcast against each other; the
    result has shape ``broadcast_shape + (count,)``.  Value ``j`` of a stream
    does not depend on ``count``, so streams can be extended consistently.
    """
    nblocks = max((count + 1) // 2, 1)
    w = _blocks(seed, job, particle, step, tag, nblocks).astype(np.uint64)
    hi = (w[..., 0::2] >> np.uint64(5)).astype(np.float64)
    lo = (w[..., 1::2] >> np.uint64(6)).astype(np.float64)
    u = (hi * 67108864.0 + lo + 0.5) * (1.0 / 9007199254740992.0)
    return u.reshape(u.shape[:-2] + (-1,))[..., :count]


def normals(seed, job, particle, step, tag, count):
    """Standard normals by the Box-Muller transform of :func:`uniforms`."""
    m = max((count + 1) // 2, 1)
    u = uniforms(seed, job, particle, step, tag, 2 * m)
    r = np.sqrt(-2.0 * np.log(u[..., 0::2]))
    theta = 2.0 * np.pi * u[..., 1::2]
    z = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    return z.reshape(z.shape[:-2] + (-1,))[..., :count]


def poisson_table(lam):
    """Cumulative distribution table used by :func:`poisson_from_uniform`."""
    lam = float(lam)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("Poisson rate must be finite and nonnegative")
    if lam == 0.0:
        return np.array([1.0])
    kmax = int(stats.poisson.ppf(1.0 - 1e-16, lam)) + 2
    return stats.poisson.cdf(np.arange(kmax + 1), lam)


def poisson_from_uniform(u, table):
    """Poisson counts by inversion of a cumulative table."""
    k = np.searchsorted(table, u, side="left")
    return np.minimum(k, len(table) - 1)


def categorical_from_uniform(u, weights):
    """Index draws proportional to ``weights`` by inversion."""
    cum = np.cumsum(weights, dtype=np.float64)
    cum /= cum[-1]
    return np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
