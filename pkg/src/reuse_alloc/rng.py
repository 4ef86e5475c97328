"""Counter-based deterministic random streams.

Every random draw in the toolkit is a pure function of (master seed, key),
where the key encodes what the draw is for: (trial, resource, unit, use
counter) for usage durations, (trial, arrival) for policy coin flips, and so
on. This makes trials reproducible bit-for-bit, independent of execution
order, and lets two policies share identical duration draws for the same
(resource, unit, use) key (common random numbers).

The generator is a splitmix64-style finalizer chain: each key part is folded
into the state and passed through a 64-bit avalanche mix. Not cryptographic,
but statistically solid for Monte Carlo at the scales used here, and cheap
enough to evaluate per-draw (scalar path) or per-array (numpy path).
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FOLD = 0xD1342543DE82EF95
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# Key tags keep draw purposes in disjoint streams.
TAG_DURATION = 0x5A
TAG_POLICY = 0x3C
TAG_CHOICE = 0x7E
TAG_TRIAL = 0x11


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def derive(seed: int, *parts: int) -> int:
    """Fold integer key parts into a 64-bit state, one mix per part."""
    h = _mix((seed ^ 0x9D2C5680A7B4F2E1) & _MASK)
    for p in parts:
        h = _mix(((h + _GOLDEN) ^ ((p * _FOLD) & _MASK)) & _MASK)
    return h


def uniform(seed: int, *parts: int) -> float:
    """One uniform in [0, 1), a pure function of (seed, parts)."""
    return (derive(seed, *parts) >> 11) * 2.0**-53


def _mix_vec_inplace(z: np.ndarray) -> np.ndarray:
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def uniform_array(seed: int, parts: tuple, counters: np.ndarray) -> np.ndarray:
    """Vector of uniforms over a counter axis, matching the scalar stream.

    uniform_array(s, p, arange(n))[i] == uniform(s, *p, i) exactly.
    """
    h0 = derive(seed, *parts)
    with np.errstate(over="ignore"):
        h = np.asarray(counters, dtype=np.uint64) * np.uint64(_FOLD)
        h ^= np.uint64((h0 + _GOLDEN) & _MASK)
        _mix_vec_inplace(h)
        h >>= np.uint64(11)
    return h * 2.0**-53


def derive_vec(seed, *parts) -> np.ndarray:
    """Array counterpart of derive(): seed and any part may be integer arrays
    (broadcast elementwise); equals the scalar chain entry by entry."""
    with np.errstate(over="ignore"):
        h = np.asarray(seed, dtype=np.uint64) ^ np.uint64(0x9D2C5680A7B4F2E1)
        h = _mix_vec_inplace(np.array(h, dtype=np.uint64))
        for p in parts:
            h = (h + np.uint64(_GOLDEN)) ^ (np.asarray(p, dtype=np.uint64) * np.uint64(_FOLD))
            h = _mix_vec_inplace(np.array(h, dtype=np.uint64))
    return h


def uniform_vec(seed, *parts) -> np.ndarray:
    """Broadcasting uniforms: elementwise equal to uniform(seed_i, *parts_i)."""
    h = derive_vec(seed, *parts)
    return (h >> np.uint64(11)) * 2.0**-53
