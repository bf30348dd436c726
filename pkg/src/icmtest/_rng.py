"""Seeded, counter-based random streams.

Every consumer derives its generator from ``(seed, *keys)`` so results do not
depend on the order or thread in which replicates are evaluated.
"""

import numpy as np

# domain tags keep streams of different consumers disjoint
DATA = 1
PERMUTATION = 2
BOOTSTRAP = 3
FASTICA = 4
WARP = 5
REPLICATION = 6

_MASK64 = (1 << 64) - 1


def stream(seed, *keys):
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def random_orthogonal(rng, p):
    """Haar-distributed orthogonal matrix from the QR of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def derived_seed(seed, *keys):
    """A 63-bit integer seed for a sub-task, e.g. one simulation replication."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
