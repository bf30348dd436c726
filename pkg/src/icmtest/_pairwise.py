"""Pairwise kernel sums over the rows of a matrix in O(n^2 p) time.

Pairs ``j < k`` are visited in row blocks holding at most ``MAX_BLOCK_PAIRS``
pairs, so memory stays bounded by ``p * MAX_BLOCK_PAIRS`` floats whatever
``n`` is.  Squared differences are produced by compiled loops; the kernel
itself is applied with vectorised numpy ufuncs.  Reductions run in a fixed
order, so results are bit-reproducible.
"""

import numpy as np
from numba import njit

MAX_BLOCK_PAIRS = 1 << 20


@njit(cache=True, nogil=True)
def _fill_sqdiff(ZT, start, stop, out):
    # out <- sum over rows l of ZT of (ZT[l, j] - ZT[l, k])^2, j in [start, stop), k > j
    q, n = ZT.shape
    idx = 0
    for j in range(start, stop):
        m = n - j - 1
        o = out[idx:idx + m]
        zj = ZT[0, j]
        r = ZT[0, j + 1:]
        for k in range(m):
            d = zj - r[k]
            o[k] = d * d
        for l in range(1, q):
            zj = ZT[l, j]
            r = ZT[l, j + 1:]
            for k in range(m):
                d = zj - r[k]
                o[k] += d * d
        idx += m
    return idx


@njit(cache=True, nogil=True)
def _scatter_rows(vals, start, stop, n, acc):
    # acc[j] += v_jk and acc[k] += v_jk for each stored pair (both orientations)
    idx = 0
    for j in range(start, stop):
        m = n - j - 1
        v = vals[idx:idx + m]
        a = acc[j + 1:]
        s = 0.0
        for k in range(m):
            s += v[k]
            a[k] += v[k]
        acc[j] += s
        idx += m


def row_blocks(n, max_pairs=None):
    """Yield ``(start, stop, npairs)`` row ranges covering all pairs ``j < k``.

    A block holds at most ``max_pairs`` pairs unless a single row has more.
    """
    if max_pairs is None:
        max_pairs = MAX_BLOCK_PAIRS
    start = 0
    while start < n - 1:
        stop, count = start, 0
        while stop < n - 1 and (count == 0 or count + (n - 1 - stop) <= max_pairs):
            count += n - 1 - stop
            stop += 1
        yield start, stop, count
        start = stop


def _apply_kernel(kind, gamma, buf):
    if kind == "gaussian":
        buf *= -gamma
        np.exp(buf, out=buf)
    elif kind == "laplace":
        buf *= gamma
        buf += 1.0
        np.reciprocal(buf, out=buf)
    else:
        raise ValueError(f"unknown kernel {kind!r}")


def _block_size(n):
    # largest npairs row_blocks can yield
    return max(min(MAX_BLOCK_PAIRS, n * (n - 1) // 2), n - 1, 1)


def _columns(Z):
    return [np.ascontiguousarray(Z[:, l][None, :]) for l in range(Z.shape[1])]


def kernel_sums(Z, kind, gamma=1.0, rows=True):
    """Sums of per-column kernel matrices ``K_l[j, k] = C(Z[j, l] - Z[k, l])``.

    Returns ``(total, rowsums)`` where ``total = sum_{j,k} prod_l K_l[j, k]``
    over all ordered pairs including ``j == k``, and ``rowsums[l, j] =
    sum_k K_l[j, k]`` (``None`` when ``rows`` is false).  Assumes ``C(0) = 1``.
    """
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    cols = _columns(Z)
    total = float(n)
    rowsums = np.ones((p, n)) if rows else None
    size = _block_size(n)
    bufs = np.empty((p, size))
    prod = np.empty(size)
    for start, stop, m in row_blocks(n):
        for l in range(p):
            buf = bufs[l, :m]
            _fill_sqdiff(cols[l], start, stop, buf)
            _apply_kernel(kind, gamma, buf)
            if rows:
                _scatter_rows(buf, start, stop, n, rowsums[l])
        out = prod[:m]
        np.copyto(out, bufs[0, :m])
        for l in range(1, p):
            out *= bufs[l, :m]
        total += 2.0 * out.sum()
    return total, rowsums


def product_kernel_sum(Z, kind, gamma=1.0):
    """``sum_{j,k} prod_l C(Z[j, l] - Z[k, l])`` without row sums.

    The Gaussian kernel factorises as ``exp(-gamma ||z_j - z_k||^2)``, so only
    one exponential per pair is needed.
    """
    if kind != "gaussian":
        return kernel_sums(Z, kind, gamma, rows=False)[0]
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    ZT = np.ascontiguousarray(Z.T)
    total = float(n)
    buf = np.empty(_block_size(n))
    for start, stop, m in row_blocks(n):
        out = buf[:m]
        _fill_sqdiff(ZT, start, stop, out)
        _apply_kernel(kind, gamma, out)
        total += 2.0 * out.sum()
    return total


def distance_sums(A, B):
    """Euclidean distance matrices ``a_jk = ||A_j - A_k||``, ``b_jk = ||B_j - B_k||``.

    Returns ``(sum_{j,k} a_jk b_jk, rowsums of a, rowsums of b)``.
    """
    A = np.ascontiguousarray(np.asarray(A, dtype=float).T)
    B = np.ascontiguousarray(np.asarray(B, dtype=float).T)
    n = A.shape[1]
    cross = 0.0
    ra = np.zeros(n)
    rb = np.zeros(n)
    size = _block_size(n)
    bufa = np.empty(size)
    bufb = np.empty(size)
    for start, stop, m in row_blocks(n):
        a, b = bufa[:m], bufb[:m]
        _fill_sqdiff(A, start, stop, a)
        _fill_sqdiff(B, start, stop, b)
        np.sqrt(a, out=a)
        np.sqrt(b, out=b)
        _scatter_rows(a, start, stop, n, ra)
        _scatter_rows(b, start, stop, n, rb)
        cross += 2.0 * np.dot(a, b)
    return cross, ra, rb
