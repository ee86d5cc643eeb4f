"""Binary vector primitives: validation, distances, packing, rounding.

Vectors live in {0,1}^n as uint8 arrays; relaxed templates live in [0,1]^n
as float64 arrays.  Distance helpers accept either and agree on the overlap.
"""

import numpy as np

from .errors import DimensionError, InsufficientInput

__all__ = [
    "as_binary",
    "as_real",
    "hamming_distance",
    "l1_distance",
    "l1_cross_matrix",
    "hamming_matrix",
    "pack_rows",
    "round_to_binary",
    "min_pairwise_distance",
]


def as_binary(a):
    """Validate and return a uint8 array with entries in {0, 1}."""
    arr = np.asarray(a)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("binary vector entries must be 0 or 1")
    if arr.dtype != np.uint8:
        arr = arr.astype(np.uint8, casting="unsafe")
    return arr


def as_real(a):
    """Validate and return a float64 array with entries in [0, 1]."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("relaxed template entries must lie in [0, 1]")
    return arr


def _check_same_length(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(
            f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


def hamming_distance(a, b):
    """Number of positions where two binary vectors differ."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_length(a, b)
    return int(np.count_nonzero(a != b))


def l1_distance(a, b):
    """Sum of |a_s - b_s|; equals the Hamming distance on 0/1 inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_length(a, b)
    return float(np.abs(a - b).sum())


def l1_cross_matrix(X, T):
    """All l1 distances between binary rows of X and rows of T in [0,1]^n.

    For x in {0,1} and t in [0,1], |x - t| = x + t - 2xt, so the full
    matrix reduces to row sums plus one matmul.  Exact for binary T
    (all intermediate sums are small integers).

    Returns a (len(X), len(T)) float64 array.
    """
    X = np.asarray(X)
    T = np.asarray(T, dtype=np.float64)
    _check_same_length(X, T)
    Xf = X.astype(np.float64)
    D = Xf.sum(axis=1)[:, None] + T.sum(axis=1)[None, :] - 2.0 * (Xf @ T.T)
    # tiny negative residue from float cancellation
    np.maximum(D, 0.0, out=D)
    return D


def pack_rows(X):
    """Pack binary rows into bytes, least significant bit first."""
    X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
    return np.packbits(X, axis=-1, bitorder="little")


def hamming_matrix(A, B):
    """All pairwise Hamming distances between binary rows of A and B.

    Packs to bytes and popcounts the xor, which is ~8x lighter than the
    dense comparison for the sizes used here.
    """
    A = np.atleast_2d(np.asarray(A))
    B = np.atleast_2d(np.asarray(B))
    _check_same_length(A, B)
    Ap = pack_rows(A)
    Bp = pack_rows(B)
    xor = Ap[:, None, :] ^ Bp[None, :, :]
    return np.bitwise_count(xor).sum(axis=-1, dtype=np.int64)


def round_to_binary(t):
    """Round a relaxed template to {0,1}^n; ties at 0.5 go to 1."""
    t = np.asarray(t, dtype=np.float64)
    return (t >= 0.5).astype(np.uint8)


def min_pairwise_distance(vectors):
    """Smallest Hamming distance over all unordered pairs of rows.

    Returns (distance, (i, j)) with i < j; ties resolve to the
    lexicographically smallest pair.  Needs at least two rows.
    """
    V = np.atleast_2d(np.asarray(vectors))
    if V.shape[0] < 2:
        raise InsufficientInput("need at least two vectors for a pairwise distance")
    D = hamming_matrix(V, V).astype(np.float64)
    iu = np.triu_indices(V.shape[0], k=1)
    flat = D[iu]
    pos = int(np.argmin(flat))  # argmin takes the first hit: row-major == lexicographic
    return int(flat[pos]), (int(iu[0][pos]), int(iu[1][pos]))
