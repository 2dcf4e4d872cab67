"""GF(2) and binary-channel primitives shared across the package.

Bit vectors are numpy uint8 arrays holding 0/1 values.  All transforms
work on the last axis so batches of words can be processed in one call.
"""

from __future__ import annotations

import numpy as np


def as_bit_array(bits, length: int | None = None) -> np.ndarray:
    """Validate and convert ``bits`` to a uint8 0/1 array.

    Raises ValueError on non-binary entries or, when ``length`` is given,
    on a mismatched final axis.
    """
    arr = np.asarray(bits)
    if arr.dtype != np.uint8:
        arr = arr.astype(np.uint8, copy=False)
    if arr.size and int(arr.max(initial=0)) > 1:
        raise ValueError("bit array entries must be 0 or 1")
    if length is not None and (arr.ndim == 0 or arr.shape[-1] != length):
        raise ValueError(f"expected last axis of length {length}")
    return arr


def polar_transform(u) -> np.ndarray:
    """Apply the n x n binary butterfly transform along the last axis.

    The transform is its own inverse over GF(2).  ``u`` may carry leading
    batch axes; the word length n must be a power of two.
    """
    u = np.asarray(u)
    if u.ndim == 0:
        raise ValueError("input must have at least one axis")
    n = u.shape[-1]
    if n < 1 or n & (n - 1):
        raise ValueError(f"word length must be a power of two, got {n}")
    x = as_bit_array(u).copy()
    size = 2
    while size <= n:
        half = size // 2
        view = x.reshape(-1, n // size, size)
        view[:, :, :half] ^= view[:, :, half:]
        size *= 2
    return x.reshape(u.shape)


def binary_entropy(q):
    """Binary entropy in bits; accepts scalars or arrays in [0, 1]."""
    arr = np.asarray(q, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("entropy argument must lie in [0, 1]")
    inner = np.where((arr > 0.0) & (arr < 1.0), arr, 0.5)
    h = -inner * np.log2(inner) - (1.0 - inner) * np.log2(1.0 - inner)
    h = np.where((arr > 0.0) & (arr < 1.0), h, 0.0)
    return float(h) if np.isscalar(q) or arr.ndim == 0 else h


def star(q, p):
    """Serial concatenation of two crossover probabilities: (1-2p)q + p."""
    q_arr = np.asarray(q, dtype=np.float64)
    p_arr = np.asarray(p, dtype=np.float64)
    for name, a in (("q", q_arr), ("p", p_arr)):
        if np.any(a < 0.0) or np.any(a > 0.5):
            raise ValueError(f"{name} must lie in [0, 0.5]")
    out = (1.0 - 2.0 * p_arr) * q_arr + p_arr
    if np.isscalar(q) and np.isscalar(p):
        return float(out)
    return out


def inverse_star(r, p):
    """Solve r = star(q, p) for q.  Requires p < 0.5 and r >= p."""
    r_arr = np.asarray(r, dtype=np.float64)
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(p_arr < 0.0) or np.any(p_arr >= 0.5):
        raise ValueError("p must lie in [0, 0.5)")
    if np.any(r_arr > 0.5) or np.any(r_arr < p_arr):
        raise ValueError("r must lie in [p, 0.5]")
    out = (r_arr - p_arr) / (1.0 - 2.0 * p_arr)
    if np.isscalar(r) and np.isscalar(p):
        return float(out)
    return out


def index_weight(i: int) -> int:
    """Number of ones in the binary expansion of a nonnegative index."""
    i = int(i)
    if i < 0:
        raise ValueError("index must be nonnegative")
    return i.bit_count()


def row_inner_product(row, u) -> int:
    """GF(2) inner product of two equal-length bit vectors."""
    row = as_bit_array(row)
    u = as_bit_array(u)
    if row.shape != u.shape or row.ndim != 1:
        raise ValueError("inner product needs two 1-D vectors of equal length")
    return int(np.bitwise_and(row, u).sum() & 1)


def hamming_distance(a, b) -> int:
    """Number of positions where two bit vectors differ."""
    a = as_bit_array(a)
    b = as_bit_array(b)
    if a.shape != b.shape:
        raise ValueError("Hamming distance needs equal shapes")
    return int(np.bitwise_xor(a, b).sum())


def bits_to_hex(bits) -> str:
    """Pack a bit vector (position 0 first) into a little-endian hex string."""
    bits = as_bit_array(bits)
    if bits.ndim != 1:
        raise ValueError("expected a 1-D bit vector")
    packed = np.packbits(bits, bitorder="little")
    return packed.tobytes().hex()


def hex_to_bits(text: str, n: int) -> np.ndarray:
    """Inverse of :func:`bits_to_hex` for a vector of known length ``n``."""
    raw = bytes.fromhex(text)
    if len(raw) != (n + 7) // 8:
        raise ValueError(f"hex payload holds {len(raw)} bytes, expected {(n + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    if bits[n:].any():
        raise ValueError("padding bits beyond the word length must be zero")
    return bits[:n].copy()


def pack_rows(rows: np.ndarray) -> np.ndarray:
    """Pack bit rows (…, n) into little-endian uint64 words for fast XOR."""
    rows = as_bit_array(rows)
    n = rows.shape[-1]
    n_words = (n + 63) // 64
    packed = np.packbits(np.ascontiguousarray(rows.reshape(-1, n)),
                         axis=-1, bitorder="little")
    pad = n_words * 8 - packed.shape[-1]
    if pad:
        packed = np.pad(packed, [(0, 0), (0, pad)])
    words = np.ascontiguousarray(packed).view(np.uint64)
    return words.reshape(rows.shape[:-1] + (n_words,)).copy()


def packed_bit(words: np.ndarray, index: int) -> np.ndarray:
    """Extract bit ``index`` from packed uint64 words (last axis)."""
    word = words[..., index >> 6]
    return ((word >> np.uint64(index & 63)) & np.uint64(1)).astype(np.uint8)
