"""Bit-packed row storage and Hamming-distance kernels.

Rows of 0/1 features are packed into uint64 words so that pairwise
Hamming distances reduce to XOR + popcount, and exact row matching
reduces to hashing the packed bytes. For binary rows the squared
Euclidean distance equals the Hamming distance, so every metric in
this package works on integer distances.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack an (N, d) array of 0/1 values into (N, ceil(d/64)) uint64 words.

    Rows that are equal bit-for-bit pack to equal words (zero padding in
    the last word), so packed rows double as exact-match keys.
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.ndim != 2:
        raise ValueError(f"expected a 2-d bit matrix, got shape {bits.shape}")
    n, d = bits.shape
    n_words = max(1, -(-d // WORD_BITS))
    padded = np.zeros((n, n_words * WORD_BITS), dtype=np.uint8)
    padded[:, :d] = bits
    packed_bytes = np.packbits(padded, axis=1)
    return packed_bytes.view(np.uint64)


def row_keys(bits: np.ndarray) -> list[bytes]:
    """Hashable exact-match key per row (packed bits as bytes)."""
    packed = pack_rows(bits)
    return [row.tobytes() for row in packed]


def hamming_cdist(a_bits: np.ndarray, b_bits: np.ndarray, chunk: int = 512) -> np.ndarray:
    """All-pairs Hamming distances between two bit matrices.

    Returns an (|A|, |B|) int64 matrix. Computed blockwise over rows of A
    to bound the size of the XOR intermediate.
    """
    if a_bits.shape[1] != b_bits.shape[1]:
        raise ValueError(
            f"dimension mismatch: {a_bits.shape[1]} vs {b_bits.shape[1]} features"
        )
    a = pack_rows(a_bits)
    b = pack_rows(b_bits)
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.int64)
    for lo in range(0, a.shape[0], chunk):
        hi = min(lo + chunk, a.shape[0])
        xor = a[lo:hi, None, :] ^ b[None, :, :]
        out[lo:hi] = np.bitwise_count(xor).sum(axis=2, dtype=np.int64)
    return out


def hamming_self_dist(bits: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Pairwise Hamming distances within one set, diagonal masked out.

    The diagonal (self distance) is replaced with d+1, one more than any
    attainable distance, so order statistics over a row exclude self.
    """
    d = hamming_cdist(bits, bits, chunk=chunk)
    np.fill_diagonal(d, bits.shape[1] + 1)
    return d
