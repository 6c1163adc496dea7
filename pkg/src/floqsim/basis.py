"""Fixed Hamming-weight basis enumeration with combinatorial rank/unrank.

Basis states are n-bit strings stored as integers with qubit q at bit
position n-1-q (qubit 0 is the leftmost character of the printed string),
so ascending integer order coincides with lexicographic string order.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import ParameterError


def sector_dimension(n: int, weight: int) -> int:
    return comb(n, weight)


def sector_basis(n: int, weight: int) -> np.ndarray:
    """All weight-m n-bit codes in ascending (lexicographic) order."""
    if not 0 <= weight <= n:
        raise ParameterError(f"weight {weight} out of range for {n} qubits")
    if n > 63:
        raise ParameterError("basis codes are limited to 63-bit strings")
    d = comb(n, weight)
    out = np.empty(d, dtype=np.uint64)
    if weight == 0:
        out[0] = 0
        return out
    v = (1 << weight) - 1
    for idx in range(d):
        out[idx] = v
        # Gosper's hack: next larger integer with the same popcount
        u = v & -v
        w = v + u
        v = w | (((v ^ w) >> 2) // u)
    return out


def rank_code(code: int, n: int, weight: int) -> int:
    """Lexicographic rank of a weight-m code within sector_basis(n, m)."""
    rank = 0
    remaining = weight
    for pos in range(n - 1, -1, -1):  # scan string left to right
        if remaining == 0:
            break
        if (code >> pos) & 1:
            rank += comb(pos, remaining)
            remaining -= 1
    return rank

def unrank_code(rank: int, n: int, weight: int) -> int:
    """Inverse of rank_code."""
    code = 0
    remaining = weight
    for pos in range(n - 1, -1, -1):
        if remaining == 0:
            break
        c = comb(pos, remaining)
        if rank >= c:
            rank -= c
            code |= 1 << pos
            remaining -= 1
    return code


def bit_position(n: int, qubit: int) -> int:
    """Integer bit position carrying the given qubit."""
    return n - 1 - qubit


def codes_to_strings(codes: np.ndarray, n: int) -> list[str]:
    return [format(int(c), f"0{n}b") for c in codes]


def extract_bits(codes: np.ndarray, n: int, qubits) -> np.ndarray:
    """Substring codes for an ordered qubit subset (first qubit = leftmost bit)."""
    out = np.zeros(codes.shape, dtype=np.uint64)
    k = len(qubits)
    for pos, q in enumerate(qubits):
        bit = (codes >> np.uint64(bit_position(n, q))) & np.uint64(1)
        out |= bit << np.uint64(k - 1 - pos)
    return out
