"""Measured bitstring collections.

Samples are kept as an ordered sequence of integer codes (qubit 0 at the
most significant of the n bits, i.e. the leftmost character of the printed
string). Keeping the draw order lets batched estimators use contiguous shot
blocks; sets reconstructed from a counts file get a deterministic expansion
in file order instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

QUBIT_ORDER_TAG = "row-major-q0-leftmost"


@dataclass
class SampleSet:
    """Multiset of n-bit measurement outcomes with draw order."""

    n: int
    codes: np.ndarray
    qubit_order: str = QUBIT_ORDER_TAG

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.uint64)
        if self.codes.ndim != 1 or len(self.codes) < 1:
            raise ParameterError("a sample set needs at least one sample")
        if self.n < 1 or self.n > 63:
            raise ParameterError(f"unsupported qubit count {self.n}")
        if len(self.codes) and int(self.codes.max()) >> self.n:
            raise ParameterError("sample code wider than the declared qubit count")

    @property
    def n_samples(self) -> int:
        return len(self.codes)

    def packed_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """(unique codes ascending, multiplicities)."""
        return np.unique(self.codes, return_counts=True)

    def counts(self) -> dict[str, int]:
        uniq, mult = self.packed_counts()
        return {format(int(c), f"0{self.n}b"): int(m) for c, m in zip(uniq, mult)}

    def strings(self) -> list[str]:
        return [format(int(c), f"0{self.n}b") for c in self.codes]

    def weights(self) -> np.ndarray:
        """Hamming weight of every sample."""
        w = np.zeros(len(self.codes), dtype=np.int64)
        for pos in range(self.n):
            w += ((self.codes >> np.uint64(pos)) & np.uint64(1)).astype(np.int64)
        return w

    def weight_histogram(self) -> np.ndarray:
        """Counts of output Hamming weights, indexed 0..n."""
        return np.bincount(self.weights(), minlength=self.n + 1)

    @classmethod
    def from_counts(cls, n: int, counts, qubit_order: str = QUBIT_ORDER_TAG) -> "SampleSet":
        """Expand a {bitstring: count} map in its iteration order."""
        codes, mult = [], []
        for key, c in counts.items():
            if len(key) != n or set(key) - {"0", "1"}:
                raise ParameterError(f"bad bitstring {key!r} for n={n}")
            if c < 1:
                raise ParameterError(f"count for {key!r} must be positive")
            codes.append(int(key, 2))
            mult.append(int(c))
        return cls(n=n, codes=np.repeat(np.array(codes, dtype=np.uint64), mult),
                   qubit_order=qubit_order)
