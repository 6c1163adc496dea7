"""Collision-probability estimators, Parseval evaluations, cumulant
truncation, patch bookkeeping, spatial averaging, and crossover extraction.

All probabilities here are classical distributions over computational-basis
substrings; quantum input enters only through exact marginal probabilities
or reduced density matrices produced by the state engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import comb

import numpy as np

from .basis import extract_bits
from .errors import ParameterError, ResourceError
from .lattice import LatticeSpec
from .samples import SampleSet
from .states import marginal_probabilities

PARSEVAL_IPR_MAX_QUBITS = 12
PARSEVAL_PURITY_MAX_QUBITS = 8
DEFAULT_BATCHES = 16


# ---------------------------------------------------------------------------
# patches


@dataclass(frozen=True)
class Patch:
    """Ordered qubit subset, optionally tagged as a w x h rectangle at (x, y)."""

    qubits: tuple[int, ...]
    shape: tuple[int, int] | None = None
    anchor: tuple[int, int] | None = None

    def __post_init__(self):
        if len(set(self.qubits)) != len(self.qubits):
            raise ParameterError("patch qubits must be distinct")

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def label(self) -> str:
        if self.shape is not None:
            tag = f"{self.shape[0]}x{self.shape[1]}"
            return f"{tag}@{self.anchor[0]},{self.anchor[1]}" if self.anchor else tag
        return ",".join(map(str, self.qubits))


def rectangle_patch(lattice: LatticeSpec, anchor: tuple[int, int],
                    width: int, height: int) -> Patch:
    """Row-major w x h patch with its lower-left corner at anchor=(x, y)."""
    x0, y0 = anchor
    if width < 1 or height < 1:
        raise ParameterError("patch sides must be positive")
    if x0 < 0 or y0 < 0 or x0 + width > lattice.lx or y0 + height > lattice.ly:
        raise ParameterError(
            f"{width}x{height} patch at {anchor} does not fit a "
            f"{lattice.lx}x{lattice.ly} lattice")
    qubits = tuple(lattice.qubit(x, y)
                   for y in range(y0, y0 + height)
                   for x in range(x0, x0 + width))
    return Patch(qubits=qubits, shape=(width, height), anchor=(x0, y0))


def central_patch(lattice: LatticeSpec, width: int, height: int) -> Patch:
    return rectangle_patch(lattice, ((lattice.lx - width) // 2,
                                     (lattice.ly - height) // 2), width, height)


def rectangle_translations(lattice: LatticeSpec, width: int, height: int,
                           count: int | None = None, seed: int = 0) -> tuple[Patch, ...]:
    """All axis-aligned translations fully inside the lattice, row-major by
    anchor; optionally a deterministic seed-driven subsample of `count`."""
    anchors = [(x, y)
               for y in range(lattice.ly - height + 1)
               for x in range(lattice.lx - width + 1)]
    if count is not None and count < len(anchors):
        rng = np.random.default_rng(seed)
        keep = sorted(rng.choice(len(anchors), size=count, replace=False))
        anchors = [anchors[i] for i in keep]
    return tuple(rectangle_patch(lattice, a, width, height) for a in anchors)


def _patch_qubits(patch) -> tuple[int, ...]:
    return tuple(patch.qubits) if isinstance(patch, Patch) else tuple(patch)


# ---------------------------------------------------------------------------
# sample-based estimation


def restrict(samples: SampleSet, patch) -> SampleSet:
    """Project every sample onto the patch substring (counts preserved)."""
    qubits = _patch_qubits(patch)
    if any(not 0 <= q < samples.n for q in qubits):
        raise ParameterError("patch qubit outside the sampled register")
    return SampleSet(n=len(qubits),
                     codes=extract_bits(samples.codes, samples.n, qubits),
                     qubit_order=samples.qubit_order)


@dataclass
class MomentEstimate:
    """Unbiased collision-moment estimate with batch error bars."""

    k: int
    value: float
    batch_mean: float
    stderr: float
    n_samples: int
    n_batches: int


def _collision_moment(codes: np.ndarray, k: int) -> float:
    _, counts = np.unique(codes, return_counts=True)
    counts = counts.astype(np.float64)
    num = np.ones_like(counts)
    for t in range(k):
        num *= counts - t
    return float(num.sum() / math.factorial(k) / comb(len(codes), k))


def collision_estimate(samples: SampleSet, k: int = 2,
                       batches: int = DEFAULT_BATCHES) -> MomentEstimate:
    """M_k-hat = sum_i C(n_i, k) / C(n_S, k), the k-fold collision count.

    The headline value pools all samples; error bars come from splitting the
    (order-preserved) sequence into `batches` contiguous equal blocks.
    """
    if k < 1:
        raise ParameterError("collision order k must be >= 1")
    n_s = samples.n_samples
    if n_s < k:
        raise ParameterError(f"need at least k={k} samples, got {n_s}")
    value = _collision_moment(samples.codes, k)
    if batches <= 1 or n_s < 2 * k:
        return MomentEstimate(k=k, value=value, batch_mean=value, stderr=0.0,
                              n_samples=n_s, n_batches=1)
    batches = min(batches, n_s // k)
    block = n_s // batches
    vals = np.array([
        _collision_moment(samples.codes[b * block:(b + 1) * block], k)
        for b in range(batches)
    ])
    stderr = float(vals.std(ddof=1) / math.sqrt(batches)) if batches > 1 else 0.0
    return MomentEstimate(k=k, value=value, batch_mean=float(vals.mean()),
                          stderr=stderr, n_samples=n_s, n_batches=batches)


def sample_complexity(n_a: int, n_s: int) -> float:
    """Multiplicative error scale sqrt(2^(n_A/2) / n_S) of the estimator."""
    if n_a < 1 or n_s < 1:
        raise ParameterError("need n_a >= 1 and n_s >= 1")
    return math.sqrt(2 ** (n_a / 2) / n_s)


# ---------------------------------------------------------------------------
# exact moments and entropies


def exact_marginal_moment(state, patch, k: int = 2) -> float:
    """sum_a p_A(a)^k from exact probabilities."""
    if k < 2:
        raise ParameterError("moment order k must be an integer >= 2")
    p = marginal_probabilities(state, _patch_qubits(patch))
    return float(np.sum(p ** k))


def collision_entropy(value: float, k: int = 2, base: float = 2.0) -> float:
    """Renyi-k entropy log(value)/(1-k) of a collision moment, default bits."""
    if value <= 0:
        raise ParameterError("collision moment must be positive")
    if k < 2:
        raise ParameterError("entropy order k must be >= 2")
    return math.log(value) / ((1 - k) * math.log(base))


def fwht(values: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform, natural ordering: W[s] = sum_a (-1)^(a.s) v[a]."""
    a = np.array(values, copy=True)
    n = a.shape[0]
    if n & (n - 1):
        raise ParameterError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        x = a[:, 0, :].copy()
        a[:, 0, :] = x + a[:, 1, :]
        a[:, 1, :] = x - a[:, 1, :]
        a = a.reshape(n)
        h *= 2
    return a


def z_expectations(marginal: np.ndarray) -> np.ndarray:
    """All 2^k Z-parity expectations of a marginal distribution.

    Entry s is <Z_s> = sum_a p(a) (-1)^popcount(a & s), with bit k-1-pos of
    s selecting the pos-th patch qubit (same packing as the marginal index).
    """
    return fwht(np.asarray(marginal, dtype=float))


def parseval_ipr(state, patch) -> float:
    """Collision probability via its Parseval form (1/2^n_A) sum_s <Z_s>^2."""
    qubits = _patch_qubits(patch)
    if len(qubits) > PARSEVAL_IPR_MAX_QUBITS:
        raise ResourceError(
            f"{len(qubits)}-qubit patch exceeds the {PARSEVAL_IPR_MAX_QUBITS}-qubit "
            "cap for Z-parity enumeration")
    w = z_expectations(marginal_probabilities(state, qubits))
    return float(np.sum(w * w) / len(w))


@lru_cache(maxsize=8)
def _popcounts(dim: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(dim)], dtype=np.int64)


def pauli_expectations_for_xmask(rho: np.ndarray, xmask: int) -> np.ndarray:
    """<P> for the 2^n_A Paulis sharing an X/Y support pattern `xmask`.

    Entry z is the expectation of the Pauli with X on xmask&~z, Y on
    xmask&z, and Z on z&~xmask. Values are real up to numerical noise for
    Hermitian input.
    """
    d = rho.shape[0]
    idx = np.arange(d)
    gathered = rho[idx, idx ^ xmask]
    w = fwht(gathered.astype(complex))
    ny = _popcounts(d)[idx & xmask]
    return (1j) ** (ny % 4) * w


def parseval_purity(rho) -> float:
    """Purity via its Pauli Parseval form (1/d_A) sum_P <P>^2."""
    matrix = getattr(rho, "matrix", rho)
    d = matrix.shape[0]
    n_a = d.bit_length() - 1
    if n_a > PARSEVAL_PURITY_MAX_QUBITS:
        raise ResourceError(
            f"{n_a}-qubit density exceeds the {PARSEVAL_PURITY_MAX_QUBITS}-qubit "
            "cap for full Pauli enumeration")
    total = 0.0
    for xmask in range(d):
        vals = pauli_expectations_for_xmask(matrix, xmask)
        total += float(np.sum(vals.real ** 2))
    return total / d


def renyi2_entropy(rho, base: float = 2.0) -> float:
    """Basis-independent Renyi-2 entropy -log Tr rho^2."""
    matrix = getattr(rho, "matrix", rho)
    purity = float(np.real(np.trace(matrix @ matrix)))
    if purity <= 0:
        raise ParameterError("purity must be positive")
    return -math.log(purity) / math.log(base)


# ---------------------------------------------------------------------------
# cumulant expansion


@lru_cache(maxsize=16)
def set_partitions(m: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All partitions of {0..m-1} via restricted-growth strings."""
    if m == 0:
        return ((),)
    out = []

    def grow(rgs, maxval):
        if len(rgs) == m:
            blocks = [[] for _ in range(maxval + 1)]
            for pos, lab in enumerate(rgs):
                blocks[lab].append(pos)
            out.append(tuple(tuple(b) for b in blocks))
            return
        for lab in range(maxval + 2):
            grow(rgs + [lab], max(maxval, lab))

    grow([0], 0)
    return tuple(out)


def _partitions_of(elements: tuple) -> list[list[tuple]]:
    return [[tuple(elements[i] for i in block) for block in p]
            for p in set_partitions(len(elements))]


def connected_correlators(moments, elements, max_order: int) -> dict[frozenset, float]:
    """Cumulants of all subsets of `elements` up to size max_order.

    `moments` maps frozenset(qubits) -> <Z_subset>; the empty set is treated
    as 1. Defined implicitly by the moment-cumulant relation over set
    partitions and solved bottom-up.
    """
    elements = tuple(elements)
    kappa: dict[frozenset, float] = {}
    from itertools import combinations

    for size in range(1, min(max_order, len(elements)) + 1):
        for subset in combinations(elements, size):
            key = frozenset(subset)
            try:
                total = moments[key]
            except KeyError:
                raise ParameterError(f"missing moment for subset {sorted(subset)}")
            for partition in _partitions_of(subset):
                if len(partition) == 1:
                    continue
                term = 1.0
                for block in partition:
                    term *= kappa[frozenset(block)]
                total -= term
            kappa[key] = total
    return kappa


def cumulant_truncated_moment(moments, target, k_trunc: int) -> float:
    """Reassemble <Z_target> keeping only connected blocks of size <= k_trunc.

    Exact when k_trunc >= |target|; at k_trunc = 1 it is the mean-field
    product of single-site expectations.
    """
    target = tuple(target)
    if k_trunc < 1:
        raise ParameterError("truncation order must be >= 1")
    if not target:
        return 1.0
    kappa = connected_correlators(moments, target, min(k_trunc, len(target)))
    total = 0.0
    for partition in _partitions_of(target):
        if any(len(block) > k_trunc for block in partition):
            continue
        term = 1.0
        for block in partition:
            term *= kappa[frozenset(block)]
        total += term
    return total


def z_moment_table(state, patch, max_order: int | None = None) -> dict[frozenset, float]:
    """Exact <Z_s> for all subsets s of the patch up to max_order, keyed by
    frozensets of global qubit indices."""
    qubits = _patch_qubits(patch)
    k = len(qubits)
    if max_order is None:
        max_order = k
    w = z_expectations(marginal_probabilities(state, qubits))
    table: dict[frozenset, float] = {}
    for s in range(2 ** k):
        members = [qubits[pos] for pos in range(k) if (s >> (k - 1 - pos)) & 1]
        if 0 < len(members) <= max_order:
            table[frozenset(members)] = float(w[s])
    return table


# ---------------------------------------------------------------------------
# diagnostic curves


@dataclass
class DiagnosticCurve:
    """(J, value, stderr) series for one observable with its RMT reference."""

    j_grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    reference: float
    label: str = ""
    base: float = 2.0
    jstar: float | None = None

    def __post_init__(self):
        self.j_grid = np.asarray(self.j_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if np.any(np.diff(self.j_grid) <= 0):
            raise ParameterError("J grid must be strictly increasing")
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.stderr))):
            raise ParameterError("curve values must be finite")
        if len(self.values) != len(self.j_grid) or len(self.stderr) != len(self.j_grid):
            raise ParameterError("curve arrays must share the grid length")


def extract_jstar(curve: DiagnosticCurve, reference: float | None = None,
                  epsilon: float = 0.1) -> float | None:
    """Smallest grid J with |value - reference| <= epsilon; no interpolation."""
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    ref = curve.reference if reference is None else reference
    inside = np.abs(curve.values - ref) <= epsilon
    hits = np.nonzero(inside)[0]
    return float(curve.j_grid[hits[0]]) if len(hits) else None


def spatial_average(curves) -> DiagnosticCurve:
    """Pointwise mean and standard error over translated-patch curves."""
    curves = list(curves)
    if not curves:
        raise ParameterError("need at least one curve")
    grid = curves[0].j_grid
    for c in curves[1:]:
        if not np.array_equal(c.j_grid, grid):
            raise ParameterError("curves must share an identical J grid")
        if c.base != curves[0].base:
            raise ParameterError("curves must share the entropy base")
    stack = np.stack([c.values for c in curves])
    mean = stack.mean(axis=0)
    if len(curves) > 1:
        stderr = stack.std(axis=0, ddof=1) / math.sqrt(len(curves))
    else:
        stderr = np.zeros_like(mean)
    return DiagnosticCurve(
        j_grid=grid.copy(), values=mean, stderr=stderr,
        reference=float(np.mean([c.reference for c in curves])),
        label=f"avg[{len(curves)}]:{curves[0].label}", base=curves[0].base)
