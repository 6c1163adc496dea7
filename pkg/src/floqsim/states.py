"""Exact pure-state evolution in a fixed Hamming-weight sector.

The Heisenberg gate conserves total Z, so the Neel input never leaves its
weight-m sector and states are stored as C(n, m) amplitudes over the
lexicographic weight-m basis. A dense 2^n engine (FullState) is kept as the
validation fallback for small n and for inputs without a conserved weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .basis import bit_position, extract_bits, sector_basis, sector_dimension
from .errors import ParameterError, ResourceError
from .lattice import FloquetCircuit, LatticeSpec, TwoQubitGate
from .samples import SampleSet

EIGENPHASE_DIMENSION_CAP = 4096
REDUCED_DENSITY_MAX_QUBITS = 12

_CHECKPOINT_MAGIC = b"floqsim-state v1"
_BASIS_TAG = "lex-q0-msb"

# pairing indices per (n, weight, i, j); only small sectors are worth keeping
_INDEX_CACHE: dict = {}
_INDEX_CACHE_MAX_DIM = 200_000


@lru_cache(maxsize=32)
def cached_basis(n: int, weight: int) -> np.ndarray:
    states = sector_basis(n, weight)
    states.setflags(write=False)
    return states


@dataclass
class SectorState:
    """Amplitudes over the weight-m basis of n qubits (lexicographic order)."""

    n: int
    weight: int
    amp: np.ndarray

    @property
    def states(self) -> np.ndarray:
        return cached_basis(self.n, self.weight)

    @property
    def dim(self) -> int:
        return self.amp.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def copy(self) -> "SectorState":
        return SectorState(self.n, self.weight, self.amp.copy())

    @classmethod
    def from_code(cls, n: int, code: int) -> "SectorState":
        weight = int(code).bit_count()
        states = cached_basis(n, weight)
        amp = np.zeros(len(states), dtype=complex)
        amp[np.searchsorted(states, np.uint64(code))] = 1.0
        return cls(n=n, weight=weight, amp=amp)


@dataclass
class FullState:
    """Dense 2^n amplitudes; validation fallback without a weight restriction."""

    n: int
    amp: np.ndarray

    @classmethod
    def from_sector(cls, state: SectorState) -> "FullState":
        amp = np.zeros(2 ** state.n, dtype=complex)
        amp[state.states.astype(np.int64)] = state.amp
        return cls(n=state.n, amp=amp)


def neel_state(lattice: LatticeSpec) -> SectorState:
    """Checkerboard basis state: bit 1 where (x + y) is odd."""
    code = 0
    for q in range(lattice.n):
        x, y = lattice.coords(q)
        if (x + y) % 2 == 1:
            code |= 1 << bit_position(lattice.n, q)
    return SectorState.from_code(lattice.n, code)


# ---------------------------------------------------------------------------
# gate application


def _pair_indices(n: int, weight: int, i: int, j: int):
    """Index arrays for the four bit sectors of qubits (i, j) in the basis.

    Returns (idx00, idx11, idx01, idx10) with idx10 ordered as the partners
    of idx01 (same configuration with the two bits exchanged).
    """
    key = (n, weight, i, j)
    hit = _INDEX_CACHE.get(key)
    if hit is not None:
        return hit
    states = cached_basis(n, weight)
    pi, pj = bit_position(n, i), bit_position(n, j)
    bi = ((states >> np.uint64(pi)) & np.uint64(1)).astype(bool)
    bj = ((states >> np.uint64(pj)) & np.uint64(1)).astype(bool)
    idx00 = np.nonzero(~bi & ~bj)[0]
    idx11 = np.nonzero(bi & bj)[0]
    idx01 = np.nonzero(~bi & bj)[0]
    partners = states[idx01] ^ np.uint64((1 << pi) | (1 << pj))
    idx10 = np.searchsorted(states, partners)
    result = (idx00, idx11, idx01, idx10)
    if len(states) <= _INDEX_CACHE_MAX_DIM:
        _INDEX_CACHE[key] = result
    return result


def apply_sector_action(amp: np.ndarray, n: int, weight: int, i: int, j: int,
                        d00: complex, d11: complex, block: np.ndarray) -> None:
    """In-place number-conserving two-qubit update of amplitudes.

    `amp` has shape (d,) or (d, batch); d00/d11 are the phases on the equal-bit
    configurations and `block` is the 2x2 action on span{|01>, |10>}.
    """
    idx00, idx11, idx01, idx10 = _pair_indices(n, weight, i, j)
    amp[idx00] *= d00
    amp[idx11] *= d11
    a01 = amp[idx01]
    a10 = amp[idx10]
    amp[idx01] = block[0, 0] * a01 + block[0, 1] * a10
    amp[idx10] = block[1, 0] * a01 + block[1, 1] * a10


def _apply_gate_inplace(amp: np.ndarray, n: int, weight: int, gate: TwoQubitGate) -> None:
    d00, d11, block = gate.sector_action()
    apply_sector_action(amp, n, weight, gate.i, gate.j, d00, d11, block)


def apply_gate(state: SectorState, gate: TwoQubitGate) -> SectorState:
    """Pure single-gate application (new state)."""
    if not (0 <= gate.i < state.n and 0 <= gate.j < state.n):
        raise ParameterError(f"gate ({gate.i},{gate.j}) outside {state.n} qubits")
    out = state.copy()
    _apply_gate_inplace(out.amp, out.n, out.weight, gate)
    return out


def evolve(state: SectorState, circuit: FloquetCircuit) -> SectorState:
    """Apply n_cycles Floquet cycles (layer order fixed by the circuit)."""
    if state.n != circuit.lattice.n:
        raise ParameterError("state and circuit disagree on qubit count")
    out = state.copy()
    for _ in range(circuit.n_cycles):
        for layer in circuit.layers:
            for gate in layer:
                _apply_gate_inplace(out.amp, out.n, out.weight, gate)
    return out


def apply_gate_full(state: FullState, gate: TwoQubitGate) -> FullState:
    """Dense 4x4 application via tensor reshaping (oracle path)."""
    n = state.n
    psi = state.amp.reshape([2] * n)
    psi = np.moveaxis(psi, (gate.i, gate.j), (0, 1))
    shape = psi.shape
    psi = gate.matrix() @ psi.reshape(4, -1)
    psi = np.moveaxis(psi.reshape(shape), (0, 1), (gate.i, gate.j))
    return FullState(n=n, amp=psi.reshape(-1).copy())


def evolve_full(state: FullState, circuit: FloquetCircuit) -> FullState:
    out = state
    for _ in range(circuit.n_cycles):
        for layer in circuit.layers:
            for gate in layer:
                out = apply_gate_full(out, gate)
    return out


# ---------------------------------------------------------------------------
# read-outs


def probabilities(state) -> np.ndarray:
    """|amplitude|^2 over the state's basis order."""
    return np.abs(state.amp) ** 2


def marginal_probabilities(state, qubits) -> np.ndarray:
    """Marginal distribution over an ordered qubit subset (2^k entries)."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise ParameterError("patch qubits must be distinct")
    if any(not 0 <= q < state.n for q in qubits):
        raise ParameterError("patch qubit outside lattice")
    if isinstance(state, SectorState):
        codes = extract_bits(state.states, state.n, qubits)
    else:
        codes = extract_bits(np.arange(2 ** state.n, dtype=np.uint64), state.n, qubits)
    return np.bincount(codes.astype(np.int64), weights=probabilities(state),
                       minlength=2 ** len(qubits))


def sample(state, n_samples: int, seed: int) -> SampleSet:
    """n_samples inverse-CDF draws from probabilities(state), order preserved."""
    if n_samples < 1:
        raise ParameterError("need at least one sample")
    p = probabilities(state)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    u = np.random.default_rng(seed).random(n_samples)
    idx = np.searchsorted(cdf, u, side="right")
    if isinstance(state, SectorState):
        codes = state.states[idx]
    else:
        codes = idx.astype(np.uint64)
    return SampleSet(n=state.n, codes=codes)


@dataclass
class ReducedDensity:
    """Reduced density matrix on an ordered qubit patch."""

    patch: tuple[int, ...]
    matrix: np.ndarray

    @property
    def n_qubits(self) -> int:
        return len(self.patch)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def reduced_density(state, patch) -> ReducedDensity:
    """Partial trace over the complement of the patch."""
    patch = tuple(patch)
    if len(patch) > REDUCED_DENSITY_MAX_QUBITS:
        raise ResourceError(
            f"patch of {len(patch)} qubits exceeds the {REDUCED_DENSITY_MAX_QUBITS}-qubit cap")
    if len(set(patch)) != len(patch) or any(not 0 <= q < state.n for q in patch):
        raise ParameterError("patch must be distinct in-range qubits")
    rest = [q for q in range(state.n) if q not in patch]
    if isinstance(state, SectorState):
        codes = state.states
    else:
        codes = np.arange(2 ** state.n, dtype=np.uint64)
    a = extract_bits(codes, state.n, patch).astype(np.int64)
    b = extract_bits(codes, state.n, rest).astype(np.int64)
    d_a = 2 ** len(patch)
    _, b_rank = np.unique(b, return_inverse=True)
    psi = np.zeros((d_a, int(b_rank.max()) + 1 if len(b_rank) else 1), dtype=complex)
    psi[a, b_rank] = state.amp
    return ReducedDensity(patch=patch, matrix=psi @ psi.conj().T)


# ---------------------------------------------------------------------------
# spectrum


@dataclass
class EigenphaseSet:
    """Sorted eigenphases of one Floquet cycle restricted to a weight sector."""

    phases: np.ndarray
    n: int
    weight: int
    unitarity_residual: float

    @property
    def dim(self) -> int:
        return len(self.phases)


def floquet_operator(circuit: FloquetCircuit, weight: int) -> np.ndarray:
    """Dense single-cycle unitary on the weight sector, built column by column."""
    n = circuit.lattice.n
    d = sector_dimension(n, weight)
    u = np.eye(d, dtype=complex)
    for layer in circuit.layers:
        for gate in layer:
            _apply_gate_inplace(u, n, weight, gate)
    return u


def floquet_eigenphases(circuit: FloquetCircuit, weight: int,
                        dimension_cap: int = EIGENPHASE_DIMENSION_CAP) -> EigenphaseSet:
    """Exact eigenphases of U_F in [0, 2pi), ascending."""
    n = circuit.lattice.n
    d = sector_dimension(n, weight)
    if d > dimension_cap:
        raise ResourceError(f"sector dimension {d} exceeds cap {dimension_cap}")
    u = floquet_operator(circuit, weight)
    residual = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
    w = scipy.linalg.eigvals(u)
    phases = np.sort(np.angle(w) % (2 * math.pi))
    return EigenphaseSet(phases=phases, n=n, weight=weight, unitarity_residual=residual)


# ---------------------------------------------------------------------------
# checkpoints


def write_state_checkpoint(state: SectorState, path) -> None:
    """Binary record: ASCII header line + little-endian complex pairs."""
    header = f"{_CHECKPOINT_MAGIC.decode()} n={state.n} m={state.weight} basis={_BASIS_TAG}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode())
        fh.write(np.ascontiguousarray(state.amp, dtype="<c16").tobytes())


def read_state_checkpoint(path) -> SectorState:
    with open(path, "rb") as fh:
        header = fh.readline().decode()
        payload = fh.read()
    if not header.startswith(_CHECKPOINT_MAGIC.decode()):
        raise ParameterError(f"not a floqsim state checkpoint: {path}")
    fields = dict(part.split("=") for part in header.strip().split()[2:])
    if fields.get("basis") != _BASIS_TAG:
        raise ParameterError(f"unsupported basis tag {fields.get('basis')!r}")
    n, weight = int(fields["n"]), int(fields["m"])
    amp = np.frombuffer(payload, dtype="<c16").astype(complex)
    if len(amp) != sector_dimension(n, weight):
        raise ParameterError("checkpoint length does not match sector dimension")
    return SectorState(n=n, weight=weight, amp=amp)
