"""Lattice geometry, disordered Heisenberg Floquet circuits, and gate compilation accounting.

Conventions fixed here and relied on everywhere else:

* qubits live on an lx-by-ly grid, index q(x, y) = x + lx*y (row-major,
  qubit 0 at the origin);
* one cycle applies the four edge layers in the temporal order
  horizontal-odd, horizontal-even, vertical-odd, vertical-even, where a
  horizontal edge ((x,y),(x+1,y)) is odd iff x is even and a vertical edge
  ((x,y),(x,y+1)) is odd iff y is even;
* two-qubit matrices are written in the ordered basis |00>,|01>,|10>,|11>
  with the first symbol belonging to qubit i.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .disorder import counter_uniform
from .errors import DataFormatError, ParameterError, ResourceError

DEFAULT_MAX_QUBITS = 144

HORIZONTAL_ODD, HORIZONTAL_EVEN, VERTICAL_ODD, VERTICAL_EVEN = range(4)
LAYER_NAMES = ("horizontal-odd", "horizontal-even", "vertical-odd", "vertical-even")


def max_qubit_budget() -> int:
    return int(os.environ.get("FLOQSIM_MAX_QUBITS", DEFAULT_MAX_QUBITS))


@dataclass(frozen=True)
class LatticeSpec:
    """Rectangular grid and its partition of edges into the four gate layers."""

    lx: int
    ly: int
    layers: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def n(self) -> int:
        return self.lx * self.ly

    @property
    def n_edges(self) -> int:
        return self.lx * (self.ly - 1) + self.ly * (self.lx - 1)

    def qubit(self, x: int, y: int) -> int:
        return x + self.lx * y

    def coords(self, q: int) -> tuple[int, int]:
        return q % self.lx, q // self.lx

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for layer in self.layers for e in layer)


def build_lattice(lx: int, ly: int) -> LatticeSpec:
    """Enumerate the four edge layers of an lx-by-ly grid (row-major within each layer)."""
    if lx < 1 or ly < 1:
        raise ParameterError(f"lattice sides must be positive, got {lx}x{ly}")
    if lx * ly > max_qubit_budget():
        raise ResourceError(
            f"{lx}x{ly} = {lx * ly} qubits exceeds the budget of {max_qubit_budget()}"
        )

    def q(x, y):
        return x + lx * y

    h_odd, h_even, v_odd, v_even = [], [], [], []
    for y in range(ly):
        for x in range(lx - 1):
            (h_odd if x % 2 == 0 else h_even).append((q(x, y), q(x + 1, y)))
    for y in range(ly - 1):
        for x in range(lx):
            (v_odd if y % 2 == 0 else v_even).append((q(x, y), q(x, y + 1)))
    layers = tuple(tuple(layer) for layer in (h_odd, h_even, v_odd, v_even))
    return LatticeSpec(lx=lx, ly=ly, layers=layers)


# ---------------------------------------------------------------------------
# gates


def heisenberg_matrix(coupling: float) -> np.ndarray:
    """exp(iJ(XX+YY+ZZ)) in closed form.

    e^{iJ} on |00> and |11>; the |01>,|10> block is
    e^{-iJ} [[cos 2J, i sin 2J], [i sin 2J, cos 2J]].
    """
    c, s = math.cos(2 * coupling), math.sin(2 * coupling)
    outer = np.exp(1j * coupling)
    inner = np.exp(-1j * coupling)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = outer
    m[3, 3] = outer
    m[1, 1] = m[2, 2] = inner * c
    m[1, 2] = m[2, 1] = inner * 1j * s
    return m


def local_field_phases(h_i: float, h_j: float) -> np.ndarray:
    """Diagonal of exp(i(h_i Z_i + h_j Z_j)) in the |q_i q_j> basis."""
    return np.exp(1j * np.array([h_i + h_j, h_i - h_j, -h_i + h_j, -h_i - h_j]))


def gate_matrix(coupling: float, h_i: float, h_j: float) -> np.ndarray:
    """Full 4x4 unitary exp(iJ(XX+YY+ZZ)) . exp(i(h_i Z_i + h_j Z_j))."""
    return heisenberg_matrix(coupling) * local_field_phases(h_i, h_j)[np.newaxis, :]


@dataclass(frozen=True)
class TwoQubitGate:
    """One disordered Heisenberg interaction on lattice edge (i, j)."""

    i: int
    j: int
    coupling: float
    h_i: float
    h_j: float

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.coupling, self.h_i, self.h_j)

    def sector_action(self) -> tuple[complex, complex, np.ndarray]:
        """(phase on |00>, phase on |11>, 2x2 block on span{|01>,|10>})."""
        m = self.matrix()
        return m[0, 0], m[3, 3], m[1:3, 1:3].copy()


@dataclass(frozen=True)
class FloquetCircuit:
    """Materialized gate program: one cycle's gates, repeated n_cycles times.

    Disorder angles are drawn once per edge endpoint and reused every cycle,
    so the same single-cycle unitary U_F is applied n_cycles times.
    """

    lattice: LatticeSpec
    coupling: float
    n_cycles: int
    seed: int
    layers: tuple[tuple[TwoQubitGate, ...], ...]

    @property
    def gates(self) -> tuple[TwoQubitGate, ...]:
        return tuple(g for layer in self.layers for g in layer)

    def to_text(self) -> str:
        """Auditable record: geometry, parameters, and the explicit angle list."""
        out = io.StringIO()
        out.write("# floqsim circuit v1\n")
        out.write(f"lattice\t{self.lattice.lx}\t{self.lattice.ly}\n")
        out.write(f"coupling_over_pi\t{self.coupling / math.pi!r}\n")
        out.write(f"cycles\t{self.n_cycles}\n")
        out.write(f"seed\t{self.seed}\n")
        for name, layer in zip(LAYER_NAMES, self.layers):
            out.write(f"layer\t{name}\n")
            for g in layer:
                out.write(f"gate\t{g.i}\t{g.j}\t{g.h_i!r}\t{g.h_j!r}\n")
        return out.getvalue()

    @staticmethod
    def from_text(text: str) -> "FloquetCircuit":
        lx = ly = n_cycles = seed = None
        coupling = None
        layer_gates: list[list[TwoQubitGate]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                if parts[0] == "lattice":
                    lx, ly = int(parts[1]), int(parts[2])
                elif parts[0] == "coupling_over_pi":
                    coupling = float(parts[1]) * math.pi
                elif parts[0] == "cycles":
                    n_cycles = int(parts[1])
                elif parts[0] == "seed":
                    seed = int(parts[1])
                elif parts[0] == "layer":
                    layer_gates.append([])
                elif parts[0] == "gate":
                    layer_gates[-1].append(
                        TwoQubitGate(int(parts[1]), int(parts[2]), coupling,
                                     float(parts[3]), float(parts[4]))
                    )
                else:
                    raise DataFormatError(f"line {lineno}: unknown field {parts[0]!r}")
            except (IndexError, ValueError) as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from exc
        if None in (lx, ly, coupling, n_cycles, seed) or len(layer_gates) != 4:
            raise DataFormatError("incomplete circuit record")
        return FloquetCircuit(
            lattice=build_lattice(lx, ly),
            coupling=coupling,
            n_cycles=n_cycles,
            seed=seed,
            layers=tuple(tuple(g) for g in layer_gates),
        )


def build_floquet_circuit(lattice: LatticeSpec, coupling: float, n_cycles: int,
                          seed: int) -> FloquetCircuit:
    """Draw the disorder fields and materialize one Floquet cycle.

    Each gate endpoint gets an independent uniform draw on [-pi/2, pi/2]
    addressed by (seed, layer, edge, endpoint); the draws are frozen across
    cycles. Bit-reproducible for a fixed seed.
    """
    if not 0.0 <= coupling <= math.pi / 4:
        raise ParameterError(f"coupling must lie in [0, pi/4], got {coupling}")
    if n_cycles < 1:
        raise ParameterError(f"cycle count must be >= 1, got {n_cycles}")
    layers = []
    for layer_idx, edges in enumerate(lattice.layers):
        gates = []
        for edge_idx, (i, j) in enumerate(edges):
            h_i = float(counter_uniform(seed, layer_idx, edge_idx, 0)[0])
            h_j = float(counter_uniform(seed, layer_idx, edge_idx, 1)[0])
            gates.append(TwoQubitGate(i=i, j=j, coupling=float(coupling),
                                      h_i=h_i, h_j=h_j))
        layers.append(tuple(gates))
    return FloquetCircuit(lattice=lattice, coupling=coupling, n_cycles=n_cycles,
                          seed=seed, layers=tuple(layers))


# ---------------------------------------------------------------------------
# compilation accounting


@dataclass(frozen=True)
class CompileStats:
    """Native two-qubit gate cost of a circuit on CZ hardware."""

    cz_count: int
    cz_depth: int
    one_qubit_count: int


def compile_stats(circuit: FloquetCircuit) -> CompileStats:
    """Closed-form CZ cost: each Heisenberg gate is 3 CZ (via 3 CNOT), so
    cz_count = 3 * n_F * E and cz_depth = 12 * n_F (4 layers of 3 CZ steps).

    One-qubit count: per gate 2 virtual Rz for the disorder fields plus the
    decomposition's 3 rotations, 2 Rz bookends, and 2 Hadamards per CNOT.
    """
    e = circuit.lattice.n_edges
    n_f = circuit.n_cycles
    per_gate_1q = 2 + 3 + 2 + 6
    return CompileStats(
        cz_count=3 * n_f * e,
        cz_depth=12 * n_f,
        one_qubit_count=per_gate_1q * n_f * e,
    )


# ---------------------------------------------------------------------------
# native-gate decomposition check


def _rz(a: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * a), 0], [0, np.exp(0.5j * a)]])


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


_I2 = np.eye(2, dtype=complex)
_CNOT_IJ = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CNOT_JI = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)


def three_cnot_heisenberg(coupling: float) -> np.ndarray:
    """Three-CNOT realization of exp(iJ(XX+YY+ZZ)) (up to global phase).

    Angles theta = lambda = pi/2 - 2J and phi = 2J - pi/2; temporal order:
    Rz(pi/2) on i, CNOT(i->j), Ry(theta) on i, CNOT(j->i),
    Ry(phi) on i with Rz(lambda) on j, CNOT(i->j), Rz(-pi/2) on j.
    """
    theta = lam = math.pi / 2 - 2 * coupling
    phi = 2 * coupling - math.pi / 2
    return (
        np.kron(_I2, _rz(-math.pi / 2))
        @ _CNOT_IJ
        @ np.kron(_ry(phi), _rz(lam))
        @ _CNOT_JI
        @ np.kron(_ry(theta), _I2)
        @ _CNOT_IJ
        @ np.kron(_rz(math.pi / 2), _I2)
    )


def distance_up_to_phase(u: np.ndarray, v: np.ndarray) -> float:
    """Max-norm distance between unitaries after aligning global phase."""
    overlap = np.trace(v.conj().T @ u)
    if abs(overlap) < 1e-12:
        return float(np.max(np.abs(u - v)))
    return float(np.max(np.abs(u - (overlap / abs(overlap)) * v)))


def verify_native_decomposition(coupling: float) -> float:
    """Distance between the three-CNOT circuit and the exact exponential."""
    if not 0.0 <= coupling <= math.pi / 4:
        raise ParameterError(f"coupling must lie in [0, pi/4], got {coupling}")
    return distance_up_to_phase(heisenberg_matrix(coupling),
                                three_cnot_heisenberg(coupling))
