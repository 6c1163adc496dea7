"""floqsim: exact simulation and ergodicity statistics for 2D disordered
Heisenberg Floquet circuits.

The package is organized around six pieces:

* ``lattice``    -- grid geometry, gate ensemble, CZ compilation accounting
* ``states``     -- exact statevector evolution in a fixed-weight sector
* ``rmt``        -- random-matrix reference values and spectral statistics
* ``estimators`` -- collision-probability estimation and Parseval identities
* ``mitigation`` -- bit-flip / depolarizing / LEC error-mitigation pipelines
* ``io`` / ``cli`` -- sweep orchestration, text formats, command line
"""

__version__ = "0.1.0"

from .errors import (CalibrationError, DataFormatError, FloqsimError,
                     ParameterError, ResourceError)
from .lattice import (CompileStats, FloquetCircuit, LatticeSpec, TwoQubitGate,
                      build_floquet_circuit, build_lattice, compile_stats,
                      gate_matrix, heisenberg_matrix, verify_native_decomposition)
from .samples import SampleSet
from .states import (EigenphaseSet, FullState, ReducedDensity, SectorState,
                     apply_gate, evolve, floquet_eigenphases, marginal_probabilities,
                     neel_state, probabilities, reduced_density, sample)

__all__ = [
    "CalibrationError", "CompileStats", "DataFormatError", "EigenphaseSet",
    "FloqsimError", "FloquetCircuit", "FullState", "LatticeSpec",
    "ParameterError", "ReducedDensity", "ResourceError", "SampleSet",
    "SectorState", "TwoQubitGate", "apply_gate", "build_floquet_circuit",
    "build_lattice", "compile_stats", "evolve", "floquet_eigenphases",
    "gate_matrix", "heisenberg_matrix", "marginal_probabilities", "neel_state",
    "probabilities", "reduced_density", "sample", "verify_native_decomposition",
]
