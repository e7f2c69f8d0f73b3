"""QAOA statevector simulation with precomputed cost tables and mixers."""

__version__ = "0.1.0"

from .angles import (OptimizerConfig, RoundRecord, basinhopping, bfgs_minimize, find_angles,
                     find_angles_random_restarts, median_angles, read_checkpoint)
from .basis import BasisSet, Bitstring, dicke_rank, dicke_states, dicke_unrank, gosper_next, states
from .cost import (CnfFormula, CostTable, Graph, build_cost_table, densest_subgraph,
                   erdos_renyi, k_vertex_cover, ksat, maxcut, random_ksat, threshold_transform)
from .errors import (CapacityError, CompatibilityError, DataError, DomainError, FormatError,
                     OptimizerError, QAOAError)
from .grad import finite_difference_gradient, gradient, value_and_gradient
from .grover_fast import (CompressedCost, compress_cost, exp_value_compressed,
                          ground_state_probability_compressed, simulate_compressed)
from .mixer import (Mixer, MixerKind, load_mixer, mixer_clique, mixer_custom, mixer_grover,
                    mixer_ring, mixer_x, mixer_x_terms, save_mixer)
from .sim import (AngleSchedule, SimResult, StateVector, amplitudes, apply_mixer,
                  apply_phase_separator, exp_value, expectation, ground_state_probability,
                  initial_state, probabilities, simulate, walsh_hadamard)

__all__ = [name for name in dir() if not name.startswith("_")]
