"""Learning the structure and coefficients of correlated Pauli noise.

The package simulates randomized single-qubit-Clifford circuits around a
correlated Pauli error channel, estimates Pauli eigenvalues from the shots in
a SPAM-robust way, reconstructs local error marginals, and learns both the
conditional-independence hypergraph and the clique potentials of the
underlying Gibbs error distribution.
"""

from .channel import PauliChannel, SPAMModel, convolve_channels, depolarizing_table
from .circuits import ShotBank, ShotRecord, batch_simulate, simulate_shot
from .coefficients import (LearnedModel, diamond_distance, enclosure,
                           estimate_potential, learn_potentials,
                           potential_errors, tv_distance)
from .errors import (ConfigError, DimensionMismatchError, EnumerationCapError,
                     IndeterminateDecayError, InsufficientDataError, RegionError,
                     StageError)
from .estimator import (EigenvalueEstimate, EigenvalueTable, MarginalTable,
                        batch_estimate, decay_points, estimate_pauli,
                        estimate_region, fit_eigenvalue_decay,
                        marginal_from_alphas, median_of_means,
                        measurement_weight, twirled_sample, twirled_samples)
from .experiment import ExperimentRun, RunReport, default_k_grid, merged_config
from .gibbs import (GibbsNoiseModel, Hypergraph, LearningConstants,
                    PotentialTable, centered_potential, compute_constants,
                    derived_graph, generate_model, validate_conditions)
from .pauli import (PauliString, character_value, embed, enumerate_paulis,
                    restrict, symplectic_product)
from .structure import (LearnedStructure, MarginalProvider, OracleProvider,
                        ProtocolProvider, dependence_score, learn_graph,
                        neighborhood_learning, score_accuracy_report)

__all__ = [name for name in dir() if not name.startswith("_")]
