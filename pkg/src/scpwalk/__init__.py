"""Functional inequalities for reversible walks on the boolean lattice under the
stochastic covering property."""

from .errors import (CeilingError, ConstructionError, ConvergenceError, DomainError,
                     EstimationError, InfeasibleCouplingError, PreconditionError, ReducibleError,
                     ScpWalkError, SplitError, ValidationError)
from .lattice_measure import (BitVector, BooleanMeasure, ConditionedSumSpec, ExplicitSpec,
                              LEnsembleSpec, ProductSpec, SpanningTreeSpec, build_measure,
                              condition, homogeneity, split)
from .negdep import (Coupling, SCPReport, check_scp, covers, flip_swap_coupling,
                     stochastic_cover_coupling)
from .chain import (Generator, build_bases_exchange, build_mcmc, normalize, two_state,
                    validate)
from .functional import (dirichlet, entropy, evaluate_forms, poincare_exact, ratio,
                         sobolev_estimate, two_state_constants, variance)
from .decompose import (Certificate, Decomposition, SynthesisResult, certify_main, chi,
                        identity_check, project_restrict, split_decomposition,
                        synthesize_flip_swap)
from .dynamics import evolve, mixing_bound, mixing_time, tv
from .concentration import (herbst_check, lipschitz_constant, pemantle_peres_check,
                            quad_variation)

__version__ = "0.1.0"
