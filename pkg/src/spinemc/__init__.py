"""Branching Markov processes with spines: samplers, martingales and checks."""

from .eigen import (MartingaleSpec, NumericError, UnsupportedModelError, build_matrix, expm_apply,
                    martingale_spec, principal_eigenpair)
from .martingale import (MartingaleValue, conditional_expectation_Q, eval_Z, eval_zeta,
                         eval_zeta_tilde, gibbs_boltzmann_weights, spine_decomposition)
from .model import (ModelError, ModelSpec, MotionLaw, OffspringLaw, PathRecord, bbm_model,
                    degenerate_model, finite_type_model, general_model, model_from_config,
                    size_biased_pmf)
from .oracle import (enumerate_discrete_skeleton, expected_population, expected_spine_fissions,
                     many_to_one_type_oracle)
from .simulate import (ExplosionError, Measure, SimConfig, attach_uniform_spine, sample_cox_fission,
                       sample_cox_fission_thinning, simulate, simulate_P_tilde, simulate_Q_tilde,
                       simulate_single_particle, simulate_tree_P)
from .tree import (DomainError, MarkedTree, Spine, alive_at, dump_tree, extended_path,
                   extract_subtree, graft, load_tree, path_at, spine_node_at, validate_tree)

__version__ = "0.1.0"
