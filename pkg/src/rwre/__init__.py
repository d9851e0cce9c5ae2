"""Random walks in random environment on Galton-Watson trees.

Analytic exponents (:mod:`rwre.law`), lazily grown marked trees
(:mod:`rwre.gw_tree`), quenched tree walks (:mod:`rwre.tree_walk`), exact
one-dimensional formulas (:mod:`rwre.line_walk`) and the linearly edge
reinforced walk (:mod:`rwre.lerrw`).  The command line lives in
:mod:`rwre.harness`.
"""

from .errors import (BorderlineCriterion, BudgetExceeded, ConfigError, InsufficientRegenerations,
                     InsufficientSamples, NotAncestor, NotTransient, RWREError)
from .gw_tree import ROOT_PARENT, MarkedTree, NodeRecord, count_descendants, generation_size
from .law import (ALaw, OffspringLaw, TransformTable, big_L, big_L_prime, big_L_prime_direct, is_transient,
                  lambda_exponent, legendre, moment_transform, solomon_kappa, transform_table)
from .lerrw import (BetaEnvNode, UrnState, check_theorem_errw_hypothesis, equivalence_test, lerrw_speed,
                    sample_beta_env, urn_step)
from .line_walk import (LineEnvironment, ProjectedEnvironment, domination_check, expected_exit_time,
                        hit_prob_before_minus1, m_estimate, oracle_solve, p_estimate, project_to_path)
from .stats import EstimateWithCI
from .tree_walk import (RegenerationRecord, WalkTrajectory, detect_regenerations, estimate_beta_mc,
                        estimate_beta_recursion, estimate_exponent, estimate_speed, regeneration_statistics,
                        run_walk, visited_per_generation)

__version__ = "0.1.0"
