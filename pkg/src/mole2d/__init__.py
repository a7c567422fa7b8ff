"""Multi-hypothesis orientation estimation for 2D pose graphs.

The orientation maximum-likelihood problem on the circle is rewritten in
terms of integer unknowns on the graph's cycle space; a Gaussian estimate of
those integers is screened into a small confidence set and each member is
turned into orientations by a closed-form weighted least-squares solve.
"""

from .angles import WrappedGaussian, regularizer, sample_wrapped, split_large_variance_edges, wrap, wrapped_pdf
from .cycles import (
    FCB_MST,
    FCB_ODO,
    MCB,
    CycleBasisMatrix,
    PseudoinverseApplier,
    apply_pseudoinverse,
    basis_weight,
    cycle_basis,
    cycle_weight,
    fundamental_cycle_basis,
    minimum_cycle_basis,
)
from .errors import *  # noqa: F401,F403
from .estimator import (
    GammaEstimate,
    HypothesisSet,
    Mole2DResult,
    OrientationHypothesis,
    cost,
    gamma_estimator,
    integer_screening,
    ml_estimate,
    mole2d,
    theta_given_gamma,
    theta_given_k,
)
from .graph import EdgeRecord, PoseGraph, SpanningTree, build_graph, incidence_matrices, spanning_tree
from .io import PoseGraph2D, parse_g2o, parse_toro, solve_positions_given_orientations, write_bootstrapped, write_g2o
from .linalg import GaussianBelief, chi2_quantile_1dof, condition, projection_identity_residual, weighted_ls_solve
from .oracle import GroundTruthInstance, grid_search_angles, monte_carlo_coverage, true_gamma
from .synth import SynthConfig, circle_graph, grid_walk, inject_orientation_noise

__version__ = "0.1.0"
