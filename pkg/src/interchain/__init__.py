"""Interacting parallel MCMC chains.

N chains sample a common target; at each sub-iteration every chain proposes
a candidate for the chain being updated and a multinomial
Metropolis-Hastings rule selects among them.  The package provides the
whole-vector and component-wise sweeps, the benchmark experiments, KDE-based
convergence indicators, and exact transition-matrix oracles on small
discrete spaces.
"""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, parse_config
from .diagnostics import (
    Grid1D,
    Kde1D,
    epsilon_against_reference,
    epsilon_mean,
    kde_fit,
    l1_error,
    marginal_kdes,
    mode_occupancy,
)
from .discrete_oracle import (
    DiscreteProposal,
    DiscreteScalarProposal,
    DiscreteSpec,
    DiscreteTarget,
    TransitionMatrix,
    build_mwg_transition_matrix,
    build_sub_kernel,
    build_transition_matrix,
    check_conditional_detailed_balance,
    check_invariance,
    check_mwg_conditional_detailed_balance,
)
from .experiments import run_hmm, run_multimodal, run_oracle_check
from .interacting_mh import (
    ChainEnsemble,
    SelectionProbabilities,
    acceptance_alpha,
    run_sweeps,
    sub_iteration,
    sweep,
)
from .interacting_mwg import (
    ComponentContext,
    GaussianStep,
    IndependenceGaussian,
    PlainComponentKernel,
    ScalarDistanceAdaptiveGaussian,
    ScalarProposalKernel,
    independent_parallel_run,
    mwg_sweep,
    plain_mwg_sweep,
    scalar_acceptance_alpha,
)
from .lgssm import (
    LgssmConditional,
    LgssmModel,
    LgssmPosterior,
    LgssmPosteriorState,
    ObservationRecord,
    gibbs_reference_run,
    gibbs_sweep,
    joint_gaussian_oracle,
    simulate,
    state_conditional,
    theta_conditional,
)
from .proposals import DistanceAdaptiveGaussian, InteractionContext, ProposalKernel
from .streams import StreamKeys
from .targets import (
    ConditionalTarget,
    GaussianMixture,
    JointConditional,
    TargetDensity,
    conditional_from_joint,
    mixture_log_density,
    three_mode_benchmark,
)
