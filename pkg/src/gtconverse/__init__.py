"""Finite-blocklength converse bounds and simulations for group testing."""

from .bounds import (
    AdaptiveNoisyConfig,
    BoundResult,
    NPThreshold,
    bja_bound,
    bsc_adaptive_bound,
    bsc_nonadaptive_bound,
    evaluate_bound,
    fano_bound,
    gaussian_approx_curp,
    iid_curp_bound,
    min_tests_for_target,
    noiseless_converse,
    nonidentical_bound,
    np_threshold,
)
from .channels import BSC, Dilution, GenericODM, Noiseless, capacity_bsc, transition_prob
from .sources import (
    CombinatorialUniform,
    Enumerated,
    IIDBernoulli,
    NonIdenticalBernoulli,
    TwoStateMarkov,
    entropy,
    l_star,
    top_mass,
)

__version__ = "0.1.0"
