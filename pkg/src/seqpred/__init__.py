"""Executable sequence-prediction theory.

Process measures over finite alphabets, Bayes mixtures and cover-based
predictors, and evaluators for expected cumulative KL divergence, conditional
total variation and the d_inf distance.  All logarithms are base 2.
"""

from .core import (
    BINARY,
    TERNARY,
    Alphabet,
    BudgetExceededError,
    ConditionalDistribution,
    History,
    InputError,
    ProcessMeasure,
    log_prob,
    sample,
)
from .divergence import (
    DivergenceSeries,
    MCEstimate,
    TVSeries,
    d_inf,
    d_inf_markov_bound,
    d_inf_markov_envelope,
    exact_dn,
    exact_dn_series,
    kl_loss_estimate,
    mc_dn,
    mc_dn_series,
    tv_conditional,
    tv_dichotomy_trajectories,
)
from .measures import (
    BiasedToSequenceMeasure,
    DeterministicMeasure,
    HiddenChainMeasure,
    IIDMeasure,
    MarkovMeasure,
    SparseZerosPredictor,
    StrongBiasMeasure,
    TargetSequence,
    bernoulli,
    make_gamma_prime_t,
    make_gamma_t,
    make_hidden_chain,
    make_markov,
    uniform,
)
from .predictors import (
    AdversarySequence,
    CoverConstruction,
    MixturePredictor,
    adversary_sequence,
    build_cover_construction,
    finite_memory_grid,
    mixture,
    rational_markov_grid,
    replace_regularizer,
)
from .specs import from_spec, parse_measure, to_spec

__version__ = "0.1.0"
