"""Universal Bayesian sequence prediction over finite model classes."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    InequalityGridSpec,
    check_bounds,
    general_loss_bound,
    unit_loss_bound,
    verify_proof_inequalities,
)
from .decision import (
    LossSpec,
    PeriodicMask,
    Predictor,
    error_loss,
    lambda_scheme,
    optimal_action,
    rescale_loss,
    threshold_gamma,
    weather_loss,
)
from .estimator import UniversalPredictor
from .evaluate import (
    EvalReport,
    convergence_sum,
    evaluate,
    exact_entropy,
    exact_expected_loss,
    mc_expected_loss,
    standard_schemes,
)
from .games import (
    GameReport,
    GameSpec,
    average_profit_gap,
    profit_lower_bound,
    run_game,
    time_to_win_threshold,
    winning_zone_threshold,
)
from .measures import BernoulliIID, DeterministicSeq, MarkovBinary, Measure, conditional_prob, measure_prob
from .mixture import ModelClass, PosteriorState, mixture_conditional, mixture_prob, posterior_weights
