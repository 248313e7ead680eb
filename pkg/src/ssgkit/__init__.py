"""Toolkit for defender strategy search in multi-step security games.

A defender (leader) commits to a randomized schedule of k units over n
targets and m time steps; an attacker (follower) observes the schedule's
probabilities and strikes one target.  The package provides exact payoff
arithmetic, four attacker models (rational plus three cognitive-bias
variants), an evolutionary strategy solver that is generic over its fitness
evaluator, and a trainable neural network that replaces exact evaluation
with a learned estimate.
"""

from .behavior import (
    Anchoring,
    BehaviorModel,
    FollowerResponse,
    Prospect,
    Quantal,
    Rational,
    at_perceived_coverage,
    at_response,
    exact_leader_value,
    model_from_json,
    model_label,
    model_to_json,
    parse_model_spec,
    pt_response,
    pt_value,
    pt_weight,
    qr_distribution,
    rational_response,
)
from .datagen import (
    BenchmarkSpec,
    DatasetSpec,
    ParseError,
    gen_benchmark_game,
    gen_training_set,
    load_dataset,
    load_game,
    load_network,
    load_strategy,
    rng_for,
    sample_mixed_strategy,
    save_dataset,
    save_game,
    save_network,
    save_strategy,
)
from .evolution import (
    EvaluationError,
    Evaluator,
    EvolutionConfig,
    EvolutionResult,
    Individual,
    crossover,
    evolve,
    exact_evaluator,
    init_population,
    mutate,
    tournament_select,
)
from .game import (
    CoverageProfile,
    Game,
    MixedStrategy,
    PureStrategy,
    ValidationError,
    attack_success_prob,
    coverage_profile,
    follower_payoff,
    leader_payoff,
    pure_singleton,
)
from .senn import (
    AdamState,
    SennNetwork,
    TrainConfig,
    TrainingExample,
    adam_step,
    build,
    encode_strategy,
    evaluate_mae,
    forward,
    loss_and_gradient,
    senn_evaluator,
    train,
)

__version__ = "0.1.0"
