"""Consumer welfare and producer incentives when a consumer picks noisily
among several models per task."""

from .choice import (
    ABSTAIN,
    ChoiceKind,
    ChoiceSpec,
    ValueMatrix,
    btl_limits_check,
    pick_probs,
    task_welfare,
    task_welfares,
    total_welfare,
)
from .creation import (
    Allocation,
    CreationResult,
    Objective,
    Regime,
    best_creation_weighted_winrate,
    best_creation_welfare,
    best_creation_winrate,
    equalize_thresholds,
    mechanism_comparison,
    objective_of_allocation,
)
from .errors import AggMarketError, AllAbstain, DegenerateMarket, InputError
from .oracle import GridSpec, fd_check, grid_alloc_oracle, subset_oracle
from .replacement import (
    DuopolyTask,
    bothneg_diagnosis,
    instantaneous_welfare,
    objective_derivative,
    specialization_condition,
    task_orderings,
)
from .welfare import (
    add_model_delta,
    find_nonmonotone_witness,
    monotone_report,
    mutual_exclusivity_probe,
    pairwise_benefit,
    swish,
    welfare_derivative,
)

__version__ = "0.1.0"
