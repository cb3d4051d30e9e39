"""Certified block-mutual-information toolkit for heavy-tailed hidden Markov processes.

Three countable-hidden-state constructions (two nonergodic cycle mixtures and
one ergodic copy process) share the stationary level law
P(N = n) = C / (n * log2(n)**alpha), alpha in (1, 2].  The package computes
their block mutual information E(n) exactly with certified truncation error,
estimates it from seeded samples, and fits the growth laws the constructions
are designed to exhibit.
"""

__version__ = "0.1.0"

from .analysis import (
    RateFitReport,
    block_mi_upper_bound,
    default_regressor,
    fit_rate,
    predicted_rate_class,
    write_series_csv,
)
from .decoders import (
    DecompositionCheck,
    decode_future_hmc,
    decode_future_hpm1,
    decode_future_hpm2,
    decode_past_hmc,
    decode_past_hpm1,
    decode_past_hpm2,
    decoded_level_entropy,
    future_decoder,
    hidden_truth,
    mi_decomposition_residual,
    past_decoder,
)
from .exact import (
    BudgetExceededError,
    JointBlockTable,
    LabelDisagreementError,
    MIResult,
    block_mi,
    conditional_mi_given,
    entropy,
    enumerate_joint,
    label_entropy,
    merge_tables,
    read_table_cache,
    triple_information,
    write_table_cache,
    write_table_csv,
)
from .intervals import Interval, binary_entropy
from .models import (
    ALPHABETS,
    DEFAULT_SERIES_CUTOFF,
    Kind,
    ProcessModel,
    StateId,
    TransitionLaw,
    binary_digit,
    binary_length,
    phase_count,
)
from .sampling import (
    EstimatorReport,
    Trajectory,
    estimate_block_mi,
    read_trajectory,
    sample_branch_level,
    sample_level,
    sample_trajectories,
    sample_trajectory,
    write_trajectory,
)
from .series import (
    SeriesBracket,
    digit_length,
    level_weight,
    level_weight_sums,
    normalization_sum,
    partial_sum_bracket,
    squared_level_tail,
    tail_sum_bracket,
)
from .verify import VerificationLedger, run_verification

__all__ = [
    "ALPHABETS",
    "BudgetExceededError",
    "DEFAULT_SERIES_CUTOFF",
    "DecompositionCheck",
    "EstimatorReport",
    "Interval",
    "JointBlockTable",
    "Kind",
    "LabelDisagreementError",
    "MIResult",
    "ProcessModel",
    "RateFitReport",
    "SeriesBracket",
    "StateId",
    "Trajectory",
    "TransitionLaw",
    "VerificationLedger",
    "binary_digit",
    "binary_entropy",
    "binary_length",
    "block_mi",
    "block_mi_upper_bound",
    "conditional_mi_given",
    "decode_future_hmc",
    "decode_future_hpm1",
    "decode_future_hpm2",
    "decode_past_hmc",
    "decode_past_hpm1",
    "decode_past_hpm2",
    "decoded_level_entropy",
    "default_regressor",
    "digit_length",
    "entropy",
    "enumerate_joint",
    "estimate_block_mi",
    "fit_rate",
    "future_decoder",
    "hidden_truth",
    "label_entropy",
    "level_weight",
    "level_weight_sums",
    "merge_tables",
    "mi_decomposition_residual",
    "normalization_sum",
    "partial_sum_bracket",
    "past_decoder",
    "phase_count",
    "predicted_rate_class",
    "read_table_cache",
    "read_trajectory",
    "run_verification",
    "sample_branch_level",
    "sample_level",
    "sample_trajectories",
    "sample_trajectory",
    "squared_level_tail",
    "tail_sum_bracket",
    "triple_information",
    "write_series_csv",
    "write_table_cache",
    "write_table_csv",
    "write_trajectory",
    "__version__",
]
