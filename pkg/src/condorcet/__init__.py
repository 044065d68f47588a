"""Condorcet-winner identification in stochastic dueling bandits."""
from ._accel import backend
from .complexity import (
    HardnessProfile,
    h_cw,
    hardness,
    hardness_report,
    lb_certify,
    lb_certify_quantile,
    lb_explore,
    optimal_sparsity,
)
from .env import (
    DuelOracle,
    GapMatrix,
    condorcet_winner,
    gen_block_minimax,
    gen_random_cw,
    gen_total_order,
    lift_row,
    load_matrix,
    permute_negatives,
    save_matrix,
    validate,
)
from .errors import (
    CondorcetError,
    DegenerateInstanceError,
    InvalidParameterError,
    InvalidQueryError,
    InvalidSparsityError,
    NoCondorcetWinnerError,
    NonterminationError,
    UnderbudgetError,
)
from .identify import FbConfig, IdentificationResult, baseline_row_certify, fb_cwi, fc_cwi, test_cw

__version__ = "0.1.0"
