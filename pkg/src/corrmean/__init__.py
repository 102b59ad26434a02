"""Mean estimation from sparsified vectors, with decoders that exploit correlation.

Nodes send ``k`` of ``d`` coordinates (Rand-k, Top-k, Wangni or induced
sparsification); the server decodes with plain Rand-k scaling, the
Rand-k-Spatial family (scaling by how many nodes sent each coordinate) or
Rand-k-Temporal (filling unsent coordinates from memory). Analytic MSE
formulas, an exhaustive oracle, and desk-scale experiments come with it.
"""

from .analytics import (
    CorrelationSummary,
    c1_c2,
    correlation_summary,
    eta_bound,
    mse_rand_k,
    mse_spatial,
    mse_temporal,
    optimal_t,
)
from .core import (
    BudgetError,
    CorrMeanError,
    DimensionMismatchError,
    HitCounts,
    MemoryModeError,
    RoundMetrics,
    ServerMemory,
    SparseMessage,
    TFunction,
    hit_counts,
)
from .estimate import (
    Decoder,
    beta_bar,
    decode_prescaled,
    decode_rand_k,
    decode_rand_k_spatial,
    decode_rand_k_temporal,
    memory_update_per_node,
    memory_update_shared,
)
from .oracle import ExactResult, MonteCarloResult, PatternLimitError, encoder_expectation, enumerate_exact, monte_carlo
from .sparsify import EncoderSpec, induced_encode, rand_k_encode, top_k_encode, wangni_encode, wangni_probabilities
from .tasks import ConfigError, TaskConfig, TaskDivergedError, desk_config, r2r1_sweep, run_task

__version__ = "0.1.0"
