"""Sequential selection paths and first-false-selection rank analysis.

The package provides three path engines (least angle regression, the
lasso homotopy, forward stepwise), tools to locate and predict the rank
of the first zero-coefficient variable entering a path, double-ranking
diagnostics against least-squares t-statistics, and a reproducible
Monte Carlo harness.
"""

from .design import (
    Dataset,
    Decaying,
    DesignSpec,
    Equi,
    Family,
    SignalSpec,
    generate_dataset,
    load_design_csv,
    standardize_columns,
)
from .diagram import (
    DiagramRow,
    DiagramTable,
    double_ranking,
    least_squares_tstats,
    separation_condition,
)
from .estimators import ForwardStepwiseSelector, LassoSelector, LeastAngleSelector
from .experiments import (
    ExperimentConfig,
    OutputKind,
    SummaryRow,
    SweepPoint,
    config_from_json,
    config_to_json,
    preset_config,
    run_experiment,
)
from .paths import (
    EventKind,
    Method,
    PathEvent,
    PathTrace,
    Termination,
    forward_stepwise_path,
    lars_path,
    lasso_lars_path,
    trace_csv,
)
from .prediction import (
    Prediction,
    Regime,
    linear_sparsity_bound,
    normal_order_stat_approx,
    predicted_log_rank,
    predicted_rank,
    sparsity_cutoff,
)
from .ranking import (
    GammaStat,
    RankReport,
    compute_gamma,
    first_spurious_rank,
    residual_inner_profile,
)
from .reference import OracleSolution, greedy_rss_step, lasso_at_lambda
from .svgplot import emit_svg_scatter

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Decaying",
    "DesignSpec",
    "Equi",
    "Family",
    "SignalSpec",
    "generate_dataset",
    "load_design_csv",
    "standardize_columns",
    "DiagramRow",
    "DiagramTable",
    "double_ranking",
    "least_squares_tstats",
    "separation_condition",
    "ForwardStepwiseSelector",
    "LassoSelector",
    "LeastAngleSelector",
    "ExperimentConfig",
    "OutputKind",
    "SummaryRow",
    "SweepPoint",
    "config_from_json",
    "config_to_json",
    "preset_config",
    "run_experiment",
    "EventKind",
    "Method",
    "PathEvent",
    "PathTrace",
    "Termination",
    "forward_stepwise_path",
    "lars_path",
    "lasso_lars_path",
    "trace_csv",
    "Prediction",
    "Regime",
    "linear_sparsity_bound",
    "normal_order_stat_approx",
    "predicted_log_rank",
    "predicted_rank",
    "sparsity_cutoff",
    "GammaStat",
    "RankReport",
    "compute_gamma",
    "first_spurious_rank",
    "residual_inner_profile",
    "OracleSolution",
    "greedy_rss_step",
    "lasso_at_lambda",
    "emit_svg_scatter",
    "__version__",
]
