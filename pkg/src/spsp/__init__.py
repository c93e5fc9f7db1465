"""Variable selection by partitioning penalized-regression solution paths."""

__version__ = "0.1.0"

from .errors import SPSPError
from .partition import PartitionResult, adjacent_distances, estimate_R, refit, spsp_partition, spsp_select
from .paths import CoefficientPath, Dataset, LambdaGrid, PenaltyConfig, fit_path, make_lambda_grid, standardize
from .simulation import build_design, compute_metrics, run_experiment, run_r_sweep, sample_dataset, sis_screen
from .tuning import cross_validate, information_criterion, stability_selection

__all__ = [
    "SPSPError",
    "CoefficientPath",
    "Dataset",
    "LambdaGrid",
    "PenaltyConfig",
    "PartitionResult",
    "adjacent_distances",
    "build_design",
    "compute_metrics",
    "cross_validate",
    "estimate_R",
    "fit_path",
    "information_criterion",
    "make_lambda_grid",
    "refit",
    "run_experiment",
    "run_r_sweep",
    "sample_dataset",
    "sis_screen",
    "spsp_partition",
    "spsp_select",
    "stability_selection",
    "standardize",
]
