"""Python access to the kkindex C++ core."""

from ._core import (
    Config,
    ConfigError,
    SeededRng,
    UnknownExperiment,
    dirac_matrix,
    experiment_csv,
    experiment_registry,
    kernel_dimension,
    parse_config_text,
    partition_counts,
    run_experiment,
    tail_bound,
    twisted_blocks,
    weitzenbock_residual,
    xi_derivative_norm,
)

__all__ = [
    "Config",
    "ConfigError",
    "SeededRng",
    "UnknownExperiment",
    "dirac_matrix",
    "experiment_csv",
    "experiment_registry",
    "kernel_dimension",
    "parse_config_text",
    "partition_counts",
    "run_experiment",
    "tail_bound",
    "twisted_blocks",
    "weitzenbock_residual",
    "xi_derivative_norm",
]
