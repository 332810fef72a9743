"""Lexical semantic change detection: context-free, context-dependent and ensemble rankings."""

from ._lscd import (
    LscdError,
    __version__,
    average_ranks,
    combine,
    generate_benchmark,
    mpe_distance,
    procrustes,
    run_pipeline,
    spearman,
    theta_from_accuracy,
)

__all__ = [
    "LscdError",
    "__version__",
    "average_ranks",
    "combine",
    "generate_benchmark",
    "mpe_distance",
    "procrustes",
    "run_pipeline",
    "spearman",
    "theta_from_accuracy",
]
