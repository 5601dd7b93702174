"""Empirical dynamic modeling and a propaganda controller for a civil-violence model."""

from ._edmpc import (
    DataError,
    Embedding,
    NumericalError,
    UsageError,
    __version__,
    delay_embedding,
    detect_trapped_state,
    generalized_embedding,
    knn,
    legitimacy_schedule,
    pearson_rho,
    propaganda_response,
    run_cli,
    simplex_predict,
    simulate,
    smap_predict,
)

__all__ = [
    "DataError",
    "Embedding",
    "NumericalError",
    "UsageError",
    "__version__",
    "delay_embedding",
    "detect_trapped_state",
    "generalized_embedding",
    "knn",
    "legitimacy_schedule",
    "pearson_rho",
    "propaganda_response",
    "run_cli",
    "simplex_predict",
    "simulate",
    "smap_predict",
]
