"""Linear ensembles of word-embedding models (least squares / orthogonal Procrustes)."""

from wordensemble.alignment import (
    CombineConfig,
    EnsembleResult,
    Init,
    Method,
    combine,
    residual_error,
    solve_ols_projection,
    solve_procrustes_projection,
)
from wordensemble.embedding_io import EmbeddingModel, align_vocabularies, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "CombineConfig",
    "EmbeddingModel",
    "EnsembleResult",
    "Init",
    "Method",
    "align_vocabularies",
    "combine",
    "load_model",
    "residual_error",
    "save_model",
    "solve_ols_projection",
    "solve_procrustes_projection",
]
