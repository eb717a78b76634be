from .synthetic import (
    GENRES,
    THEME_WORDS,
    FlipRecord,
    SyntheticConfig,
    SyntheticDataset,
    generate,
)
from .tasks import (
    TaskRun,
    alpha_sweep,
    corpus_hash,
    default_alpha_grid,
    route_guidance,
    run_fine_grained,
    run_genre_flip,
    run_guided,
    run_large_scope,
    top_genres_by_items,
)

__all__ = [
    "GENRES",
    "THEME_WORDS",
    "FlipRecord",
    "SyntheticConfig",
    "SyntheticDataset",
    "TaskRun",
    "alpha_sweep",
    "corpus_hash",
    "default_alpha_grid",
    "generate",
    "route_guidance",
    "run_fine_grained",
    "run_genre_flip",
    "run_guided",
    "run_large_scope",
    "top_genres_by_items",
]
