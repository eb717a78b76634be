from .llm import (
    CannedCompletionClient,
    GenerationError,
    HTTPCompletionClient,
    OfflineSynthesizerClient,
    ProviderConfig,
    RecordingClient,
    generate_summary,
)
from .prompts import (
    PromptBundle,
    PromptError,
    build_finegrained_prompts,
    build_flip_prompts,
    build_generation_prompt,
    fewshot_recommendation_template,
    parse_flip_identification,
)
from .records import UserSummary, load_corpus, save_corpus
from .stats import SummaryStats, bleu4, corpus_stats, edit_distance, words
from .store import ConflictError, SummaryStore
from .synth import flip_offline, insert_theme_sentence, synthesize_offline

__all__ = [
    "CannedCompletionClient",
    "ConflictError",
    "GenerationError",
    "HTTPCompletionClient",
    "OfflineSynthesizerClient",
    "PromptBundle",
    "PromptError",
    "ProviderConfig",
    "RecordingClient",
    "SummaryStats",
    "SummaryStore",
    "UserSummary",
    "bleu4",
    "build_finegrained_prompts",
    "build_flip_prompts",
    "build_generation_prompt",
    "corpus_stats",
    "edit_distance",
    "fewshot_recommendation_template",
    "flip_offline",
    "generate_summary",
    "insert_theme_sentence",
    "load_corpus",
    "parse_flip_identification",
    "save_corpus",
    "synthesize_offline",
    "words",
]
