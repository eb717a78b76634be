"""Deterministic offline summary synthesis and editing.

These stand in for a hosted LLM wherever reproducibility matters: tests,
benchmark corpora, and air-gapped runs. Output follows the same four-block
"Summary:" scaffold the generation prompt asks for.
"""

from __future__ import annotations

import numpy as np

from ..models.genre import GenreProfile
from .records import UserSummary

_LIKED_GENRE_TEMPLATES = (
    "The user gravitates toward {a} and {b} stories, with {a} standing out as the clear favorite genre",
    "The user shows a strong preference for {a}, frequently paired with {b}",
    "{a} is the user's favorite genre, and {b} features heavily as well",
    "A deep fondness for {a} anchors this profile, complemented by a taste for {b}",
    "The user most enjoys {a}, with {b} as a frequent companion genre",
)
_LIKED_THEME_TEMPLATES = (
    "Plot points involving {t} resonate strongly",
    "Stories built around {t} hold particular appeal",
    "Narratives exploring {t} are consistently well received",
    "The user responds well to arcs centered on {t}",
)
_DISLIKED_GENRE_TEMPLATES = (
    "Conversely, the user does not enjoy {a} and tends to avoid {b} as well",
    "The user does not enjoy {a}; {b} titles are likewise avoided",
    "On the other hand, {a} is the user's least favorite genre, and {b} rarely appeals",
    "The user shows a clear disinterest in {a} and steers clear of {b}",
)
_DISLIKED_THEME_TEMPLATES = (
    "Plots focused on {t} hold little appeal, though other viewers may enjoy them",
    "Stories that lean on {t} are generally less appreciated by this user",
    "The user avoids narratives dominated by {t}, popular as they may be with others",
)
_FILLERS = (
    "Character development matters more to this user than spectacle",
    "Pacing that rewards patience is welcomed rather than resented",
    "A memorable ensemble can elevate an otherwise familiar premise",
    "Atmosphere and tone weigh heavily in what the user chooses next",
    "Emotional payoffs land best when they are earned over time",
    "The user appreciates craft in dialogue and structure",
    "Novel settings are a draw when they serve the story rather than replace it",
    "Endings that respect the audience's intelligence are valued",
    "Familiar premises are fine when the execution is distinctive",
    "The user tends to revisit works that reward a second viewing",
)

MIN_WORDS = 150
MAX_WORDS = 220


def _word_count(text: str) -> int:
    return len(text.split())


def synthesize_offline(genre_prefs: GenreProfile, liked_themes: list[str],
                       disliked: list[str], seed: int, user: int = 0) -> UserSummary:
    """Four-block summary naming top genres as liked and bottom genres as
    disliked, interleaving the theme phrases. Byte-identical for a seed."""
    if len(genre_prefs.vocabulary) == 0:
        raise ValueError("genre vocabulary is empty")
    rng = np.random.default_rng(seed)
    top = genre_prefs.top_genres(3)
    bottom = genre_prefs.bottom_genres(2)
    liked_a = top[0]
    liked_b = top[1] if len(top) > 1 else top[0]
    disliked_a = bottom[0]
    disliked_b = bottom[1] if len(bottom) > 1 else bottom[0]

    def pick(pool: tuple[str, ...]) -> str:
        return pool[int(rng.integers(len(pool)))]

    liked_theme_text = ", ".join(liked_themes) if liked_themes else "quiet personal stakes"
    disliked_theme_text = ", ".join(disliked) if disliked else "formulaic spectacle"

    blocks = [
        pick(_LIKED_GENRE_TEMPLATES).format(a=liked_a, b=liked_b) + ".",
        pick(_LIKED_THEME_TEMPLATES).format(t=liked_theme_text) + ".",
        pick(_DISLIKED_GENRE_TEMPLATES).format(a=disliked_a, b=disliked_b) + ".",
        pick(_DISLIKED_THEME_TEMPLATES).format(t=disliked_theme_text) + ".",
    ]
    # pad the liked-plot block with fillers until the length target is met;
    # reshuffle and continue if one pass through the pool is not enough
    text = "Summary:\n\n" + "\n\n".join(blocks)
    filler_order = list(rng.permutation(len(_FILLERS)))
    while _word_count(text) < MIN_WORDS:
        if not filler_order:
            filler_order = list(rng.permutation(len(_FILLERS)))
        blocks[1] += " " + _FILLERS[filler_order.pop()] + "."
        text = "Summary:\n\n" + "\n\n".join(blocks)
    if _word_count(text) > MAX_WORDS:
        raise ValueError("synthesized summary exceeded the length budget")
    return UserSummary(user=user, text=text, source="synthetic", seed=seed)


def flip_offline(original: UserSummary, genre_prefs: GenreProfile, liked_themes: list[str],
                 disliked: list[str], seed: int) -> tuple[UserSummary, str, str]:
    """Deterministic large-scope edit: regenerate with the favorite and least
    favorite genres' weights exchanged. Returns (edited, favorite, least)."""
    fav = genre_prefs.favorite()
    least = genre_prefs.least_favorite()
    flipped = genre_prefs.swapped(fav, least)
    edited = synthesize_offline(flipped, liked_themes, disliked, seed, user=original.user)
    edited = UserSummary(user=original.user, text=edited.text, source="synthetic-flip",
                         seed=seed, parent=original.key())
    return edited, genre_prefs.vocabulary[fav], genre_prefs.vocabulary[least]


_THEME_SENTENCE_TAILS = (
    "resonate well",
    "hold strong appeal",
    "stand out as favorites",
)


def insert_theme_sentence(original: UserSummary, theme_words: list[str],
                          seed: int) -> UserSummary:
    """Deterministic fine-grained edit: the liked-plot-points block is
    replaced by a sentence holding the comma-separated theme words, exactly
    what the edit prompt asks a hosted model to do. The closing phrase
    varies with the seed so reruns differ."""
    if len(theme_words) == 0:
        raise ValueError("theme words must be non-empty")
    rng = np.random.default_rng(seed)
    tail = _THEME_SENTENCE_TAILS[int(rng.integers(len(_THEME_SENTENCE_TAILS)))]
    sentence = ", ".join(w.capitalize() if i == 0 else w.lower()
                         for i, w in enumerate(theme_words)) + f" {tail}."
    blocks = original.text.split("\n\n")
    if len(blocks) >= 3:
        # swap only the first sentence of the liked-plot-points block so the
        # edit stays small relative to the summary, as the prompt demands
        sentences = blocks[2].split(". ")
        sentences[0] = sentence.rstrip(".")
        blocks[2] = ". ".join(sentences)
        text = "\n\n".join(blocks)
    else:
        text = original.text + "\n\n" + sentence
    return UserSummary(user=original.user, text=text, source="synthetic-edit",
                       seed=seed, parent=original.key())
