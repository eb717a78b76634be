"""Prompt construction for summary generation and the two edit flows.

Templates live as versioned text assets; builders render them and verify
nothing is left unresolved. Book-domain prompts swap every movie-specific
word, so one template serves both item types.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

ITEM_TYPES = ("movie", "book")
_PLACEHOLDER_RE = re.compile(r"\{[a-z_]+\}")

_SYSTEM = ("You are an expert analyst of user preferences. "
           "Follow the format instructions exactly.")


class PromptError(ValueError):
    """Unrenderable template or bad builder input."""


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user_turns: tuple[str, ...]
    expected_format: str

    def __post_init__(self) -> None:
        for turn in (self.system, *self.user_turns):
            leftover = _PLACEHOLDER_RE.findall(turn)
            if leftover:
                raise PromptError(f"unresolved placeholders: {sorted(set(leftover))}")


def _load_asset(name: str) -> str:
    text = resources.files("textrec.assets").joinpath(name).read_text()
    lines = [l for l in text.splitlines() if not l.startswith("# ")]
    return "\n".join(lines).strip()


def _load_turns(name: str) -> list[str]:
    return [part.strip() for part in _load_asset(name).split("\n---\n")]


def _domain_words(item_type: str) -> dict[str, str]:
    if item_type not in ITEM_TYPES:
        raise PromptError(f"item_type must be one of {ITEM_TYPES}")
    return {
        "item_type": item_type,
        "creator_noun": "actor names" if item_type == "movie" else "author names",
    }


def render_history(history: Sequence[tuple[str, int, Sequence[str]]], budget: int) -> str:
    """Oldest ``budget`` items as "title, rating, genre|genre" lines."""
    if not history:
        raise PromptError("history must be non-empty")
    if budget < 1:
        raise PromptError("budget must be >= 1")
    lines = []
    for title, rating, genres in list(history)[:budget]:
        lines.append(f"{title}, {rating}, {'|'.join(genres)}")
    return "\n".join(lines)


def build_generation_prompt(history: Sequence[tuple[str, int, Sequence[str]]],
                            item_type: str = "movie", budget: int = 50) -> PromptBundle:
    """Summary-generation prompt: four-block scaffold, ~200-word target,
    and the user's oldest items inline."""
    words = _domain_words(item_type)
    body = _load_asset("generation_prompt.txt").format(
        item_lines=render_history(history, budget), **words)
    return PromptBundle(
        system=_SYSTEM,
        user_turns=(body,),
        expected_format=("Summary: followed by four blocks: liked genres, liked plot "
                         "points, disliked genres, disliked plot points; about 200 words."),
    )


def build_flip_prompts(summary_text: str, genre_vocab: Sequence[str],
                       favorite: str = "", least_favorite: str = "") -> PromptBundle:
    """Two-turn edit: identify favorite/least-favorite genres, then rewrite
    the summary with the two roles exchanged.

    When the favorite pair is already known (replay or offline corpora) it
    is interpolated directly; otherwise the caller fills it in after the
    identification turn using :func:`parse_flip_identification`.
    """
    if not summary_text.strip():
        raise PromptError("summary must be non-empty")
    identify, rewrite = _load_turns("flip_prompts.txt")
    identify = identify.format(genre_set=", ".join(genre_vocab), user_summary=summary_text)
    rewrite = rewrite.format(favorite_genre=favorite or "[favorite]",
                             least_favorite_genre=least_favorite or "[least favorite]")
    return PromptBundle(
        system=_SYSTEM,
        user_turns=(identify, rewrite),
        expected_format="Favorite: [genre]\nLeast Favorite: [genre], then the full rewritten summary.",
    )


def parse_flip_identification(response: str) -> tuple[str, str]:
    """Extract (favorite, least favorite) from the identification response."""
    fav = re.search(r"favorite:\s*\[?([^\]\n]+?)\]?\s*$", response, re.IGNORECASE | re.MULTILINE)
    least = re.search(r"least favorite:\s*\[?([^\]\n]+?)\]?\s*$", response,
                      re.IGNORECASE | re.MULTILINE)
    if not fav or not least:
        raise PromptError("response does not follow the Favorite/Least Favorite format")
    return fav.group(1).strip(), least.group(1).strip()


def build_finegrained_prompts(summary_text: str, target_title: str,
                              item_type: str = "movie") -> PromptBundle:
    """Two-turn edit: compress the target into five theme words, then splice
    them into the summary as a replacement sentence."""
    if not target_title.strip():
        raise PromptError("target title must be non-empty")
    if not summary_text.strip():
        raise PromptError("summary must be non-empty")
    words = _domain_words(item_type)
    theme, insert = _load_turns("finegrained_prompts.txt")
    theme = theme.format(item=target_title, **words)
    insert = insert.format(summary=summary_text, **words)
    return PromptBundle(
        system=_SYSTEM,
        user_turns=(theme, insert),
        expected_format="Five comma-separated theme words, then the edited summary.",
    )


def fewshot_recommendation_template() -> str:
    """The few-shot LLM-ranker template, shipped as an asset only."""
    return _load_asset("fewshot_recommendation.txt")
