"""User summary records with provenance and lineage."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable


@dataclass(frozen=True)
class UserSummary:
    """A natural-language user profile plus how it came to be.

    ``parent`` names the summary this one edits (a ``key()`` string), so
    lineage chains stay reconstructible and acyclic by construction.
    """

    user: int
    text: str
    source: str  # llm name | synthetic | synthetic-flip | synthetic-edit | human-edit
    seed: int
    parent: str | None = None
    version: int = 0

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("summary text must be non-empty")
        if self.parent is not None and self.parent == self.key():
            raise ValueError("summary cannot be its own parent")

    @property
    def words(self) -> int:
        return len(self.text.split())

    def key(self) -> str:
        return f"{self.user}:{self.version}:{self.source}:{self.seed}"

    def to_record(self) -> dict:
        return {
            "user": self.user,
            "text": self.text,
            "source": self.source,
            "seed": self.seed,
            "parent": self.parent,
            "version": self.version,
            "words": self.words,
        }

    @staticmethod
    def from_record(doc: dict) -> "UserSummary":
        return UserSummary(user=doc["user"], text=doc["text"], source=doc["source"],
                           seed=doc["seed"], parent=doc.get("parent"),
                           version=doc.get("version", 0))


def save_corpus(summaries: Iterable[UserSummary], path: str | Path) -> None:
    """Line-delimited records, one summary per line."""
    with Path(path).open("w") as fh:
        for s in summaries:
            fh.write(json.dumps(s.to_record(), sort_keys=True) + "\n")


def load_corpus(path: str | Path) -> list[UserSummary]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(UserSummary.from_record(json.loads(line)))
    return out
