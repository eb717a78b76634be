"""Append-only versioned summary store with an active-pointer index.

The log is line-delimited summary records; ``active.json`` maps each user
to their live version. Commits are serialized per user, previews never
touch the store, and earlier versions stay addressable for undo.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from .records import UserSummary


class ConflictError(RuntimeError):
    """Concurrent commit detected; safe to retry."""


class SummaryStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_path = self.root / "summaries.jsonl"
        self.index_path = self.root / "active.json"
        self._lock = threading.Lock()
        self._user_locks: dict[int, threading.Lock] = {}
        self._history: dict[int, list[UserSummary]] = {}
        self._active: dict[int, int] = {}
        self._load()

    def _load(self) -> None:
        if self.log_path.exists():
            with self.log_path.open() as fh:
                for line in fh:
                    if line.strip():
                        s = UserSummary.from_record(json.loads(line))
                        self._history.setdefault(s.user, []).append(s)
        if self.index_path.exists():
            self._active = {int(u): v for u, v in json.loads(self.index_path.read_text()).items()}
        else:
            self._active = {u: len(h) - 1 for u, h in self._history.items()}

    def _lock_for(self, user: int) -> threading.Lock:
        with self._lock:
            return self._user_locks.setdefault(user, threading.Lock())

    def users(self) -> list[int]:
        return sorted(self._history)

    def history(self, user: int) -> list[UserSummary]:
        return list(self._history.get(user, []))

    def active(self, user: int) -> UserSummary:
        if user not in self._active:
            raise KeyError(f"no summary for user {user}")
        return self._history[user][self._active[user]]

    def seed(self, summary: UserSummary) -> UserSummary:
        """Initial import of a generated summary (no parent lineage check)."""
        return self._append(summary.user, summary.text, summary.source, summary.seed,
                            parent=summary.parent)

    def commit(self, user: int, draft_text: str, source: str = "human-edit",
               expected_version: int | None = None) -> UserSummary:
        """Append a new version and move the active pointer to it.

        ``expected_version`` enables optimistic concurrency: a mismatch with
        the current active version raises :class:`ConflictError`.
        """
        if not draft_text or not draft_text.strip():
            raise ValueError("draft text must be non-empty")
        with self._lock_for(user):
            current = self._active.get(user)
            if expected_version is not None and current != expected_version:
                raise ConflictError(
                    f"active version is {current}, commit expected {expected_version}")
            parent = None
            if current is not None:
                parent = self._history[user][current].key()
            return self._append(user, draft_text.strip(), source, seed=0, parent=parent)

    def _append(self, user: int, text: str, source: str, seed: int,
                parent: str | None) -> UserSummary:
        version = len(self._history.get(user, []))
        summary = UserSummary(user=user, text=text, source=source, seed=seed,
                              parent=parent, version=version)
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(summary.to_record(), sort_keys=True) + "\n")
        self._history.setdefault(user, []).append(summary)
        self._active[user] = version
        self._write_index()
        return summary

    def _write_index(self) -> None:
        tmp = self.index_path.with_suffix(".tmp")
        tmp.write_text(json.dumps({str(u): v for u, v in self._active.items()},
                                  sort_keys=True))
        os.replace(tmp, self.index_path)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        if self.log_path.exists():
            h.update(self.log_path.read_bytes())
        if self.index_path.exists():
            h.update(self.index_path.read_bytes())
        return h.hexdigest()
