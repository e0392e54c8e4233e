"""Request/response transcript store for deterministic record/replay.

A transcript is a JSONL file of ``{"key", "request", "response"}`` records,
keyed by a content hash of the canonicalized request. Recording appends;
replaying looks requests up by hash and fails loudly on a miss, which keeps
replayed runs byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .errors import TranscriptError


def content_hash(request: Any) -> str:
    """Stable hash of a JSON-serializable request."""
    canonical = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class TranscriptStore:
    """Hash-keyed request/response log backed by a JSONL file."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, Any] = {}
        if self.path is not None and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._entries[record["key"]] = record["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def lookup(self, request: Any) -> Any:
        key = content_hash(request)
        try:
            return self._entries[key]
        except KeyError:
            raise TranscriptError(
                f"no recorded response for request {key[:12]}… in {self.path or '<memory>'}"
            ) from None

    def record(self, request: Any, response: Any) -> None:
        key = content_hash(request)
        if key in self._entries:
            return
        self._entries[key] = response
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "request": request, "response": response},
                                    sort_keys=True, ensure_ascii=False) + "\n")
