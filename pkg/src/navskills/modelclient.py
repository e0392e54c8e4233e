"""Text-generation client protocol with live, recording and replay backends.

The wire format is ``POST {"prompt": str, "images": [str, ...]} -> {"text": str}``.
Every client exposes ``complete(prompt, images=())``; recording and replay wrap
any client with a TranscriptStore so runs are reproducible offline.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Protocol, Sequence

from .errors import TranscriptError
from .transcripts import TranscriptStore

LIVE = "live"
RECORD = "record"
REPLAY = "replay"


class ModelClient(Protocol):
    def complete(self, prompt: str, images: Sequence[str] = ()) -> str: ...


def _request(prompt: str, images: Sequence[str]) -> dict:
    return {"prompt": prompt, "images": list(images)}


class HttpModelClient:
    """Live client for any endpoint speaking the wire format."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def complete(self, prompt: str, images: Sequence[str] = ()) -> str:
        import requests

        resp = requests.post(self.endpoint, json=_request(prompt, images), timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["text"]


class FunctionClient:
    """Adapter for tests and scripted stand-ins: any prompt->text callable."""

    def __init__(self, fn: Callable[[str], str]):
        self._fn = fn

    def complete(self, prompt: str, images: Sequence[str] = ()) -> str:
        return self._fn(prompt)


class RecordingClient:
    """Pass-through client that appends every exchange to a transcript."""

    def __init__(self, inner: ModelClient, store: TranscriptStore):
        self.inner = inner
        self.store = store

    def complete(self, prompt: str, images: Sequence[str] = ()) -> str:
        request = _request(prompt, images)
        text = self.inner.complete(prompt, images)
        self.store.record(request, {"text": text})
        return text


class ReplayClient:
    """Client that answers exclusively from a recorded transcript."""

    def __init__(self, store: TranscriptStore | str | Path):
        self.store = store if isinstance(store, TranscriptStore) else TranscriptStore(store)

    def complete(self, prompt: str, images: Sequence[str] = ()) -> str:
        response = self.store.lookup(_request(prompt, images))
        try:
            return response["text"]
        except (TypeError, KeyError):
            raise TranscriptError("recorded response is missing the 'text' field") from None


def make_client(
    mode: str,
    *,
    endpoint: str | None = None,
    transcript_path: str | Path | None = None,
) -> ModelClient:
    """Build a client for a run mode: live, record (live + log) or replay."""
    if mode == REPLAY:
        if transcript_path is None:
            raise TranscriptError("replay mode requires a transcript path")
        return ReplayClient(TranscriptStore(transcript_path))
    if endpoint is None:
        raise TranscriptError(f"{mode} mode requires an endpoint")
    live = HttpModelClient(endpoint)
    if mode == RECORD:
        if transcript_path is None:
            raise TranscriptError("record mode requires a transcript path")
        return RecordingClient(live, TranscriptStore(transcript_path))
    return live
