"""Uniform text-generation interface with deterministic record and replay.

Every prompt is canonicalized (trailing whitespace stripped per line) and
hashed; replay mode answers from a JSONL log keyed by that hash, making full
pipeline runs reproducible without a live provider.  Record mode forwards to
the provider and appends the exchange to the log.  Calls serialize through one
logical channel per log file and the log is append-only.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

ENDPOINT_ENV = "XCRATE_LLM_ENDPOINT"
KEY_ENV = "XCRATE_LLM_KEY"

MODES = ("live", "record", "replay")


class GatewayError(Exception):
    """Base class for gateway failures."""


class ReplayMiss(GatewayError):
    """Raised in replay mode when no record exists for a prompt."""


class ProviderError(GatewayError):
    """Raised when the live provider is unreachable or misconfigured."""


def canonicalize_prompt(prompt: str) -> str:
    """Strip trailing whitespace per line; avoids spurious replay misses."""
    return "\n".join(line.rstrip() for line in prompt.split("\n"))


def request_hash(prompt: str) -> str:
    return hashlib.sha256(canonicalize_prompt(prompt).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptRecord:
    request_hash: str
    prompt: str
    response: str
    timestamp: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "request_hash": self.request_hash,
                "prompt": self.prompt,
                "response": self.response,
                "timestamp": self.timestamp,
            },
            sort_keys=True,
        )


def load_replay_log(path: str | Path) -> dict[str, str]:
    """Load a JSONL replay log into a hash -> response table."""
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            table[row["request_hash"]] = row["response"]
    return table


def append_record(path: str | Path, prompt: str, response: str) -> PromptRecord:
    """Append one prompt/response exchange to a replay log."""
    record = PromptRecord(
        request_hash=request_hash(prompt),
        prompt=canonicalize_prompt(prompt),
        response=response,
        timestamp=time.time(),
    )
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(record.to_json() + "\n")
    return record


def _env_provider(prompt: str) -> str:
    endpoint = os.environ.get(ENDPOINT_ENV)
    if not endpoint:
        raise ProviderError(f"{ENDPOINT_ENV} is not set; no live provider available")
    payload = json.dumps({"prompt": prompt}).encode("utf-8")
    request = urllib.request.Request(
        endpoint,
        data=payload,
        headers={
            "Content-Type": "application/json",
            "Authorization": f"Bearer {os.environ.get(KEY_ENV, '')}",
        },
    )
    try:
        with urllib.request.urlopen(request, timeout=60) as response:
            body = json.loads(response.read().decode("utf-8"))
    except Exception as exc:
        raise ProviderError(f"provider call failed: {exc}") from exc
    if "text" not in body:
        raise ProviderError("provider response is missing the 'text' field")
    return body["text"]


class LlmGateway:
    """Gateway to a text-generation provider with record/replay modes.

    ``provider`` may be any callable mapping a prompt string to a response
    string; by default the endpoint named by the environment is used.
    """

    def __init__(
        self,
        mode: str = "replay",
        log_path: str | Path | None = None,
        provider: Callable[[str], str] | None = None,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown gateway mode: {mode!r}")
        if mode in ("record", "replay") and log_path is None:
            raise ValueError(f"{mode} mode requires a log path")
        self.mode = mode
        self.log_path = Path(log_path) if log_path is not None else None
        self.provider = provider or _env_provider
        self._lock = threading.Lock()
        self._replay_table: dict[str, str] | None = None
        if mode == "replay":
            self._replay_table = load_replay_log(self.log_path)

    def complete(self, prompt: str, mode: str | None = None) -> str:
        """Resolve one prompt in the given mode (default: the gateway's own)."""
        mode = mode or self.mode
        if mode not in MODES:
            raise ValueError(f"unknown gateway mode: {mode!r}")
        if mode in ("record", "replay") and self.log_path is None:
            raise ValueError(f"{mode} mode requires a log path")
        digest = request_hash(prompt)
        with self._lock:
            if mode == "replay":
                if self._replay_table is None:
                    self._replay_table = load_replay_log(self.log_path)
                if digest not in self._replay_table:
                    raise ReplayMiss(f"no recorded response for hash {digest}")
                return self._replay_table[digest]
            response = self.provider(canonicalize_prompt(prompt))
            if mode == "record":
                append_record(self.log_path, prompt, response)
            return response
