"""Host-side client for external generator/classifier adapters.

Adapters are child processes speaking line-delimited JSON on their standard
streams: exactly one response object per request object, UTF-8, one per line.
The host serializes requests canonically (sorted keys, compact separators);
a handshake declaring the protocol version and capabilities precedes any op.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from typing import Sequence

from .manifest import canonical_dumps

import json

PROTOCOL_VERSION = 1
ADAPTER_ENV_VAR = "GENREGAP_ADAPTER"


class AdapterError(Exception):
    """Adapter failure with the diagnostic payload the child returned, if any."""

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload or {}


def adapter_argv(explicit: str | Sequence[str] | None = None) -> list[str]:
    """Resolve the adapter command line from an argument or the environment."""
    if explicit is None:
        explicit = os.environ.get(ADAPTER_ENV_VAR, "")
    if isinstance(explicit, str):
        argv = shlex.split(explicit)
    else:
        argv = list(explicit)
    if not argv:
        raise AdapterError(f"no adapter configured (set {ADAPTER_ENV_VAR} or pass a command)")
    return argv


class AdapterClient:
    """One child adapter process; requests are serialized strictly in order."""

    def __init__(self, command: str | Sequence[str] | None = None):
        self.argv = adapter_argv(command)
        self._proc = subprocess.Popen(
            self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)
        self.capabilities = self.request({"op": "handshake", "protocol": PROTOCOL_VERSION})
        if self.capabilities.get("protocol") != PROTOCOL_VERSION:
            self.close()
            raise AdapterError(f"adapter speaks protocol {self.capabilities.get('protocol')!r}, "
                               f"host needs {PROTOCOL_VERSION}", self.capabilities)

    def request(self, payload: dict) -> dict:
        if self._proc.poll() is not None:
            raise AdapterError(f"adapter process exited with code {self._proc.returncode}")
        try:
            self._proc.stdin.write(canonical_dumps(payload) + "\n")
            self._proc.stdin.flush()
        except BrokenPipeError as exc:
            raise AdapterError("adapter closed its input stream") from exc
        line = self._proc.stdout.readline()
        if not line:
            raise AdapterError("adapter closed its output stream mid-request",
                               {"request_op": payload.get("op")})
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"adapter sent invalid JSON: {exc}", {"line": line[:200]}) from exc
        if not isinstance(response, dict):
            raise AdapterError("adapter response is not an object", {"line": line[:200]})
        if "error" in response:
            raise AdapterError(f"adapter error {response.get('error')!r}: "
                               f"{response.get('detail', '')}", response)
        return response

    def generate(self, genre: str, keywords: Sequence[str], max_tokens: int, seed: int) -> str:
        response = self.request({"op": "generate", "genre": genre,
                                 "keywords": list(keywords),
                                 "max_tokens": max_tokens, "seed": seed})
        if "text" not in response:
            raise AdapterError("generate response lacks a text field", response)
        return str(response["text"])

    def predict(self, texts: Sequence[str]) -> list[str]:
        response = self.request({"op": "predict", "texts": list(texts)})
        labels = response.get("labels")
        if not isinstance(labels, list) or len(labels) != len(texts):
            raise AdapterError("predict response lacks a matching labels list", response)
        return [str(x) for x in labels]

    def train(self, task: str, **kwargs) -> dict:
        return self.request({"op": "train", "task": task, **kwargs})

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(canonical_dumps({"op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError):
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
