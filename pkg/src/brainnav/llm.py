"""Remote language-model client shared by the perception and decision modules.

Configuration comes from BRAINNAV_LLM_URL / BRAINNAV_LLM_KEY; the wire format
is the usual chat-completion JSON. Tests inject a stub client instead, so
nothing here is exercised against a live endpoint by the test suite.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

ENV_URL = "BRAINNAV_LLM_URL"
ENV_KEY = "BRAINNAV_LLM_KEY"
ENV_MODEL = "BRAINNAV_LLM_MODEL"


class TransportError(RuntimeError):
    """Endpoint unreachable / timed out / non-2xx after the retry budget."""


class EndpointNotConfigured(RuntimeError):
    pass


@dataclass(frozen=True)
class RemoteModelEndpoint:
    url: str
    key: str = ""
    model: str = "gpt-4o"
    timeout_s: float = 30.0
    transport_retries: int = 2
    backoff_s: float = 0.5

    @classmethod
    def from_env(cls) -> "RemoteModelEndpoint":
        url = os.environ.get(ENV_URL)
        if not url:
            raise EndpointNotConfigured(f"{ENV_URL} is not set")
        return cls(url=url, key=os.environ.get(ENV_KEY, ""),
                   model=os.environ.get(ENV_MODEL, "gpt-4o"))


class ChatClient:
    """Anything with ``complete(prompt) -> str``; subclassed by the HTTP client
    and by the canned-response stubs in the tests."""

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class HttpChatClient(ChatClient):
    def __init__(self, endpoint: RemoteModelEndpoint):
        self.endpoint = endpoint

    def complete(self, prompt: str) -> str:
        import requests

        ep = self.endpoint
        headers = {"Content-Type": "application/json"}
        if ep.key:
            headers["Authorization"] = f"Bearer {ep.key}"
        body = {"model": ep.model, "messages": [{"role": "user", "content": prompt}]}
        last_error: Exception | None = None
        for attempt in range(ep.transport_retries + 1):
            try:
                resp = requests.post(ep.url, json=body, headers=headers, timeout=ep.timeout_s)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < ep.transport_retries:
                    time.sleep(ep.backoff_s * (2 ** attempt))
        raise TransportError(f"remote model call failed: {last_error}") from last_error


def client_for(endpoint: RemoteModelEndpoint | None = None) -> ChatClient:
    return HttpChatClient(endpoint if endpoint is not None else RemoteModelEndpoint.from_env())
