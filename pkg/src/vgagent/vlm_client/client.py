"""Chat-completion client with retry, fallback and JSONL transcripts."""

from __future__ import annotations

import base64
import json
import os
import threading
from dataclasses import dataclass

import httpx

from ..errors import VGAgentError
from ..planning import ActionSpace, Decision
from .parse import parse_response
from .prompts import PromptBundle

FALLBACK_ACTION = "turn_left_30"
CORRECTION = (
    "Your previous reply could not be used ({error}). Respond ONLY with a single, valid JSON object with the "
    "five keys observation, goal_analysis, plan, thought, action. The action MUST be an exact element of action_space."
)


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str = "mock"
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0
    api_key_env: str = "VGAGENT_API_KEY"
    max_concurrency: int = 4

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0 or self.max_concurrency < 1:
            raise ValueError("timeout and max_concurrency must be positive")


def fallback_decision(reason: str) -> Decision:
    return Decision(
        observation="",
        goal_analysis="",
        plan=("Reorient after an unusable planner reply.",),
        thought=f"fallback: {reason}",
        action=FALLBACK_ACTION,
        fallback=True,
    )


class VLMClient:
    """Safe to share across threads; in-flight requests are bounded by a semaphore."""

    def __init__(self, cfg: EndpointConfig, transcript_path=None, transport=None):
        self.cfg = cfg
        self._sem = threading.BoundedSemaphore(cfg.max_concurrency)
        self._log_lock = threading.Lock()
        self.transcript_path = transcript_path
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(timeout=cfg.timeout, headers=headers, transport=transport)

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _messages(self, bundle: PromptBundle, extra):
        content = [{"type": "text", "text": bundle.user_text}]
        if bundle.image:
            url = "data:image/png;base64," + base64.b64encode(bundle.image).decode("ascii")
            content.append({"type": "image_url", "image_url": {"url": url}})
        return [{"role": "system", "content": bundle.system_text}, {"role": "user", "content": content}] + extra

    def _post(self, messages) -> str:
        body = {"model": self.cfg.model, "messages": messages, "temperature": self.cfg.temperature}
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        with self._sem:
            resp = self._http.post(url, json=body)
        resp.raise_for_status()
        data = resp.json()
        return data["choices"][0]["message"]["content"]

    def _log(self, record):
        if not self.transcript_path:
            return
        with self._log_lock, open(self.transcript_path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def query(self, bundle: PromptBundle, space: ActionSpace, tag=None) -> Decision:
        """Send the prompt; retry with a corrective note; fall back after max_retries."""
        extra = []
        last = "no attempt"
        for attempt in range(self.cfg.max_retries + 1):
            try:
                text = self._post(self._messages(bundle, extra))
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last = f"transport: {type(exc).__name__}: {exc}"
                self._log({"tag": tag, "attempt": attempt, "error": last})
                continue
            try:
                dec = parse_response(text, space, lenient=True)
            except VGAgentError as exc:
                last = f"{type(exc).__name__}: {exc}"
                self._log({"tag": tag, "attempt": attempt, "reply": text, "error": last})
                extra = extra + [
                    {"role": "assistant", "content": text},
                    {"role": "user", "content": CORRECTION.format(error=last)},
                ]
                continue
            self._log({"tag": tag, "attempt": attempt, "reply": text, "decision": dec.to_json()})
            return dec
        dec = fallback_decision(last)
        self._log({"tag": tag, "fallback": True, "error": last})
        return dec
