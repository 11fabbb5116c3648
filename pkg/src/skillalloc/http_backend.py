"""Completions-API backend (``/v1/completions`` wire format with logprobs)."""

from __future__ import annotations

import logging
import os
import time
from typing import Optional

import httpx

from .errors import BackendUnavailable, ScoringMismatch
from .scoring import Scorer

log = logging.getLogger(__name__)

TRANSIENT_STATUS = {408, 409, 429, 500, 502, 503, 504}


class HttpScorer(Scorer):
    """Scores candidates by echoing ``prompt + candidate`` with token logprobs.

    A candidate's score is the sum of the log-probabilities of the tokens
    that overlap the candidate text. All candidates go out in one batched
    request and are re-aligned by each choice's ``index``.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout: float = 30.0,
        token_env: str = "OPENAI_API_KEY",
        retries: int = 3,
        backoff_s: float = 0.5,
        max_tokens: int = 512,
        seed: Optional[int] = None,
        client: Optional[httpx.Client] = None,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.token_env = token_env
        self.retries = retries
        self.backoff_s = backoff_s
        self.max_tokens = max_tokens
        self.seed = seed
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def _headers(self):
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, body: dict) -> dict:
        if self.seed is not None:
            body = {**body, "seed": self.seed}
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                delay = self.backoff_s * 2 ** (attempt - 1)
                log.warning("retrying completion request in %.1fs (%s)", delay, last)
                self._sleep(delay)
            try:
                resp = self._client.post(self.endpoint, json=body, headers=self._headers(), timeout=self.timeout)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code in TRANSIENT_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"{self.endpoint} rejected the request: HTTP {resp.status_code} {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendUnavailable(f"{self.endpoint} returned non-JSON body") from exc
        raise BackendUnavailable(f"{self.endpoint} unreachable after {self.retries} retries: {last}")

    def _score(self, req):
        texts = [f"{req.prompt}\n{c}" for c in req.candidates]
        start = len(req.prompt) + 1
        data = self._post(
            {
                "model": self.model,
                "prompt": texts,
                "max_tokens": 0,
                "echo": True,
                "logprobs": 0,
                "temperature": 0,
            }
        )
        choices = data.get("choices") or []
        if len(choices) != len(texts):
            raise ScoringMismatch(f"backend returned {len(choices)} choices for {len(texts)} candidates")
        choices = sorted(choices, key=lambda c: c.get("index", 0))
        scores = []
        for choice in choices:
            lp = choice.get("logprobs") or {}
            tokens = lp.get("tokens") or []
            offsets = lp.get("text_offset") or []
            token_lps = lp.get("token_logprobs") or []
            if not (len(tokens) == len(offsets) == len(token_lps)):
                raise ScoringMismatch("logprobs arrays have inconsistent lengths")
            total = 0.0
            hit = False
            for tok, off, val in zip(tokens, offsets, token_lps):
                if off + len(tok) <= start:
                    continue
                if val is None:
                    raise ScoringMismatch("missing logprob for a candidate token")
                total += float(val)
                hit = True
            if not hit:
                raise ScoringMismatch("no candidate tokens in echoed logprobs")
            scores.append(total)
        return scores

    def _complete(self, prompt, stop):
        body = {"model": self.model, "prompt": prompt, "max_tokens": self.max_tokens, "temperature": 0}
        if stop:
            body["stop"] = [stop]
        data = self._post(body)
        choices = data.get("choices") or []
        if not choices:
            raise BackendUnavailable("completion response has no choices")
        return choices[0].get("text", "")
