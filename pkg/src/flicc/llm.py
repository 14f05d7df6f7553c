"""Zero-shot LLM comparison: prompt construction, provider transport with
retries, deterministic normalization of free-form responses, and replayable
scoring.

Verdicts are archived (one JSONL record per sample) before any scoring, so a
report can always be recomputed offline from the archive; network
nondeterminism is quarantined there.
"""

from __future__ import annotations

import json
import logging
import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Callable, Protocol, Sequence

from . import metrics
from .corpus import Dataset
from .errors import AuthError, EmptyText, ProviderError, RateLimited, UnknownLabel
from .taxonomy import canonical_names, normalize_label_text, parse_label

logger = logging.getLogger(__name__)

NONE_MARKER = "__none__"
UNPARSEABLE = "__unparseable__"

_NONE_PHRASES = {"none", "none of the above"}

PROMPT_TEMPLATE = (
    "Please classify a piece of text into the following categories of "
    "logical fallacies: {labels}. Text: {text} Label: "
)


@dataclass(frozen=True)
class LlmRequest:
    provider: str
    model_id: str
    prompt: str
    temperature: float = 0.0
    safety_overrides: frozenset = frozenset()

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be nonempty")
        if not self.model_id:
            raise ValueError("model_id must be nonempty")


class NormalizationRule(IntEnum):
    EXACT = 1
    LABEL_TAG = 2
    SUBSTRING = 3
    NONE = 4
    UNPARSEABLE = 5


@dataclass(frozen=True)
class LlmVerdict:
    raw_response: str
    normalized: str  # canonical label name, NONE_MARKER, or UNPARSEABLE
    rule: NormalizationRule

    @property
    def is_label(self) -> bool:
        return self.normalized not in (NONE_MARKER, UNPARSEABLE)


def build_prompt(labels: Sequence, text: str) -> str:
    """The exact zero-shot classification prompt."""
    if not text or not text.strip():
        raise EmptyText("cannot build a prompt for empty text")
    names = [getattr(l, "canonical_name", str(l)) for l in labels]
    if len(names) != 12:
        raise ValueError(f"expected 12 labels, got {len(names)}")
    return PROMPT_TEMPLATE.format(labels=", ".join(names), text=text)


def _label_tag_tail(raw: str) -> str | None:
    """Text after the last 'Label:' marker, if any."""
    lowered = raw.lower()
    pos = lowered.rfind("label:")
    if pos == -1:
        return None
    return raw[pos + len("label:"):].strip()


def normalize_response(raw: str) -> LlmVerdict:
    """Deterministic rule cascade mapping a raw completion to a verdict.

    1. the whole response normalizes to a label;
    2. the text after a trailing "Label:" marker normalizes to a label;
    3. the response contains label names as substrings: the last occurrence
       wins (the most likely label for trailing-suggestion completions);
    4. "None", "None of the above", or an empty/blocked response maps to the
       none-marker (also checked on the "Label:" tail);
    5. otherwise unparseable.
    """
    try:
        label = parse_label(raw)
        return LlmVerdict(raw_response=raw, normalized=label.canonical_name,
                          rule=NormalizationRule.EXACT)
    except UnknownLabel:
        pass

    tail = _label_tag_tail(raw)
    if tail is not None:
        try:
            label = parse_label(tail)
            return LlmVerdict(raw_response=raw, normalized=label.canonical_name,
                              rule=NormalizationRule.LABEL_TAG)
        except UnknownLabel:
            pass

    lowered = raw.lower()
    last_pos, last_name = -1, None
    for name in canonical_names():
        pos = lowered.rfind(name)
        if pos > last_pos:
            last_pos, last_name = pos, name
    if last_name is not None:
        return LlmVerdict(raw_response=raw, normalized=last_name,
                          rule=NormalizationRule.SUBSTRING)

    candidates = [normalize_label_text(raw)]
    if tail is not None:
        candidates.append(normalize_label_text(tail))
    if not raw.strip() or any(c in _NONE_PHRASES for c in candidates):
        return LlmVerdict(raw_response=raw, normalized=NONE_MARKER,
                          rule=NormalizationRule.NONE)

    return LlmVerdict(raw_response=raw, normalized=UNPARSEABLE,
                      rule=NormalizationRule.UNPARSEABLE)


class Provider(Protocol):
    def complete(self, request: LlmRequest) -> str: ...


class TransientProviderError(Exception):
    """Retryable failure (rate limit, transient server error)."""

    def __init__(self, message: str, rate_limited: bool = False):
        super().__init__(message)
        self.rate_limited = rate_limited


def _require_env(*names: str) -> str:
    for name in names:
        value = os.environ.get(name)
        if value:
            return value
    raise AuthError(f"missing credential: set one of {names}")


class OpenAiChatProvider:
    """Chat-completions transport; needs OPENAI_API_KEY."""

    base_url = "https://api.openai.com/v1"

    def complete(self, request: LlmRequest) -> str:
        import httpx

        key = _require_env("OPENAI_API_KEY")
        response = httpx.post(
            f"{self.base_url}/chat/completions",
            headers={"Authorization": f"Bearer {key}"},
            json={
                "model": request.model_id,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
            },
            timeout=60.0,
        )
        if response.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientProviderError(
                f"status {response.status_code}", rate_limited=response.status_code == 429
            )
        if response.status_code != 200:
            raise ProviderError(f"status {response.status_code}: {response.text[:200]}")
        data = response.json()
        choice = data["choices"][0]
        if choice.get("finish_reason") == "content_filter":
            return ""
        return choice["message"].get("content") or ""


class GeminiProvider:
    """generateContent transport; needs GOOGLE_API_KEY or GEMINI_API_KEY.

    With the "disable_safety" override the request asks the provider not to
    block any category, mirroring runs where myths would otherwise be refused.
    Blocked or empty responses come back as empty strings, never exceptions.
    """

    base_url = "https://generativelanguage.googleapis.com/v1beta"

    _SAFETY_CATEGORIES = (
        "HARM_CATEGORY_HARASSMENT",
        "HARM_CATEGORY_HATE_SPEECH",
        "HARM_CATEGORY_SEXUALLY_EXPLICIT",
        "HARM_CATEGORY_DANGEROUS_CONTENT",
    )

    def complete(self, request: LlmRequest) -> str:
        import httpx

        key = _require_env("GOOGLE_API_KEY", "GEMINI_API_KEY")
        body: dict = {
            "contents": [{"parts": [{"text": request.prompt}]}],
            "generationConfig": {"temperature": request.temperature},
        }
        if "disable_safety" in request.safety_overrides:
            body["safetySettings"] = [
                {"category": c, "threshold": "BLOCK_NONE"} for c in self._SAFETY_CATEGORIES
            ]
        response = httpx.post(
            f"{self.base_url}/models/{request.model_id}:generateContent",
            params={"key": key},
            json=body,
            timeout=60.0,
        )
        if response.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientProviderError(
                f"status {response.status_code}", rate_limited=response.status_code == 429
            )
        if response.status_code != 200:
            raise ProviderError(f"status {response.status_code}: {response.text[:200]}")
        data = response.json()
        candidates = data.get("candidates") or []
        if not candidates:  # blocked prompt: record an empty response
            return ""
        parts = candidates[0].get("content", {}).get("parts", [])
        return "".join(p.get("text", "") for p in parts)


class StubProvider:
    """In-process provider for tests and offline replays: wraps a callable
    mapping a prompt to a completion."""

    def __init__(self, fn: Callable[[str], str]):
        self.fn = fn

    def complete(self, request: LlmRequest) -> str:
        return self.fn(request.prompt)


_PROVIDERS: dict[str, Callable[[], Provider]] = {
    "openai": OpenAiChatProvider,
    "gemini": GeminiProvider,
}


def register_provider(name: str, factory: Callable[[], Provider]) -> None:
    _PROVIDERS[name] = factory


def get_provider(name: str) -> Provider:
    if name not in _PROVIDERS:
        raise ProviderError(f"unknown provider {name!r}; known: {sorted(_PROVIDERS)}")
    return _PROVIDERS[name]()


def classify_remote(
    request: LlmRequest,
    provider: Provider | None = None,
    max_attempts: int = 5,
    base_delay: float = 0.5,
) -> str:
    """One completion with exponential backoff on transient failures.

    Blocked or empty completions are returned as empty strings; content
    blocks are data, not errors.
    """
    import httpx

    if provider is None:
        provider = get_provider(request.provider)
    last: Exception | None = None
    for attempt in range(max_attempts):
        try:
            return provider.complete(request)
        except (TransientProviderError, httpx.TransportError) as exc:
            last = exc
            delay = base_delay * (2 ** attempt)
            logger.warning("transient provider failure (%s); retrying in %.1fs", exc, delay)
            time.sleep(delay)
    if isinstance(last, TransientProviderError) and last.rate_limited:
        raise RateLimited(f"still rate-limited after {max_attempts} attempts") from last
    raise ProviderError(f"provider kept failing after {max_attempts} attempts: {last}") from last


@dataclass(frozen=True)
class FailureCensus:
    total: int
    unlabeled: int
    prediction_counts: dict  # normalized value -> count

    @property
    def labeled(self) -> int:
        return self.total - self.unlabeled


@dataclass
class LlmEvalResult:
    report: metrics.ClassificationReport
    verdicts: dict  # sample id -> LlmVerdict
    census: FailureCensus


def _read_archive(path: Path) -> dict[str, dict]:
    records: dict[str, dict] = {}
    if path.is_file():
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    records[rec["id"]] = rec
    return records


def score_archive(archive_path: str | Path, test_set: Dataset) -> LlmEvalResult:
    """Recompute the evaluation from an archive alone; bit-identical on
    every rerun."""
    records = _read_archive(Path(archive_path))
    missing = [s.id for s in test_set.samples if s.id not in records]
    if missing:
        raise ProviderError(f"archive incomplete: {len(missing)} samples unqueried")

    truths, preds = [], []
    verdicts: dict[str, LlmVerdict] = {}
    for sample in test_set.samples:
        rec = records[sample.id]
        verdict = LlmVerdict(
            raw_response=rec["raw"],
            normalized=rec["normalized"],
            rule=NormalizationRule(rec["rule"]),
        )
        verdicts[sample.id] = verdict
        truths.append(sample.label.canonical_name)
        preds.append(verdict.normalized if verdict.is_label else metrics.MISS)

    census = FailureCensus(
        total=len(test_set),
        unlabeled=sum(1 for v in verdicts.values() if not v.is_label),
        prediction_counts=dict(Counter(v.normalized for v in verdicts.values())),
    )
    return LlmEvalResult(report=metrics.report(truths, preds), verdicts=verdicts, census=census)


def evaluate_llm(
    test_set: Dataset,
    provider_name: str,
    model_id: str,
    archive_path: str | Path,
    provider: Provider | None = None,
    temperature: float = 0.0,
    safety_overrides: frozenset = frozenset(),
    max_inflight: int = 1,
) -> LlmEvalResult:
    """Query every test sample once (resuming from the archive), then score
    the archived verdicts.

    The archive is appended before scoring, so a persistent provider failure
    aborts with progress checkpointed; rerunning skips archived samples.
    """
    archive_path = Path(archive_path)
    done = _read_archive(archive_path)
    todo = [s for s in test_set.samples if s.id not in done]

    def query(sample):
        request = LlmRequest(
            provider=provider_name,
            model_id=model_id,
            prompt=build_prompt(canonical_names(), sample.text),
            temperature=temperature,
            safety_overrides=safety_overrides,
        )
        return classify_remote(request, provider=provider)

    def archive_all(raw_iter, fh):
        # single writer: completions may arrive concurrently, records land
        # in sample order
        for sample, raw in zip(todo, raw_iter):
            verdict = normalize_response(raw)
            fh.write(json.dumps({
                "id": sample.id,
                "prompt": build_prompt(canonical_names(), sample.text),
                "raw": raw,
                "normalized": verdict.normalized,
                "rule": int(verdict.rule),
            }, ensure_ascii=False) + "\n")
            fh.flush()

    if todo:
        with archive_path.open("a", encoding="utf-8") as fh:
            if max_inflight <= 1:
                archive_all(map(query, todo), fh)
            else:
                with ThreadPoolExecutor(max_workers=max_inflight) as executor:
                    archive_all(executor.map(query, todo), fh)

    return score_archive(archive_path, test_set)
