"""Prompt rendering, annotation-response parsing, and chat-based CAT generation.

The response parser is total: any string either yields an Annotation or
raises AnnotationParseError, never anything else.  Responses are expected to
contain one or more bracketed groups shaped like

    [ATs: term, another term | EP: N]

("AT:" is accepted too); the last such group wins, which tolerates chatty
models that restate the few-shot examples before answering.  "NA" as the
term list means no aspect terms.  Term lists longer than five are truncated
and flagged.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol

import requests

from .corpus import Comment, Corpus, Language, Polarity
from .prompts import (
    CAT_DESCRIPTIONS,
    DEFAULT_PROMPT_BODIES,
    INSTRUCTION_BODY,
    LIMIT_INSTRUCTION_BODY,
)

MAX_PARSED_CATS = 5
API_KEY_ENV = "ASPECT_LLM_API_KEY"

PLACEHOLDER = "{comment}"


class AnnotationParseError(ValueError):
    pass


class LanguageMismatchError(ValueError):
    pass


class ChatError(RuntimeError):
    """Non-retryable chat failure (bad request, auth, quota); the server's
    message is preserved verbatim."""


class ChatTransportError(ChatError):
    """Network-level or server-side failure; retryable."""

    retryable = True


@dataclass(frozen=True)
class PromptTemplate:
    language: Language
    body: str
    limit_variant: bool = False

    def __post_init__(self):
        count = self.body.count(PLACEHOLDER)
        if count != 1:
            raise ValueError(f"template body must contain exactly one {PLACEHOLDER}, found {count}")
        if self.limit_variant and "1 or 2 aspect terms" not in self.body:
            raise ValueError('limit_variant template must ask for "1 or 2 aspect terms"')


def default_templates(limit_variant: bool = False, desc_index: int = 0) -> dict[Language, PromptTemplate]:
    """The built-in templates, one per language.

    The standard variants are the full few-shot annotation prompts.  The
    limit variants share one instruction body (with the desc_index-th aspect
    term description substituted) across languages.
    """
    if limit_variant:
        body = LIMIT_INSTRUCTION_BODY.replace("{desc}", CAT_DESCRIPTIONS[desc_index % len(CAT_DESCRIPTIONS)])
        return {lang: PromptTemplate(lang, body, limit_variant=True) for lang in Language}
    return {lang: PromptTemplate(lang, DEFAULT_PROMPT_BODIES[lang]) for lang in Language}


def render_prompt(template: PromptTemplate, comment: Comment) -> str:
    """Substitute the comment text into the template; the template's language
    must match the comment's."""
    if template.language is not comment.language:
        raise LanguageMismatchError(
            f"template is {template.language.value}, comment {comment.id!r} is {comment.language.value}"
        )
    return template.body.replace(PLACEHOLDER, comment.text)


def instruction_prompt(comment: Comment, limit_variant: bool = False) -> str:
    """Instruction-style prompt for one comment, used for fine-tuning data and
    preference-pair export.  The aspect-term description is picked from the
    built-in list by a stable hash of the comment id, so repeated exports are
    identical while descriptions still vary across comments."""
    digest = hashlib.sha256(comment.id.encode("utf-8")).digest()
    desc = CAT_DESCRIPTIONS[int.from_bytes(digest[:4], "big") % len(CAT_DESCRIPTIONS)]
    body = LIMIT_INSTRUCTION_BODY if limit_variant else INSTRUCTION_BODY
    return body.replace("{desc}", desc).replace(PLACEHOLDER, comment.text)


@dataclass(frozen=True)
class Annotation:
    cats: tuple[str, ...] = ()
    polarity: Polarity = Polarity.NEUTRAL
    truncated: bool = False

    def __post_init__(self):
        if len(self.cats) > MAX_PARSED_CATS:
            raise ValueError(f"at most {MAX_PARSED_CATS} aspect terms, got {len(self.cats)}")


_GROUP_RE = re.compile(r"\[\s*ATs?\s*:\s*(?P<terms>[^\]|]*)\|\s*EP\s*:\s*(?P<ep>[^\]]*)\]")


def parse_annotation(response: str) -> Annotation:
    """Extract the last annotation group from a model response.

    Term handling: the list splits on ", ", items are whitespace-trimmed,
    empties and stray "NA" items are dropped, duplicates collapse to the
    first occurrence, and anything beyond five terms is cut off with
    truncated=True.  Raises AnnotationParseError when no group is present or
    the polarity letter is not one of N, P, C.
    """
    if not isinstance(response, str):
        raise AnnotationParseError(f"response must be a string, got {type(response).__name__}")
    matches = list(_GROUP_RE.finditer(response))
    if not matches:
        raise AnnotationParseError("no parsable annotation group in response")
    last = matches[-1]
    ep = last.group("ep").strip()
    try:
        polarity = Polarity(ep)
    except ValueError:
        raise AnnotationParseError(f"unknown EP letter {ep!r}") from None
    terms_raw = last.group("terms").strip()
    if terms_raw in ("", "NA"):
        return Annotation(cats=(), polarity=polarity)
    seen: dict[str, None] = {}
    for part in terms_raw.split(", "):
        term = part.strip()
        if term and term != "NA":
            seen.setdefault(term, None)
    terms = tuple(seen)
    if len(terms) > MAX_PARSED_CATS:
        return Annotation(cats=terms[:MAX_PARSED_CATS], polarity=polarity, truncated=True)
    return Annotation(cats=terms, polarity=polarity)


def format_annotation(annotation: Annotation) -> str:
    """Render an Annotation back into the bracketed group format.

    The format cannot carry terms containing "]", "|", or ", "; within that
    grammar, format -> parse is the identity.
    """
    return f"[ATs: {', '.join(annotation.cats) if annotation.cats else 'NA'} | EP: {annotation.polarity.value}]"


class ChatClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class HttpChatClient:
    """Minimal chat-completions client.

    Sends {"model", "messages", "temperature"} and reads
    choices[0].message.content.  Temperature defaults to 0 so reruns are as
    deterministic as the server allows.  The API key comes from the
    ASPECT_LLM_API_KEY environment variable unless given explicitly.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        temperature: float = 0.0,
        session: requests.Session | None = None,
    ):
        if not endpoint or not model:
            raise ValueError("chat client requires both endpoint and model")
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self.temperature = temperature
        self._session = session if session is not None else requests.Session()

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        except requests.RequestException as err:
            raise ChatTransportError(f"chat request failed: {err}") from err
        if resp.status_code >= 500:
            raise ChatTransportError(f"server error {resp.status_code}: {resp.text}")
        if resp.status_code != 200:
            # Auth and quota responses surface exactly what the server said.
            raise ChatError(f"chat request rejected ({resp.status_code}): {resp.text}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as err:
            raise ChatTransportError(f"malformed chat response: {resp.text[:500]}") from err


class CachedChatClient:
    """Write-through JSONL response cache around any ChatClient.

    Keys are SHA-256 of (namespace, prompt), so replaying a recorded session
    makes zero live calls and yields byte-identical responses.  With no inner
    client the cache is replay-only and misses are errors.
    """

    def __init__(self, inner: ChatClient | None, path: str | Path, namespace: str = ""):
        self.inner = inner
        self.path = Path(path)
        self.namespace = namespace
        self._lock = threading.Lock()
        self._cache: dict[str, str] = {}
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = json.loads(line)
                        self._cache[record["key"]] = record["response"]

    def _key(self, prompt: str) -> str:
        return hashlib.sha256(f"{self.namespace}\x00{prompt}".encode("utf-8")).hexdigest()

    def complete(self, prompt: str) -> str:
        key = self._key(prompt)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        if self.inner is None:
            raise ChatError("response cache miss and no live client configured")
        response = self.inner.complete(prompt)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = response
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"key": key, "response": response}, ensure_ascii=False))
                    fh.write("\n")
        return response


@dataclass(frozen=True)
class GenerationFailure:
    comment_id: str
    error: str


@dataclass(frozen=True)
class GenerationResult:
    corpus: Corpus
    failures: tuple[GenerationFailure, ...]


def generate_cats(
    corpus: Corpus,
    client: ChatClient,
    templates: Mapping[Language, PromptTemplate] | None = None,
    limit_variant: bool = False,
    retries: int = 2,
    concurrency: int = 1,
) -> GenerationResult:
    """Annotate every comment by prompting a chat model and parsing the reply.

    A comment whose responses stay unparsable after ``retries`` extra
    attempts gets pred_cats = () and a failure record; other comments are
    unaffected.  Transport errors exhaust the same retry budget and then
    abort the run.  Comment order is preserved.  With a CachedChatClient the
    whole run is idempotent.
    """
    if templates is None:
        templates = default_templates(limit_variant=limit_variant)
    missing = {c.language for c in corpus} - set(templates)
    if missing:
        raise ValueError(f"no template for language(s): {sorted(l.value for l in missing)}")
    if retries < 0:
        raise ValueError(f"retries must be >= 0, got {retries}")
    if concurrency < 1:
        raise ValueError(f"concurrency must be >= 1, got {concurrency}")

    def annotate(comment: Comment) -> tuple[Comment, GenerationFailure | None]:
        prompt = render_prompt(templates[comment.language], comment)
        last_error: Exception | None = None
        for _ in range(retries + 1):
            try:
                annotation = parse_annotation(client.complete(prompt))
            except AnnotationParseError as err:
                last_error = err
                continue
            except ChatTransportError as err:
                last_error = err
                continue
            return (
                replace(comment, pred_cats=annotation.cats, polarity=annotation.polarity),
                None,
            )
        if isinstance(last_error, ChatTransportError):
            raise last_error
        return (
            replace(comment, pred_cats=()),
            GenerationFailure(comment_id=comment.id, error=str(last_error)),
        )

    comments = list(corpus)
    if concurrency == 1:
        outcomes = [annotate(c) for c in comments]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outcomes = list(pool.map(annotate, comments))

    annotated = tuple(c for c, _ in outcomes)
    failures = tuple(f for _, f in outcomes if f is not None)
    return GenerationResult(
        corpus=Corpus(name=corpus.name, comments=annotated, split=corpus.split),
        failures=failures,
    )
