"""Annotated-comment data model and JSONL corpus I/O.

A corpus file is JSON Lines, UTF-8, one comment per line:

    {"id": "...", "lang": "EN" | "CN" | "MS" | "ID", "text": "...",
     "gold_cats": ["..."] | "NA", "pred_cats": ["..."] | "NA" | null,
     "polarity": "N" | "P" | "C" | null,
     "article_cluster": "..." | null, "comment_cluster": "..." | null}

Unknown keys are rejected.  The sentinel string "NA" is normalized to an
empty list at load time; a JSON null for ``pred_cats`` means the comment has
not been annotated by a model at all, which is distinct from an empty
prediction.  ``write_corpus`` always emits JSON lists (never "NA") and null
for absent optional fields, with keys in the order shown above, so a
write/load cycle is lossless.
"""

from __future__ import annotations

import json
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

MAX_GOLD_CATS = 5


class Language(str, Enum):
    EN = "EN"
    CN = "CN"
    MS = "MS"
    ID = "ID"


class Polarity(str, Enum):
    NEGATIVE = "N"
    POSITIVE = "P"
    NEUTRAL = "C"


class Split(str, Enum):
    FINETUNE = "finetune"
    TEST = "test"
    UNSPLIT = "unsplit"


class CorpusValidationError(ValueError):
    """Base class for every corpus rejection; carries the 1-based line number
    when the failure was found while reading a file."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MalformedRecordError(CorpusValidationError):
    pass


class UnknownLanguageError(CorpusValidationError):
    pass


class DuplicateIdError(CorpusValidationError):
    pass


class TooManyAspectTermsError(CorpusValidationError):
    pass


class InvalidCommentError(CorpusValidationError):
    pass


def validate_term(raw: str) -> str:
    """Return the whitespace-trimmed aspect term, rejecting empty strings and
    the literal "NA" (which is a sentinel, never a term)."""
    if not isinstance(raw, str):
        raise InvalidCommentError(f"aspect term must be a string, got {type(raw).__name__}")
    term = raw.strip()
    if not term:
        raise InvalidCommentError("aspect term is empty")
    if term == "NA":
        raise InvalidCommentError('aspect term must not be the literal "NA"')
    return term


def _validate_terms(terms, what: str, comment_id: str) -> tuple[str, ...]:
    cleaned = tuple(validate_term(t) for t in terms)
    if len(set(cleaned)) != len(cleaned):
        raise InvalidCommentError(f"comment {comment_id!r}: duplicate {what} aspect terms")
    return cleaned


@dataclass(frozen=True)
class Comment:
    """One annotated comment.

    gold_cats holds the human aspect-term annotation (at most five terms);
    pred_cats holds a model annotation and is None until one exists.  Cluster
    fields are opaque gold labels used only for scoring.
    """

    id: str
    language: Language
    text: str
    gold_cats: tuple[str, ...] = ()
    pred_cats: tuple[str, ...] | None = None
    polarity: Polarity | None = None
    article_cluster: str | None = None
    comment_cluster: str | None = None

    def __post_init__(self):
        if not self.id:
            raise InvalidCommentError("comment id is empty")
        if not isinstance(self.text, str) or not self.text.strip():
            raise InvalidCommentError(f"comment {self.id!r}: text is empty")
        gold = _validate_terms(self.gold_cats, "gold", self.id)
        if len(gold) > MAX_GOLD_CATS:
            raise TooManyAspectTermsError(
                f"comment {self.id!r}: {len(gold)} gold aspect terms, at most {MAX_GOLD_CATS} allowed"
            )
        object.__setattr__(self, "gold_cats", gold)
        if self.pred_cats is not None:
            object.__setattr__(self, "pred_cats", _validate_terms(self.pred_cats, "predicted", self.id))


@dataclass(frozen=True)
class Corpus:
    name: str
    comments: tuple[Comment, ...]
    split: Split = Split.UNSPLIT

    def __post_init__(self):
        object.__setattr__(self, "comments", tuple(self.comments))
        seen: set[str] = set()
        for c in self.comments:
            if c.id in seen:
                raise DuplicateIdError(f"duplicate comment id {c.id!r}")
            seen.add(c.id)

    def __len__(self) -> int:
        return len(self.comments)

    def __iter__(self) -> Iterator[Comment]:
        return iter(self.comments)


@dataclass(frozen=True)
class SplitStats:
    """Per-language comment counts; every known language appears, zeros kept."""

    counts: Mapping[Language, int]
    total: int


def split_stats(corpus: Corpus) -> SplitStats:
    counts = {lang: 0 for lang in Language}
    for c in corpus:
        counts[c.language] += 1
    return SplitStats(counts=counts, total=len(corpus))


_KEY_ORDER = ("id", "lang", "text", "gold_cats", "pred_cats", "polarity", "article_cluster", "comment_cluster")
_REQUIRED_KEYS = frozenset({"id", "lang", "text", "gold_cats"})


def _parse_cat_field(value, key: str, nullable: bool):
    if value is None:
        if nullable:
            return None
        raise MalformedRecordError(f'"{key}" must not be null')
    if value == "NA":
        return ()
    if isinstance(value, list):
        return tuple(value)
    raise MalformedRecordError(f'"{key}" must be a list of strings or "NA", got {value!r}')


def _parse_optional_str(value, key: str):
    if value is None:
        return None
    if isinstance(value, str):
        return value
    raise MalformedRecordError(f'"{key}" must be a string or null, got {value!r}')


def _record_to_comment(record: dict) -> Comment:
    unknown = set(record) - set(_KEY_ORDER)
    if unknown:
        raise MalformedRecordError(f"unknown key(s): {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(record)
    if missing:
        raise MalformedRecordError(f"missing required key(s): {sorted(missing)}")

    lang_raw = record["lang"]
    try:
        language = Language(lang_raw)
    except ValueError:
        raise UnknownLanguageError(f"unknown language code {lang_raw!r}") from None

    polarity_raw = record.get("polarity")
    if polarity_raw is None:
        polarity = None
    else:
        try:
            polarity = Polarity(polarity_raw)
        except ValueError:
            raise MalformedRecordError(f"unknown polarity {polarity_raw!r}") from None

    if not isinstance(record["id"], str):
        raise MalformedRecordError(f'"id" must be a string, got {record["id"]!r}')
    if not isinstance(record["text"], str):
        raise MalformedRecordError(f'"text" must be a string, got {record["text"]!r}')

    return Comment(
        id=record["id"],
        language=language,
        text=record["text"],
        gold_cats=_parse_cat_field(record["gold_cats"], "gold_cats", nullable=False),
        pred_cats=_parse_cat_field(record.get("pred_cats"), "pred_cats", nullable=True),
        polarity=polarity,
        article_cluster=_parse_optional_str(record.get("article_cluster"), "article_cluster"),
        comment_cluster=_parse_optional_str(record.get("comment_cluster"), "comment_cluster"),
    )


def load_corpus(
    path: str | Path,
    format: str = "jsonl",
    *,
    name: str | None = None,
    split: Split = Split.UNSPLIT,
) -> Corpus:
    """Read a JSONL corpus file.

    Rejection is total: the first record violating the schema or a comment
    invariant raises a CorpusValidationError subclass carrying its line
    number.  Comments are preserved in file order.  Blank lines (a trailing
    newline, typically) are skipped.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    path = Path(path)
    comments: list[Comment] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise MalformedRecordError(f"invalid JSON: {err.msg}", line=lineno) from None
            if not isinstance(record, dict):
                raise MalformedRecordError("record is not a JSON object", line=lineno)
            try:
                comment = _record_to_comment(record)
            except CorpusValidationError as err:
                raise type(err)(err.message, line=lineno) from None
            if comment.id in seen_ids:
                raise DuplicateIdError(f"duplicate comment id {comment.id!r}", line=lineno)
            seen_ids.add(comment.id)
            comments.append(comment)
    return Corpus(name=name if name is not None else path.stem, comments=tuple(comments), split=split)


def _comment_to_record(c: Comment) -> dict:
    return {
        "id": c.id,
        "lang": c.language.value,
        "text": c.text,
        "gold_cats": list(c.gold_cats),
        "pred_cats": None if c.pred_cats is None else list(c.pred_cats),
        "polarity": None if c.polarity is None else c.polarity.value,
        "article_cluster": c.article_cluster,
        "comment_cluster": c.comment_cluster,
    }


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus as JSONL with a fixed key order per record."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for c in corpus:
            fh.write(json.dumps(_comment_to_record(c), ensure_ascii=False))
            fh.write("\n")
