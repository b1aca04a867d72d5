"""Aspect-term generation scoring.

A predicted term counts as correct when its embedding is close enough to a
still-unclaimed gold term: pairs with cosine similarity at or above the
threshold form a bipartite graph and the matcher picks a one-to-one
assignment.  Counts are micro-aggregated over comments, overall and per
language, then turned into precision / recall / F1.
"""

from __future__ import annotations

import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import Corpus, Language
from .embedding import EmbeddingProvider

DEFAULT_THRESHOLD = 0.7


class MissingPredictionsError(ValueError):
    """A comment without pred_cats reached an operation that needs them."""


class Matching(str, Enum):
    MAX_BIPARTITE = "max_bipartite"
    GREEDY = "greedy"


@dataclass(frozen=True)
class MatchConfig:
    threshold: float = DEFAULT_THRESHOLD
    matching: Matching = Matching.MAX_BIPARTITE

    def __post_init__(self):
        if not (0.0 < self.threshold <= 1.0):
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        object.__setattr__(self, "matching", Matching(self.matching))


def _prf(matched: int, predicted: int, gold: int) -> tuple[float, float, float]:
    precision = matched / predicted if predicted > 0 else 0.0
    recall = matched / gold if gold > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0.0 else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class MatchReport:
    matched: int
    predicted_total: int
    gold_total: int
    precision: float
    recall: float
    f1: float
    per_language: Mapping[str, "MatchReport"] = field(default_factory=dict)

    def __post_init__(self):
        if self.matched > min(self.predicted_total, self.gold_total):
            raise ValueError(
                f"matched={self.matched} exceeds min(predicted={self.predicted_total}, gold={self.gold_total})"
            )

    @classmethod
    def from_counts(
        cls,
        matched: int,
        predicted_total: int,
        gold_total: int,
        per_language: Mapping[str, "MatchReport"] | None = None,
    ) -> "MatchReport":
        p, r, f1 = _prf(matched, predicted_total, gold_total)
        return cls(
            matched=matched,
            predicted_total=predicted_total,
            gold_total=gold_total,
            precision=p,
            recall=r,
            f1=f1,
            per_language=dict(per_language) if per_language else {},
        )

    def as_dict(self) -> dict:
        out = {
            "matched": self.matched,
            "predicted_total": self.predicted_total,
            "gold_total": self.gold_total,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.per_language:
            out["per_language"] = {lang: rep.as_dict() for lang, rep in self.per_language.items()}
        return out


def _similarity_matrix(pred_vecs: np.ndarray, gold_vecs: np.ndarray) -> np.ndarray:
    # Rows are unit vectors, so the Gram product is already cosine.
    return np.clip(pred_vecs @ gold_vecs.T, -1.0, 1.0)


def _max_bipartite_count(adjacency: np.ndarray) -> int:
    if not adjacency.any():
        return 0
    rows, cols = linear_sum_assignment(adjacency.astype(np.float64), maximize=True)
    return int(adjacency[rows, cols].sum())


def _greedy_count(sims: np.ndarray, threshold: float) -> int:
    # Candidate pairs in descending similarity, ties broken by lower pred
    # index then lower gold index.
    candidates = [
        (-sims[i, j], i, j)
        for i in range(sims.shape[0])
        for j in range(sims.shape[1])
        if sims[i, j] >= threshold
    ]
    candidates.sort()
    used_pred: set[int] = set()
    used_gold: set[int] = set()
    matched = 0
    for _, i, j in candidates:
        if i in used_pred or j in used_gold:
            continue
        used_pred.add(i)
        used_gold.add(j)
        matched += 1
    return matched


def _match_from_vectors(pred_vecs: np.ndarray, gold_vecs: np.ndarray, cfg: MatchConfig) -> int:
    sims = _similarity_matrix(pred_vecs, gold_vecs)
    if cfg.matching is Matching.GREEDY:
        return _greedy_count(sims, cfg.threshold)
    return _max_bipartite_count(sims >= cfg.threshold)


def match_comment(
    pred: Sequence[str],
    gold: Sequence[str],
    provider: EmbeddingProvider,
    cfg: MatchConfig = MatchConfig(),
) -> tuple[int, int, int]:
    """Match one comment's predicted terms against its gold terms.

    Returns (matched, n_pred, n_gold); an empty side short-circuits to zero
    matches.  Matching is one-to-one: each pred and gold term is claimed at
    most once, and matched <= min(n_pred, n_gold).
    """
    n_pred, n_gold = len(pred), len(gold)
    if n_pred == 0 or n_gold == 0:
        return 0, n_pred, n_gold
    pred_vecs = provider.embed_batch(list(pred))
    gold_vecs = provider.embed_batch(list(gold))
    return _match_from_vectors(pred_vecs, gold_vecs, cfg), n_pred, n_gold


def evaluate_corpus(
    corpus: Corpus,
    provider: EmbeddingProvider,
    cfg: MatchConfig = MatchConfig(),
) -> MatchReport:
    """Micro-averaged matching over a corpus, overall and per language.

    Every comment must carry pred_cats (an empty tuple is fine, None is
    not).  Comments where both sides are empty contribute nothing to any
    count.  Aggregation is a sum of per-comment counts, so comment order
    cannot change the result.
    """
    for c in corpus:
        if c.pred_cats is None:
            raise MissingPredictionsError(f"comment {c.id!r} has no pred_cats")

    vocab: dict[str, int] = {}
    for c in corpus:
        for term in list(c.pred_cats) + list(c.gold_cats):
            vocab.setdefault(term, len(vocab))
    vectors = provider.embed_batch(list(vocab)) if vocab else None

    totals = np.zeros(3, dtype=np.int64)  # matched, predicted, gold
    by_language: dict[str, np.ndarray] = {}
    for c in corpus:
        n_pred, n_gold = len(c.pred_cats), len(c.gold_cats)
        if n_pred == 0 or n_gold == 0:
            matched = 0
        else:
            pred_vecs = vectors[[vocab[t] for t in c.pred_cats]]
            gold_vecs = vectors[[vocab[t] for t in c.gold_cats]]
            matched = _match_from_vectors(pred_vecs, gold_vecs, cfg)
        delta = np.array([matched, n_pred, n_gold], dtype=np.int64)
        totals += delta
        lang = c.language.value
        if lang not in by_language:
            by_language[lang] = np.zeros(3, dtype=np.int64)
        by_language[lang] += delta

    per_language = {
        lang: MatchReport.from_counts(int(t[0]), int(t[1]), int(t[2]))
        for lang, t in by_language.items()
    }
    return MatchReport.from_counts(int(totals[0]), int(totals[1]), int(totals[2]), per_language)


def empty_prediction_confusion(corpus: Corpus) -> dict[str, int]:
    """2x2 confusion of predicted-empty vs gold-empty comments.

    The matcher gives no credit for correctly predicting "no aspect terms";
    this table makes that behaviour visible separately.
    """
    table = {
        "both_empty": 0,
        "pred_empty_gold_nonempty": 0,
        "pred_nonempty_gold_empty": 0,
        "both_nonempty": 0,
    }
    for c in corpus:
        if c.pred_cats is None:
            raise MissingPredictionsError(f"comment {c.id!r} has no pred_cats")
        pred_empty = len(c.pred_cats) == 0
        gold_empty = len(c.gold_cats) == 0
        if pred_empty and gold_empty:
            table["both_empty"] += 1
        elif pred_empty:
            table["pred_empty_gold_nonempty"] += 1
        elif gold_empty:
            table["pred_nonempty_gold_empty"] += 1
        else:
            table["both_nonempty"] += 1
    return table


def cat_count_histogram(corpus: Corpus, source: str = "gold") -> dict[int, int]:
    """Histogram of aspect-term counts per comment, keyed by term count."""
    if source not in ("gold", "pred"):
        raise ValueError(f'source must be "gold" or "pred", got {source!r}')
    hist: dict[int, int] = {}
    for c in corpus:
        if source == "gold":
            n = len(c.gold_cats)
        else:
            if c.pred_cats is None:
                raise MissingPredictionsError(f"comment {c.id!r} has no pred_cats")
            n = len(c.pred_cats)
        hist[n] = hist.get(n, 0) + 1
    return dict(sorted(hist.items()))


def cumulative_mass(hist: Mapping[int, int], max_count: int) -> int:
    """Number of comments whose term count is <= max_count."""
    return sum(freq for count, freq in hist.items() if count <= max_count)


def scale_sweep(
    corpus: Corpus,
    provider: EmbeddingProvider,
    cfg: MatchConfig,
    sizes: Sequence[int],
    seeds: Sequence[int],
) -> list[tuple[int, int, float]]:
    """Evaluate on seeded uniform subsamples (without replacement).

    Returns (size, seed, f1) rows, size-major in the order given.  The
    sampler is a seeded Mersenne twister over sorted positions, so results
    are reproducible across runs and platforms.
    """
    n = len(corpus)
    for size in sizes:
        if not (0 < size <= n):
            raise ValueError(f"sample size {size} not in 1..{n}")
    rows: list[tuple[int, int, float]] = []
    for size in sizes:
        for seed in seeds:
            picks = sorted(random.Random(seed).sample(range(n), size))
            sub = Corpus(
                name=f"{corpus.name}[n={size},seed={seed}]",
                comments=tuple(corpus.comments[i] for i in picks),
                split=corpus.split,
            )
            report = evaluate_corpus(sub, provider, cfg)
            rows.append((size, seed, report.f1))
    return rows
