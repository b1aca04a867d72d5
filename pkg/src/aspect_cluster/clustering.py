"""Adaptive dynamic clustering of comment embeddings, with NMI scoring.

Every comment seeds its own candidate cluster.  For a seed, similarities to
all points (self included) are sorted descending and a window of the top
``gamma`` entries is inspected: while even the weakest entry in the window
beats the working threshold ``theta`` and the window has not swallowed the
whole dataset, the window grows by ``delta`` and the threshold rises on a
square-root schedule, capped by ``theta_max``.  The cluster keeps the
windowed points whose similarity is still at or above the final threshold,
so tight neighbourhoods grow large clusters under a strict threshold while
sparse neighbourhoods stay small under a looser one.

Clusters are ranked by size times mean member-to-centroid similarity, and a
hard partition is read off the ranking: walking clusters from the highest
rank down, each comment belongs to the first cluster that contains it.

Optionally each comment's text embedding is augmented with the mean of its
aspect-term embeddings (concatenate, renormalize).  Comments with no aspect
terms at all ("trivial" comments, no opinion expressed) can be filtered out
before clustering; with augmentation on they must be, because they have no
term vectors to pool.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Hashable

import numpy as np

from .corpus import Comment, Corpus
from .embedding import EmbeddingProvider, concat_normalize, mean_pool
from .evaluation import MissingPredictionsError


class ClusteringError(ValueError):
    pass


class MissingClusterLabelsError(ClusteringError):
    """Scoring was requested but no comment carries a gold cluster label."""


@dataclass(frozen=True)
class DyCluConfig:
    gamma0: int = 10
    theta0: float = 0.55
    theta_max: float = 0.9
    delta: int = 5
    k1: float = 0.01
    k2: float = 20.0
    use_cat_augmentation: bool = False
    trivial_filter: bool = False

    def __post_init__(self):
        if self.gamma0 < 1:
            raise ClusteringError(f"gamma0 must be >= 1, got {self.gamma0}")
        if self.delta < 1:
            raise ClusteringError(f"delta must be >= 1, got {self.delta}")
        if not (0.0 < self.theta0 <= 1.0):
            raise ClusteringError(f"theta0 must be in (0, 1], got {self.theta0}")
        if not (0.0 < self.theta_max <= 1.0):
            raise ClusteringError(f"theta_max must be in (0, 1], got {self.theta_max}")
        if self.theta0 > self.theta_max:
            raise ClusteringError(f"theta0 ({self.theta0}) must not exceed theta_max ({self.theta_max})")
        if self.k1 <= 0.0 or self.k2 < 0.0:
            raise ClusteringError(f"k1 must be positive and k2 non-negative, got k1={self.k1}, k2={self.k2}")


@dataclass(frozen=True)
class Cluster:
    """One seed's cluster.  member_ids is ordered with the centroid first,
    then remaining members by descending similarity to the centroid (ties by
    id).  final_theta is the threshold in force when membership was frozen;
    every member's similarity to the centroid is >= final_theta."""

    centroid_id: str
    member_ids: tuple[str, ...]
    ranking_score: float
    final_theta: float
    growth_steps: int

    def __post_init__(self):
        if self.centroid_id not in self.member_ids:
            raise ClusteringError(f"centroid {self.centroid_id!r} is not among its members")

    def __len__(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class ClusterSet:
    """Ranked clusters plus the hard partition derived from the ranking.

    clusters is sorted by ranking_score descending (ties by centroid id).
    partition maps each clustered comment id to the index (into clusters) of
    the highest-ranked cluster containing it; seed clusters overlap, the
    partition does not.  Clusters that contribute no first-claimed member
    simply never appear as a partition value.
    """

    clusters: tuple[Cluster, ...]
    partition: Mapping[str, int]
    trivial_ids: tuple[str, ...] = ()


def ranking_score(similarities: Sequence[float]) -> float:
    """Cluster ranking score: member count times mean member-to-centroid
    similarity.  A singleton cluster scores 1.0."""
    if len(similarities) == 0:
        raise ClusteringError("ranking_score requires at least one member similarity")
    return float(len(similarities) * (sum(similarities) / len(similarities)))


def dyclu_cluster(points: Sequence[tuple[str, np.ndarray]], cfg: DyCluConfig = DyCluConfig()) -> ClusterSet:
    """Cluster unit vectors; one candidate cluster per seed point.

    ``points`` is a list of (id, unit vector) pairs.  The loop bound per seed
    is ceil((n - gamma0) / delta) growth steps; theta never exceeds
    cfg.theta_max; membership requires similarity >= the seed's final theta.
    Results do not depend on input order beyond ids: ties in similarity are
    broken by id, ties in ranking score by centroid id.
    """
    n = len(points)
    if n == 0:
        raise ClusteringError("dyclu_cluster requires at least one point")
    ids = [pid for pid, _ in points]
    if len(set(ids)) != n:
        raise ClusteringError("duplicate point ids")
    matrix = np.vstack([np.asarray(vec, dtype=np.float64) for _, vec in points])
    if matrix.ndim != 2:
        raise ClusteringError("points must share one dimension")
    if not np.all(np.isfinite(matrix)):
        raise ClusteringError("non-finite vector component; upstream embedding is invalid")
    norms = np.sqrt(np.sum(np.square(matrix), axis=1))
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ClusteringError("all vectors must be L2-normalized")

    sims_all = np.clip(matrix @ matrix.T, -1.0, 1.0)
    # Rank of each row index under ascending id order; used to break
    # similarity ties deterministically regardless of input order.
    id_rank = np.empty(n, dtype=np.int64)
    for rank, idx in enumerate(sorted(range(n), key=lambda i: ids[i])):
        id_rank[idx] = rank

    clusters: list[Cluster] = []
    for i in range(n):
        sims = sims_all[i]
        order = np.lexsort((id_rank, -sims))
        sorted_sims = sims[order]

        gamma = cfg.gamma0
        theta = cfg.theta0
        steps = 0
        while gamma < n and sorted_sims[min(gamma, n) - 1] > theta:
            gamma = min(n, gamma + cfg.delta)
            theta = min(math.sqrt(cfg.k1 * (gamma + cfg.k2)), cfg.theta_max)
            steps += 1

        window = order[: min(gamma, n)]
        kept = [int(j) for j in window if sims[j] >= theta]
        member_ids = [ids[j] for j in kept]
        # The centroid is the seed itself; surface it first.
        member_ids.remove(ids[i])
        member_ids.insert(0, ids[i])
        score = ranking_score([float(sims[j]) for j in kept])
        clusters.append(
            Cluster(
                centroid_id=ids[i],
                member_ids=tuple(member_ids),
                ranking_score=score,
                final_theta=theta,
                growth_steps=steps,
            )
        )

    clusters.sort(key=lambda c: (-c.ranking_score, c.centroid_id))
    partition: dict[str, int] = {}
    for index, cluster in enumerate(clusters):
        for member in cluster.member_ids:
            if member not in partition:
                partition[member] = index
    return ClusterSet(clusters=tuple(clusters), partition=partition)


def nmi(pred_labels: Mapping[str, Hashable], gold_labels: Mapping[str, Hashable]) -> float:
    """Normalized mutual information with arithmetic-mean normalization.

    NMI = I(U; V) / ((H(U) + H(V)) / 2), entropies in nats.  Degenerate
    cases: both labelings single-cluster -> 1.0; exactly one single-cluster
    -> 0.0.  Symmetric in its arguments; invariant to relabeling.
    """
    if set(pred_labels) != set(gold_labels):
        raise ClusteringError("pred and gold labelings must cover the same ids")
    if not pred_labels:
        raise ClusteringError("cannot score an empty labeling")
    ids = sorted(pred_labels)
    n = len(ids)
    u_index: dict[Hashable, int] = {}
    v_index: dict[Hashable, int] = {}
    for cid in ids:
        u_index.setdefault(pred_labels[cid], len(u_index))
        v_index.setdefault(gold_labels[cid], len(v_index))
    table = np.zeros((len(u_index), len(v_index)), dtype=np.float64)
    for cid in ids:
        table[u_index[pred_labels[cid]], v_index[gold_labels[cid]]] += 1.0

    pu = table.sum(axis=1) / n
    pv = table.sum(axis=0) / n
    h_u = float(-np.sum(pu * np.log(pu)))
    h_v = float(-np.sum(pv * np.log(pv)))
    if h_u == 0.0 and h_v == 0.0:
        return 1.0
    if h_u == 0.0 or h_v == 0.0:
        return 0.0
    # One nonzero per row and per column means the labelings are identical up
    # to renaming, where I(U;V) = H(U) = H(V) exactly; computing the ratio in
    # floats would drift by an ulp.
    if np.array_equal((table > 0).sum(axis=1), np.ones(len(u_index))) and np.array_equal(
        (table > 0).sum(axis=0), np.ones(len(v_index))
    ):
        return 1.0
    joint = table / n
    mask = joint > 0.0
    mi = float(np.sum(joint[mask] * np.log(joint[mask] / np.outer(pu, pv)[mask])))
    value = mi / ((h_u + h_v) / 2.0)
    return min(1.0, max(0.0, value))


def _cats_for(comment: Comment, cats_from_gold: bool) -> tuple[str, ...]:
    if cats_from_gold:
        return comment.gold_cats
    if comment.pred_cats is None:
        raise MissingPredictionsError(f"comment {comment.id!r} has no pred_cats")
    return comment.pred_cats


def build_representation(
    comment: Comment,
    provider: EmbeddingProvider,
    cfg: DyCluConfig,
    cats_from_gold: bool = False,
) -> np.ndarray:
    """Unit-vector representation of one comment.

    Without augmentation this is the text embedding.  With augmentation it is
    concat_normalize(text embedding, mean of the comment's aspect-term
    embeddings); a comment with zero aspect terms cannot be augmented, so
    filter trivial comments first.
    """
    text_vec = provider.embed_batch([comment.text])[0]
    if not cfg.use_cat_augmentation:
        return text_vec
    cats = _cats_for(comment, cats_from_gold)
    if len(cats) == 0:
        raise ClusteringError(
            f"comment {comment.id!r} has no aspect terms to pool; filter trivial comments before augmenting"
        )
    term_vecs = provider.embed_batch(list(cats))
    return concat_normalize(text_vec, mean_pool(list(term_vecs)))


def _build_points(
    comments: Sequence[Comment],
    provider: EmbeddingProvider,
    cfg: DyCluConfig,
    cats_from_gold: bool,
) -> list[tuple[str, np.ndarray]]:
    text_vecs = provider.embed_batch([c.text for c in comments])
    if not cfg.use_cat_augmentation:
        return [(c.id, text_vecs[k]) for k, c in enumerate(comments)]
    vocab: dict[str, int] = {}
    for c in comments:
        for term in _cats_for(c, cats_from_gold):
            vocab.setdefault(term, len(vocab))
    term_vecs = provider.embed_batch(list(vocab)) if vocab else None
    points = []
    for k, c in enumerate(comments):
        cats = _cats_for(c, cats_from_gold)
        if len(cats) == 0:
            raise ClusteringError(
                f"comment {c.id!r} has no aspect terms to pool; filter trivial comments before augmenting"
            )
        pooled = mean_pool([term_vecs[vocab[t]] for t in cats])
        points.append((c.id, concat_normalize(text_vecs[k], pooled)))
    return points


def cluster_corpus(
    corpus: Corpus,
    provider: EmbeddingProvider,
    cfg: DyCluConfig = DyCluConfig(),
    cats_from_gold: bool = False,
) -> ClusterSet:
    """Embed, optionally augment and filter, then cluster a corpus.

    When cfg.trivial_filter is set, comments with zero aspect terms (from
    pred_cats, or gold_cats when cats_from_gold) are excluded and listed in
    the result's trivial_ids.  If everything is trivial the result is an
    empty ClusterSet covering nothing.
    """
    if len(corpus) == 0:
        raise ClusteringError("cannot cluster an empty corpus")
    comments = list(corpus)
    trivial_ids: tuple[str, ...] = ()
    if cfg.trivial_filter:
        trivial_ids = tuple(c.id for c in comments if len(_cats_for(c, cats_from_gold)) == 0)
        comments = [c for c in comments if len(_cats_for(c, cats_from_gold)) > 0]
    if not comments:
        return ClusterSet(clusters=(), partition={}, trivial_ids=trivial_ids)
    points = _build_points(comments, provider, cfg, cats_from_gold)
    return replace(dyclu_cluster(points, cfg), trivial_ids=trivial_ids)


def cluster_and_score(
    corpus: Corpus,
    provider: EmbeddingProvider,
    cfg: DyCluConfig = DyCluConfig(),
    cats_from_gold: bool = False,
) -> tuple[ClusterSet, float | None]:
    """Cluster a corpus and score the partition against gold comment_cluster
    labels with NMI.

    Scoring runs on the clustered (non-trivial) comments that carry a gold
    label.  If every comment was filtered as trivial the NMI is undefined and
    returned as None; if none of the clustered comments has a gold label,
    that is an error.
    """
    cluster_set = cluster_corpus(corpus, provider, cfg, cats_from_gold)
    if not cluster_set.clusters:
        return cluster_set, None
    gold = {
        c.id: c.comment_cluster
        for c in corpus
        if c.id in cluster_set.partition and c.comment_cluster is not None
    }
    if not gold:
        raise MissingClusterLabelsError("no clustered comment carries a gold comment_cluster label")
    pred = {cid: cluster_set.partition[cid] for cid in gold}
    return cluster_set, nmi(pred, gold)
