"""Shared fixture builders and independent test oracles.

The oracles here deliberately avoid the library's own code paths: matching
is checked against exhaustive assignment enumeration, clustering fixtures
against a union-find connected-components pass, and NMI against
scikit-learn.
"""

from __future__ import annotations

import math
import random
from itertools import permutations

import numpy as np
import pytest

from aspect_cluster import (
    Comment,
    Corpus,
    DeterministicEmbedder,
    Language,
)

WORDS = [
    "apple", "breeze", "copper", "delta", "ember", "forest", "glacier", "harbor",
    "indigo", "jungle", "kettle", "lantern", "meadow", "nectar", "orbit", "prairie",
    "quartz", "ridge", "summit", "tundra", "umbrella", "valley", "willow", "xenon",
    "yonder", "zephyr", "anchor", "basalt", "cinder", "dune",
]


@pytest.fixture(scope="session")
def provider():
    return DeterministicEmbedder(dim=64)


def make_comment(i: int, lang: Language = Language.EN, **kwargs) -> Comment:
    defaults = dict(id=f"c{i:04d}", language=lang, text=f"comment number {i}")
    defaults.update(kwargs)
    return Comment(**defaults)


def exhaustive_max_matching(adjacency: np.ndarray) -> int:
    """Maximum one-to-one matching size by enumerating every injective
    assignment of the smaller side into the larger one."""
    n, m = adjacency.shape
    if n > m:
        return exhaustive_max_matching(adjacency.T)
    best = 0
    for perm in permutations(range(m), n):
        best = max(best, sum(1 for i, j in enumerate(perm) if adjacency[i, j]))
    return best


def two_blob_points(dim: int = 8, per_blob: int = 20, seed: int = 0, spread_deg: float = 2.8):
    """Two tight blobs around orthogonal anchors, perturbed inside the plane
    the anchors span.  Within-blob cosine >= cos(2*spread) >= 0.95; cross-blob
    cosine <= cos(90 - 2*spread) <= 0.1 for the default spread."""
    rng = np.random.default_rng(seed)
    points, labels = [], {}
    for prefix, center in (("a", 0.0), ("b", 90.0)):
        for k in range(per_blob):
            angle = math.radians(center + rng.uniform(-spread_deg, spread_deg))
            vec = np.zeros(dim)
            vec[0] = math.cos(angle)
            vec[1] = math.sin(angle)
            pid = f"{prefix}{k:02d}"
            points.append((pid, vec))
            labels[pid] = prefix
    return points, labels


def connected_components_oracle(points, threshold: float = 0.5) -> dict[str, int]:
    """Union-find components of the >= threshold similarity graph."""
    ids = [pid for pid, _ in points]
    vectors = np.vstack([v for _, v in points])
    parent = list(range(len(ids)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    sims = vectors @ vectors.T
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if sims[i, j] >= threshold:
                parent[find(i)] = find(j)
    return {pid: find(i) for i, pid in enumerate(ids)}


def make_augmentation_corpus(seed: int, n_clusters: int = 4, per_cluster: int = 12, n_trivial: int = 8) -> Corpus:
    """Gold clusters with clean per-cluster CAT sets but noisy texts: each
    text is a short shared anchor plus a long random suffix, and trivial
    comments (no CATs) are pure noise."""
    rng = random.Random(seed)
    comments = []
    k = 0
    for c in range(n_clusters):
        picks = rng.sample(WORDS, 6)
        anchor = " ".join(picks[:2])
        cats = (" ".join(picks[2:4]), " ".join(picks[4:6]))
        for _ in range(per_cluster):
            suffix = " ".join(rng.choice(WORDS) for _ in range(8))
            comments.append(
                Comment(
                    id=f"c{k:03d}",
                    language=Language.EN,
                    text=f"{anchor} {suffix}",
                    gold_cats=cats,
                    pred_cats=cats,
                    comment_cluster=f"g{c}",
                )
            )
            k += 1
    for _ in range(n_trivial):
        suffix = " ".join(rng.choice(WORDS) for _ in range(10))
        comments.append(
            Comment(
                id=f"c{k:03d}",
                language=Language.EN,
                text=suffix,
                gold_cats=(),
                pred_cats=(),
                comment_cluster="gTRIV",
            )
        )
        k += 1
    return Corpus(name=f"aug-{seed}", comments=tuple(comments))


def make_eval_corpus(n: int = 500, seed: int = 7) -> Corpus:
    """Synthetic prediction corpus with heterogeneous per-comment quality:
    gold terms come from a small topic pool, predictions keep each gold term
    with probability 0.6 and add unrelated noise terms."""
    rng = random.Random(seed)
    topics = [f"topic {w}" for w in ("alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel")]
    comments = []
    for i in range(n):
        lang = rng.choice(list(Language))
        gold = tuple(rng.sample(topics, rng.randint(0, 4)))
        pred = [t for t in gold if rng.random() < 0.6]
        for _ in range(rng.randint(0, 3)):
            noise = f"noise {rng.randint(0, 9999)}"
            if noise not in pred:
                pred.append(noise)
        comments.append(
            Comment(id=f"e{i:04d}", language=lang, text=f"comment number {i}", gold_cats=gold, pred_cats=tuple(pred))
        )
    return Corpus(name="synthetic-eval", comments=tuple(comments))


def random_unit_vectors(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)
