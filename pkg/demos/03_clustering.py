"""Cluster comments with the adaptive-threshold algorithm, with and without
aspect-term augmentation, and score both against known group labels."""

import random

from aspect_cluster import (
    Comment,
    Corpus,
    DeterministicEmbedder,
    DyCluConfig,
    Language,
    cluster_and_score,
    dyclu_cluster,
    nmi,
)

provider = DeterministicEmbedder(dim=128)

# Build three topic groups. Texts are mostly noise words; what the comments in
# a group share is their aspect terms, which is exactly the situation where
# augmenting the text embedding with the term embeddings helps.
rng = random.Random(11)
noise = ["ember", "kettle", "orbit", "prairie", "quartz", "summit", "tundra", "willow", "basalt", "cinder"]
groups = {
    "g-economy": ("economy outlook", "interest rates"),
    "g-health": ("booster shots", "clinic queues"),
    "g-transit": ("train delays", "fare hike"),
}
comments = []
for label, cats in groups.items():
    for k in range(8):
        text = f"{label.split('-')[1]} {' '.join(rng.choice(noise) for _ in range(7))}"
        comments.append(
            Comment(
                id=f"{label}-{k}",
                language=Language.EN,
                text=text,
                gold_cats=cats,
                pred_cats=cats,
                comment_cluster=label,
            )
        )
# A few comments where the annotator found no aspect terms at all; the
# trivial filter keeps them out of the clustering entirely.
for k in range(4):
    comments.append(
        Comment(
            id=f"trivial-{k}",
            language=Language.EN,
            text=" ".join(rng.choice(noise) for _ in range(9)),
            gold_cats=(),
            pred_cats=(),
            comment_cluster="g-trivial",
        )
    )
corpus = Corpus(name="demo-clu", comments=tuple(comments))

plain_set, plain_nmi = cluster_and_score(corpus, provider, DyCluConfig())
aug_set, aug_nmi = cluster_and_score(
    corpus, provider, DyCluConfig(use_cat_augmentation=True, trivial_filter=True)
)
print(f"plain text embeddings:      NMI={plain_nmi:.3f} over {len(plain_set.partition)} comments")
print(f"augmented, trivial-filtered: NMI={aug_nmi:.3f} over {len(aug_set.partition)} comments"
      f" ({len(aug_set.trivial_ids)} filtered as trivial)")

best = aug_set.clusters[0]
print(f"top-ranked cluster: centroid={best.centroid_id} size={len(best)}"
      f" score={best.ranking_score:.2f} final_theta={best.final_theta:.3f} growth_steps={best.growth_steps}")

# The same algorithm also runs on raw (id, unit vector) pairs.
points = [(f"p{i}", v) for i, v in enumerate(provider.embed_batch(["alpha", "alpha!", "omega"]))]
cluster_set = dyclu_cluster(points, DyCluConfig(theta0=0.4))
print("raw points partition:", dict(cluster_set.partition))

# NMI is relabel-invariant: renaming every cluster changes nothing.
relabeled = {cid: f"renamed-{idx}" for cid, idx in aug_set.partition.items()}
gold = {c.id: c.comment_cluster for c in corpus if c.id in aug_set.partition}
print("relabel invariance:", nmi(dict(aug_set.partition), gold) == nmi(relabeled, gold))
