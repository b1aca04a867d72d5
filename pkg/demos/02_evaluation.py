"""Score predicted aspect terms against gold with embedding-threshold matching."""

from aspect_cluster import (
    Comment,
    Corpus,
    DeterministicEmbedder,
    Language,
    MatchConfig,
    Matching,
    cat_count_histogram,
    cumulative_mass,
    empty_prediction_confusion,
    evaluate_corpus,
    match_comment,
)

provider = DeterministicEmbedder(dim=256)

# A prediction counts as matched when its cosine similarity to some gold term
# reaches the threshold, and each gold term may be claimed at most once.
matched, n_pred, n_gold = match_comment(
    pred=("savings", "inflation"),
    gold=("savings account", "cost of living", "inflation"),
    provider=provider,
    cfg=MatchConfig(threshold=0.7),
)
print(f"single comment: matched {matched} of {n_pred} predictions against {n_gold} gold terms")

comments = (
    Comment(id="a", language=Language.EN, text="one", gold_cats=("economy", "taxes"), pred_cats=("economy",)),
    Comment(id="b", language=Language.EN, text="two", gold_cats=("health",), pred_cats=("health", "noise")),
    Comment(id="c", language=Language.CN, text="三", gold_cats=("统计",), pred_cats=("统计",)),
    Comment(id="d", language=Language.CN, text="四", gold_cats=(), pred_cats=()),
    Comment(id="e", language=Language.EN, text="five", gold_cats=("transport",), pred_cats=()),
)
corpus = Corpus(name="demo-eval", comments=comments)

report = evaluate_corpus(corpus, provider, MatchConfig(threshold=0.7, matching=Matching.MAX_BIPARTITE))
print(f"overall: P={report.precision:.3f} R={report.recall:.3f} F1={report.f1:.3f}")
for language, block in sorted(report.per_language.items()):
    print(f"  {language}: matched={block.matched} P={block.precision:.3f} R={block.recall:.3f} F1={block.f1:.3f}")

# Greedy matching is cheaper but can strand a prediction that optimal
# assignment would have paired; it never beats max_bipartite.
greedy = evaluate_corpus(corpus, provider, MatchConfig(matching=Matching.GREEDY))
print(f"greedy F1 {greedy.f1:.3f} <= optimal F1 {report.f1:.3f}")

print("empty-prediction confusion:", empty_prediction_confusion(corpus))

hist = cat_count_histogram(corpus, "gold")
print("gold term-count histogram:", hist)
print(f"comments with <=1 gold term: {cumulative_mass(hist, 1)} of {len(corpus)}")
