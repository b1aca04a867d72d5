"""Round-trip a small multilingual comment corpus through JSONL and print stats."""

import tempfile
from pathlib import Path

from aspect_cluster import Comment, Corpus, Language, Polarity, Split, load_corpus, split_stats, write_corpus

comments = (
    Comment(
        id="en-001",
        language=Language.EN,
        text="Food banks are stretched thin while rents keep climbing.",
        gold_cats=("food bank", "rent"),
        pred_cats=("food banks", "rising rent"),
        polarity=Polarity.NEGATIVE,
        article_cluster="cost-of-living",
        comment_cluster="welfare",
    ),
    Comment(
        id="cn-001",
        language=Language.CN,
        text="统计数字和大家的感受完全对不上。",
        gold_cats=("统计数字",),
        polarity=Polarity.NEGATIVE,
    ),
    Comment(
        id="ms-001",
        language=Language.MS,
        text="Harga barang naik lagi minggu ini.",
        gold_cats=("harga barang",),
    ),
    Comment(
        id="id-001",
        language=Language.ID,
        text="Booster ketiga masih bikin ragu banyak orang.",
        gold_cats=("booster",),
        pred_cats=(),  # model produced nothing for this one
    ),
)
corpus = Corpus(name="demo", comments=comments, split=Split.TEST)

workdir = Path(tempfile.mkdtemp(prefix="aspect-demo-"))
path = workdir / "demo.jsonl"
write_corpus(corpus, path)
print(f"wrote {len(corpus)} comments to {path}")
print(path.read_text(encoding="utf-8").splitlines()[0])

# Loading re-validates every record: ids unique, languages known, at most
# five gold terms, no duplicate terms, text non-empty.
loaded = load_corpus(path, split=Split.TEST)
assert loaded.comments == corpus.comments

stats = split_stats(loaded)
print(f"total comments: {stats.total}")
for language, count in stats.counts.items():
    print(f"  {language.value}: {count}")

first = loaded.comments[0]
print(f"{first.id}: gold={first.gold_cats} pred={first.pred_cats} polarity={first.polarity.value}")
print(f"{loaded.comments[1].id}: pred_cats is {loaded.comments[1].pred_cats} (never annotated)")
print(f"{loaded.comments[3].id}: pred_cats is {loaded.comments[3].pred_cats} (annotated, found nothing)")
