"""Command line interface.

Subcommands: validate, generate, eval, sweep, prefs, cluster, report.
Exit codes: 0 success, 1 validation failure, 2 I/O or transport failure.

Every run emits exactly one JSON run manifest (command, config snapshot,
SHA-256 of each input file, tool version, timestamps).  Commands that write
an output file put the manifest next to it as <output>.manifest.json;
commands that only print to stdout embed or append the manifest there.
Primary outputs contain no timestamps, so identical inputs and flags give
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import requests

from . import __version__
from .clustering import ClusterSet, DyCluConfig, cluster_and_score, cluster_corpus
from .corpus import CorpusValidationError, Split, load_corpus, split_stats, write_corpus
from .embedding import (
    DEFAULT_DIM,
    EmbeddingProviderConfig,
    EmbeddingTransportError,
    ProviderKind,
    make_provider,
)
from .evaluation import MatchConfig, Matching, evaluate_corpus, scale_sweep
from .generation import CachedChatClient, ChatError, HttpChatClient, generate_cats
from .preference import build_preference_set, write_preference_jsonl

EMBED_ENDPOINT_ENV = "ASPECT_EMBED_ENDPOINT"

LANGUAGE_ORDER = ("EN", "CN", "ID", "MS")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _ManifestWriter:
    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.config = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items()
            if k != "func" and not k.startswith("_")
        }
        self.inputs: dict[str, str] = {}
        self.started = datetime.now(timezone.utc).isoformat()

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = _sha256_file(Path(path))

    def build(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "tool_version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
        }

    def write_beside(self, output_path: str | Path) -> None:
        target = Path(str(output_path) + ".manifest.json")
        target.write_text(json.dumps(self.build(), indent=2) + "\n", encoding="utf-8")


def _round1(fraction: float) -> str:
    """Percent with one decimal, half-up: 0.34612 -> '34.6'."""
    return str(Decimal(repr(fraction * 100.0)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _add_embedder_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("embedding")
    group.add_argument("--embedder", choices=[k.value for k in ProviderKind], default="deterministic_local")
    group.add_argument("--embed-dim", type=int, default=DEFAULT_DIM)
    group.add_argument("--embed-endpoint", default=None, help=f"remote endpoint (or ${EMBED_ENDPOINT_ENV})")
    group.add_argument("--embed-model", default=None)
    group.add_argument("--embed-seed", type=int, default=0)
    group.add_argument("--embed-timeout", type=float, default=30.0)


def _provider_from_args(args: argparse.Namespace):
    endpoint = args.embed_endpoint or os.environ.get(EMBED_ENDPOINT_ENV)
    config = EmbeddingProviderConfig(
        kind=ProviderKind(args.embedder),
        dim=args.embed_dim,
        endpoint=endpoint,
        model_name=args.embed_model,
        timeout=args.embed_timeout,
        seed=args.embed_seed,
    )
    return make_provider(config)


def _match_config(args: argparse.Namespace) -> MatchConfig:
    return MatchConfig(threshold=args.threshold, matching=Matching(args.matching))


def _dyclu_config(args: argparse.Namespace) -> DyCluConfig:
    return DyCluConfig(
        gamma0=args.gamma0,
        theta0=args.theta0,
        theta_max=args.theta_max,
        delta=args.delta,
        k1=args.k1,
        k2=args.k2,
        use_cat_augmentation=args.augment,
        trivial_filter=args.trivial_filter,
    )


def cmd_validate(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("validate", args)
    corpus = load_corpus(args.corpus, split=Split(args.split))
    manifest.add_input(args.corpus)
    stats = split_stats(corpus)
    payload = {
        "corpus": corpus.name,
        "split": corpus.split.value,
        "counts": {lang.value: stats.counts[lang] for lang in stats.counts},
        "total": stats.total,
    }
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        manifest.write_beside(args.report)
        print(f"wrote {args.report}")
    else:
        payload["manifest"] = manifest.build()
        print(json.dumps(payload, indent=2))
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("generate", args)
    corpus = load_corpus(args.corpus)
    manifest.add_input(args.corpus)
    client = HttpChatClient(
        endpoint=args.endpoint,
        model=args.model,
        timeout=args.timeout,
        temperature=args.temperature,
    )
    if args.cache:
        client = CachedChatClient(client, args.cache, namespace=args.model)
    result = generate_cats(
        corpus,
        client,
        limit_variant=args.limit_prompt,
        retries=args.retries,
        concurrency=args.concurrency,
    )
    write_corpus(result.corpus, args.out)
    manifest.write_beside(args.out)
    summary = {
        "annotated": len(result.corpus) - len(result.failures),
        "failed": len(result.failures),
        "failures": [{"id": f.comment_id, "error": f.error} for f in result.failures],
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("eval", args)
    corpus = load_corpus(args.corpus)
    manifest.add_input(args.corpus)
    provider = _provider_from_args(args)
    report = evaluate_corpus(corpus, provider, _match_config(args))
    payload = report.as_dict()
    if not args.per_language:
        payload.pop("per_language", None)
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        manifest.write_beside(args.report)
        print(f"wrote {args.report}")
    else:
        payload["manifest"] = manifest.build()
        print(json.dumps(payload, indent=2))
    return 0


def _parse_int_list(raw: str) -> list[int]:
    """Accept '1,2,3' and '1..10' (inclusive range)."""
    raw = raw.strip()
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in raw.split(",") if part.strip()]


def cmd_sweep(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("sweep", args)
    corpus = load_corpus(args.corpus)
    manifest.add_input(args.corpus)
    provider = _provider_from_args(args)
    rows = scale_sweep(corpus, provider, _match_config(args), _parse_int_list(args.sizes), _parse_int_list(args.seeds))
    with Path(args.out).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "seed", "f1"])
        for size, seed, f1 in rows:
            writer.writerow([size, seed, f"{f1:.6f}"])
    manifest.write_beside(args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_prefs(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("prefs", args)
    human = load_corpus(args.human)
    machine = load_corpus(args.machine)
    manifest.add_input(args.human)
    manifest.add_input(args.machine)
    skeletons, skipped = build_preference_set(human, machine)
    write_preference_jsonl(skeletons, args.out)
    manifest.write_beside(args.out)
    print(json.dumps({"pairs": len(skeletons), "skipped_identical": skipped}, indent=2))
    return 0


def _cluster_payload(cluster_set: ClusterSet, nmi_value: float | None, scored: bool) -> dict:
    payload = {
        "clusters": [
            {
                "rank": i,
                "centroid_id": c.centroid_id,
                "member_ids": list(c.member_ids),
                "size": len(c),
                "ranking_score": c.ranking_score,
                "final_theta": c.final_theta,
            }
            for i, c in enumerate(cluster_set.clusters)
        ],
        "partition": dict(cluster_set.partition),
        "trivial_excluded": len(cluster_set.trivial_ids),
        "trivial_ids": list(cluster_set.trivial_ids),
    }
    if scored:
        payload["nmi"] = nmi_value
    return payload


def cmd_cluster(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("cluster", args)
    corpus = load_corpus(args.corpus)
    manifest.add_input(args.corpus)
    provider = _provider_from_args(args)
    cfg = _dyclu_config(args)
    if args.score:
        cluster_set, nmi_value = cluster_and_score(corpus, provider, cfg, cats_from_gold=args.oracle_cats)
    else:
        cluster_set, nmi_value = cluster_corpus(corpus, provider, cfg, cats_from_gold=args.oracle_cats), None
    payload = _cluster_payload(cluster_set, nmi_value, scored=args.score)
    Path(args.out).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    manifest.write_beside(args.out)
    print(f"wrote {args.out} ({len(cluster_set.clusters)} clusters, {len(cluster_set.trivial_ids)} trivial)")
    return 0


def _render_eval_text(reports: list[tuple[str, dict]]) -> str:
    """Fixed-order metric table; marks per column group when several reports
    are shown: * best F1, _ second best."""
    scopes = ["Overall"] + [lang for lang in LANGUAGE_ORDER if any(lang in r.get("per_language", {}) for _, r in reports)]

    def cell(report: dict, scope: str) -> tuple[str, str, str] | None:
        block = report if scope == "Overall" else report.get("per_language", {}).get(scope)
        if block is None:
            return None
        return (_round1(block["precision"]), _round1(block["recall"]), _round1(block["f1"]))

    marks: dict[tuple[int, str], str] = {}
    if len(reports) > 1:
        for scope in scopes:
            f1s = [(float(cell(r, scope)[2]), i) for i, (_, r) in enumerate(reports) if cell(r, scope)]
            for rank, (_, i) in enumerate(sorted(f1s, reverse=True)[:2]):
                marks[(i, scope)] = "*" if rank == 0 else "_"

    label_width = max(len("method"), max((len(label) for label, _ in reports), default=0))
    header_1 = " " * label_width + "  " + "  ".join(f"{scope:^20}" for scope in scopes)
    header_2 = f"{'method':<{label_width}}  " + "  ".join(f"{'P':>6}{'R':>7}{'F1':>7}" for _ in scopes)
    lines = [header_1, header_2]
    for i, (label, report) in enumerate(reports):
        cells = []
        for scope in scopes:
            values = cell(report, scope)
            if values is None:
                cells.append(f"{'-':>6}{'-':>7}{'-':>7}")
            else:
                f1_text = values[2] + marks.get((i, scope), "")
                cells.append(f"{values[0]:>6}{values[1]:>7}{f1_text:>7}")
        lines.append(f"{label:<{label_width}}  " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def _render_eval_csv(reports: list[tuple[str, dict]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["method", "scope", "precision", "recall", "f1"])
    for label, report in reports:
        writer.writerow([label, "Overall", _round1(report["precision"]), _round1(report["recall"]), _round1(report["f1"])])
        per_language = report.get("per_language", {})
        for lang in LANGUAGE_ORDER:
            if lang in per_language:
                block = per_language[lang]
                writer.writerow([label, lang, _round1(block["precision"]), _round1(block["recall"]), _round1(block["f1"])])
    return buffer.getvalue()


def _render_cluster_text(payload: dict) -> str:
    clusters = payload.get("clusters", [])
    if not clusters:
        return "no clusters\n"
    lines = [f"{'rank':>4}  {'centroid':<24} {'size':>5}  {'score':>9}  {'theta':>6}"]
    for c in clusters:
        lines.append(
            f"{c['rank']:>4}  {c['centroid_id']:<24} {c['size']:>5}  {c['ranking_score']:>9.4f}  {c['final_theta']:>6.4f}"
        )
    summary = f"clusters: {len(clusters)}  trivial excluded: {payload.get('trivial_excluded', 0)}"
    if payload.get("nmi") is not None:
        summary += f"  NMI: {payload['nmi']:.4f}"
    return "\n".join(lines) + "\n" + summary + "\n"


def cmd_report(args: argparse.Namespace) -> int:
    manifest = _ManifestWriter("report", args)
    reports: list[tuple[str, dict]] = []
    for path in args.eval or []:
        reports.append((Path(path).stem, json.loads(Path(path).read_text(encoding="utf-8"))))
        manifest.add_input(path)
    cluster_payload = None
    if args.clusters:
        cluster_payload = json.loads(Path(args.clusters).read_text(encoding="utf-8"))
        manifest.add_input(args.clusters)
    if not reports and cluster_payload is None:
        raise ValueError("report needs at least one --eval or --clusters input")

    text_parts = []
    if reports:
        text_parts.append(_render_eval_text(reports))
    if cluster_payload is not None:
        text_parts.append(_render_cluster_text(cluster_payload))
    text = "\n".join(text_parts)

    wrote_file = False
    if args.out_text:
        Path(args.out_text).write_text(text, encoding="utf-8")
        manifest.write_beside(args.out_text)
        wrote_file = True
        print(f"wrote {args.out_text}")
    else:
        sys.stdout.write(text)
    if args.out_csv:
        Path(args.out_csv).write_text(_render_eval_csv(reports), encoding="utf-8")
        if not wrote_file:
            manifest.write_beside(args.out_csv)
            wrote_file = True
        print(f"wrote {args.out_csv}")
    if not wrote_file:
        # stdout-only run: the manifest goes to stderr so the table stays clean.
        print(json.dumps({"manifest": manifest.build()}), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aspect-cluster", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus file and print per-language counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=[s.value for s in Split], default="unsplit")
    p.add_argument("--report", default=None, help="write the stats JSON here instead of stdout")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="annotate comments with a chat model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--limit-prompt", action="store_true", help="ask for 1 or 2 terms only")
    p.add_argument("--cache", default=None, help="JSONL response cache (idempotent reruns)")
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--temperature", type=float, default=0.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score predicted aspect terms against gold")
    p.add_argument("--corpus", required=True)
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--matching", choices=[m.value for m in Matching], default="max_bipartite")
    p.add_argument("--per-language", action="store_true")
    p.add_argument("--report", default=None, help="write the report JSON here instead of stdout")
    _add_embedder_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="F1 across subsample sizes and seeds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sizes", required=True, help="comma list or lo..hi")
    p.add_argument("--seeds", required=True, help="comma list or lo..hi")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--matching", choices=[m.value for m in Matching], default="max_bipartite")
    _add_embedder_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("prefs", help="export preference pairs (human chosen vs machine rejected)")
    p.add_argument("--human", required=True)
    p.add_argument("--machine", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prefs)

    p = sub.add_parser("cluster", help="dynamic clustering of comment embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--score", action="store_true", help="also score NMI against gold comment_cluster labels")
    p.add_argument("--augment", action="store_true", help="augment text embeddings with aspect-term embeddings")
    p.add_argument("--trivial-filter", action="store_true", help="drop comments with no aspect terms")
    p.add_argument("--oracle-cats", action="store_true", help="use gold_cats instead of pred_cats")
    p.add_argument("--gamma0", type=int, default=10)
    p.add_argument("--theta0", type=float, default=0.55)
    p.add_argument("--theta-max", type=float, default=0.9, dest="theta_max")
    p.add_argument("--delta", type=int, default=5)
    p.add_argument("--k1", type=float, default=0.01)
    p.add_argument("--k2", type=float, default=20.0)
    _add_embedder_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("report", help="render eval/cluster outputs as tables")
    p.add_argument("--eval", action="append", default=[], help="eval report JSON (repeatable)")
    p.add_argument("--clusters", default=None, help="cluster output JSON")
    p.add_argument("--out-text", default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CorpusValidationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (EmbeddingTransportError, ChatError, requests.RequestException, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
