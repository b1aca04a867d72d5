import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from aspect_cluster import Corpus, __version__, load_corpus, write_corpus
from aspect_cluster.cli import _parse_int_list, _round1, main

from conftest import make_augmentation_corpus, make_comment


@pytest.fixture()
def small_corpus(tmp_path):
    comments = (
        make_comment(0, gold_cats=("economy", "inflation"), pred_cats=("economy", "inflation")),
        make_comment(1, gold_cats=("health policy",), pred_cats=("health policy",)),
        make_comment(2, gold_cats=("transport",), pred_cats=("transport",)),
        make_comment(3, gold_cats=("taxes",), pred_cats=("taxes",)),
    )
    path = tmp_path / "corpus.jsonl"
    write_corpus(Corpus(name="corpus", comments=comments), path)
    return path


def _read_manifest(output_path):
    return json.loads((output_path.parent / (output_path.name + ".manifest.json")).read_text())


class TestRound1:
    @pytest.mark.parametrize(
        "fraction,text",
        [(0.2995, "30.0"), (0.40949, "40.9"), (0.34612, "34.6"), (1.0, "100.0"), (0.0, "0.0"), (0.345, "34.5"), (0.3455, "34.6")],
    )
    def test_half_up_percent(self, fraction, text):
        assert _round1(fraction) == text


class TestParseIntList:
    def test_comma_list(self):
        assert _parse_int_list("1,2,3") == [1, 2, 3]

    def test_inclusive_range(self):
        assert _parse_int_list("1..5") == [1, 2, 3, 4, 5]


class TestValidate:
    def test_stdout_counts_and_embedded_manifest(self, small_corpus, capsys):
        assert main(["validate", "--corpus", str(small_corpus)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["corpus"] == "corpus"
        assert payload["split"] == "unsplit"
        assert payload["counts"] == {"EN": 4, "CN": 0, "MS": 0, "ID": 0}
        assert payload["total"] == 4
        manifest = payload["manifest"]
        assert manifest["command"] == "validate"
        assert manifest["tool_version"] == __version__
        expected_hash = hashlib.sha256(small_corpus.read_bytes()).hexdigest()
        assert manifest["inputs"] == {str(small_corpus): expected_hash}

    def test_report_file_with_manifest_sidecar(self, small_corpus, tmp_path, capsys):
        out = tmp_path / "stats.json"
        assert main(["validate", "--corpus", str(small_corpus), "--report", str(out), "--split", "test"]) == 0
        assert f"wrote {out}" in capsys.readouterr().out
        payload = json.loads(out.read_text())
        assert payload["split"] == "test"
        assert "manifest" not in payload
        manifest = _read_manifest(out)
        assert manifest["command"] == "validate"
        assert manifest["config"]["split"] == "test"

    def test_invalid_corpus_exits_1_with_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(
            '{"id": "a", "lang": "EN", "text": "ok", "gold_cats": []}\n'
            '{"id": "b", "lang": "FR", "text": "nope", "gold_cats": []}\n'
        )
        assert main(["validate", "--corpus", str(bad)]) == 1
        err = capsys.readouterr().err
        assert "error:" in err
        assert "line 2" in err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["validate", "--corpus", str(tmp_path / "absent.jsonl")]) == 2
        assert "error:" in capsys.readouterr().err


class TestEval:
    def test_perfect_predictions_stdout(self, small_corpus, capsys):
        assert main(["eval", "--corpus", str(small_corpus), "--embed-dim", "64"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["precision"] == 1.0
        assert payload["recall"] == 1.0
        assert payload["f1"] == 1.0
        assert payload["matched"] == payload["predicted_total"] == payload["gold_total"] == 5
        assert "per_language" not in payload
        assert payload["manifest"]["command"] == "eval"
        assert payload["manifest"]["config"]["threshold"] == 0.7

    def test_per_language_block(self, small_corpus, capsys):
        assert main(["eval", "--corpus", str(small_corpus), "--embed-dim", "64", "--per-language"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload["per_language"]) == {"EN"}
        assert payload["per_language"]["EN"]["f1"] == 1.0

    def test_report_file_reruns_byte_identical(self, small_corpus, tmp_path, capsys):
        out = tmp_path / "eval.json"
        args = ["eval", "--corpus", str(small_corpus), "--embed-dim", "64", "--report", str(out)]
        assert main(args) == 0
        first = out.read_bytes()
        manifest = _read_manifest(out)
        assert manifest["command"] == "eval"
        assert str(small_corpus) in manifest["inputs"]
        assert main(args) == 0
        assert out.read_bytes() == first

    def test_remote_embedder_failure_exits_2(self, small_corpus, capsys):
        code = main(
            [
                "eval", "--corpus", str(small_corpus),
                "--embedder", "remote",
                "--embed-endpoint", "http://127.0.0.1:9/embed",
                "--embed-model", "m",
                "--embed-timeout", "0.5",
            ]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestSweep:
    def test_csv_rows_and_rerun_identical(self, tmp_path, capsys):
        comments = tuple(
            make_comment(i, gold_cats=(f"topic {i % 5}",), pred_cats=(f"topic {i % 5}",) if i % 3 else ())
            for i in range(30)
        )
        corpus_path = tmp_path / "sweep.jsonl"
        write_corpus(Corpus(name="sweep", comments=comments), corpus_path)
        out = tmp_path / "sweep.csv"
        args = [
            "sweep", "--corpus", str(corpus_path), "--sizes", "10,20",
            "--seeds", "1..3", "--out", str(out), "--embed-dim", "64",
        ]
        assert main(args) == 0
        assert "6 rows" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert lines[0] == "size,seed,f1"
        assert len(lines) == 7
        sizes = [int(line.split(",")[0]) for line in lines[1:]]
        assert sizes == [10, 10, 10, 20, 20, 20]
        first = out.read_bytes()
        assert main(args) == 0
        assert out.read_bytes() == first
        assert _read_manifest(out)["command"] == "sweep"


class TestPrefs:
    def test_export_skips_identical_pairs(self, tmp_path, capsys):
        human = Corpus(
            name="h",
            comments=(
                make_comment(0, gold_cats=("economy",)),
                make_comment(1, gold_cats=("health",)),
            ),
        )
        machine = Corpus(
            name="m",
            comments=(
                make_comment(0, pred_cats=("economy",)),
                make_comment(1, pred_cats=("wrong term",)),
            ),
        )
        human_path, machine_path = tmp_path / "h.jsonl", tmp_path / "m.jsonl"
        write_corpus(human, human_path)
        write_corpus(machine, machine_path)
        out = tmp_path / "prefs.jsonl"
        code = main(["prefs", "--human", str(human_path), "--machine", str(machine_path), "--out", str(out)])
        assert code == 0
        assert json.loads(capsys.readouterr().out) == {"pairs": 1, "skipped_identical": 1}
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 1
        assert rows[0]["id"] == "c0001"
        assert rows[0]["chosen"] == "health"
        assert rows[0]["rejected"] == "wrong term"
        assert "comment number 1" in rows[0]["prompt"]
        assert _read_manifest(out)["command"] == "prefs"

    def test_id_mismatch_exits_1(self, tmp_path, capsys):
        write_corpus(Corpus(name="h", comments=(make_comment(0),)), tmp_path / "h.jsonl")
        write_corpus(Corpus(name="m", comments=(make_comment(1, pred_cats=()),)), tmp_path / "m.jsonl")
        code = main(["prefs", "--human", str(tmp_path / "h.jsonl"), "--machine", str(tmp_path / "m.jsonl"), "--out", str(tmp_path / "p.jsonl")])
        assert code == 1


class TestCluster:
    @pytest.fixture()
    def labeled_corpus(self, tmp_path):
        corpus = make_augmentation_corpus(0, n_clusters=2, per_cluster=4, n_trivial=2)
        path = tmp_path / "labeled.jsonl"
        write_corpus(corpus, path)
        return path

    def test_cluster_output_shape(self, labeled_corpus, tmp_path, capsys):
        out = tmp_path / "clusters.json"
        code = main(
            [
                "cluster", "--corpus", str(labeled_corpus), "--out", str(out),
                "--augment", "--trivial-filter", "--embed-dim", "64",
            ]
        )
        assert code == 0
        assert "2 trivial" in capsys.readouterr().out
        payload = json.loads(out.read_text())
        assert "nmi" not in payload
        assert payload["trivial_excluded"] == 2
        assert len(payload["partition"]) == 8
        ranks = [c["rank"] for c in payload["clusters"]]
        assert ranks == sorted(ranks)
        for cluster in payload["clusters"]:
            assert cluster["centroid_id"] in cluster["member_ids"]
            assert cluster["size"] == len(cluster["member_ids"])

    def test_scored_clustering_recovers_labels(self, labeled_corpus, tmp_path, capsys):
        out = tmp_path / "scored.json"
        code = main(
            [
                "cluster", "--corpus", str(labeled_corpus), "--out", str(out),
                "--score", "--augment", "--trivial-filter", "--oracle-cats",
                "--embed-dim", "64",
            ]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["nmi"] == 1.0
        assert _read_manifest(out)["config"]["augment"] is True

    def test_bad_config_exits_1(self, labeled_corpus, tmp_path, capsys):
        code = main(
            ["cluster", "--corpus", str(labeled_corpus), "--out", str(tmp_path / "x.json"), "--theta0", "1.5"]
        )
        assert code == 1


def _eval_report(path, precision, recall, f1, per_language=None):
    payload = {"matched": 1, "predicted_total": 2, "gold_total": 2, "precision": precision, "recall": recall, "f1": f1}
    if per_language is not None:
        payload["per_language"] = per_language
    path.write_text(json.dumps(payload))
    return path


class TestReport:
    def test_single_report_rendering(self, tmp_path, capsys):
        report = _eval_report(tmp_path / "run-a.json", 0.2995, 0.40949, 0.34612)
        assert main(["report", "--eval", str(report)]) == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert "Overall" in lines[0]
        row = next(line for line in lines if line.startswith("run-a"))
        assert "30.0" in row and "40.9" in row and "34.6" in row
        assert "*" not in row
        # Stdout-only run: manifest arrives on stderr as one JSON line.
        manifest = json.loads(captured.err)["manifest"]
        assert manifest["command"] == "report"
        assert str(report) in manifest["inputs"]

    def test_best_and_second_markers(self, tmp_path, capsys):
        a = _eval_report(tmp_path / "alpha.json", 0.5, 0.5, 0.5)
        b = _eval_report(tmp_path / "beta.json", 0.3, 0.3, 0.3)
        c = _eval_report(tmp_path / "gamma.json", 0.2, 0.2, 0.2)
        assert main(["report", "--eval", str(a), "--eval", str(b), "--eval", str(c)]) == 0
        out = capsys.readouterr().out
        row_a = next(line for line in out.splitlines() if line.startswith("alpha"))
        row_b = next(line for line in out.splitlines() if line.startswith("beta"))
        row_c = next(line for line in out.splitlines() if line.startswith("gamma"))
        assert "50.0*" in row_a
        assert "30.0_" in row_b
        assert "_" not in row_c and "*" not in row_c

    def test_language_columns_fixed_order(self, tmp_path, capsys):
        block = {"precision": 0.5, "recall": 0.5, "f1": 0.5}
        report = _eval_report(
            tmp_path / "r.json", 0.5, 0.5, 0.5,
            per_language={"MS": block, "ID": block, "CN": block, "EN": block},
        )
        assert main(["report", "--eval", str(report)]) == 0
        header = capsys.readouterr().out.splitlines()[0]
        positions = [header.index(lang) for lang in ("EN", "CN", "ID", "MS")]
        assert positions == sorted(positions)

    def test_missing_language_renders_dashes(self, tmp_path, capsys):
        block = {"precision": 0.5, "recall": 0.5, "f1": 0.5}
        a = _eval_report(tmp_path / "a.json", 0.5, 0.5, 0.5, per_language={"EN": block})
        b = _eval_report(tmp_path / "b.json", 0.4, 0.4, 0.4)
        assert main(["report", "--eval", str(a), "--eval", str(b)]) == 0
        row_b = next(line for line in capsys.readouterr().out.splitlines() if line.startswith("b "))
        assert "-" in row_b

    def test_cluster_table_and_sentinel(self, tmp_path, capsys):
        payload = {
            "clusters": [
                {"rank": 0, "centroid_id": "c1", "member_ids": ["c1", "c2"], "size": 2,
                 "ranking_score": 1.8, "final_theta": 0.55},
            ],
            "partition": {"c1": 0, "c2": 0},
            "trivial_excluded": 1,
            "trivial_ids": ["c9"],
            "nmi": 0.75,
        }
        path = tmp_path / "clusters.json"
        path.write_text(json.dumps(payload))
        assert main(["report", "--clusters", str(path)]) == 0
        out = capsys.readouterr().out
        assert "clusters: 1  trivial excluded: 1  NMI: 0.7500" in out

        path.write_text(json.dumps({"clusters": [], "partition": {}, "trivial_excluded": 0, "trivial_ids": []}))
        assert main(["report", "--clusters", str(path)]) == 0
        assert "no clusters" in capsys.readouterr().out

    def test_text_and_csv_outputs(self, tmp_path, capsys):
        report = _eval_report(
            tmp_path / "r.json", 0.5, 0.25, 1 / 3,
            per_language={"EN": {"precision": 0.5, "recall": 0.25, "f1": 1 / 3}},
        )
        out_text, out_csv = tmp_path / "table.txt", tmp_path / "table.csv"
        code = main(["report", "--eval", str(report), "--out-text", str(out_text), "--out-csv", str(out_csv)])
        assert code == 0
        assert capsys.readouterr().err == ""
        assert "Overall" in out_text.read_text()
        csv_lines = out_csv.read_text().splitlines()
        assert csv_lines[0] == "method,scope,precision,recall,f1"
        assert csv_lines[1] == "r,Overall,50.0,25.0,33.3"
        assert csv_lines[2] == "r,EN,50.0,25.0,33.3"
        assert _read_manifest(out_text)["command"] == "report"

    def test_no_inputs_exits_1(self, capsys):
        assert main(["report"]) == 1
        assert "at least one" in capsys.readouterr().err


class _ChatOK(BaseHTTPRequestHandler):
    state: dict = {}

    def do_POST(self):
        self.rfile.read(int(self.headers["Content-Length"]))
        self.state["hits"] = self.state.get("hits", 0) + 1
        body = json.dumps({"choices": [{"message": {"content": "[ATs: cli term | EP: P]"}}]})
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body.encode("utf-8"))

    def log_message(self, *args):
        pass


@pytest.fixture()
def chat_endpoint():
    state: dict = {"hits": 0}
    handler = type("Handler", (_ChatOK,), {"state": state})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions", state
    finally:
        server.shutdown()
        thread.join()


class TestGenerate:
    def test_annotates_and_caches(self, small_corpus, tmp_path, chat_endpoint, capsys):
        url, state = chat_endpoint
        out = tmp_path / "annotated.jsonl"
        cache = tmp_path / "cache.jsonl"
        args = [
            "generate", "--corpus", str(small_corpus), "--out", str(out),
            "--endpoint", url, "--model", "annotator-v1", "--cache", str(cache),
        ]
        assert main(args) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary == {"annotated": 4, "failed": 0, "failures": []}
        annotated = load_corpus(out)
        assert all(c.pred_cats == ("cli term",) for c in annotated)
        assert all(c.polarity.value == "P" for c in annotated)
        assert state["hits"] == 4
        assert _read_manifest(out)["command"] == "generate"

        # Rerun replays from the cache without touching the server.
        assert main(args) == 0
        assert state["hits"] == 4

    def test_unreachable_endpoint_exits_2(self, small_corpus, tmp_path, capsys):
        code = main(
            [
                "generate", "--corpus", str(small_corpus), "--out", str(tmp_path / "o.jsonl"),
                "--endpoint", "http://127.0.0.1:9/v1", "--model", "m",
                "--timeout", "0.5", "--retries", "0",
            ]
        )
        assert code == 2


class TestParser:
    def test_missing_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert __version__ in capsys.readouterr().out
