"""Command-line interface: exit codes, pipeline round-trips, determinism.

Exit-code contract: 0 success, 1 usage error, 2 data error.
"""

import json
import os

import pytest

from sctag.cli import main
from sctag.synth import fixture_dump


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run ingest -> filter -> stratify -> train once; later tests reuse the
    artifacts read-only."""
    root = tmp_path_factory.mktemp("pipeline")
    dump = root / "posts.xml"
    fixture_dump(str(dump), n_posts=500, seed=0)

    docs = root / "docs.jsonl"
    assert main(["ingest", str(dump), "--out", str(docs)]) == 0

    filtered = root / "filtered.jsonl"
    vocab = root / "vocab.txt"
    assert (
        main(
            [
                "filter",
                str(docs),
                "--out",
                str(filtered),
                "--vocab",
                str(vocab),
                "--min-tag-count",
                "10",
            ]
        )
        == 0
    )

    part = root / "partition.tsv"
    assert (
        main(
            [
                "stratify",
                str(filtered),
                "--vocab",
                str(vocab),
                "--out",
                str(part),
                "--method",
                "iterative",
                "--ratios",
                "0.8",
                "0.1",
                "0.1",
            ]
        )
        == 0
    )

    arch = root / "arch.json"
    arch.write_text(
        json.dumps(
            {"arch": {"filter_widths": [3, 5], "filters_per_width": 8, "dense_sizes": [32, 32]}}
        )
    )
    model = root / "model.sctg"
    assert (
        main(
            [
                "train",
                str(filtered),
                "--vocab",
                str(vocab),
                "--partition",
                str(part),
                "--out",
                str(model),
                "--config",
                str(arch),
                "--epochs",
                "2",
            ]
        )
        == 0
    )
    return {
        "root": root,
        "dump": dump,
        "docs": docs,
        "filtered": filtered,
        "vocab": vocab,
        "partition": part,
        "model": model,
    }


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["ingest", "x.xml", "--out", "y", "--bogus"]) == 1

    def test_missing_required_flag_is_usage_error(self):
        assert main(["ingest", "x.xml"]) == 1

    def test_missing_input_file_is_data_error(self, tmp_path, capsys):
        assert main(["ingest", str(tmp_path / "nope.xml"), "--out", str(tmp_path / "o")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_corrupt_bundle_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.sctg"
        bad.write_bytes(b"NOPE" + b"\x00" * 64)
        assert main(["predict", str(bad), "--model", str(bad)]) == 2


class TestPipeline:
    def test_ingest_reports_counts(self, pipeline, capsys):
        assert main(["ingest", str(pipeline["dump"]), "--out", os.devnull]) == 0
        assert "ingested" in capsys.readouterr().out

    def test_vocab_file_nonempty(self, pipeline):
        tags = pipeline["vocab"].read_text().split()
        assert tags and len(tags) == len(set(tags))

    def test_partition_covers_all_documents(self, pipeline):
        with open(pipeline["filtered"], encoding="utf-8") as f:
            n_docs = sum(1 for l in f if l.strip())
        with open(pipeline["partition"], encoding="utf-8") as f:
            rows = [l.split("\t") for l in f.read().splitlines() if l]
        assert len(rows) == n_docs
        assert {r[1] for r in rows} <= {"train", "val", "test"}

    def test_stats_writes_tables(self, pipeline, tmp_path):
        out = tmp_path / "stats"
        assert main(["stats", str(pipeline["docs"]), "--out", str(out)]) == 0
        assert len(list(out.iterdir())) >= 5

    def test_eval_report(self, pipeline, tmp_path, capsys):
        out = tmp_path / "report.tsv"
        assert (
            main(
                [
                    "eval",
                    str(pipeline["filtered"]),
                    "--model",
                    str(pipeline["model"]),
                    "--partition",
                    str(pipeline["partition"]),
                    "--split",
                    "test",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
        text = out.read_text()
        assert "auc_mean" in text
        assert capsys.readouterr().out == text

    def test_bench(self, pipeline, capsys):
        assert (
            main(["bench", str(pipeline["filtered"]), "--model", str(pipeline["model"])]) == 0
        )
        out = capsys.readouterr().out
        assert "chars_per_sec" in out and "sloc_per_sec" in out

    def test_export_embedding(self, pipeline, tmp_path):
        out = tmp_path / "embed.tsv"
        assert main(["export-embedding", "--model", str(pipeline["model"]), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "char\tx\ty"
        assert len(lines) == 1 + 101  # every codec row including unknown
        assert any(l.startswith("<space>\t") for l in lines)


class TestPredict:
    def test_text_and_records_formats(self, pipeline, tmp_path, capsys):
        f = tmp_path / "snippet.py"
        f.write_text("import os\nprint(os.name)\n")
        assert main(["predict", str(f), "--model", str(pipeline["model"]), "--top-k", "3"]) == 0
        text_out = capsys.readouterr().out
        assert str(f) in text_out and "=" in text_out

        assert (
            main(
                ["predict", str(f), "--model", str(pipeline["model"]), "--format", "records"]
            )
            == 0
        )
        rec = json.loads(capsys.readouterr().out)
        assert rec["path"] == str(f) and len(rec["predictions"]) == 5
        certs = [p["certainty"] for p in rec["predictions"]]
        assert certs == sorted(certs, reverse=True)

    def test_threshold_overrides_topk(self, pipeline, tmp_path, capsys):
        f = tmp_path / "a.c"
        f.write_text("int main(void) { return 0; }\n")
        assert (
            main(
                [
                    "predict",
                    str(f),
                    "--model",
                    str(pipeline["model"]),
                    "--threshold",
                    "1.1",
                    "--format",
                    "records",
                ]
            )
            == 0
        )
        assert json.loads(capsys.readouterr().out)["predictions"] == []

    def test_directory_recursion(self, pipeline, tmp_path, capsys):
        (tmp_path / "sub").mkdir()
        (tmp_path / "a.py").write_text("x = 1\n")
        (tmp_path / "sub" / "b.js").write_text("var y = 2;\n")
        assert (
            main(
                ["predict", str(tmp_path), "--model", str(pipeline["model"]), "--format", "records"]
            )
            == 0
        )
        paths = [json.loads(l)["path"] for l in capsys.readouterr().out.splitlines()]
        assert paths == sorted(paths)
        assert len(paths) == 2

    def test_no_readable_files_is_data_error(self, pipeline, tmp_path):
        empty = tmp_path / "emptydir"
        empty.mkdir()
        assert main(["predict", str(empty), "--model", str(pipeline["model"])]) == 2


class TestDeterminism:
    def test_stratify_is_seeded(self, pipeline, tmp_path):
        outs = []
        for name in ("p1.tsv", "p2.tsv"):
            out = tmp_path / name
            assert (
                main(
                    [
                        "stratify",
                        str(pipeline["filtered"]),
                        "--vocab",
                        str(pipeline["vocab"]),
                        "--out",
                        str(out),
                        "--seed",
                        "7",
                    ]
                )
                == 0
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_sample_is_seeded_and_warns_when_short(self, tmp_path, capsys):
        tree = tmp_path / "tree"
        tree.mkdir()
        for i in range(6):
            (tree / f"f{i}.py").write_text(f"x = {i}\n")
        (tree / "one.js").write_text("var x;\n")
        args = [
            "sample",
            str(tree),
            "--extensions",
            "py",
            "js",
            "--n-per-ext",
            "3",
            "--seed",
            "5",
        ]
        outs = []
        for name in ("s1.jsonl", "s2.jsonl"):
            out = tmp_path / name
            assert main(args + ["--out", str(out)]) == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]
        assert "only 1 files for .js" in capsys.readouterr().err
        recs = [json.loads(l) for l in outs[0].splitlines()]
        assert sum(r["ext"] == "py" for r in recs) == 3
        assert sum(r["ext"] == "js" for r in recs) == 1
        assert [r["id"] for r in recs] == list(range(4))
