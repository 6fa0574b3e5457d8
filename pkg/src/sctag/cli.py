"""Command-line entry point wiring the pipeline end to end.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import json
import os
import random
import sys

import numpy as np

from . import correction, evaluation, ingest, models, stratify
from .bundle import BundleError
from .correction import FilterConfig
from .nn import ArchConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _filter_config(args):
    cfg = _load_config(getattr(args, "config", None)).get("filter", {})
    if getattr(args, "min_snippet_length", None) is not None:
        cfg["min_snippet_length"] = args.min_snippet_length
    if getattr(args, "min_score", None) is not None:
        cfg["min_score"] = args.min_score
    if getattr(args, "min_tag_count", None) is not None:
        cfg["min_tag_count"] = args.min_tag_count
    return FilterConfig(**cfg)


def cmd_ingest(args):
    stats = ingest.IngestStats()
    docs = ingest.ingest_dump(args.dump, _filter_config(args), stats)
    n = ingest.write_documents(docs, args.out)
    print(
        f"ingested {n} documents (skipped {stats.skipped_records} records, "
        f"{stats.orphan_posts} orphans, {stats.dropped_no_snippets} without snippets)"
    )
    return 0


def cmd_stats(args):
    docs = list(ingest.read_documents(args.docs))
    stats = correction.compute_corpus_stats(docs)
    written = correction.export_stats(stats, args.out)
    print(f"wrote {len(written)} tables to {args.out}")
    return 0


def cmd_filter(args):
    cfg = _filter_config(args)
    docs = [d for d in ingest.read_documents(args.docs) if correction.filter_score(d, cfg)]
    vocab, kept = correction.rank_and_filter_tags(docs, cfg)
    ingest.write_documents(kept, args.out)
    with open(args.vocab, "w", encoding="utf-8") as f:
        f.write("\n".join(vocab.tags) + "\n")
    print(f"kept {len(kept)} documents, {len(vocab)} tags")
    return 0


def _read_vocab(path):
    with open(path, encoding="utf-8") as f:
        return correction.TagVocabulary([l.strip() for l in f if l.strip()])


def cmd_stratify(args):
    docs = list(ingest.read_documents(args.docs))
    vocab = _read_vocab(args.vocab)
    Y = stratify.build_label_matrix(docs, vocab)
    if args.method == "two-stage":
        part = stratify.two_stage_split(Y, seed=args.seed)
    elif args.method == "iterative":
        part = stratify.iterative_stratify(Y, tuple(args.ratios), seed=args.seed)
    else:
        part = stratify.labelset_stratify(Y, tuple(args.ratios), seed=args.seed)
    stratify.write_partition(Y, part, args.out)
    report = stratify.strat_report(Y, part)
    print(
        f"sizes {part.sizes()}  max_dev {report.max_deviation:.4f}  "
        f"mean_dev {report.mean_deviation:.4f}"
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write("subset\ttag_index\tproportion\tcorpus_proportion\n")
            for s in range(report.proportions.shape[0]):
                for j in range(report.proportions.shape[1]):
                    f.write(
                        f"{part.names[s]}\t{j}\t{report.proportions[s, j]:.6f}"
                        f"\t{report.corpus_proportions[j]:.6f}\n"
                    )
    return 0


def _split_docs(docs, partition_path):
    subset_of = stratify.read_partition(partition_path)
    out = {"train": [], "val": [], "test": []}
    for d in docs:
        out[subset_of[d.post_id]].append(d)
    return out


def cmd_train(args):
    docs = list(ingest.read_documents(args.docs))
    vocab = _read_vocab(args.vocab)
    split = _split_docs(docs, args.partition)
    schedule = models.TrainSchedule(
        epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=args.seed
    )
    arch_cfg = _load_config(args.config).get("arch", {})
    if args.kind == "cnn":
        arch = ArchConfig(output_dim=len(vocab), **arch_cfg)
        b = models.build_cnn(arch, vocab, seed=args.seed)
        b = models.train(b, split["train"], split["val"], schedule)
    elif args.kind == "embed_lr":
        b = models.train_embed_lr(split["train"], split["val"], vocab, schedule, seed=args.seed)
    else:
        b = models.train_ngram_lr(split["train"], split["val"], vocab, schedule, seed=args.seed)
    models.save_bundle(b, args.out)
    last = b.training_meta["loss_curve"][-1]
    print(f"trained {args.kind} for {b.training_meta['epochs']} epochs, final {last}")
    return 0


def cmd_eval(args):
    b = models.load_bundle(args.model)
    docs = list(ingest.read_documents(args.docs))
    subset = _split_docs(docs, args.partition)[args.split] if args.partition else docs
    report = evaluation.evaluate_model(b, subset, split=args.split if args.partition else "all")
    text = evaluation.format_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    print(text, end="")
    return 0


def _iter_files(paths):
    for p in paths:
        if os.path.isdir(p):
            for root, dirs, files in os.walk(p, followlinks=False):
                dirs.sort()
                for name in sorted(files):
                    yield os.path.join(root, name)
        else:
            yield p


def cmd_predict(args):
    b = models.load_bundle(args.model)
    out = 0
    for path in _iter_files(args.paths):
        try:
            with open(path, encoding="utf-8", errors="replace") as f:
                text = f.read()
        except OSError as e:
            print(f"{path}\terror: {e}", file=sys.stderr)
            continue
        ranked = models.predict_probs(b, text)
        if args.threshold is not None:
            chosen = [(t, p) for t, p in ranked if p >= args.threshold]
        else:
            chosen = ranked[: args.top_k]
        if args.format == "records":
            print(
                json.dumps(
                    {
                        "path": path,
                        "length": len(text),
                        "predictions": [{"tag": t, "certainty": p} for t, p in chosen],
                    }
                )
            )
        else:
            pairs = "  ".join(f"{t}={p:.3f}" for t, p in chosen)
            print(f"{path} ({len(text)} chars): {pairs}")
        out += 1
    return 0 if out else 2


def cmd_bench(args):
    b = models.load_bundle(args.model)
    texts = [d.text for d in ingest.read_documents(args.docs)]
    cps, sloc = evaluation.throughput_bench(b, texts, repetitions=args.repetitions)
    print(f"chars_per_sec\t{cps:.0f}")
    print(f"sloc_per_sec\t{sloc:.0f}")
    print(f"# sloc = chars / {evaluation.CHARS_PER_SLOC}; absolute throughput is machine-dependent")
    return 0


def cmd_export_embedding(args):
    b = models.load_bundle(args.model)
    labels, pts, degenerate = evaluation.embedding_projection_2d(b)
    names = {" ": "<space>", "\t": "<tab>", "\n": "<lf>", "\r": "<cr>", "\x0b": "<vt>", "\x0c": "<ff>"}
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("char\tx\ty\n")
        for label, (x, y) in zip(labels, pts):
            f.write(f"{names.get(label, label)}\t{x:.6f}\t{y:.6f}\n")
    if degenerate:
        print("warning: degenerate embedding covariance", file=sys.stderr)
    print(f"wrote {len(labels)} points to {args.out}")
    return 0


DEFAULT_EXTENSIONS = ["py", "xml", "java", "html", "c", "js", "sql", "asm", "sh", "cpp"]


def cmd_sample(args):
    rng = random.Random(args.seed)
    by_ext = {e: [] for e in args.extensions}
    for path in _iter_files([args.root]):
        ext = os.path.splitext(path)[1].lstrip(".")
        if ext in by_ext:
            by_ext[ext].append(path)
    records = []
    for ext in args.extensions:
        files = sorted(by_ext[ext])
        if len(files) < args.n_per_ext:
            print(f"warning: only {len(files)} files for .{ext}", file=sys.stderr)
            chosen = files
        else:
            chosen = rng.sample(files, args.n_per_ext)
        for p in sorted(chosen):
            records.append({"path": p, "ext": ext})
    with open(args.out, "w", encoding="utf-8") as f:
        for i, rec in enumerate(records):
            rec["id"] = i
            f.write(json.dumps(rec) + "\n")
    print(f"sampled {len(records)} files")
    return 0


def cmd_serve_validation(args):
    # imported lazily so the pipeline commands don't require the service deps
    import uvicorn

    from .validation import ValidationStore, create_session, load_session
    from .service import build_app

    if os.path.exists(os.path.join(args.session_dir, "session.json")):
        store = load_session(args.session_dir)
    else:
        b = models.load_bundle(args.model)
        manifest = []
        with open(args.manifest, encoding="utf-8") as f:
            manifest = [json.loads(l) for l in f if l.strip()]
        session = create_session(manifest, b, k=args.top_k)
        store = ValidationStore(args.session_dir, session)
        store.persist_session()
    uvicorn.run(build_app(store), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser():
    p = _Parser(prog="sctag", description="Character-level multilabel tagger for source code")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="parse a post dump into tagged documents")
    sp.add_argument("dump")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.add_argument("--min-snippet-length", type=int, dest="min_snippet_length")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("stats", help="corpus statistics tables")
    sp.add_argument("docs")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("filter", help="score and tag-frequency filters")
    sp.add_argument("docs")
    sp.add_argument("--out", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--config")
    sp.add_argument("--min-score", type=int, dest="min_score")
    sp.add_argument("--min-tag-count", type=int, dest="min_tag_count")
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("stratify", help="train/val/test partition")
    sp.add_argument("docs")
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report")
    sp.add_argument("--method", choices=["two-stage", "iterative", "labelset"], default="two-stage")
    sp.add_argument("--ratios", type=float, nargs="+", default=[0.8, 0.1, 0.1])
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_stratify)

    sp = sub.add_parser("train", help="train a model")
    sp.add_argument("docs")
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--partition", required=True)
    sp.add_argument("--kind", choices=["cnn", "embed_lr", "ngram_lr"], default="cnn")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.add_argument("--epochs", type=int, default=20)
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="per-tag AUC report")
    sp.add_argument("docs")
    sp.add_argument("--model", required=True)
    sp.add_argument("--partition")
    sp.add_argument("--split", default="test")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", help="tag files or directories")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--model", required=True)
    sp.add_argument("--top-k", type=int, default=5)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--format", choices=["text", "records"], default="text")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("bench", help="prediction throughput")
    sp.add_argument("docs")
    sp.add_argument("--model", required=True)
    sp.add_argument("--repetitions", type=int, default=3)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("export-embedding", help="2-D projection of the character embedding")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_export_embedding)

    sp = sub.add_parser("sample", help="sample files per extension for validation")
    sp.add_argument("root")
    sp.add_argument("--extensions", nargs="+", default=DEFAULT_EXTENSIONS)
    sp.add_argument("--n-per-ext", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("serve-validation", help="run the human-validation service")
    sp.add_argument("--manifest")
    sp.add_argument("--model")
    sp.add_argument("--session-dir", required=True)
    sp.add_argument("--top-k", type=int, default=5)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8008)
    sp.set_defaults(func=cmd_serve_validation)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (OSError, BundleError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
