"""Command-line interface.

Subcommands cover the whole workflow: synthetic data generation, CSV
validation, graph construction, embedding training, the four prediction
pipelines, score evaluation, report comparison, and the one-shot
``reproduce`` comparison. Exit codes: 0 success, 1 data error, 2 config
error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import ingest, learn, pipeline, skipgram, walks
from .errors import ConfigError, DataError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetlink",
        description="Heterogeneous-graph link prediction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", default="out", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("generate", help="write a synthetic trials CSV")
    common(p)

    p = sub.add_parser("ingest", help="validate a trials CSV, write a summary")
    p.add_argument("--csv", required=True)
    common(p, seed=False)

    p = sub.add_parser("build-graph", help="build one graph representation")
    p.add_argument("kind", choices=("knowledge", "binodal", "constituent"))
    p.add_argument("--csv", required=True)
    common(p, seed=False)

    p = sub.add_parser("embed", help="train metapath skip-gram embeddings")
    p.add_argument("--csv", required=True)
    p.add_argument("--metapaths", help="metapath file, one per line")
    common(p)

    p = sub.add_parser("train", help="run one prediction pipeline")
    p.add_argument("method", choices=("metapath", "hinsage", "kernel", "array"))
    p.add_argument("--csv", required=True)
    p.add_argument("--classifier", default="logreg",
                   choices=pipeline.CLASSIFIERS)
    p.add_argument("--target-ae", help="adverse event for the kernel pipeline")
    common(p)

    p = sub.add_parser("evaluate", help="ROC/AUC from a score\\tlabel TSV")
    p.add_argument("--scores", required=True)
    common(p, seed=False)

    p = sub.add_parser("compare", help="aggregate run reports into a table")
    p.add_argument("--reports", nargs="+", required=True)
    common(p, seed=False)

    p = sub.add_parser("reproduce",
                       help="full synthetic-data comparison, all methods")
    p.add_argument("--seeds", default="1,2,3",
                   help="comma-separated run seeds")
    p.add_argument("--parallel-runs", action="store_true",
                   help="run seeds in separate processes")
    common(p, seed=False)
    return parser


def _load_records(path: str):
    records = ingest.parse_trials_csv(path)
    if not records:
        raise DataError(f"{path}: no data rows")
    return records


def _cmd_generate(args) -> None:
    if args.config:
        config = ingest.load_synthetic_config(args.config)
    else:
        config = ingest.SyntheticConfig()
    if args.seed is not None:
        import dataclasses
        config = dataclasses.replace(config, seed=args.seed)
    records = ingest.generate_synthetic(config)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "trials.csv")
    ingest.write_trials_csv(records, csv_path)
    ingest.save_synthetic_config(config, os.path.join(args.out, "synthetic.cfg"))
    print(f"wrote {len(records)} trials to {csv_path}")


def _cmd_ingest(args) -> None:
    records = _load_records(args.csv)
    cond = ingest.condition_split(records)
    drug = ingest.drug_split(records)
    nonzero = np.mean([
        f > 0 for rec in records for f in rec.adverse_events.values()
    ])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "summary.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("key\tvalue\n")
        fh.write(f"records\t{len(records)}\n")
        fh.write(f"adverse_events\t{len(records[0].adverse_events)}\n")
        fh.write(f"conditions\t{len(cond.keywords)}\n")
        fh.write(f"specific_conditions\t{len(cond.specifics)}\n")
        fh.write(f"drugs\t{len(drug.keywords)}\n")
        fh.write(f"specific_drugs\t{len(drug.specifics)}\n")
        fh.write(f"nonzero_fraction_rate\t{nonzero!r}\n")
    print(f"wrote {path}")


def _cmd_build_graph(args) -> None:
    records = _load_records(args.csv)
    os.makedirs(args.out, exist_ok=True)
    if args.kind == "knowledge":
        graph = ingest.build_knowledge_graph(
            records, ingest.condition_split(records), ingest.drug_split(records)
        )
        graph.save(os.path.join(args.out, "knowledge"))
        print(f"knowledge graph: {graph.n_nodes} nodes, {graph.n_edges} edges")
    elif args.kind == "binodal":
        graph = ingest.build_binodal_graph(records)
        graph.save(os.path.join(args.out, "binodal"))
        print(f"binodal graph: {graph.n_nodes} nodes, {graph.n_edges} edges")
    else:
        knowledge = ingest.build_knowledge_graph(
            records, ingest.condition_split(records), ingest.drug_split(records)
        )
        base = os.path.join(args.out, "constituent")
        graphs = ingest.build_constituent_graphs(knowledge, records)
        for nct_id, graph in graphs:
            graph.save(os.path.join(base, nct_id))
        print(f"wrote {len(graphs)} constituent graphs under {base}")


def _cmd_embed(args) -> None:
    config = pipeline.load_pipeline_config(args.config)
    records = _load_records(args.csv)
    graph = ingest.build_knowledge_graph(
        records, ingest.condition_split(records), ingest.drug_split(records)
    )
    metapaths = (walks.parse_metapaths(args.metapaths)
                 if args.metapaths else walks.DEFAULT_METAPATHS)
    corpus = walks.generate_corpus(graph, metapaths,
                                   config.walk_config(args.seed))
    table = skipgram.train_embeddings(corpus, config.skipgram_config(args.seed))
    os.makedirs(args.out, exist_ok=True)
    corpus.save(os.path.join(args.out, "corpus.txt"))
    path = os.path.join(args.out, "embeddings.tsv")
    table.save(path)
    print(f"wrote {path} ({table.input_vectors.shape[0]} nodes, dim {table.dim})")


def _cmd_train(args) -> None:
    config = pipeline.load_pipeline_config(args.config)
    records = _load_records(args.csv)
    graph = ingest.build_knowledge_graph(
        records, ingest.condition_split(records), ingest.drug_split(records)
    )
    os.makedirs(args.out, exist_ok=True)
    seed = args.seed
    # hinsage and kernel carry fixed heads; --classifier applies elsewhere
    head = {"hinsage": "gnn", "kernel": "svm"}.get(args.method, args.classifier)
    stem = f"{args.method}_{head}_seed{seed}"
    roc_path = os.path.join(args.out, f"roc_{stem}.tsv")

    if args.method == "kernel":
        constituent = ingest.build_constituent_graphs(graph, records)
        target = args.target_ae or pipeline.target_adverse_events(records, 1)[0]
        report = pipeline.run_kernel_pipeline(constituent, target, config,
                                              seed, roc_path=roc_path)
    else:
        split = pipeline.split_edges(graph, ingest.EXPRESSES,
                                     config.test_frac, config.train_frac, seed)
        if args.method == "metapath":
            report = pipeline.run_metapath_pipeline(
                graph, split, config, args.classifier, seed, roc_path=roc_path)
        elif args.method == "array":
            report = pipeline.run_array_pipeline(
                records, split, config, args.classifier, seed, roc_path=roc_path)
        else:
            binodal = ingest.build_binodal_graph(records)
            report = pipeline.run_hinsage_pipeline(binodal, split, config,
                                                   seed, roc_path=roc_path)
    report_path = os.path.join(args.out, f"report_{stem}.tsv")
    report.save(report_path)
    print(f"{report.method} ({report.classifier}) seed {seed}: "
          f"AUC {report.auc:.3f} -> {report_path}")


def _cmd_evaluate(args) -> None:
    scores, labels = [], []
    with open(args.scores, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["score", "label"]:
            raise DataError(f"{args.scores}: expected 'score\\tlabel' header")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{args.scores}:{lineno}: expected two fields")
            try:
                scores.append(float(parts[0]))
                labels.append(int(parts[1]))
            except ValueError:
                raise DataError(
                    f"{args.scores}:{lineno}: unparseable score/label"
                ) from None
    summary = learn.roc_auc(scores, labels)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "roc.tsv")
    summary.save(path)
    print(f"AUC {summary.auc!r} -> {path}")


def _cmd_compare(args) -> None:
    reports = [pipeline.RunReport.load(path) for path in args.reports]
    table = pipeline.compare_report(reports)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "comparison.tsv")
    table.save(path)
    print(f"wrote {path}")


def _cmd_reproduce(args) -> None:
    config = pipeline.load_pipeline_config(args.config)
    try:
        seeds = tuple(int(s) for s in args.seeds.split(","))
    except ValueError:
        raise ConfigError(f"bad --seeds value: {args.seeds!r}") from None
    table = pipeline.reproduce(config, seeds=seeds, out_dir=args.out,
                               parallel_runs=args.parallel_runs)
    for row in table.rows:
        sd = "" if row["sd"] is None else f" +/- {row['sd']:.3f}"
        print(f"{row['method']:28s} {row['classifier']:8s} "
              f"mean AUC {row['mean']:.3f}{sd}")
    print(f"full table: {os.path.join(args.out, 'comparison.tsv')}")


_COMMANDS = {
    "generate": _cmd_generate,
    "ingest": _cmd_ingest,
    "build-graph": _cmd_build_graph,
    "embed": _cmd_embed,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "compare": _cmd_compare,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
