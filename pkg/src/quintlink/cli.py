"""Command-line entry points for the experiment pipeline.

Stage commands (ingest, derive, sample, embed, train, evaluate) chain
through files so each step can be inspected; bench runs the whole
benchmark matrix in one go.  Every command takes --config/--seed/--out.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, experiment_config, load_config_file
from .embedding import EmbeddingCache
from .kg import EntityKind, graph_records, load_graph, save_records
from .metrics import REPORT_HEADER, format_report_row
from .models import Architecture, build_model, load_model, predict, save_model, train
from .pipeline import (
    BaselineFeaturizer,
    featurize,
    make_featurizer,
    run_benchmark_matrix,
)
from .quintuplets import (
    LabeledQuintuplet,
    build_dataset,
    derive,
    load_dataset,
    save_dataset,
    split,
)
from .seeding import derive_seed
from .metrics import evaluate as evaluate_metrics


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("runs"), help="output directory")

    parser = argparse.ArgumentParser(prog="quintlink", description=__doc__)
    parser.add_argument("--version", action="version", version=f"quintlink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate a triplet CSV into a graph")
    p.add_argument("triplets", type=Path, help="triplet CSV file")

    sub.add_parser("synth", parents=[common], help="generate synthetic per-country triplet files")

    p = sub.add_parser("derive", parents=[common], help="derive positive quintuplets from a graph")
    p.add_argument("--graph", type=Path, required=True)

    p = sub.add_parser("sample", parents=[common],
                       help="balance positives with negatives and split train/val/test")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--positives", type=Path, required=True)

    p = sub.add_parser("embed", parents=[common], help="embed a labeled dataset into features")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--embedder", help="embedder name (default: first configured)")

    p = sub.add_parser("train", parents=[common], help="train one architecture on features")
    p.add_argument("--train-features", type=Path, required=True)
    p.add_argument("--val-features", type=Path, required=True)
    p.add_argument("--arch", required=True, choices=[a.value for a in Architecture])

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a checkpoint on test features")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--dataset-label", default="dataset")
    p.add_argument("--embedder-label", default="")

    sub.add_parser("bench", parents=[common], help="run the full benchmark matrix")
    return parser


def _load_experiment(args):
    values = load_config_file(args.config) if args.config else {}
    return experiment_config(values, seed=args.seed)


def _outdir(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def cmd_ingest(args) -> int:
    graph = load_graph(args.triplets)
    out = _outdir(args) / f"{args.triplets.stem}.normalized.csv"
    save_records(out, graph_records(graph))
    kinds = {k: len(graph.entities_of_kind(k)) for k in EntityKind}
    print(f"ingested {args.triplets}: "
          + ", ".join(f"{n.value}s={c}" for n, c in kinds.items())
          + f", triplets={len(graph.triplets)}")
    print(f"wrote {out}")
    return 0


def cmd_synth(args) -> int:
    config = _load_experiment(args)
    out = _outdir(args) / "partitions"
    out.mkdir(parents=True, exist_ok=True)
    from .pipeline import RunManifest, config_to_dict
    from .synthgen import generate_partitions

    synth = replace(config.synth, seed=derive_seed(config.seed, "synth"))
    partitions = generate_partitions(synth, config.partitions)
    for country, graph in partitions.items():
        path = out / f"{country}.csv"
        save_records(path, graph_records(graph))
        print(f"wrote {path} ({len(graph.triplets)} triplets)")
    manifest = RunManifest(config=config_to_dict(config), seed=config.seed)
    manifest.stage_seeds["synth"] = synth.seed
    manifest_path = args.out / "manifest.json"
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {manifest_path}")
    return 0


def cmd_derive(args) -> int:
    config = _load_experiment(args)
    graph = load_graph(args.graph)
    out = _outdir(args)
    for kind in config.kinds:
        positives = sorted(derive(graph, kind), key=lambda q: q.sort_key())
        path = out / f"{args.graph.stem}.positives.{kind.value}.csv"
        save_dataset(path, [LabeledQuintuplet(q, 1, "derived") for q in positives])
        print(f"wrote {path} ({len(positives)} positives)")
    return 0


def cmd_sample(args) -> int:
    config = _load_experiment(args)
    graph = load_graph(args.graph)
    positives = {r.quintuplet for r in load_dataset(args.positives)}
    build = build_dataset(positives, graph, derive_seed(config.seed, "negatives"))
    for warning in build.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    parts = split(build.records, config.ratios, derive_seed(config.seed, "split"))
    out = _outdir(args)
    for name, records in zip(("train", "val", "test"), parts):
        path = out / f"{args.positives.stem}.{name}.csv"
        save_dataset(path, records)
        print(f"wrote {path} ({len(records)} records)")
    return 0


def cmd_embed(args) -> int:
    config = _load_experiment(args)
    graph = load_graph(args.graph)
    records = load_dataset(args.dataset)
    if not records:
        raise ConfigError(f"{args.dataset} holds no records")
    name = args.embedder or config.embedders[0]
    featurizer = make_featurizer(name, config.endpoint)
    out = _outdir(args)
    cache = None
    if not isinstance(featurizer, BaselineFeaturizer):
        cache = EmbeddingCache(out / "cache.bin")
    kind = records[0].quintuplet.kind
    x, y = featurize(records, featurizer, cache, config.template_for(kind), graph.entities)
    path = out / f"{args.dataset.stem}.{name}.npz"
    np.savez(path, features=x, labels=y)
    print(f"wrote {path} ({x.shape[0]}x{x.shape[1]})")
    return 0


def cmd_train(args) -> int:
    config = _load_experiment(args)
    train_npz = np.load(args.train_features)
    val_npz = np.load(args.val_features)
    arch = Architecture(args.arch)
    train_config = replace(config.train, seed=derive_seed(config.seed, "train", arch.value))
    model = build_model(arch, train_npz["features"].shape[1], seed=train_config.seed)
    history = train(model, (train_npz["features"], train_npz["labels"]),
                    (val_npz["features"], val_npz["labels"]), train_config)
    out = _outdir(args)
    model_path = out / f"{args.train_features.stem}.{arch.value}.qlck"
    save_model(model_path, model)
    history_path = out / f"{args.train_features.stem}.{arch.value}.history.csv"
    history_path.write_text(history.to_csv(), encoding="utf-8")
    print(f"wrote {model_path} (stopped at epoch {history.stop_epoch}: {history.stop_reason}, "
          f"best epoch {history.best_epoch})")
    print(f"wrote {history_path}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    npz = np.load(args.features)
    _, labels = predict(model, npz["features"])
    report = evaluate_metrics(labels, npz["labels"])
    print(REPORT_HEADER)
    print(format_report_row(args.dataset_label, model.arch.value,
                            args.embedder_label, report))
    return 0


def cmd_bench(args) -> int:
    config = _load_experiment(args)
    out = _outdir(args)
    cache = EmbeddingCache(out / "cache.bin")
    for path in run_benchmark_matrix(config, out, cache=cache):
        print(f"wrote {path}")
    return 0


_HANDLERS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "derive": cmd_derive,
    "sample": cmd_sample,
    "embed": cmd_embed,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
