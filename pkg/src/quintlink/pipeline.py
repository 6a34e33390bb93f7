"""End-to-end experiment orchestration and benchmark reports.

A run walks: data (files or synthetic partitions) -> positive quintuplets
-> balanced labeled dataset -> split -> verbalize+embed -> train ->
evaluate on the held-out test split.  One report row is produced per
(dataset, architecture, embedder) for each quintuplet kind, plus a
pivoted per-country table whose cells are "acc_bw/precision/recall".

Everything is keyed off one master seed via the documented stage-seed
scheme (see RunManifest.stage_seeds), so a (config, seed) pair fully
determines every report byte.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .embedding import EmbeddingCache, HashEmbedder, RemoteEmbedder, model_dim
from .kg import KnowledgeGraph, load_graph
from .metrics import REPORT_HEADER, MetricReport, evaluate as evaluate_metrics
from .models import Architecture, TrainConfig, build_model, predict, train
from .quintuplets import (
    LabeledQuintuplet,
    QuintupletKind,
    SplitRatios,
    build_dataset,
    derive,
    split,
)
from .seeding import derive_seed
from .synthgen import SynthConfig, generate_partitions
from .verbalize import Template, default_template
from .embedding import embed_dataset

BASELINE_FEATURE_SEED = 97


class StageError(RuntimeError):
    """Failure wrapped with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


def baseline_features(records: Sequence[LabeledQuintuplet], dim: int,
                      seed: int = BASELINE_FEATURE_SEED) -> np.ndarray:
    """Entity-identity features: signed hashing of (slot, entity id) pairs.

    Carries no name text at all, so it is the non-semantic benchmark the
    embedding features are compared against; L2-normalized to match the
    embedders' scale.
    """
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    out = np.zeros((len(records), dim), dtype=np.float64)
    for row, record in enumerate(records):
        q = record.quintuplet
        for slot, eid in (("e1", q.e1), ("e2", q.e2), ("e3", q.e3)):
            digest = hashlib.blake2b(f"{slot}:{eid}".encode("utf-8"),
                                     digest_size=9, key=key).digest()
            bucket = int.from_bytes(digest[:8], "little") % dim
            out[row, bucket] += 1.0 if digest[8] & 1 else -1.0
        norm = np.linalg.norm(out[row])
        if norm > 0.0:
            out[row] /= norm
    return out


class BaselineFeaturizer:
    """Featurizer-shaped wrapper so baselines slot into the embedder column."""

    def __init__(self, dim: int):
        self.dim = dim
        self.model_id = f"baseline-{dim}"


def make_featurizer(name: str, endpoint: str | None):
    if name.startswith("baseline-"):
        return BaselineFeaturizer(int(name.split("-", 1)[1]))
    if name.startswith("hash-"):
        return HashEmbedder(model_dim(name))
    if endpoint is None:
        raise ValueError(f"embedder {name!r} needs embedding.endpoint to be configured")
    return RemoteEmbedder(endpoint, name)


def featurize(records, featurizer, cache, template, entities):
    """(X, y) for a labeled dataset under either feature route."""
    if isinstance(featurizer, BaselineFeaturizer):
        y = np.array([r.label for r in records], dtype=np.int64)
        return baseline_features(records, featurizer.dim), y
    return embed_dataset(records, featurizer, cache, template, entities)


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "synth"  # "synth" | "files"
    data_path: str | None = None
    synth: SynthConfig = SynthConfig()
    partitions: int = 1
    kinds: tuple[QuintupletKind, ...] = (QuintupletKind.SUPPLIES_PRODUCT_TO,)
    embedders: tuple[str, ...] = ("hash-384",)
    architectures: tuple[Architecture, ...] = (Architecture.ANN,)
    train: TrainConfig = TrainConfig()
    ratios: SplitRatios = SplitRatios()
    templates: tuple[tuple[QuintupletKind, str], ...] = ()
    endpoint: str | None = None
    balanced_uniform: bool = False
    repeats: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.source not in ("synth", "files"):
            raise ValueError(f"data.source must be 'synth' or 'files', got {self.source!r}")
        if self.source == "files" and not self.data_path:
            raise ValueError("data.source=files requires data.path")
        if not self.kinds:
            raise ValueError("at least one quintuplet kind is required")
        if not self.embedders:
            raise ValueError("at least one embedder is required")
        if not self.architectures:
            raise ValueError("at least one architecture is required")
        if self.repeats < 1:
            raise ValueError("bench.repeats must be >= 1")

    def template_for(self, kind: QuintupletKind) -> Template:
        for k, pattern in self.templates:
            if k is kind:
                return Template(kind, pattern)
        return default_template(kind)


@dataclass
class RunManifest:
    """Everything needed to reproduce a run bit-for-bit (plus timings)."""

    config: dict
    seed: int
    version: str = __version__
    stage_seeds: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    seed_scheme: str = ("stage seeds are blake2b-derived from the master seed and the "
                        "stage key path; see quintlink.seeding.derive_seed")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True, default=str) + "\n"


@dataclass
class CellResult:
    dataset: str
    kind: QuintupletKind
    architecture: Architecture
    embedder: str
    report: MetricReport
    repeat_reports: list[MetricReport] = field(default_factory=list)


def load_datasets(config: ExperimentConfig) -> dict[str, KnowledgeGraph]:
    """Named graphs: synthetic partitions or triplet CSV file(s)."""
    if config.source == "synth":
        synth = replace(config.synth, seed=derive_seed(config.seed, "synth"))
        return generate_partitions(synth, config.partitions)
    path = Path(config.data_path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise ValueError(f"no .csv triplet files under {path}")
        return {f.stem: load_graph(f) for f in files}
    return {path.stem: load_graph(path)}


def _evaluate_cell(x_splits, y_splits, arch: Architecture, train_config: TrainConfig) -> MetricReport:
    (x_train, x_val, x_test) = x_splits
    (y_train, y_val, y_test) = y_splits
    model = build_model(arch, x_train.shape[1], seed=train_config.seed)
    train(model, (x_train, y_train), (x_val, y_val), train_config)
    _, labels = predict(model, x_test)
    return evaluate_metrics(labels, y_test)


def run_experiment(config: ExperimentConfig,
                   cache: EmbeddingCache | None = None) -> tuple[list[CellResult], RunManifest]:
    """Execute the full matrix; returns all cells plus the run manifest."""
    config.validate()
    manifest = RunManifest(config=config_to_dict(config), seed=config.seed)
    results: list[CellResult] = []

    def staged(stage: str, fn, *args, **kwargs):
        start = time.monotonic()
        try:
            out = fn(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - rewrapped with stage tag
            raise StageError(stage, exc) from exc
        manifest.timings[stage] = round(time.monotonic() - start, 3)
        return out

    datasets = staged("data", load_datasets, config)
    manifest.stage_seeds["synth"] = derive_seed(config.seed, "synth")

    for kind in config.kinds:
        template = config.template_for(kind)
        for name in sorted(datasets):
            graph = datasets[name]
            positives = staged(f"derive:{name}:{kind.value}", derive, graph, kind)
            if not positives:
                manifest.warnings.append(f"{name}:{kind.value}: no positives derived; skipped")
                continue
            neg_seed = derive_seed(config.seed, "negatives", name, kind.value)
            manifest.stage_seeds[f"negatives:{name}:{kind.value}"] = neg_seed
            build = staged(f"sample:{name}:{kind.value}", build_dataset, positives, graph, neg_seed)
            manifest.warnings.extend(f"{name}:{kind.value}: {w}" for w in build.warnings)
            split_seed = derive_seed(config.seed, "split", name, kind.value)
            manifest.stage_seeds[f"split:{name}:{kind.value}"] = split_seed
            try:
                parts = split(build.records, config.ratios, split_seed)
            except Exception as exc:
                raise StageError(f"split:{name}:{kind.value}", exc) from exc

            for embedder_name in config.embedders:
                stage = f"embed:{name}:{kind.value}:{embedder_name}"
                featurizer = staged(stage, make_featurizer, embedder_name, config.endpoint)
                xy = [staged(stage, featurize, part, featurizer, cache, template, graph.entities)
                      for part in parts]
                x_splits = tuple(x for x, _ in xy)
                y_splits = tuple(y for _, y in xy)
                for arch in config.architectures:
                    reports = []
                    for repeat in range(config.repeats):
                        train_seed = derive_seed(config.seed, "train", name, kind.value,
                                                 arch.value, embedder_name, repeat)
                        train_config = replace(config.train, seed=train_seed)
                        stage = f"train:{name}:{kind.value}:{arch.value}:{embedder_name}:{repeat}"
                        reports.append(staged(stage, _evaluate_cell, x_splits, y_splits,
                                              arch, train_config))
                    results.append(CellResult(name, kind, arch, embedder_name,
                                              reports[0], reports))
    return results, manifest


# -- report rendering ------------------------------------------------------

def _sorted_cells(cells: Iterable[CellResult]) -> list[CellResult]:
    return sorted(cells, key=lambda c: (c.dataset, c.architecture.value, c.embedder))


def render_long_report(cells: Sequence[CellResult], kind: QuintupletKind,
                       balanced_uniform: bool = False, repeats: int = 1) -> str:
    """Long-form CSV for one quintuplet kind, rows sorted by keys."""
    header = REPORT_HEADER
    if balanced_uniform:
        header += ",acc_balanced_uniform"  # uniform class weights; not a benchmark metric
    if repeats > 1:
        header += ",acc_bw_sd,repeats"
    lines = [header]
    for cell in _sorted_cells(c for c in cells if c.kind is kind):
        reports = cell.repeat_reports or [cell.report]
        bw = float(np.mean([r.balanced_accuracy_weighted for r in reports]))
        pre = float(np.mean([r.precision for r in reports]))
        rec = float(np.mean([r.recall for r in reports]))
        fw = float(np.mean([r.weighted_f_score for r in reports]))
        flags = sorted({f for r in reports for f in r.flags})
        row = ",".join([
            cell.dataset, cell.architecture.value, cell.embedder,
            f"{bw:.4f}", f"{pre:.4f}", f"{rec:.4f}", f"{fw:.4f}", ";".join(flags),
        ])
        if balanced_uniform:
            bu = float(np.mean([r.balanced_accuracy_uniform for r in reports]))
            row += f",{bu:.4f}"
        if repeats > 1:
            sd = float(np.std([r.balanced_accuracy_weighted for r in reports]))
            row += f",{sd:.4f},{len(reports)}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def pivot_cell(report: MetricReport) -> str:
    """The benchmark table's three-value cell, e.g. '0.9037/0.9063/0.9024'."""
    return (f"{report.balanced_accuracy_weighted:.4f}/"
            f"{report.precision:.4f}/{report.recall:.4f}")


def render_pivot(cells: Sequence[CellResult], kind: QuintupletKind, embedder: str,
                 architectures: Sequence[Architecture]) -> str:
    """Per-country table: rows are datasets, columns architectures."""
    lines = ["country," + ",".join(a.value for a in architectures)]
    selected = [c for c in cells if c.kind is kind and c.embedder == embedder]
    by_key = {(c.dataset, c.architecture): c for c in selected}
    for dataset in sorted({c.dataset for c in selected}):
        row = [dataset]
        for arch in architectures:
            cell = by_key.get((dataset, arch))
            row.append(pivot_cell(cell.report) if cell else "")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_reports(cells: Sequence[CellResult], config: ExperimentConfig,
                  out_dir, manifest: RunManifest) -> list[Path]:
    """Write per-kind long reports, per-(kind, embedder) pivots and the manifest.

    Any failure removes the files written so far, so a broken run leaves
    no partial outputs behind.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for kind in config.kinds:
            path = out / f"report_{kind.value}.csv"
            path.write_text(render_long_report(cells, kind, config.balanced_uniform,
                                               config.repeats), encoding="utf-8")
            written.append(path)
            for embedder in config.embedders:
                pivot = out / f"pivot_{kind.value}_{embedder}.csv"
                pivot.write_text(render_pivot(cells, kind, embedder, config.architectures),
                                 encoding="utf-8")
                written.append(pivot)
        manifest_path = out / "manifest.json"
        manifest_path.write_text(manifest.to_json(), encoding="utf-8")
        written.append(manifest_path)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def run_benchmark_matrix(config: ExperimentConfig, out_dir,
                         cache: EmbeddingCache | None = None) -> list[Path]:
    """run_experiment + all report files; returns the written paths."""
    cells, manifest = run_experiment(config, cache=cache)
    return write_reports(cells, config, out_dir, manifest)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Flat key-value view of a config (the manifest's resolved form)."""
    synth = config.synth
    flat = {
        "data.source": config.source,
        "data.path": config.data_path or "",
        "synth.companies": synth.companies,
        "synth.products": synth.products,
        "synth.certificates": synth.certificates,
        "synth.countries": synth.countries,
        "synth.industries": synth.industries,
        "synth.signal": synth.signal,
        "synth.partitions": config.partitions,
        "density.has_product": synth.densities.has_product,
        "density.has_cert": synth.densities.has_cert,
        "density.supplies_to": synth.densities.supplies_to,
        "density.purchased_by": synth.densities.purchased_by,
        "kinds": ",".join(k.value for k in config.kinds),
        "embedders": ",".join(config.embedders),
        "architectures": ",".join(a.value for a in config.architectures),
        "embedding.endpoint": config.endpoint or "",
        "train.batch_size": config.train.batch_size,
        "train.learning_rate": config.train.learning_rate,
        "train.max_epochs": config.train.max_epochs,
        "train.patience": config.train.patience,
        "split.train": config.ratios.train,
        "split.val": config.ratios.val,
        "split.test": config.ratios.test,
        "report.balanced_uniform": config.balanced_uniform,
        "bench.repeats": config.repeats,
        "seed": config.seed,
    }
    for kind, pattern in config.templates:
        flat[f"template.{kind.value}"] = pattern
    return flat
