"""Quintuplet derivation, negative sampling and dataset assembly.

A quintuplet condenses two or three connected triplets into one record,
e.g. (company, supplies, product, to, company).  Positives are derived by
relational joins over the graph; negatives are produced by corrupting a
positive (entity replacement or direction inversion) under a strict
non-connection rule so that no negative is actually derivable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .kg import EntityKind, KnowledgeGraph, RelationKind
from .seeding import derive_seed

MAX_DRAWS_PER_STRATEGY = 1000


class QuintupletKind(Enum):
    SUPPLIES_PRODUCT_TO = "supply"
    WITH_CERT_HAS_PRODUCT = "cert"


class CorruptionStrategy(Enum):
    REPLACE_E1 = "replace_e1"
    REPLACE_E2 = "replace_e2"
    REPLACE_E3 = "replace_e3"
    INVERT_DIRECTION = "invert_direction"


#: entity kinds required at (e1, e2, e3) per quintuplet kind
KIND_SIGNATURES = {
    QuintupletKind.SUPPLIES_PRODUCT_TO: (EntityKind.COMPANY, EntityKind.PRODUCT, EntityKind.COMPANY),
    QuintupletKind.WITH_CERT_HAS_PRODUCT: (EntityKind.COMPANY, EntityKind.CERTIFICATE, EntityKind.PRODUCT),
}


@dataclass(frozen=True)
class Quintuplet:
    kind: QuintupletKind
    e1: str
    e2: str
    e3: str

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.kind.value, self.e1, self.e2, self.e3)


@dataclass(frozen=True)
class LabeledQuintuplet:
    quintuplet: Quintuplet
    label: int  # 1 positive, 0 negative
    provenance: str  # "derived" or "corrupted:<strategy>"

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if (self.label == 1) != (self.provenance == "derived"):
            raise ValueError(
                f"label {self.label} is inconsistent with provenance {self.provenance!r}"
            )


@dataclass(frozen=True)
class SplitRatios:
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2

    def __post_init__(self):
        for frac in (self.train, self.val, self.test):
            if not 0.0 < frac < 1.0:
                raise ValueError(f"split fractions must lie in (0,1), got {self!r}")
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {self!r}")


class SplitError(ValueError):
    """Dataset too small to split."""


def derive_supply(graph: KnowledgeGraph) -> set[Quintuplet]:
    """All (A, P, B) with A has_product P, P purchased_by B and A supplies_to B."""
    out: set[Quintuplet] = set()
    for a in graph.entities_of_kind(EntityKind.COMPANY):
        buyers = graph.neighbors(a, RelationKind.SUPPLIES_TO, "forward")
        if not buyers:
            continue
        for p in graph.neighbors(a, RelationKind.HAS_PRODUCT, "forward"):
            for b in graph.neighbors(p, RelationKind.PURCHASED_BY, "forward"):
                if b in buyers and b != a:
                    out.add(Quintuplet(QuintupletKind.SUPPLIES_PRODUCT_TO, a, p, b))
    return out


def derive_cert(graph: KnowledgeGraph) -> set[Quintuplet]:
    """All (A, C, P) with A has_cert C and A has_product P."""
    out: set[Quintuplet] = set()
    for a in graph.entities_of_kind(EntityKind.COMPANY):
        certs = graph.neighbors(a, RelationKind.HAS_CERT, "forward")
        if not certs:
            continue
        products = graph.neighbors(a, RelationKind.HAS_PRODUCT, "forward")
        for c in certs:
            for p in products:
                out.add(Quintuplet(QuintupletKind.WITH_CERT_HAS_PRODUCT, a, c, p))
    return out


def derive(graph: KnowledgeGraph, kind: QuintupletKind) -> set[Quintuplet]:
    if kind is QuintupletKind.SUPPLIES_PRODUCT_TO:
        return derive_supply(graph)
    return derive_cert(graph)


def valid_strategies(kind: QuintupletKind) -> tuple[CorruptionStrategy, ...]:
    """Inversion is type-sound only for the supply kind."""
    if kind is QuintupletKind.SUPPLIES_PRODUCT_TO:
        return (CorruptionStrategy.REPLACE_E1, CorruptionStrategy.REPLACE_E2,
                CorruptionStrategy.REPLACE_E3, CorruptionStrategy.INVERT_DIRECTION)
    return (CorruptionStrategy.REPLACE_E1, CorruptionStrategy.REPLACE_E2,
            CorruptionStrategy.REPLACE_E3)


def corrupt(
    q: Quintuplet,
    graph: KnowledgeGraph,
    positives: set[Quintuplet],
    strategy: CorruptionStrategy,
    rng: np.random.Generator,
) -> Quintuplet | None:
    """One negative of the same kind as ``q``, or None if no candidate exists.

    A replacement entity is accepted only if the corrupted quintuplet is
    not a positive and the replacement shares no triplet (any relation,
    either direction) with the two retained entities.  Draws are uniform
    over the same-kind entity pool, capped at MAX_DRAWS_PER_STRATEGY.
    """
    if q not in positives:
        raise ValueError("corrupt() requires a member of the positive set")
    if strategy not in valid_strategies(q.kind):
        raise ValueError(f"{strategy} is not valid for kind {q.kind}")

    if strategy is CorruptionStrategy.INVERT_DIRECTION:
        inverted = Quintuplet(q.kind, q.e3, q.e2, q.e1)
        return None if inverted in positives else inverted

    slot = {CorruptionStrategy.REPLACE_E1: 0,
            CorruptionStrategy.REPLACE_E2: 1,
            CorruptionStrategy.REPLACE_E3: 2}[strategy]
    entities = (q.e1, q.e2, q.e3)
    retained = tuple(e for i, e in enumerate(entities) if i != slot)
    pool = graph.entities_of_kind(KIND_SIGNATURES[q.kind][slot])
    if len(pool) <= 1:
        return None

    for _ in range(MAX_DRAWS_PER_STRATEGY):
        cand = pool[int(rng.integers(len(pool)))]
        if cand in entities:
            continue
        if graph.linked(cand, retained[0]) or graph.linked(cand, retained[1]):
            continue
        parts = list(entities)
        parts[slot] = cand
        candidate = Quintuplet(q.kind, *parts)
        if candidate in positives:
            continue
        return candidate
    return None


@dataclass
class DatasetBuild:
    """Shuffled labeled records plus warnings for positives left unpaired."""

    records: list[LabeledQuintuplet]
    warnings: list[str]

    def __iter__(self) -> Iterator[LabeledQuintuplet]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def build_dataset(
    positives: set[Quintuplet],
    graph: KnowledgeGraph,
    seed: int,
) -> DatasetBuild:
    """Pair every positive with exactly one negative and shuffle.

    The corruption strategy is drawn uniformly among the kind's valid
    strategies, falling back to the remaining strategies in random order
    when one yields no candidate.  Randomness is keyed per positive, so
    the output is independent of iteration or scheduling order.
    """
    if not positives:
        raise ValueError("build_dataset requires a non-empty positive set")

    records: list[LabeledQuintuplet] = []
    warnings: list[str] = []
    for q in sorted(positives, key=Quintuplet.sort_key):
        records.append(LabeledQuintuplet(q, 1, "derived"))
        child = np.random.default_rng(derive_seed(seed, "corrupt", *q.sort_key()))
        negative = None
        used = None
        strategies = list(valid_strategies(q.kind))
        for idx in child.permutation(len(strategies)):
            strategy = strategies[int(idx)]
            negative = corrupt(q, graph, positives, strategy, child)
            if negative is not None:
                used = strategy
                break
        if negative is None:
            warnings.append(f"no negative candidate for positive {q.sort_key()}")
        else:
            records.append(LabeledQuintuplet(negative, 0, f"corrupted:{used.value}"))

    order = np.random.default_rng(derive_seed(seed, "shuffle")).permutation(len(records))
    return DatasetBuild([records[int(i)] for i in order], warnings)


def split(
    dataset: Sequence[LabeledQuintuplet],
    ratios: SplitRatios,
    seed: int,
) -> tuple[list[LabeledQuintuplet], list[LabeledQuintuplet], list[LabeledQuintuplet]]:
    """Global shuffle, then contiguous cuts at floor(n*train) and floor(n*(train+val))."""
    n = len(dataset)
    if n < 10:
        raise SplitError(f"dataset of {n} records is too small to split")
    order = np.random.default_rng(derive_seed(seed, "split")).permutation(n)
    shuffled = [dataset[int(i)] for i in order]
    # the 1e-9 nudge keeps float sums like 0.7+0.1 from flooring one short
    cut1 = int(np.floor(n * ratios.train + 1e-9))
    cut2 = int(np.floor(n * (ratios.train + ratios.val) + 1e-9))
    return shuffled[:cut1], shuffled[cut1:cut2], shuffled[cut2:]


# -- labeled dataset file format ------------------------------------------

DATASET_FILE_HEADER = ["kind", "e1", "e2", "e3", "label", "provenance"]


def dataset_to_csv(records: Iterable[LabeledQuintuplet]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DATASET_FILE_HEADER)
    for r in records:
        q = r.quintuplet
        w.writerow([q.kind.value, q.e1, q.e2, q.e3,
                    "positive" if r.label == 1 else "negative", r.provenance])
    return buf.getvalue()


def dataset_from_csv(text: str) -> list[LabeledQuintuplet]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != DATASET_FILE_HEADER:
        raise ValueError(f"bad dataset file header: {header!r}")
    out = []
    for row in reader:
        if not row:
            continue
        kind, e1, e2, e3, label, provenance = row
        out.append(LabeledQuintuplet(
            Quintuplet(QuintupletKind(kind), e1, e2, e3),
            1 if label == "positive" else 0,
            provenance,
        ))
    return out


def save_dataset(path, records: Iterable[LabeledQuintuplet]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(records))


def load_dataset(path) -> list[LabeledQuintuplet]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return dataset_from_csv(fh.read())
