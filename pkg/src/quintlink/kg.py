"""Typed supply-chain knowledge graph.

Entities are companies, products and certificates; triplets are typed
edges between them.  A graph is built once by :func:`ingest_triplets`
(or loaded from the CSV triplet format) and is immutable afterwards, so
it can be shared freely across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping


class EntityKind(Enum):
    COMPANY = "company"
    PRODUCT = "product"
    CERTIFICATE = "certificate"


class RelationKind(Enum):
    HAS_PRODUCT = "has_product"
    HAS_CERT = "has_cert"
    SUPPLIES_TO = "supplies_to"
    PURCHASED_BY = "purchased_by"


#: Fixed (head-kind, tail-kind) signature of each relation.
RELATION_SIGNATURES: Mapping[RelationKind, tuple[EntityKind, EntityKind]] = MappingProxyType({
    RelationKind.HAS_PRODUCT: (EntityKind.COMPANY, EntityKind.PRODUCT),
    RelationKind.HAS_CERT: (EntityKind.COMPANY, EntityKind.CERTIFICATE),
    RelationKind.SUPPLIES_TO: (EntityKind.COMPANY, EntityKind.COMPANY),
    RelationKind.PURCHASED_BY: (EntityKind.PRODUCT, EntityKind.COMPANY),
})

_ID_PREFIX = {
    EntityKind.COMPANY: "c",
    EntityKind.PRODUCT: "p",
    EntityKind.CERTIFICATE: "t",
}

TRIPLET_FILE_HEADER = ["head_name", "head_kind", "relation", "tail_name", "tail_kind", "country"]


class IngestError(ValueError):
    """A record violates the ingestion contract (bad signature, empty name...)."""


class UnknownEntityError(KeyError):
    """Lookup of an entity id that is not in the catalog."""


@dataclass(frozen=True)
class Entity:
    """One node of the graph.  ``country`` is set for companies only."""

    id: str
    kind: EntityKind
    name: str
    country: str | None = None


@dataclass(frozen=True)
class Triplet:
    head: str
    relation: RelationKind
    tail: str


# sort key used wherever triplets need a deterministic order
def _triplet_key(t: Triplet) -> tuple[str, str, str]:
    return (t.relation.value, t.head, t.tail)


@dataclass(frozen=True)
class TripletRecord:
    """One raw ingestion record, pre-graph.  ``country`` applies to the head."""

    head_name: str
    head_kind: EntityKind
    relation: RelationKind
    tail_name: str
    tail_kind: EntityKind
    country: str | None = None


class KnowledgeGraph:
    """Immutable entity catalog + triplet store with adjacency indices."""

    def __init__(self, entities: Iterable[Entity], triplets: Iterable[Triplet]):
        catalog: dict[str, Entity] = {}
        for ent in entities:
            if ent.id in catalog:
                raise IngestError(f"duplicate entity id {ent.id!r}")
            if not ent.name:
                raise IngestError(f"entity {ent.id!r} has an empty name")
            if ent.country is not None and ent.kind is not EntityKind.COMPANY:
                raise IngestError(f"entity {ent.id!r}: only companies may carry a country")
            catalog[ent.id] = ent

        store: set[Triplet] = set()
        fwd: dict[RelationKind, dict[str, set[str]]] = {r: {} for r in RelationKind}
        rev: dict[RelationKind, dict[str, set[str]]] = {r: {} for r in RelationKind}
        for t in triplets:
            head_kind, tail_kind = RELATION_SIGNATURES[t.relation]
            if t.head not in catalog or t.tail not in catalog:
                raise IngestError(f"triplet {t} references an unknown entity id")
            if catalog[t.head].kind is not head_kind or catalog[t.tail].kind is not tail_kind:
                raise IngestError(f"triplet {t} violates the {t.relation.value} signature")
            if t in store:
                continue
            store.add(t)
            fwd[t.relation].setdefault(t.head, set()).add(t.tail)
            rev[t.relation].setdefault(t.tail, set()).add(t.head)

        self._entities = MappingProxyType(catalog)
        self._triplets = frozenset(store)
        self._sorted_triplets = tuple(sorted(store, key=_triplet_key))
        self._fwd = {r: {h: frozenset(ts) for h, ts in m.items()} for r, m in fwd.items()}
        self._rev = {r: {t: frozenset(hs) for t, hs in m.items()} for r, m in rev.items()}

        # undirected, relation-agnostic adjacency, used by the corruption rule
        linked: dict[str, set[str]] = {}
        for t in store:
            linked.setdefault(t.head, set()).add(t.tail)
            linked.setdefault(t.tail, set()).add(t.head)
        self._linked = {e: frozenset(n) for e, n in linked.items()}

        by_kind: dict[EntityKind, list[str]] = {k: [] for k in EntityKind}
        for eid in sorted(catalog):
            by_kind[catalog[eid].kind].append(eid)
        self._by_kind = {k: tuple(v) for k, v in by_kind.items()}

    # -- catalog ---------------------------------------------------------

    @property
    def entities(self) -> Mapping[str, Entity]:
        return self._entities

    @property
    def triplets(self) -> frozenset[Triplet]:
        return self._triplets

    def sorted_triplets(self) -> tuple[Triplet, ...]:
        """Triplets in a deterministic (relation, head, tail) order."""
        return self._sorted_triplets

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise UnknownEntityError(entity_id) from None

    def entities_of_kind(self, kind: EntityKind) -> tuple[str, ...]:
        """Ids of all entities of ``kind``, sorted for determinism."""
        return self._by_kind[kind]

    def __len__(self) -> int:
        return len(self._entities)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (dict(self._entities) == dict(other._entities)
                and self._triplets == other._triplets)

    # -- queries ---------------------------------------------------------

    def has_triplet(self, head: str, relation: RelationKind, tail: str) -> bool:
        return Triplet(head, relation, tail) in self._triplets

    def neighbors(self, entity_id: str, relation: RelationKind,
                  direction: str = "forward") -> frozenset[str]:
        """Tails of ``(entity, relation, *)`` (forward) or heads of ``(*, relation, entity)``."""
        if entity_id not in self._entities:
            raise UnknownEntityError(entity_id)
        if direction == "forward":
            return self._fwd[relation].get(entity_id, frozenset())
        if direction == "reverse":
            return self._rev[relation].get(entity_id, frozenset())
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")

    def linked(self, a: str, b: str) -> bool:
        """True if any triplet, of any relation and either direction, joins a and b."""
        return b in self._linked.get(a, frozenset())


def ingest_triplets(records: Iterable[TripletRecord | tuple]) -> KnowledgeGraph:
    """Build a graph from raw records, deduplicating entities by (name, kind).

    Entity ids are assigned in order of first appearance, so ingesting the
    same records twice yields an identical graph.  Duplicate triplets are
    collapsed silently; contract violations raise :class:`IngestError`
    naming the offending record.
    """
    ids: dict[tuple[str, EntityKind], str] = {}
    entities: dict[str, Entity] = {}
    counters = {k: 0 for k in EntityKind}
    triplets: list[Triplet] = []

    def intern(name: str, kind: EntityKind, country: str | None, rec) -> str:
        if not name:
            raise IngestError(f"empty entity name in record {rec!r}")
        key = (name, kind)
        if key not in ids:
            eid = f"{_ID_PREFIX[kind]}{counters[kind]}"
            counters[kind] += 1
            ids[key] = eid
            entities[eid] = Entity(
                eid, kind, name, country if kind is EntityKind.COMPANY else None
            )
        elif kind is EntityKind.COMPANY and country:
            eid = ids[key]
            known = entities[eid].country
            if known is None:
                entities[eid] = Entity(eid, kind, name, country)
            elif known != country:
                raise IngestError(
                    f"company {name!r} listed under two countries: {known!r} and {country!r}"
                )
        return ids[key]

    for rec in records:
        if not isinstance(rec, TripletRecord):
            rec = TripletRecord(*rec)
        head_kind, tail_kind = RELATION_SIGNATURES[rec.relation]
        if rec.head_kind is not head_kind or rec.tail_kind is not tail_kind:
            raise IngestError(
                f"record {rec!r} violates the {rec.relation.value} signature "
                f"({head_kind.value} -> {tail_kind.value})"
            )
        country = rec.country.strip().upper() if rec.country else None
        head_id = intern(rec.head_name, rec.head_kind, country, rec)
        tail_id = intern(rec.tail_name, rec.tail_kind, None, rec)
        triplets.append(Triplet(head_id, rec.relation, tail_id))

    return KnowledgeGraph(entities.values(), triplets)


def partition_by_country(graph: KnowledgeGraph) -> dict[str, KnowledgeGraph]:
    """Split a graph into self-contained per-country subgraphs.

    A partition holds the companies of that country, every triplet whose
    company endpoints all lie in the country, and the products and
    certificates those triplets reference.  Companies without a country
    are excluded from all partitions, and cross-country edges are dropped.
    """
    countries = sorted({e.country for e in graph.entities.values() if e.country})
    out: dict[str, KnowledgeGraph] = {}
    for country in countries:
        keep: list[Triplet] = []
        referenced: set[str] = set()
        for t in graph.sorted_triplets():
            ok = True
            for eid in (t.head, t.tail):
                ent = graph.entity(eid)
                if ent.kind is EntityKind.COMPANY and ent.country != country:
                    ok = False
                    break
            if ok:
                keep.append(t)
                referenced.update((t.head, t.tail))
        ents = [
            e for e in graph.entities.values()
            if (e.kind is EntityKind.COMPANY and e.country == country)
            or (e.kind is not EntityKind.COMPANY and e.id in referenced)
        ]
        ents.sort(key=lambda e: e.id)
        out[country] = KnowledgeGraph(ents, keep)
    return out


# -- triplet file format -------------------------------------------------

def records_to_csv(records: Iterable[TripletRecord]) -> str:
    """Serialize records to the canonical triplet CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIPLET_FILE_HEADER)
    for r in records:
        w.writerow([
            r.head_name, r.head_kind.value, r.relation.value,
            r.tail_name, r.tail_kind.value, r.country or "",
        ])
    return buf.getvalue()


def records_from_csv(text: str) -> Iterator[TripletRecord]:
    """Parse the canonical triplet CSV text; validates the header."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != TRIPLET_FILE_HEADER:
        raise IngestError(f"bad triplet file header: {header!r}")
    for row in reader:
        if not row:
            continue
        if len(row) != 6:
            raise IngestError(f"bad triplet row: {row!r}")
        head_name, head_kind, relation, tail_name, tail_kind, country = row
        try:
            yield TripletRecord(
                head_name, EntityKind(head_kind), RelationKind(relation),
                tail_name, EntityKind(tail_kind), country or None,
            )
        except ValueError as exc:
            raise IngestError(f"bad triplet row {row!r}: {exc}") from None


def graph_records(graph: KnowledgeGraph) -> list[TripletRecord]:
    """The graph's triplets as raw records in deterministic order."""
    records = []
    for t in graph.sorted_triplets():
        head = graph.entity(t.head)
        tail = graph.entity(t.tail)
        records.append(TripletRecord(head.name, head.kind, t.relation,
                                     tail.name, tail.kind, head.country))
    return records


def load_graph(path) -> KnowledgeGraph:
    """Read a triplet CSV file into a graph."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return ingest_triplets(records_from_csv(fh.read()))


def save_records(path, records: Iterable[TripletRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))
