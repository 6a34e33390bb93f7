"""Shared random-graph factories for property and oracle tests."""

from __future__ import annotations

import numpy as np
import pytest

from quintlink.kg import (
    EntityKind,
    KnowledgeGraph,
    RelationKind,
    TripletRecord,
    ingest_triplets,
)

RELATION_POOL = (
    RelationKind.HAS_PRODUCT,
    RelationKind.HAS_CERT,
    RelationKind.SUPPLIES_TO,
    RelationKind.PURCHASED_BY,
)


def random_records(rng: np.random.Generator, n_companies: int, n_products: int,
                   n_certs: int, n_edges: int, n_countries: int = 3) -> list[TripletRecord]:
    """Signature-correct random records over synthetic name pools."""
    companies = [f"Co{i}" for i in range(n_companies)]
    products = [f"Prod{i}" for i in range(n_products)]
    certs = [f"Cert{i}" for i in range(n_certs)]
    countries = [f"CTRY{i}" for i in range(n_countries)]

    def country_for(name: str) -> str:
        return countries[hash(name) % n_countries]

    records = []
    for _ in range(n_edges):
        relation = RELATION_POOL[int(rng.integers(len(RELATION_POOL)))]
        if relation is RelationKind.HAS_PRODUCT:
            head, tail = companies[int(rng.integers(n_companies))], products[int(rng.integers(n_products))]
            kinds = (EntityKind.COMPANY, EntityKind.PRODUCT)
            country = country_for(head)
        elif relation is RelationKind.HAS_CERT:
            head, tail = companies[int(rng.integers(n_companies))], certs[int(rng.integers(n_certs))]
            kinds = (EntityKind.COMPANY, EntityKind.CERTIFICATE)
            country = country_for(head)
        elif relation is RelationKind.SUPPLIES_TO:
            head = companies[int(rng.integers(n_companies))]
            tail = companies[int(rng.integers(n_companies))]
            kinds = (EntityKind.COMPANY, EntityKind.COMPANY)
            country = country_for(head)
        else:
            head, tail = products[int(rng.integers(n_products))], companies[int(rng.integers(n_companies))]
            kinds = (EntityKind.PRODUCT, EntityKind.COMPANY)
            country = None
        records.append(TripletRecord(head, kinds[0], relation, tail, kinds[1], country))
    return records


def random_graph(rng: np.random.Generator, max_entities: int = 50,
                 edge_factor: float = 3.0) -> KnowledgeGraph:
    """A random typed graph with at most ``max_entities`` entities."""
    n_companies = int(rng.integers(2, max(3, max_entities // 2)))
    n_products = int(rng.integers(1, max(2, max_entities // 3)))
    n_certs = int(rng.integers(1, 5))
    total = n_companies + n_products + n_certs
    if total > max_entities:
        n_companies = max(2, n_companies - (total - max_entities))
    n_edges = int(edge_factor * (n_companies + n_products))
    return ingest_triplets(random_records(rng, n_companies, n_products, n_certs, n_edges))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
