"""Synthetic supply-chain graphs with a tunable planted class signal.

Every company and product belongs to an industry; names embed the
industry token and an industry-specific family token, each with
probability ``signal`` (else a random token).  Supply transactions pair
companies and products within an industry with probability ``signal``
(else uniformly), and each transaction is mirrored with probability
``signal`` so that direction carries no extra information at high
signal.  Pairing uses balanced round-robin queues, so entity degrees are
near-uniform and carry no label signal at signal=0.

At signal=1 a quintuplet is positive essentially iff its three entity
names share an industry token; at signal=0 names and structure are
independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kg import EntityKind, KnowledgeGraph, RelationKind, TripletRecord, ingest_triplets
from .seeding import derive_seed

INDUSTRY_TOKENS = (
    "powertrain", "chassis", "electronics", "interior", "braking", "steering",
    "exhaust", "transmission", "suspension", "lighting", "battery", "cooling",
    "fueling", "glazing", "seating", "fastening",
)

#: two families per industry: FAMILY_TOKENS[2*i], FAMILY_TOKENS[2*i+1] belong
#: to INDUSTRY_TOKENS[i]
FAMILY_TOKENS = (
    "crankshaft", "camshaft", "axle", "subframe", "sensor", "harness",
    "trim", "console", "caliper", "rotor", "rack", "column",
    "manifold", "muffler", "gearbox", "clutch", "damper", "spring",
    "headlamp", "taillamp", "cell", "busbar", "radiator", "thermostat",
    "injector", "fuelrail", "windshield", "mirror", "seatframe", "headrest",
    "rivet", "bracket",
)

_COMPANY_STEMS = (
    "Veltra", "Orion", "Kappa", "Nordfeld", "Asteri", "Bravura", "Cetus",
    "Dynamo", "Eisen", "Fabrik", "Giro", "Helix", "Imano", "Jotun",
    "Krata", "Lumen", "Makoto", "Nexis", "Ostra", "Prima", "Quill",
    "Rondo", "Solvi", "Tessa",
)

_COMPANY_SUFFIXES = ("GmbH", "Ltd", "Inc", "S.A.", "Corp", "KK", "LLC", "AG")

CERTIFICATE_NAMES = (
    "ISO9001", "QS9000", "ISO14001", "IATF16949", "ISO45001",
    "AS9100", "TL9000", "ISO27001", "ISO50001", "VDA63",
)

COUNTRY_NAMES = (
    "ARGENTINA", "AUSTRALIA", "AUSTRIA", "BELGIUM", "BRAZIL", "CANADA",
    "CHILE", "CHINA", "CZECHIA", "DENMARK", "EGYPT", "FINLAND", "FRANCE",
    "GERMANY", "GREECE", "HUNGARY", "INDIA", "INDONESIA", "IRELAND",
    "ITALY", "JAPAN", "KOREA", "MALAYSIA", "MEXICO", "NORWAY", "POLAND",
    "PORTUGAL", "SPAIN", "SWEDEN", "THAILAND", "TURKEY", "VIETNAM",
)


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeDensities:
    """Relative edge volumes; each value must lie in (0, 1).

    ``supplies_to`` scales per-company transaction counts; ``has_product``
    and ``purchased_by`` scale per-company distractor edges (incomplete
    joins); ``has_cert`` is the chance of each extra certificate.
    """

    has_product: float = 0.02
    has_cert: float = 0.1
    supplies_to: float = 0.015
    purchased_by: float = 0.02

    def validate(self) -> None:
        for name in ("has_product", "has_cert", "supplies_to", "purchased_by"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise SynthConfigError(f"density {name} must lie in (0,1), got {value}")


@dataclass(frozen=True)
class SynthConfig:
    companies: int = 200
    products: int = 50
    certificates: int = 5
    countries: int = 1
    industries: int = 16
    signal: float = 1.0
    densities: EdgeDensities = EdgeDensities()
    seed: int = 0

    def validate(self) -> None:
        for name in ("companies", "products", "certificates"):
            if getattr(self, name) < 2:
                raise SynthConfigError(f"need at least 2 {name}, got {getattr(self, name)}")
        if self.certificates > len(CERTIFICATE_NAMES):
            raise SynthConfigError(f"at most {len(CERTIFICATE_NAMES)} certificates supported")
        if not 1 <= self.industries <= len(INDUSTRY_TOKENS):
            raise SynthConfigError(f"industries must lie in [1, {len(INDUSTRY_TOKENS)}]")
        if not 1 <= self.countries <= len(COUNTRY_NAMES):
            raise SynthConfigError(f"countries must lie in [1, {len(COUNTRY_NAMES)}]")
        if not 0.0 <= self.signal <= 1.0:
            raise SynthConfigError(f"signal must lie in [0,1], got {self.signal}")
        self.densities.validate()


class _RoundRobin:
    """Balanced sampler: shuffled cycle through a fixed item pool."""

    def __init__(self, items: list, rng: np.random.Generator):
        self._items = list(items)
        self._rng = rng
        self._order = rng.permutation(len(self._items)) if self._items else []
        self._cursor = 0

    def __len__(self):
        return len(self._items)

    def draw(self, exclude=None):
        if not self._items:
            return None
        for _ in range(len(self._items) + 1):
            if self._cursor >= len(self._items):
                self._order = self._rng.permutation(len(self._items))
                self._cursor = 0
            item = self._items[self._order[self._cursor]]
            self._cursor += 1
            if item != exclude:
                return item
        return None


def industry_of_family(family_index: int) -> int:
    return family_index // 2


def synth_records(config: SynthConfig,
                  country_pool: tuple[str, ...] | None = None) -> list[TripletRecord]:
    """Raw triplet records for one synthetic graph; deterministic per seed."""
    config.validate()
    if country_pool is None:
        country_pool = COUNTRY_NAMES[:config.countries]

    rng = np.random.default_rng(derive_seed(config.seed, "synthgen"))
    signal = config.signal
    n_ind = config.industries

    def coherent() -> bool:
        return bool(rng.random() < signal)

    # family tokens restricted to the configured industries
    family_pool = [f for f in range(len(FAMILY_TOKENS)) if industry_of_family(f) < n_ind]

    # entities: industry assignment is round-robin so industries are equal-sized;
    # each company specializes in one of its industry's two product families,
    # which keeps the supply join sparse (a supplier trades its own family)
    company_industry = [i % n_ind for i in range(config.companies)]
    company_family = [2 * (i % n_ind) + (i // n_ind) % 2 for i in range(config.companies)]
    company_country = [country_pool[i % len(country_pool)] for i in range(config.companies)]
    company_names = []
    for i in range(config.companies):
        ind = company_industry[i]
        stem = _COMPANY_STEMS[int(rng.integers(len(_COMPANY_STEMS)))]
        suffix = _COMPANY_SUFFIXES[int(rng.integers(len(_COMPANY_SUFFIXES)))]
        ind_tok = INDUSTRY_TOKENS[ind if coherent() else int(rng.integers(n_ind))]
        fam_idx = company_family[i] if coherent() \
            else int(family_pool[int(rng.integers(len(family_pool)))])
        company_names.append(f"{stem}{i} {ind_tok} {FAMILY_TOKENS[fam_idx]} {suffix}")

    product_industry = [j % n_ind for j in range(config.products)]
    product_family = [2 * (j % n_ind) + (j // n_ind) % 2 for j in range(config.products)]
    product_names = []
    for j in range(config.products):
        ind = product_industry[j]
        ind_tok = INDUSTRY_TOKENS[ind if coherent() else int(rng.integers(n_ind))]
        fam_idx = product_family[j] if coherent() \
            else int(family_pool[int(rng.integers(len(family_pool)))])
        product_names.append(f"{ind_tok} {FAMILY_TOKENS[fam_idx]} #{j}")

    cert_names = CERTIFICATE_NAMES[:config.certificates]

    # balanced pairing queues: family and industry level, plus global fallbacks
    companies_by_ind = [[i for i in range(config.companies) if company_industry[i] == ind]
                        for ind in range(n_ind)]
    products_by_ind = [[j for j in range(config.products) if product_industry[j] == ind]
                       for ind in range(n_ind)]
    products_by_family = [[j for j in range(config.products) if product_family[j] == fam]
                          for fam in range(2 * n_ind)]
    buyer_queues = [_RoundRobin(members, rng) for members in companies_by_ind]
    industry_product_queues = [_RoundRobin(members, rng) for members in products_by_ind]
    family_product_queues = [_RoundRobin(members, rng) for members in products_by_family]
    global_buyers = _RoundRobin(list(range(config.companies)), rng)
    global_products = _RoundRobin(list(range(config.products)), rng)

    def pick_buyer(supplier: int, same_industry: bool) -> int | None:
        if same_industry:
            queue = buyer_queues[company_industry[supplier]]
            if len(queue) >= 2:
                return queue.draw(exclude=supplier)
        return global_buyers.draw(exclude=supplier)

    def pick_product(supplier: int, aligned: bool) -> int | None:
        if aligned:
            queue = family_product_queues[company_family[supplier]]
            if len(queue) >= 1:
                return queue.draw()
            queue = industry_product_queues[company_industry[supplier]]
            if len(queue) >= 1:
                return queue.draw()
        return global_products.draw()

    def company_rec(i: int, relation: RelationKind, tail_name: str,
                    tail_kind: EntityKind) -> TripletRecord:
        return TripletRecord(company_names[i], EntityKind.COMPANY, relation,
                             tail_name, tail_kind, company_country[i])

    records: list[TripletRecord] = []

    def add_transaction(supplier: int, product: int, buyer: int) -> None:
        records.append(company_rec(supplier, RelationKind.HAS_PRODUCT,
                                   product_names[product], EntityKind.PRODUCT))
        records.append(TripletRecord(product_names[product], EntityKind.PRODUCT,
                                     RelationKind.PURCHASED_BY,
                                     company_names[buyer], EntityKind.COMPANY))
        records.append(company_rec(supplier, RelationKind.SUPPLIES_TO,
                                   company_names[buyer], EntityKind.COMPANY))

    transactions_per_company = max(1, round(config.densities.supplies_to * config.companies))
    for supplier in range(config.companies):
        for _ in range(transactions_per_company):
            aligned = coherent()
            buyer = pick_buyer(supplier, aligned)
            product = pick_product(supplier, aligned)
            if buyer is None or product is None:
                continue
            add_transaction(supplier, product, buyer)
            if coherent():
                add_transaction(buyer, product, supplier)

    # distractor edges: products made but not traded, purchases without supply
    noise_hp = max(1, round(config.densities.has_product * config.products))
    noise_pb = max(1, round(config.densities.purchased_by * config.products))
    for i in range(config.companies):
        for _ in range(noise_hp):
            product = pick_product(i, coherent())
            if product is not None:
                records.append(company_rec(i, RelationKind.HAS_PRODUCT,
                                           product_names[product], EntityKind.PRODUCT))
        for _ in range(noise_pb):
            product = pick_product(i, coherent())
            if product is not None:
                records.append(TripletRecord(product_names[product], EntityKind.PRODUCT,
                                             RelationKind.PURCHASED_BY,
                                             company_names[i], EntityKind.COMPANY))

    # certificates: one per company, industry-preferred at high signal
    certs_issued: set[int] = set()
    for i in range(config.companies):
        preferred = company_industry[i] % config.certificates
        first = preferred if coherent() else int(rng.integers(config.certificates))
        held = {first}
        for extra in range(config.certificates):
            if extra not in held and rng.random() < config.densities.has_cert:
                held.add(extra)
        certs_issued |= held
        for cert in sorted(held):
            records.append(company_rec(i, RelationKind.HAS_CERT,
                                       cert_names[cert], EntityKind.CERTIFICATE))

    # coverage pass: every configured entity must appear in the records,
    # attached within its own industry so the planted alignment survives
    touched_products = {
        r.head_name if r.head_kind is EntityKind.PRODUCT else r.tail_name
        for r in records
        if EntityKind.PRODUCT in (r.head_kind, r.tail_kind)
    }
    for j in range(config.products):
        if product_names[j] not in touched_products:
            owners = companies_by_ind[product_industry[j]] or list(range(config.companies))
            owner = owners[j % len(owners)]
            records.append(company_rec(owner, RelationKind.HAS_PRODUCT,
                                       product_names[j], EntityKind.PRODUCT))
    for cert in range(config.certificates):
        if cert not in certs_issued:
            holders = companies_by_ind[cert % n_ind] or list(range(config.companies))
            holder = holders[cert % len(holders)]
            records.append(company_rec(holder, RelationKind.HAS_CERT,
                                       cert_names[cert], EntityKind.CERTIFICATE))

    return records


def generate(config: SynthConfig) -> KnowledgeGraph:
    """Synthetic knowledge graph; entity counts match the config exactly."""
    return ingest_triplets(synth_records(config))


def generate_partitions(config: SynthConfig, country_count: int) -> dict[str, KnowledgeGraph]:
    """Per-country graphs with log-uniform sizes between companies/sqrt(2) and companies*sqrt(2).

    Each partition is generated independently from a per-country seed;
    requesting a single country reproduces ``generate(config)``.
    """
    if country_count < 1:
        raise SynthConfigError("country_count must be >= 1")
    if country_count > len(COUNTRY_NAMES):
        raise SynthConfigError(f"at most {len(COUNTRY_NAMES)} countries supported")
    if country_count == 1:
        return {COUNTRY_NAMES[0]: generate(config)}

    out: dict[str, KnowledgeGraph] = {}
    lo, hi = np.log(config.companies / np.sqrt(2.0)), np.log(config.companies * np.sqrt(2.0))
    for idx in range(country_count):
        country = COUNTRY_NAMES[idx]
        rng = np.random.default_rng(derive_seed(config.seed, "partition-size", country))
        size = max(2 * config.industries, int(round(np.exp(rng.uniform(lo, hi)))))
        scale = size / config.companies
        # keep per-company transaction counts constant across partition sizes,
        # so dataset sizes scale linearly with the company count
        densities = replace(config.densities,
                            supplies_to=min(0.99, config.densities.supplies_to / scale))
        sub = replace(
            config,
            companies=size,
            products=max(2, config.industries, int(round(config.products * scale))),
            densities=densities,
            countries=1,
            seed=derive_seed(config.seed, "partition", country),
        )
        records = synth_records(sub, country_pool=(country,))
        out[country] = ingest_triplets(records)
    return out
