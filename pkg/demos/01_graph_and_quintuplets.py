"""Build a tiny supply-chain knowledge graph and derive its quintuplets.

Run: python3 demos/01_graph_and_quintuplets.py
"""

from quintlink.kg import EntityKind, RelationKind, TripletRecord, ingest_triplets, partition_by_country
from quintlink.quintuplets import derive_cert, derive_supply

C, P, K = EntityKind.COMPANY, EntityKind.PRODUCT, EntityKind.CERTIFICATE

records = [
    # Acme makes fuel tanks and sells them to Orion Motors
    TripletRecord("Acme", C, RelationKind.HAS_PRODUCT, "Fuel Tank", P, "Germany"),
    TripletRecord("Fuel Tank", P, RelationKind.PURCHASED_BY, "Orion Motors", C, None),
    TripletRecord("Acme", C, RelationKind.SUPPLIES_TO, "Orion Motors", C, "Germany"),
    TripletRecord("Orion Motors", C, RelationKind.HAS_CERT, "ISO9001", K, "Germany"),
    # Acme is certified too, so its products yield certificate quintuplets
    TripletRecord("Acme", C, RelationKind.HAS_CERT, "ISO9001", K, "Germany"),
    # a Japanese company with no German connections
    TripletRecord("Kaito Parts", C, RelationKind.HAS_PRODUCT, "Brake Disc", P, "Japan"),
]

graph = ingest_triplets(records)
print(f"graph: {len(graph.entities)} entities, {len(graph.triplets)} triplets")

# a quintuplet condenses the three supply triplets into one record
for q in derive_supply(graph):
    names = [graph.entity(e).name for e in (q.e1, q.e2, q.e3)]
    print("supply quintuplet:", names)

for q in derive_cert(graph):
    names = [graph.entity(e).name for e in (q.e1, q.e2, q.e3)]
    print("certificate quintuplet:", names)

# country partitions keep only edges whose company endpoints stay local
for country, part in partition_by_country(graph).items():
    print(f"partition {country}: {len(part.entities)} entities, {len(part.triplets)} triplets")
