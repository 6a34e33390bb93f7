"""Turn quintuplets into sentences, then into cached feature vectors.

Run: python3 demos/03_verbalize_and_embed.py
"""

import tempfile
from pathlib import Path

import numpy as np

from quintlink.embedding import EmbeddingCache, HashEmbedder, embed_dataset, hash_embed
from quintlink.quintuplets import QuintupletKind, build_dataset, derive_supply
from quintlink.synthgen import SynthConfig, generate
from quintlink.verbalize import ALT_SUPPLY_TEMPLATE, Template, default_template, verbalize

graph = generate(SynthConfig(companies=40, products=16, industries=8, signal=1.0, seed=11))
positives = derive_supply(graph)
q = sorted(positives, key=lambda x: x.sort_key())[0]

template = default_template(QuintupletKind.SUPPLIES_PRODUCT_TO)
print("default :", verbalize(q, graph.entities, template))
alt = Template(QuintupletKind.SUPPLIES_PRODUCT_TO, ALT_SUPPLY_TEMPLATE)
print("alternate:", verbalize(q, graph.entities, alt))

# the offline embedder: signed hashing of character 3-5-grams, unit norm
text = verbalize(q, graph.entities, template)
vec = hash_embed(text, dim=384)
print(f"embedding dim={vec.size}, l2 norm={np.linalg.norm(vec):.9f}")

# similar sentences land nearby, unrelated ones do not
other = sorted(positives, key=lambda x: x.sort_key())[1]
sim = vec @ hash_embed(verbalize(other, graph.entities, template), 384)
print(f"cosine to another quintuplet's sentence: {sim:.3f}")

# embed a whole dataset through the persistent cache; the second pass is free
records = build_dataset(positives, graph, seed=5).records
with tempfile.TemporaryDirectory() as tmp:
    cache = EmbeddingCache(Path(tmp) / "vectors.bin")
    x, y = embed_dataset(records, HashEmbedder(384), cache, template, graph.entities)
    print(f"design matrix {x.shape}, labels balance {int(y.sum())}/{len(y) - int(y.sum())}")
    print(f"cache now holds {len(cache)} vectors")
