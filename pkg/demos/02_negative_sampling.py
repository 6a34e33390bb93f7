"""Corrupt positive quintuplets into balanced negative training examples.

Run: python3 demos/02_negative_sampling.py
"""

from collections import Counter

import numpy as np

from quintlink.quintuplets import CorruptionStrategy, build_dataset, corrupt, derive_supply
from quintlink.synthgen import SynthConfig, generate

graph = generate(SynthConfig(companies=60, products=24, industries=8, signal=1.0, seed=3))
positives = derive_supply(graph)
print(f"derived {len(positives)} positive supply quintuplets")

# one corruption, strategy by strategy
q = sorted(positives, key=lambda x: x.sort_key())[0]
names = lambda quint: [graph.entity(e).name for e in (quint.e1, quint.e2, quint.e3)]
print("positive:", names(q))
rng = np.random.default_rng(1)
for strategy in CorruptionStrategy:
    negative = corrupt(q, graph, positives, strategy, rng)
    print(f"  {strategy.value:17s} ->", names(negative) if negative else "no candidate")

# the full dataset pairs every positive with exactly one negative and shuffles
build = build_dataset(positives, graph, seed=7)
print("label balance:", Counter(r.label for r in build.records))
print("strategies used:", Counter(r.provenance for r in build.records if r.label == 0))
print("warnings:", len(build.warnings))
