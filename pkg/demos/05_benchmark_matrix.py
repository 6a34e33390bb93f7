"""A small benchmark matrix: countries x architectures, embedding vs baseline.

Writes per-kind reports and the pivoted per-country table under
demos/out/.  Run: python3 demos/05_benchmark_matrix.py
"""

from pathlib import Path

from quintlink.models import Architecture, TrainConfig
from quintlink.pipeline import ExperimentConfig, run_benchmark_matrix
from quintlink.quintuplets import QuintupletKind
from quintlink.synthgen import SynthConfig

config = ExperimentConfig(
    source="synth",
    synth=SynthConfig(companies=160, products=48, industries=16, signal=0.9),
    partitions=4,
    kinds=(QuintupletKind.SUPPLIES_PRODUCT_TO,),
    embedders=("hash-384", "baseline-384"),
    architectures=(Architecture.ANN, Architecture.LOGREG),
    train=TrainConfig(max_epochs=20),
    seed=7,
)

out = Path(__file__).parent / "out"
for path in run_benchmark_matrix(config, out):
    print("wrote", path)

print()
print((out / "pivot_supply_hash-384.csv").read_text(), end="")
print()
print((out / "pivot_supply_baseline-384.csv").read_text(), end="")
