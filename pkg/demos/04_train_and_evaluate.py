"""Train a classifier on embedded quintuplets and score the held-out split.

Run: python3 demos/04_train_and_evaluate.py
"""

from quintlink.embedding import HashEmbedder, embed_dataset
from quintlink.metrics import evaluate
from quintlink.models import Architecture, TrainConfig, build_model, predict, train
from quintlink.quintuplets import QuintupletKind, SplitRatios, build_dataset, derive_supply, split
from quintlink.synthgen import SynthConfig, generate
from quintlink.verbalize import default_template

graph = generate(SynthConfig(companies=200, products=50, industries=16, signal=0.9, seed=42))
positives = derive_supply(graph)
records = build_dataset(positives, graph, seed=1).records
train_recs, val_recs, test_recs = split(records, SplitRatios(0.7, 0.1, 0.2), seed=2)
print(f"{len(positives)} positives -> splits {len(train_recs)}/{len(val_recs)}/{len(test_recs)}")

template = default_template(QuintupletKind.SUPPLIES_PRODUCT_TO)
embedder = HashEmbedder(384)
splits = [embed_dataset(r, embedder, None, template, graph.entities)
          for r in (train_recs, val_recs, test_recs)]

model = build_model(Architecture.ANN, 384, seed=3)
history = train(model, splits[0], splits[1], TrainConfig(max_epochs=20, seed=4))
print(f"stopped at epoch {history.stop_epoch} ({history.stop_reason}), "
      f"best val epoch {history.best_epoch}")

_, labels = predict(model, splits[2][0])
report = evaluate(labels, splits[2][1])
print(f"balanced accuracy (weighted) {report.balanced_accuracy_weighted:.4f}")
print(f"precision {report.precision:.4f}  recall {report.recall:.4f}  "
      f"weighted f-score {report.weighted_f_score:.4f}")
