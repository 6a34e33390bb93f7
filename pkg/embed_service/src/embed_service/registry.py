"""The served sentence-embedding models and their binding dimensions."""

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelSpec:
    name: str
    dim: int
    max_seq_len: int


MODELS = {
    spec.name: spec
    for spec in (
        ModelSpec("distiluse-base-multilingual-cased-v2", 512, 128),
        ModelSpec("all-distilroberta-v1", 768, 512),
        ModelSpec("all-MiniLM-L12-v2", 384, 256),
        ModelSpec("all-MiniLM-L6-v2", 384, 256),
        ModelSpec("paraphrase-albert-small-v2", 768, 256),
    )
}

MAX_BATCH = 256
