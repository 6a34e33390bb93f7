"""Model loading and encoding backends.

Each model is loaded lazily on first use.  The preferred backend is
sentence-transformers with locally cached weights (no network access is
attempted unless EMBED_SERVICE_BACKEND=transformers); when weights are
unavailable the service falls back to a deterministic character-n-gram
encoder at the model's registered dimension, so the API contract (dims,
L2 normalization, determinism, order) holds in offline environments.
The active backend is reported per model by GET /models.
"""

from __future__ import annotations

import hashlib
import logging
import os
import threading

import numpy as np

from .registry import ModelSpec

log = logging.getLogger("embed_service")

BACKEND_ENV = "EMBED_SERVICE_BACKEND"  # auto (default) | transformers | fallback


class HashedFallbackEncoder:
    """Deterministic stand-in encoder: signed 3-5-gram hashing, L2-normalized."""

    kind = "hashed-fallback"

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self._key = hashlib.blake2b(spec.name.encode("utf-8"), digest_size=8).digest()

    def _encode_one(self, text: str) -> np.ndarray:
        truncated = text[: self.spec.max_seq_len * 4].lower()  # ~chars per token
        vec = np.zeros(self.spec.dim, dtype=np.float64)
        for n in (3, 4, 5):
            for i in range(len(truncated) - n + 1):
                digest = hashlib.blake2b(truncated[i:i + n].encode("utf-8"),
                                         digest_size=9, key=self._key).digest()
                bucket = int.from_bytes(digest[:8], "little") % self.spec.dim
                vec[bucket] += 1.0 if digest[8] & 1 else -1.0
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
        return vec

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.array([self._encode_one(t) for t in texts], dtype=np.float64) \
            if texts else np.zeros((0, self.spec.dim))


class SentenceTransformerEncoder:
    """Real model: mean pooling with L2-normalized outputs."""

    kind = "sentence-transformers"

    def __init__(self, spec: ModelSpec, local_only: bool):
        from sentence_transformers import SentenceTransformer

        self.spec = spec
        self._model = SentenceTransformer(
            f"sentence-transformers/{spec.name}",
            local_files_only=local_only,
        )
        self._model.max_seq_length = spec.max_seq_len

    def encode(self, texts: list[str]) -> np.ndarray:
        out = self._model.encode(texts, normalize_embeddings=True,
                                 convert_to_numpy=True, show_progress_bar=False)
        return np.asarray(out, dtype=np.float64)


class ModelPool:
    """Lazily instantiated encoders, one per registered model."""

    def __init__(self, models: dict[str, ModelSpec]):
        self._specs = models
        self._encoders: dict[str, object] = {}
        self._lock = threading.Lock()
        self.mode = os.environ.get(BACKEND_ENV, "auto")

    def specs(self) -> list[ModelSpec]:
        return list(self._specs.values())

    def loaded(self, name: str) -> bool:
        return name in self._encoders

    def backend_kind(self, name: str) -> str | None:
        encoder = self._encoders.get(name)
        return encoder.kind if encoder is not None else None

    def _build(self, spec: ModelSpec):
        if self.mode != "fallback":
            try:
                encoder = SentenceTransformerEncoder(spec, local_only=self.mode == "auto")
                log.info("loaded %s via sentence-transformers", spec.name)
                return encoder
            except Exception as exc:  # noqa: BLE001 - any load failure means fallback
                if self.mode == "transformers":
                    raise
                log.warning("no local weights for %s (%s); using hashed fallback",
                            spec.name, type(exc).__name__)
        return HashedFallbackEncoder(spec)

    def encoder(self, name: str):
        if name not in self._specs:
            raise KeyError(name)
        with self._lock:
            if name not in self._encoders:
                self._encoders[name] = self._build(self._specs[name])
            return self._encoders[name]
