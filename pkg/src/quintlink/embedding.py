"""Text-to-vector embedders behind one contract, plus a persistent cache.

Two embedders are provided: a fully offline deterministic hash embedder
(signed feature hashing of character 3-5-grams) and a client for the
embedding sidecar service.  Both produce fixed-dimension float64 vectors;
the cache stores them content-addressed by (model, text digest) so reruns
never re-embed.
"""

from __future__ import annotations

import hashlib
import logging
import struct
import threading
import time
import zlib
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

log = logging.getLogger(__name__)

#: binding dimension registry for the served sentence-embedding models
MODEL_DIMS = {
    "distiluse-base-multilingual-cased-v2": 512,
    "all-distilroberta-v1": 768,
    "all-MiniLM-L12-v2": 384,
    "all-MiniLM-L6-v2": 384,
    "paraphrase-albert-small-v2": 768,
}

MODEL_MAX_SEQ = {
    "distiluse-base-multilingual-cased-v2": 128,
    "all-distilroberta-v1": 512,
    "all-MiniLM-L12-v2": 256,
    "all-MiniLM-L6-v2": 256,
    "paraphrase-albert-small-v2": 256,
}

#: the hash embedder is seeded by convention so its model id is reproducible
HASH_EMBEDDER_SEED = 0

REMOTE_BATCH_LIMIT = 256
REMOTE_ATTEMPTS = 3
REMOTE_BACKOFF_S = 0.5


class EmbeddingError(Exception):
    pass


class UnknownModelError(EmbeddingError):
    """Model id not in the registry / not served; not retryable."""


class TransportError(EmbeddingError):
    """Remote service unreachable after all retries."""


class ContractViolationError(EmbeddingError):
    """Remote service returned vectors that break the registry contract."""


def model_dim(model_id: str) -> int:
    """Vector dimension for a model id, including the hash-<dim> family."""
    if model_id in MODEL_DIMS:
        return MODEL_DIMS[model_id]
    if model_id.startswith("hash-"):
        try:
            dim = int(model_id[5:])
        except ValueError:
            raise UnknownModelError(model_id) from None
        if dim >= 8:
            return dim
    raise UnknownModelError(model_id)


@lru_cache(maxsize=1 << 20)
def _gram_slot(gram: str, dim: int, key: bytes) -> tuple[int, float]:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=9, key=key).digest()
    return int.from_bytes(digest[:8], "little") % dim, 1.0 if digest[8] & 1 else -1.0


def hash_embed(text: str, dim: int, seed: int = HASH_EMBEDDER_SEED) -> np.ndarray:
    """Signed feature hashing of character 3-5-grams, L2-normalized.

    Deterministic in (text, dim, seed).  Texts too short to yield any
    gram embed to the zero vector, which is flagged via the module
    logger rather than normalized.
    """
    if dim < 8:
        raise ValueError(f"hash embedding dimension must be >= 8, got {dim}")
    lowered = text.lower()
    vec = np.zeros(dim, dtype=np.float64)
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    n_grams = 0
    for n in (3, 4, 5):
        for i in range(len(lowered) - n + 1):
            bucket, sign = _gram_slot(lowered[i:i + n], dim, key)
            vec[bucket] += sign
            n_grams += 1
    if n_grams == 0:
        log.warning("hash_embed: text %r yields no character grams; returning zero vector", text)
        return vec
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


class HashEmbedder:
    """Offline stand-in for a pretrained sentence embedder."""

    def __init__(self, dim: int = 384, seed: int = HASH_EMBEDDER_SEED):
        self.dim = dim
        self.seed = seed
        self.model_id = f"hash-{dim}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return np.array([hash_embed(t, self.dim, self.seed) for t in texts], dtype=np.float64) \
            if texts else np.zeros((0, self.dim))


class RemoteEmbedder:
    """Client for the embedding sidecar's POST /embed endpoint.

    Transport failures are retried with exponential backoff; an unknown
    model or a dimension that contradicts the registry fails permanently.
    """

    def __init__(self, endpoint: str, model_id: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.dim = model_dim(model_id)
        self.timeout = timeout
        self._session = requests.Session()

    def _post_batch(self, texts: list[str]) -> list[list[float]]:
        last_exc: Exception | None = None
        for attempt in range(REMOTE_ATTEMPTS):
            if attempt:
                time.sleep(REMOTE_BACKOFF_S * 2 ** (attempt - 1))
            try:
                resp = self._session.post(
                    f"{self.endpoint}/embed",
                    json={"model": self.model_id, "texts": texts},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code == 404:
                raise UnknownModelError(f"service does not serve model {self.model_id!r}")
            if resp.status_code >= 500:
                last_exc = TransportError(f"server error {resp.status_code}: {resp.text[:200]}")
                continue
            if resp.status_code != 200:
                raise EmbeddingError(f"embed request failed ({resp.status_code}): {resp.text[:200]}")
            return resp.json()["vectors"]
        raise TransportError(
            f"embedding service at {self.endpoint} unreachable after {REMOTE_ATTEMPTS} attempts"
        ) from last_exc

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim))
        rows: list[list[float]] = []
        for start in range(0, len(texts), REMOTE_BATCH_LIMIT):
            rows.extend(self._post_batch(texts[start:start + REMOTE_BATCH_LIMIT]))
        out = np.asarray(rows, dtype=np.float64)
        if out.shape != (len(texts), self.dim):
            raise ContractViolationError(
                f"model {self.model_id!r} must return {len(texts)}x{self.dim}, got {out.shape}"
            )
        return out


# -- persistent cache ------------------------------------------------------

_RECORD_MAGIC = b"QLC1"
_HEADER = struct.Struct("<4sH32sI")  # magic, model length, text digest, dim


class EmbeddingCache:
    """Append-only content-addressed vector store.

    Each record is (model, sha256(text), dim, float64-LE payload) followed
    by a CRC32 of the record body.  Torn or corrupt tails are detected by
    the checksum and ignored.  One lock serializes writers; readers work
    from the in-memory index.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, bytes], np.ndarray] = {}
        if self.path.exists():
            self._load()

    @staticmethod
    def digest(text: str) -> bytes:
        return hashlib.sha256(text.encode("utf-8")).digest()

    def _load(self) -> None:
        blob = self.path.read_bytes()
        offset = 0
        while offset < len(blob):
            if offset + _HEADER.size > len(blob):
                log.warning("cache %s: truncated header at byte %d", self.path, offset)
                break
            magic, model_len, text_digest, dim = _HEADER.unpack_from(blob, offset)
            body_len = _HEADER.size + model_len + 8 * dim
            if magic != _RECORD_MAGIC or offset + body_len + 4 > len(blob):
                log.warning("cache %s: corrupt record at byte %d; ignoring tail", self.path, offset)
                break
            body = blob[offset:offset + body_len]
            (crc,) = struct.unpack_from("<I", blob, offset + body_len)
            if crc != zlib.crc32(body):
                log.warning("cache %s: checksum mismatch at byte %d; ignoring tail", self.path, offset)
                break
            model = body[_HEADER.size:_HEADER.size + model_len].decode("utf-8")
            payload = np.frombuffer(body[_HEADER.size + model_len:], dtype="<f8").copy()
            self._index[(model, text_digest)] = payload
            offset += body_len + 4

    def get(self, model: str, text: str) -> np.ndarray | None:
        vec = self._index.get((model, self.digest(text)))
        return None if vec is None else vec.copy()

    def put(self, model: str, text: str, vector: np.ndarray) -> None:
        payload = np.ascontiguousarray(vector, dtype="<f8")
        model_bytes = model.encode("utf-8")
        text_digest = self.digest(text)
        body = _HEADER.pack(_RECORD_MAGIC, len(model_bytes), text_digest, payload.size)
        body += model_bytes + payload.tobytes()
        record = body + struct.pack("<I", zlib.crc32(body))
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as fh:
                fh.write(record)
            self._index[(model, text_digest)] = payload.copy()

    def __len__(self) -> int:
        return len(self._index)


def embed_dataset(records, embedder, cache, template, entities):
    """Design matrix and label vector for a labeled quintuplet dataset.

    Row i is the embedding of the verbalization of record i; labels map
    positive to 1 and negative to 0.  The cache is consulted before the
    embedder sees any text, and fresh vectors are written back.
    """
    from .verbalize import verbalize

    records = list(records)
    y = np.array([r.label for r in records], dtype=np.int64)
    X = np.zeros((len(records), embedder.dim), dtype=np.float64)

    texts: list[str] = []
    for i, record in enumerate(records):
        try:
            texts.append(verbalize(record.quintuplet, entities, template))
        except Exception as exc:
            raise EmbeddingError(f"while verbalizing record {i}: {exc}") from exc

    missing: dict[str, list[int]] = {}
    for i, text in enumerate(texts):
        cached = cache.get(embedder.model_id, text) if cache is not None else None
        if cached is not None:
            if cached.size != embedder.dim:
                raise ContractViolationError(
                    f"cache holds dim {cached.size} for model {embedder.model_id!r}, "
                    f"expected {embedder.dim}"
                )
            X[i] = cached
        else:
            missing.setdefault(text, []).append(i)

    if missing:
        unique = list(missing)
        try:
            fresh = embedder.embed(unique)
        except EmbeddingError as exc:
            first = min(min(v) for v in missing.values())
            raise EmbeddingError(f"while embedding record {first}: {exc}") from exc
        for text, vec in zip(unique, fresh):
            if cache is not None:
                cache.put(embedder.model_id, text, vec)
            for i in missing[text]:
                X[i] = vec
    return X, y
