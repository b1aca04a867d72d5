"""Embedding providers and the small vector algebra used downstream.

Every provider returns float64 row vectors that are L2-normalized at the
provider boundary, so cosine similarity between provider outputs reduces to
a dot product.  Two providers are available:

* ``DeterministicEmbedder``: an offline hashed character-trigram bag.  It is
  pure arithmetic, needs no network or model weights, and gives bitwise
  identical vectors for identical (text, dim, seed) triples, which keeps
  tests and demo runs reproducible.
* ``RemoteEmbedder``: a thin HTTP client for a JSON embedding endpoint.
"""

from __future__ import annotations

import unicodedata
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
import requests

DEFAULT_DIM = 384


class EmbeddingError(ValueError):
    pass


class DimensionMismatchError(EmbeddingError):
    pass


class ZeroVectorError(EmbeddingError):
    pass


class EmbeddingTransportError(RuntimeError):
    """Network-level failure talking to a remote embedding endpoint."""

    retryable = True


class ProviderKind(str, Enum):
    DETERMINISTIC_LOCAL = "deterministic_local"
    REMOTE = "remote"


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: ProviderKind = ProviderKind.DETERMINISTIC_LOCAL
    dim: int = DEFAULT_DIM
    endpoint: str | None = None
    model_name: str | None = None
    timeout: float = 30.0
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise EmbeddingError(f"dim must be >= 1, got {self.dim}")
        if self.batch_size < 1:
            raise EmbeddingError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.timeout <= 0:
            raise EmbeddingError(f"timeout must be positive, got {self.timeout}")
        if self.kind is ProviderKind.REMOTE and not (self.endpoint and self.model_name):
            raise EmbeddingError("remote provider requires both endpoint and model_name")


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    # np.sum over an explicit square avoids BLAS so the result is stable
    # across builds; norms must be strictly positive here.
    norms = np.sqrt(np.sum(np.square(rows), axis=1))
    if np.any(norms == 0.0):
        raise ZeroVectorError("cannot normalize a zero vector")
    return rows / norms[:, np.newaxis]


class EmbeddingProvider:
    """Shared contract: validate inputs, embed, normalize, validate outputs."""

    dim: int

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Embed texts into a (len(texts), dim) float64 matrix of unit rows,
        one row per input in input order."""
        if len(texts) == 0:
            raise EmbeddingError("embed_batch requires a non-empty list of texts")
        for i, t in enumerate(texts):
            if not isinstance(t, str) or len(t) == 0:
                raise EmbeddingError(f"text at index {i} is empty or not a string")
        rows = np.asarray(self._embed_raw(list(texts)), dtype=np.float64)
        if rows.shape != (len(texts), self.dim):
            raise DimensionMismatchError(
                f"provider returned shape {rows.shape}, expected {(len(texts), self.dim)}"
            )
        if not np.all(np.isfinite(rows)):
            raise EmbeddingError("provider returned NaN or Inf components")
        return _normalize_rows(rows)

    def _embed_raw(self, texts: list[str]) -> np.ndarray:
        raise NotImplementedError


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data: bytes, seed: int = 0) -> int:
    h = _FNV_OFFSET ^ (seed & _MASK64)
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


class DeterministicEmbedder(EmbeddingProvider):
    """Hashed character-trigram bag embedder.

    The text is NFC-normalized and lowercased, split into overlapping
    character trigrams (texts shorter than three characters contribute a
    single gram of the whole text), and each gram is hashed with 64-bit
    FNV-1a.  The hash picks a bucket (``hash % dim``) and a sign (bit 63);
    the signed counts are then L2-normalized.  Pure and safe for concurrent
    use.  Not a semantic model: it measures character-level overlap, which is
    enough to make identical strings identical and unrelated strings nearly
    orthogonal.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        if dim < 1:
            raise EmbeddingError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.seed = seed

    def _embed_raw(self, texts: list[str]) -> np.ndarray:
        rows = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            canon = unicodedata.normalize("NFC", text).lower()
            grams = [canon[j : j + 3] for j in range(len(canon) - 2)] or [canon]
            for gram in grams:
                h = _fnv1a64(gram.encode("utf-8"), self.seed)
                sign = 1.0 if (h >> 63) & 1 else -1.0
                rows[i, h % self.dim] += sign
            if not rows[i].any():
                # Signed counts cancelled exactly; fall back to a single
                # deterministic bucket so the row stays normalizable.
                rows[i, _fnv1a64(canon.encode("utf-8"), self.seed) % self.dim] = 1.0
        return rows


class RemoteEmbedder(EmbeddingProvider):
    """Client for an HTTP embedding service.

    Request:  POST {"model": <name>, "texts": [...]}
    Response: {"vectors": [[...], ...]} with one vector per text.

    Inputs are chunked to ``batch_size`` texts per request.  Transport
    failures and 5xx responses are retried up to ``max_retries`` extra
    attempts, then raised as EmbeddingTransportError.
    """

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        dim: int = DEFAULT_DIM,
        timeout: float = 30.0,
        batch_size: int = 64,
        max_retries: int = 2,
        session: requests.Session | None = None,
    ):
        if not endpoint or not model_name:
            raise EmbeddingError("remote provider requires both endpoint and model_name")
        self.endpoint = endpoint
        self.model_name = model_name
        self.dim = dim
        self.timeout = timeout
        self.batch_size = batch_size
        self.max_retries = max_retries
        self._session = session if session is not None else requests.Session()

    def _post_chunk(self, chunk: list[str]) -> list[list[float]]:
        payload = {"model": self.model_name, "texts": chunk}
        last_error: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.RequestException as err:
                last_error = err
                continue
            if resp.status_code >= 500:
                last_error = EmbeddingTransportError(f"server error {resp.status_code}: {resp.text}")
                continue
            if resp.status_code != 200:
                raise EmbeddingTransportError(f"embedding request failed ({resp.status_code}): {resp.text}")
            body = resp.json()
            if "vectors" not in body:
                raise EmbeddingTransportError(f"malformed embedding response: {body!r}")
            return body["vectors"]
        raise EmbeddingTransportError(f"embedding request failed after retries: {last_error}")

    def _embed_raw(self, texts: list[str]) -> np.ndarray:
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start : start + self.batch_size]
            got = self._post_chunk(chunk)
            if len(got) != len(chunk):
                raise DimensionMismatchError(f"endpoint returned {len(got)} vectors for {len(chunk)} texts")
            vectors.extend(got)
        rows = np.asarray(vectors, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"endpoint returned vectors of dim {rows.shape[1] if rows.ndim == 2 else '?'}, expected {self.dim}"
            )
        return rows


def make_provider(config: EmbeddingProviderConfig) -> EmbeddingProvider:
    if config.kind is ProviderKind.DETERMINISTIC_LOCAL:
        return DeterministicEmbedder(dim=config.dim, seed=config.seed)
    return RemoteEmbedder(
        endpoint=config.endpoint,
        model_name=config.model_name,
        dim=config.dim,
        timeout=config.timeout,
        batch_size=config.batch_size,
    )


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise EmbeddingError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    return arr


def cosine_similarity(u, v) -> float:
    """Cosine of two vectors, clipped into [-1, 1].

    The accumulation order inside the dot product does not depend on which
    operand comes first, so cosine_similarity(u, v) == cosine_similarity(v, u)
    bit for bit.
    """
    a = _as_vector(u, "u")
    b = _as_vector(v, "v")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.sqrt(np.sum(np.square(a))))
    nb = float(np.sqrt(np.sum(np.square(b))))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity of a zero vector is undefined")
    sim = float(np.sum(a * b) / (na * nb))
    return min(1.0, max(-1.0, sim))


def _check_unit(v: np.ndarray, name: str, tol: float = 1e-6) -> None:
    norm = float(np.sqrt(np.sum(np.square(v))))
    if abs(norm - 1.0) > tol:
        raise EmbeddingError(f"{name} must be L2-normalized (norm {norm:.6g})")


def concat_normalize(u, v) -> np.ndarray:
    """Concatenate two unit vectors and renormalize; output dim is the sum of
    the input dims and the output is a unit vector."""
    a = _as_vector(u, "u")
    b = _as_vector(v, "v")
    _check_unit(a, "u")
    _check_unit(b, "v")
    joined = np.concatenate([a, b])
    return joined / float(np.sqrt(np.sum(np.square(joined))))


def mean_pool(vectors: Sequence) -> np.ndarray:
    """Arithmetic mean of same-dim vectors, L2-normalized.

    Raises on an empty list, and on the degenerate case where the mean is
    exactly the zero vector (no direction to keep).
    """
    if len(vectors) == 0:
        raise EmbeddingError("mean_pool requires at least one vector")
    rows = [_as_vector(v, f"vectors[{i}]") for i, v in enumerate(vectors)]
    dim = rows[0].shape[0]
    for i, r in enumerate(rows):
        if r.shape[0] != dim:
            raise DimensionMismatchError(f"vectors[{i}] has dim {r.shape[0]}, expected {dim}")
    mean = np.mean(np.vstack(rows), axis=0)
    norm = float(np.sqrt(np.sum(np.square(mean))))
    if norm == 0.0:
        raise ZeroVectorError("mean of the vectors is the zero vector")
    return mean / norm
