"""Token embedding providers for the contextual-similarity metric.

Two backends: a deterministic hashing fallback (no model download, stable
across runs) and an HTTP client for a remote embedding service speaking
``POST /embed {language, tokens} -> {vectors}``.
"""

from __future__ import annotations

import hashlib

import numpy as np

from crb.errors import ProviderUnavailable
from crb.parsing import TokenSequence


class HashingProvider:
    """Deterministic per-token unit vectors derived from a seeded hash.

    Identical tokens always map to identical vectors, so self-comparison
    scores 1.0; distinct tokens get quasi-orthogonal directions.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed(self, seq: TokenSequence) -> np.ndarray:
        out = np.empty((len(seq.tokens), self.dim))
        for i, tok in enumerate(seq.tokens):
            digest = hashlib.sha256(f"{self.seed}\x00{tok}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            v = rng.standard_normal(self.dim)
            out[i] = v / np.linalg.norm(v)
        return out


class RemoteProvider:
    """HTTP embedding client. Safe to call from multiple workers: each
    request uses an independent context."""

    def __init__(self, base_url: str, timeout: float = 10.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def embed(self, seq: TokenSequence) -> np.ndarray:
        import httpx

        payload = {"language": seq.language.value, "tokens": list(seq.tokens)}
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = httpx.post(f"{self.base_url}/embed", json=payload, timeout=self.timeout)
                resp.raise_for_status()
                vectors = np.asarray(resp.json()["vectors"], dtype=float)
                break
            except Exception as exc:  # retried below
                last_exc = exc
        else:
            raise ProviderUnavailable(str(last_exc))
        if vectors.shape[0] != len(seq.tokens):
            raise ValueError(
                f"provider returned {vectors.shape[0]} vectors for {len(seq.tokens)} tokens"
            )
        norms = np.linalg.norm(vectors, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise ValueError("provider vectors are not unit-norm")
        return vectors
