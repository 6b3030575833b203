"""Interest-to-corpus matching: embedding providers, cosine match, average scores.

A VSP's interest text and a device's historical category texts are embedded
into vectors; the per-device score is the count-weighted mean cosine match,
clamped to [0, 1].  Heavyweight language models stay out of the build: vectors
come either from a precomputed JSON map or from a deterministic token-hashing
embedder used in tests.
"""

from __future__ import annotations

import csv
import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core_model import DemandScenario
from .errors import ConfigurationError

# Embedding vectors are plain 1-D float arrays; providers guarantee a fixed
# dimension and never produce the all-zero vector for non-empty text.
EmbeddingVector = np.ndarray


@dataclass(frozen=True)
class CategoryCorpus:
    """Historical category counts for one device; ``entries`` are (text, count)."""

    device_id: int
    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((str(t), int(c)) for t, c in self.entries))
        for text, count in self.entries:
            if count < 1:
                raise ValueError(f"corpus counts must be positive integers, got {count} for {text!r}")

    @property
    def total(self) -> int:
        return sum(count for _, count in self.entries)


class EmbeddingProvider(ABC):
    """Maps category/interest text to a fixed-dimension vector, deterministically."""

    @abstractmethod
    def embed(self, text: str) -> EmbeddingVector:
        raise NotImplementedError


class FileEmbeddings(EmbeddingProvider):
    """Precomputed text-to-vector map loaded from a JSON document.

    The file is a single object ``{"text": [floats...], ...}``; vectors were
    produced offline by whatever encoder the deployment uses.
    """

    def __init__(self, vectors: Mapping[str, Sequence[float]]):
        self._vectors: dict[str, np.ndarray] = {}
        dim = None
        for text, values in vectors.items():
            vec = np.asarray(values, dtype=np.float64)
            if vec.ndim != 1 or vec.size < 1:
                raise ConfigurationError(f"embedding for {text!r} must be a non-empty flat list")
            if not np.all(np.isfinite(vec)):
                raise ConfigurationError(f"embedding for {text!r} contains non-finite values")
            if not vec.any():
                raise ConfigurationError(f"embedding for {text!r} is the all-zero vector")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ConfigurationError(
                    f"embedding for {text!r} has dimension {vec.size}, expected {dim}"
                )
            vec.setflags(write=False)
            self._vectors[str(text)] = vec
        if dim is None:
            raise ConfigurationError("embeddings file defines no vectors")

    @classmethod
    def from_path(cls, path: str | Path) -> "FileEmbeddings":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: embeddings file must hold a JSON object")
        return cls(data)

    def embed(self, text: str) -> EmbeddingVector:
        try:
            return self._vectors[text]
        except KeyError:
            raise ConfigurationError(f"no embedding for text {text!r}") from None


class HashEmbedder(EmbeddingProvider):
    """Deterministic bag-of-words embedder: tokens hashed into count buckets.

    Token buckets come from MD5 digests, so vectors are stable across runs and
    platforms.  Text with no alphanumeric tokens hashes as one raw-byte token,
    keeping the no-zero-vector guarantee.
    """

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension

    @staticmethod
    def _tokens(text: str) -> list[str]:
        out, current = [], []
        for ch in text.lower():
            if ch.isalnum():
                current.append(ch)
            elif current:
                out.append("".join(current))
                current = []
        if current:
            out.append("".join(current))
        return out

    def _bucket(self, token: str) -> int:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dimension

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        tokens = self._tokens(text) or [text]
        vec = np.zeros(self.dimension)
        for token in tokens:
            vec[self._bucket(token)] += 1.0
        vec.setflags(write=False)
        return vec


def cosine_match(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("embeddings must be finite")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine match is undefined for a zero-norm vector")
    value = float(a @ b) / (norm_a * norm_b)
    return min(1.0, max(-1.0, value))


def average_similarity(
    interest: EmbeddingVector,
    corpus: CategoryCorpus,
    provider: EmbeddingProvider,
) -> float:
    """Count-weighted mean cosine match of the interest against a device corpus.

    Negative matches are clamped to 0 before averaging so the score stays in
    [0, 1]; an entry with count k contributes k identical terms to the mean.
    """
    if not corpus.entries:
        raise ValueError(f"device {corpus.device_id} has an empty corpus")
    weighted = 0.0
    weight = 0
    for text, count in corpus.entries:
        match = cosine_match(interest, provider.embed(text))
        weighted += count * max(0.0, match)
        weight += count
    return weighted / weight


def build_similarity_tensor(
    scenarios: Sequence[DemandScenario],
    corpora: Mapping[int, CategoryCorpus],
    provider: EmbeddingProvider,
) -> np.ndarray:
    """Assemble the (vsp, device, scenario) score tensor from corpora.

    Device ids must cover 0..E-1; each scenario's per-VSP interest key is
    embedded once and matched against every device corpus.
    """
    if not scenarios:
        raise ConfigurationError("scenario set must be non-empty")
    num_vsps = len(scenarios[0].per_vsp)
    num_devices = len(corpora)
    for e in range(num_devices):
        if e not in corpora:
            raise ConfigurationError(f"no category corpus for device {e}")

    interest_cache: dict[str, np.ndarray] = {}
    tensor = np.zeros((num_vsps, num_devices, len(scenarios)))
    for i, scen in enumerate(scenarios):
        for w, demand in enumerate(scen.per_vsp):
            key = demand.interest_key
            if key not in interest_cache:
                interest_cache[key] = provider.embed(key)
            for e in range(num_devices):
                tensor[w, e, i] = average_similarity(interest_cache[key], corpora[e], provider)
    return tensor


def load_corpora_csv(path: str | Path) -> dict[int, CategoryCorpus]:
    """Read corpora from a CSV with header ``device_id,category,count``."""
    rows: dict[int, list[tuple[str, int]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"device_id", "category", "count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConfigurationError(
                f"{path}: corpus CSV must have header device_id,category,count"
            )
        for line, row in enumerate(reader, start=2):
            try:
                device_id = int(row["device_id"])
                count = int(row["count"])
            except (TypeError, ValueError):
                raise ConfigurationError(f"{path}:{line}: malformed corpus row {row}") from None
            rows.setdefault(device_id, []).append((row["category"], count))
    return {
        device_id: CategoryCorpus(device_id, tuple(entries))
        for device_id, entries in rows.items()
    }
