"""Embedding a corpus under a trained model and answering k-NN queries.

The index is an exact structure: a query is a linear scan over every
stored vector under the model's weighted distance.  At the corpus sizes
this pipeline targets (tens of thousands of images, ~230 dimensions) a
scan answers well within interactive latency and keeps results exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    FingerprintMismatch,
    InvalidParam,
    MissingFeature,
    ParseError,
)
from .features import FeatureVector, compute_feature
from .imaging import normalize_window
from .metric import MetricModel
from .reduction import assemble


def embed_features(model: MetricModel, per_feature: dict[str, FeatureVector]) -> np.ndarray:
    """Assemble one image's raw feature vectors into model space."""
    return assemble(model.feature_config, per_feature, model.pca).values


def embed_image(model: MetricModel, img: np.ndarray) -> np.ndarray:
    """Full pipeline for a new image: normalize, extract, reduce, assemble."""
    window = normalize_window(img)
    per_feature = {
        entry.name: compute_feature(entry.name, window)
        for entry in model.feature_config.entries
    }
    return embed_features(model, per_feature)


@dataclass
class SearchIndex:
    """Immutable id -> embedded vector store tied to one model."""

    fingerprint: str
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.entries


def build_index(
    model: MetricModel, corpus_features: dict[str, dict[str, FeatureVector]]
) -> SearchIndex:
    """Embed every corpus image under the model.

    ``corpus_features`` maps image id to its raw per-feature vectors, as
    loaded from the features JSONL file.  Raises MissingFeature naming the
    first image that lacks a feature the config needs.
    """
    entries: dict[str, np.ndarray] = {}
    dim = None
    for image_id in sorted(corpus_features):
        per_feature = corpus_features[image_id]
        for entry in model.feature_config.entries:
            if entry.name not in per_feature:
                raise MissingFeature(entry.name, image_id=image_id)
        vec = embed_features(model, per_feature)
        if dim is None:
            dim = vec.shape[0]
        entries[image_id] = vec
    if dim is None:
        dim = model.dim
    return SearchIndex(model.fingerprint(), dim, entries)


def query(
    index: SearchIndex,
    model: MetricModel,
    q: np.ndarray,
    k: int,
    exclude_id: str | None = None,
) -> list[tuple[str, float]]:
    """The k nearest entries to ``q``, ascending by distance.

    Ties break lexicographically by id.  Fewer than k results come back
    when the index is smaller.  ``exclude_id`` drops one id, used to keep
    a corpus image from matching itself.
    """
    if k < 1:
        raise InvalidParam(f"k must be >= 1, got {k}")
    if index.fingerprint != model.fingerprint():
        raise FingerprintMismatch(
            f"index built for model {index.fingerprint[:12]}..., "
            f"queried with {model.fingerprint()[:12]}..."
        )
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (index.dim,):
        raise DimensionMismatch(f"query shape {q.shape} != ({index.dim},)")
    ids = sorted(i for i in index.entries if i != exclude_id)
    if not ids:
        return []
    mat = np.stack([index.entries[i] for i in ids])
    if model.dim != index.dim:
        raise DimensionMismatch(f"model dim {model.dim} != index dim {index.dim}")
    diff = mat - q
    dist = np.sqrt((diff * diff) @ model.weights)
    # ids are pre-sorted, so a stable sort on distance gives lexicographic
    # tie-breaking for free.
    order = np.argsort(dist, kind="stable")[:k]
    return [(ids[i], float(dist[i])) for i in order]


# --------------------------------------------------------------------------
# Index persistence: one header line, then one {"id", "values"} per entry.

def save_index(index: SearchIndex, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"fingerprint": index.fingerprint, "dim": index.dim}
        fh.write(json.dumps(header, separators=(",", ":")))
        fh.write("\n")
        for image_id in sorted(index.entries):
            rec = {"id": image_id, "values": index.entries[image_id].tolist()}
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")


def load_index(path: str) -> SearchIndex:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ParseError("missing index header", line=1)
        try:
            header = json.loads(first)
            fingerprint, dim = header["fingerprint"], int(header["dim"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad index header: {exc}", line=1) from exc
        entries: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                image_id = rec["id"]
                values = np.asarray(rec["values"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad index record: {exc}", line=lineno) from exc
            if values.shape != (dim,):
                raise ParseError(
                    f"entry {image_id!r} has dim {values.shape[0]}, header says {dim}",
                    line=lineno,
                )
            if image_id in entries:
                raise ParseError(f"duplicate id {image_id!r}", line=lineno)
            entries[image_id] = values
    return SearchIndex(fingerprint, dim, entries)
