"""Per-feature PCA and assembly of the final concatenated vector.

Large descriptors (HoG, LBP, external vectors) are projected to a small
number of principal directions before concatenation; the small color and
luminance histograms are kept raw.  A ``FeatureConfig`` pins the feature
order and the per-feature output dimension so assembled vectors are
comparable across images and across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientData, InvalidParam, MissingFeature, MissingPca
from .features import FeatureVector

# Features small enough to concatenate without reduction, with their lengths.
RAW_FEATURES = {"color_hist": 30, "lum_hist": 10}

DEFAULT_BUDGET = 230


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    target_dim: int | None  # None = use the raw vector

    @property
    def label(self) -> str:
        return self.name if self.target_dim is None else f"{self.name}:{self.target_dim}"


@dataclass(frozen=True)
class FeatureConfig:
    """Ordered feature selection with per-feature reduction targets."""

    entries: tuple[FeatureEntry, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise InvalidParam(f"duplicate feature names in config: {names}")
        if not names:
            raise InvalidParam("empty feature config")

    @property
    def name(self) -> str:
        return "+".join(e.label for e in self.entries)

    def reduced_features(self) -> list[str]:
        return [e.name for e in self.entries if e.target_dim is not None]

    def to_json(self) -> dict:
        return {
            "features": [
                {"name": e.name, "target_dim": e.target_dim} for e in self.entries
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureConfig":
        return cls(
            tuple(
                FeatureEntry(f["name"], f["target_dim"]) for f in obj["features"]
            )
        )


def parse_config(text: str, budget: int = DEFAULT_BUDGET) -> FeatureConfig:
    """Parse a config string like ``color_hist+hog16`` into a FeatureConfig.

    Grammar: ``+``-separated feature names, each optionally ``name:dim`` to
    force a PCA target, with an optional ``@total`` suffix overriding the
    dimension budget (default 230).  Unmarked small histograms stay raw;
    the remaining budget is split evenly across unmarked large features,
    earlier entries taking any remainder.
    """
    text = text.strip()
    if "@" in text:
        text, _, budget_str = text.partition("@")
        try:
            budget = int(budget_str)
        except ValueError:
            raise InvalidParam(f"bad budget {budget_str!r}") from None
    entries: list[tuple[str, int | None, bool]] = []  # (name, dim, explicit)
    for part in text.split("+"):
        part = part.strip()
        if not part:
            raise InvalidParam(f"empty feature name in {text!r}")
        if ":" in part:
            name, _, dim_str = part.partition(":")
            try:
                dim = int(dim_str)
            except ValueError:
                raise InvalidParam(f"bad dimension {dim_str!r} in {part!r}") from None
            if dim < 1:
                raise InvalidParam(f"dimension must be >= 1 in {part!r}")
            entries.append((name, dim, True))
        else:
            entries.append((part, None, False))

    spent = sum(
        dim if explicit else RAW_FEATURES.get(name, 0)
        for name, dim, explicit in entries
    )
    auto = [name for name, _, explicit in entries if not explicit and name not in RAW_FEATURES]
    final: list[FeatureEntry] = []
    remaining = budget - spent
    for name, dim, explicit in entries:
        if explicit:
            final.append(FeatureEntry(name, dim))
        elif name in RAW_FEATURES:
            final.append(FeatureEntry(name, None))
        else:
            share = remaining // len(auto) + (1 if auto.index(name) < remaining % len(auto) else 0)
            if share < 1:
                raise InvalidParam(
                    f"budget {budget} leaves no room to reduce {name!r} in {text!r}"
                )
            final.append(FeatureEntry(name, share))
    return FeatureConfig(tuple(final))


# --------------------------------------------------------------------------
# PCA

@dataclass(frozen=True)
class PcaParams:
    """Projection learned from training samples of one feature type.

    ``components`` has shape (target_dim, raw_dim) with orthonormal rows;
    ``target_dim`` is the effective dimension after any rank truncation.
    """

    feature_name: str
    mean: np.ndarray
    components: np.ndarray

    @property
    def target_dim(self) -> int:
        return self.components.shape[0]

    @property
    def raw_dim(self) -> int:
        return self.mean.shape[0]

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "target_dim": self.target_dim,
        }

    @classmethod
    def from_json(cls, feature_name: str, obj: dict) -> "PcaParams":
        mean = np.asarray(obj["mean"], dtype=np.float64)
        components = np.asarray(obj["components"], dtype=np.float64)
        if components.size == 0:
            components = components.reshape(0, mean.shape[0])
        return cls(feature_name, mean, components)


def fit_pca(samples: list[FeatureVector], target_dim: int) -> PcaParams:
    """Fit the top principal directions of a feature sample by SVD.

    If ``target_dim`` exceeds the rank of the centered sample matrix the
    projection is truncated to that rank.  Component signs are fixed so the
    largest-magnitude entry of each row is positive.
    """
    if target_dim < 1:
        raise InvalidParam(f"target_dim must be >= 1, got {target_dim}")
    if len(samples) < 2:
        raise InsufficientData(f"need at least 2 samples to fit PCA, got {len(samples)}")
    name = samples[0].feature_name
    dim = len(samples[0])
    for fv in samples:
        if fv.feature_name != name:
            raise InvalidParam(f"mixed feature names: {name!r} vs {fv.feature_name!r}")
        if len(fv) != dim:
            raise DimensionMismatch(f"ragged samples: {dim} vs {len(fv)}")
    x = np.stack([fv.values for fv in samples]).astype(np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        rank = 0
    else:
        tol = s[0] * max(x.shape) * np.finfo(np.float64).eps
        rank = int(np.count_nonzero(s > tol))
    components = vt[: min(target_dim, rank)].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaParams(name, mean, components)


def apply_pca(params: PcaParams, v: FeatureVector) -> FeatureVector:
    """Project a vector: components @ (v - mean)."""
    if v.feature_name != params.feature_name:
        raise InvalidParam(
            f"feature {v.feature_name!r} does not match PCA for {params.feature_name!r}"
        )
    if len(v) != params.raw_dim:
        raise DimensionMismatch(
            f"{v.feature_name}: vector length {len(v)} != PCA raw dim {params.raw_dim}"
        )
    return FeatureVector(params.feature_name, params.components @ (v.values - params.mean))


def assemble(
    config: FeatureConfig,
    per_feature: dict[str, FeatureVector],
    pca: dict[str, PcaParams] | None = None,
) -> FeatureVector:
    """Concatenate (reduced or raw) per-feature vectors in config order."""
    pca = pca or {}
    parts = []
    for entry in config.entries:
        fv = per_feature.get(entry.name)
        if fv is None:
            raise MissingFeature(entry.name)
        if entry.target_dim is not None:
            params = pca.get(entry.name)
            if params is None:
                raise MissingPca(f"config reduces {entry.name!r} but no PCA params given")
            fv = apply_pca(params, fv)
        parts.append(fv.values)
    return FeatureVector(config.name, np.concatenate(parts))


def assembled_dim(config: FeatureConfig, pca: dict[str, PcaParams]) -> int:
    """Output length of :func:`assemble` under the given PCA params."""
    total = 0
    for entry in config.entries:
        if entry.target_dim is None:
            if entry.name not in RAW_FEATURES:
                raise InvalidParam(
                    f"raw length of {entry.name!r} is unknown; give it a target_dim"
                )
            total += RAW_FEATURES[entry.name]
        else:
            params = pca.get(entry.name)
            if params is None:
                raise MissingPca(f"config reduces {entry.name!r} but no PCA params given")
            total += params.target_dim
    return total
