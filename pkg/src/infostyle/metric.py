"""Learned diagonal weighted metric over assembled feature vectors.

The distance between two images is sqrt((fx - fy)^T W (fx - fy)) with a
non-negative diagonal W.  A rater shown reference A and options B, C picks
B with probability 1 / (1 + exp(D(A,B) - D(A,C))), and the weights are fit
by MAP estimation: the negative log-likelihood of the majority choices
plus an L1 penalty lambda * sum(w) that prunes useless feature dimensions.
Minimization is bound-constrained L-BFGS with w >= 0.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    EmptyData,
    InsufficientData,
    InvalidParam,
    NonConvergenceWarning,
    NonFiniteInput,
)
from .reduction import FeatureConfig, PcaParams

logger = logging.getLogger(__name__)

# Stabilizer inside the square root during training; the objective's
# gradient would blow up at zero squared distance without it.  Inference
# (distance, evaluate) uses the exact square root.
SQRT_EPS = 1e-12

DEFAULT_MAX_ITERS = 500
DEFAULT_TOLERANCE = 1e-6
LBFGS_MEMORY = 10


def distance(w: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> float:
    """Weighted distance sqrt(sum_i w_i (fx_i - fy_i)^2)."""
    w = np.asarray(w, dtype=np.float64)
    fx = np.asarray(fx, dtype=np.float64)
    fy = np.asarray(fy, dtype=np.float64)
    if not (w.shape == fx.shape == fy.shape):
        raise DimensionMismatch(f"shapes differ: w {w.shape}, fx {fx.shape}, fy {fy.shape}")
    if not (np.isfinite(w).all() and np.isfinite(fx).all() and np.isfinite(fy).all()):
        raise NonFiniteInput("distance inputs must be finite")
    if (w < 0).any():
        raise InvalidParam("weights must be non-negative")
    diff = fx - fy
    return float(np.sqrt(w @ (diff * diff)))


def choice_probability(d_ab: float, d_ac: float) -> float:
    """Probability the rater calls B closer to A, given the two distances.

    Sigmoidal in the distance gap; 0.5 when the distances are equal.
    Computed in a form that cannot overflow for any finite gap.
    """
    return float(expit(d_ac - d_ab))


@dataclass(frozen=True)
class EmbeddedTriplet:
    """A labeled triplet with all three images already in model feature space."""

    f_ref: np.ndarray
    f_winner: np.ndarray
    f_loser: np.ndarray

    def __post_init__(self):
        if not (self.f_ref.shape == self.f_winner.shape == self.f_loser.shape):
            raise DimensionMismatch(
                f"triplet vectors differ in shape: {self.f_ref.shape}, "
                f"{self.f_winner.shape}, {self.f_loser.shape}"
            )


class TripletBatch:
    """Squared per-dimension differences for a set of embedded triplets.

    Caches (ref - winner)^2 and (ref - loser)^2 as (n, d) matrices so the
    objective and its gradient are matrix products.
    """

    def __init__(self, data: list[EmbeddedTriplet]):
        if not data:
            raise EmptyData("no triplets")
        dim = data[0].f_ref.shape[0]
        for t in data:
            if t.f_ref.shape[0] != dim:
                raise DimensionMismatch("triplets embedded at different dimensions")
        ref = np.stack([t.f_ref for t in data]).astype(np.float64)
        win = np.stack([t.f_winner for t in data]).astype(np.float64)
        lose = np.stack([t.f_loser for t in data]).astype(np.float64)
        self.win_sq = (ref - win) ** 2
        self.lose_sq = (ref - lose) ** 2
        self.n = len(data)
        self.dim = dim


def _as_batch(data) -> TripletBatch:
    return data if isinstance(data, TripletBatch) else TripletBatch(list(data))


def objective(
    w: np.ndarray, data, lam: float
) -> tuple[float, np.ndarray]:
    """MAP objective and its analytic gradient at weights ``w``.

    Value: sum over triplets of -log P(winner) plus lam * sum(w); on the
    non-negative orthant the L1 norm of diag(W) is just the sum, so the
    penalty contributes a constant lam to each gradient entry.  Distances
    use the epsilon-stabilized square root.
    """
    batch = _as_batch(data)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (batch.dim,):
        raise DimensionMismatch(f"weights shape {w.shape} != ({batch.dim},)")
    d_win = np.sqrt(batch.win_sq @ w + SQRT_EPS)
    d_lose = np.sqrt(batch.lose_sq @ w + SQRT_EPS)
    margin = d_win - d_lose  # positive margin means the model prefers the loser
    value = float(np.logaddexp(0.0, margin).sum() + lam * w.sum())
    s = expit(margin)  # d/dmargin of logaddexp(0, margin)
    grad = batch.win_sq.T @ (s / (2.0 * d_win)) - batch.lose_sq.T @ (s / (2.0 * d_lose)) + lam
    return value, grad


def train(
    data,
    lam: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
) -> np.ndarray:
    """Fit non-negative diagonal weights by bound-constrained L-BFGS.

    Starts from the isotropic 1/d metric and runs until the projected
    gradient norm drops below ``tolerance`` or ``max_iters`` is hit; the
    latter raises a NonConvergenceWarning and returns the best iterate.
    ``seed`` is accepted for interface stability; the optimization itself
    is deterministic.
    """
    del seed
    batch = _as_batch(data)
    w0 = np.full(batch.dim, 1.0 / batch.dim)
    f0, _ = objective(w0, batch, lam)
    res = minimize(
        objective,
        w0,
        args=(batch, lam),
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * batch.dim,
        options={
            "maxiter": max_iters,
            "maxcor": LBFGS_MEMORY,
            "gtol": tolerance,
            "ftol": 1e-14,
        },
    )
    if res.status != 0:
        warnings.warn(
            f"optimizer stopped early ({res.message}); returning best iterate",
            NonConvergenceWarning,
            stacklevel=2,
        )
    if res.fun > f0:
        return w0
    return np.maximum(res.x, 0.0)


def evaluate(model_or_weights, test) -> float:
    """Fraction of triplets where the winner sits closer to the reference.

    Exact distance ties count as incorrect, so an all-zero weight vector
    scores 0 rather than coin-flip 50%.
    """
    w = model_or_weights.weights if isinstance(model_or_weights, MetricModel) else model_or_weights
    w = np.asarray(w, dtype=np.float64)
    batch = _as_batch(test)
    if w.shape != (batch.dim,):
        raise DimensionMismatch(f"weights shape {w.shape} != ({batch.dim},)")
    correct = (batch.win_sq @ w) < (batch.lose_sq @ w)
    return float(correct.mean())


def select_lambda(
    data,
    grid: list[float],
    folds: int = 5,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> float:
    """Pick the penalty weight by k-fold cross-validated triplet accuracy.

    Folds are contiguous slices of a seeded shuffle.  Ties between grid
    values go to the larger lambda, i.e. the sparser model.
    """
    if folds < 2:
        raise InvalidParam(f"folds must be >= 2, got {folds}")
    if not grid:
        raise InvalidParam("empty lambda grid")
    data = list(data)
    if len(data) < folds:
        raise InsufficientData(f"{len(data)} triplets cannot fill {folds} folds")
    order = np.random.default_rng(seed).permutation(len(data))
    fold_indices = np.array_split(order, folds)
    best_lam, best_acc = None, -1.0
    for lam in grid:
        accs = []
        for held_out in fold_indices:
            held = set(held_out.tolist())
            train_part = [data[i] for i in range(len(data)) if i not in held]
            test_part = [data[i] for i in held_out]
            w = train(train_part, lam, max_iters=max_iters, tolerance=tolerance)
            accs.append(evaluate(w, test_part))
        mean_acc = float(np.mean(accs))
        logger.info(
            "lambda=%g mean accuracy %.4f (folds: %s)",
            lam, mean_acc, ", ".join(f"{a:.4f}" for a in accs),
        )
        if mean_acc > best_acc or (mean_acc == best_acc and lam > best_lam):
            best_lam, best_acc = lam, mean_acc
    return best_lam


# --------------------------------------------------------------------------
# Model persistence

MODEL_VERSION = 1


@dataclass
class MetricModel:
    """Everything needed to embed a new image and measure distances.

    Holds the learned diagonal weights together with the feature config and
    the PCA parameters fitted at training time, so query images are
    projected exactly the way the training corpus was.
    """

    weights: np.ndarray
    feature_config: FeatureConfig
    pca: dict[str, PcaParams] = field(default_factory=dict)
    lam: float = 0.0
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.isfinite(self.weights).all():
            raise NonFiniteInput("model weights must be finite")
        if (self.weights < 0).any():
            raise InvalidParam("model weights must be non-negative")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def to_json_bytes(self) -> bytes:
        """Canonical serialized form; floats keep full round-trip precision."""
        obj = {
            "version": MODEL_VERSION,
            "feature_config": self.feature_config.to_json(),
            "pca": {name: p.to_json() for name, p in sorted(self.pca.items())},
            "weights": self.weights.tolist(),
            "lambda": self.lam,
            "training_meta": self.training_meta,
        }
        return json.dumps(obj, separators=(",", ":")).encode("utf-8")

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json_bytes()).hexdigest()

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_json_bytes())

    @classmethod
    def from_json_bytes(cls, data: bytes) -> "MetricModel":
        obj = json.loads(data.decode("utf-8"))
        if obj.get("version") != MODEL_VERSION:
            raise InvalidParam(f"unsupported model version {obj.get('version')!r}")
        return cls(
            weights=np.asarray(obj["weights"], dtype=np.float64),
            feature_config=FeatureConfig.from_json(obj["feature_config"]),
            pca={
                name: PcaParams.from_json(name, p) for name, p in obj["pca"].items()
            },
            lam=float(obj["lambda"]),
            training_meta=obj["training_meta"],
        )

    @classmethod
    def load(cls, path: str) -> "MetricModel":
        with open(path, "rb") as fh:
            return cls.from_json_bytes(fh.read())


def baseline_weights(dim: int) -> np.ndarray:
    """Unit weights: plain Euclidean distance on the assembled features."""
    return np.ones(dim)
