"""Pool-based active learning: budgets, entropy scoring, selection.

A client's training indices live in exactly one of two disjoint ordered
sets, labeled and unlabeled. Each query round scores the unlabeled pool
(ensemble entropy of the averaged predictive distribution, or a single
model's entropy, or uniform random), moves the top selections into the
labeled set, and exposes their ground-truth labels.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import ConfigurationError, DomainError, ProtocolError, ShapeError
from .kernels import PROB_FLOOR

# Guards floor(U * gamma) against float artifacts like 1000 * 0.29 -> 289.99...
_FLOOR_EPS = 1e-9


class Strategy(enum.Enum):
    RANDOM = "random"
    LOCAL_ENTROPY = "local_entropy"
    GLOBAL_ENTROPY = "global_entropy"
    ENSEMBLE_ENTROPY = "ensemble_entropy"

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ConfigurationError(f"unknown strategy {name!r}; choose from {valid}") from None


@dataclass(frozen=True)
class PoolState:
    """Disjoint labeled/unlabeled index sets, both kept sorted."""

    labeled: np.ndarray
    unlabeled: np.ndarray
    initial_unlabeled_count: int

    def __post_init__(self):
        if np.intersect1d(self.labeled, self.unlabeled).size:
            raise ProtocolError("labeled and unlabeled sets overlap")

    @property
    def n_labeled(self):
        return len(self.labeled)

    @property
    def n_unlabeled(self):
        return len(self.unlabeled)


@dataclass(frozen=True)
class QueryBudget:
    """Fixed per-round annotation amount derived from the initial pool."""

    per_round: int
    gamma: float
    total_al_rounds: int
    total: int

    def amount(self, al_round_index):
        """Budget for the 1-based AL round; the last round absorbs the remainder."""
        if not 1 <= al_round_index <= self.total_al_rounds:
            raise ConfigurationError(
                f"AL round index {al_round_index} outside [1, {self.total_al_rounds}]")
        if al_round_index == self.total_al_rounds:
            return self.total - self.per_round * (self.total_al_rounds - 1)
        return self.per_round


def compute_budget(initial_unlabeled, gamma, total_al_rounds) -> QueryBudget:
    """Per-round budget floor(U * gamma / rounds); totals hit floor(U * gamma)."""
    if initial_unlabeled < 1:
        raise ConfigurationError(f"initial unlabeled count must be >= 1, got {initial_unlabeled}")
    if not 0.0 < gamma <= 1.0:
        raise ConfigurationError(f"gamma must be in (0, 1], got {gamma}")
    if total_al_rounds < 1:
        raise ConfigurationError(f"total_al_rounds must be >= 1, got {total_al_rounds}")
    total = int(math.floor(initial_unlabeled * gamma + _FLOOR_EPS))
    per_round = int(math.floor(initial_unlabeled * gamma / total_al_rounds + _FLOOR_EPS))
    return QueryBudget(per_round, gamma, total_al_rounds, total)


def shannon_entropy(prob) -> float:
    """-sum p ln p with zero entries contributing zero."""
    prob = np.asarray(prob, dtype=np.float64)
    if prob.ndim != 1 or prob.size == 0:
        raise DomainError(f"expected a 1-D probability vector, got shape {prob.shape}")
    if np.any(prob < 0.0) or abs(prob.sum() - 1.0) > 1e-6:
        raise DomainError("entries must be nonnegative and sum to 1 within 1e-6")
    return float(-(prob * np.log(np.maximum(prob, PROB_FLOOR))).sum())


def _entropy_rows(probs):
    return -(probs * np.log(np.maximum(probs, PROB_FLOOR))).sum(axis=1)


def ensemble_entropy_scores(models, features) -> np.ndarray:
    """Entropy of the model-averaged predictive distribution, per row."""
    if not models:
        raise ConfigurationError("need at least one model in the ensemble")
    dims = models[0].layer_dims
    if any(m.layer_dims != dims for m in models):
        raise ShapeError("all ensemble members must share layer dims")
    mean_probs = model.predict_proba(models[0], features)
    if len(models) > 1:
        mean_probs = mean_probs.copy()
        for member in models[1:]:
            mean_probs += model.predict_proba(member, features)
        mean_probs /= len(models)
    return _entropy_rows(mean_probs)


def select_top_k(scores, indices, k) -> np.ndarray:
    """Indices of the k largest scores; ties go to the smaller index."""
    scores = np.asarray(scores, dtype=np.float64)
    indices = np.asarray(indices, dtype=np.int64)
    if scores.shape != indices.shape:
        raise ShapeError("scores and indices must have equal length")
    if k < 0:
        raise ConfigurationError(f"k must be >= 0, got {k}")
    k = min(int(k), len(indices))
    if k == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((indices, -scores))
    return indices[order[:k]]


def query(strategy, pool: PoolState, local_params, global_params, budget,
          features, rng_stream) -> np.ndarray:
    """Select up to ``budget`` unlabeled indices under the given strategy.

    ``features`` is the client's full training feature matrix; scores are
    computed on the unlabeled rows only.
    """
    strategy = Strategy(strategy)
    if budget < 0:
        raise ConfigurationError(f"budget must be >= 0, got {budget}")
    take = min(int(budget), pool.n_unlabeled)
    if take == 0:
        return np.empty(0, dtype=np.int64)
    candidates = pool.unlabeled
    if strategy is Strategy.RANDOM:
        chosen = rng_stream.choice(candidates, size=take, replace=False)
        return np.sort(chosen).astype(np.int64)
    if strategy is Strategy.LOCAL_ENTROPY:
        members = [local_params]
    elif strategy is Strategy.GLOBAL_ENTROPY:
        members = [global_params]
    else:
        members = [local_params, global_params]
    if any(m is None for m in members):
        raise ProtocolError(f"strategy {strategy.value} requires models that do not exist yet")
    scores = ensemble_entropy_scores(members, features[candidates])
    return select_top_k(scores, candidates, take)


def annotate_and_move(pool: PoolState, selected) -> PoolState:
    """Move selected indices from unlabeled to labeled (oracle annotation)."""
    selected = np.asarray(selected, dtype=np.int64)
    if selected.size == 0:
        return pool
    if len(np.unique(selected)) != len(selected):
        raise ProtocolError("selected indices contain duplicates")
    if np.setdiff1d(selected, pool.unlabeled).size:
        raise ProtocolError("selected indices must come from the unlabeled pool")
    labeled = np.sort(np.concatenate([pool.labeled, selected]))
    unlabeled = np.setdiff1d(pool.unlabeled, selected)
    return PoolState(labeled, unlabeled, pool.initial_unlabeled_count)


def init_pool(labels, init_label_fraction, num_classes, rng_stream) -> PoolState:
    """Seed the labeled set: one instance of each present class where
    available, then uniform fill to max(floor(fraction * n), num_classes)."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n == 0:
        raise ConfigurationError("cannot initialize a pool with no training samples")
    if not 0.0 < init_label_fraction <= 1.0:
        raise ConfigurationError(
            f"init_label_fraction must be in (0, 1], got {init_label_fraction}")
    target = min(n, max(int(math.floor(init_label_fraction * n + _FLOOR_EPS)), num_classes))
    chosen = []
    for c in range(num_classes):
        members = np.flatnonzero(labels == c)
        if members.size:
            chosen.append(int(rng_stream.choice(members)))
    chosen = list(dict.fromkeys(chosen))[:target]
    remaining = np.setdiff1d(np.arange(n), np.asarray(chosen, dtype=np.int64))
    fill = target - len(chosen)
    if fill > 0:
        chosen.extend(int(i) for i in rng_stream.choice(remaining, size=fill, replace=False))
    labeled = np.sort(np.asarray(chosen, dtype=np.int64))
    unlabeled = np.setdiff1d(np.arange(n), labeled)
    return PoolState(labeled, unlabeled, len(unlabeled))
