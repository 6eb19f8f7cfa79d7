"""SMOTE class balancing on flattened pixel vectors."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BalanceError, ShapeError
from .imgdata import CLASS_NAMES, SIDE, LabeledSet

FEATURES = SIDE * SIDE * 3


@dataclass(eq=False)
class Provenance:
    """Where each synthetic row came from (indices refer to the input rows)."""
    parent: np.ndarray
    neighbor: np.ndarray
    lam: np.ndarray
    start: int  # first synthetic row in the output matrix


@dataclass(eq=False)
class FeatureMatrix:
    values: np.ndarray  # [n, d]
    labels: np.ndarray  # [n]
    provenance: Provenance | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2 or self.values.shape[0] != self.labels.shape[0]:
            raise ShapeError(f"values {self.values.shape} vs labels {self.labels.shape}")

    def __len__(self):
        return len(self.labels)


@dataclass
class BalancePlan:
    current: list
    target: list
    k: int = 5

    def __post_init__(self):
        if len(self.current) != len(self.target):
            raise BalanceError("current and target counts differ in length")
        if any(t < c for c, t in zip(self.current, self.target)):
            raise BalanceError("targets must not be below current counts")

    @classmethod
    def to_majority(cls, labels, k: int = 5, n_classes: int = len(CLASS_NAMES)):
        current = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes).tolist()
        return cls(current, [max(current)] * n_classes, k)

    def describe(self) -> str:
        before = "/".join(str(c) for c in self.current)
        targets = set(self.target)
        after = f"{self.target[0]} each" if len(targets) == 1 else "/".join(map(str, self.target))
        return f"{before} → {after}"


def flatten_images(data: LabeledSet) -> FeatureMatrix:
    return FeatureMatrix(data.images.reshape(len(data), -1), data.labels.copy())


def restore_tensor4d(features: FeatureMatrix) -> LabeledSet:
    if features.values.shape[1] != FEATURES:
        raise ShapeError(f"expected {FEATURES} features per row, got {features.values.shape[1]}")
    return LabeledSet(features.values.reshape(-1, SIDE, SIDE, 3), features.labels.copy())


def _neighbors(x: np.ndarray, k: int) -> np.ndarray:
    """k nearest rows of ``x`` for every row of ``x``, self excluded."""
    x = x.astype(np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps lower indices first among equal distances
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def knn_indices(features: FeatureMatrix, class_id: int, k: int = 5) -> np.ndarray:
    """Same-class nearest neighbours for every member of ``class_id``.

    Returns ``[members, k]`` indices into the full feature matrix. A class
    with ``k`` or fewer members has ``k`` clamped to ``size - 1``.
    """
    members = np.flatnonzero(features.labels == class_id)
    if len(members) < 2:
        raise BalanceError(f"class {class_id} has {len(members)} member(s); need at least 2")
    if len(members) <= k:
        warnings.warn(f"class {class_id} has {len(members)} members; k reduced from {k} "
                      f"to {len(members) - 1}")
        k = len(members) - 1
    return members[_neighbors(features.values[members], k)]


def smote_oversample(features: FeatureMatrix, plan: BalancePlan | None = None,
                     seed: int = 42) -> FeatureMatrix:
    """Append synthetic rows until each class reaches its target count.

    Original rows come first, unchanged; synthetic rows follow, grouped by
    class in label order. Each synthetic row is ``x + lam * (nn - x)`` for a
    random member ``x``, one of its k nearest same-class neighbours ``nn``
    and ``lam ~ U[0, 1)``.
    """
    plan = plan or BalancePlan.to_majority(features.labels)
    counts = np.bincount(features.labels, minlength=len(plan.current)).tolist()
    if counts != list(plan.current):
        raise BalanceError(f"plan expects counts {plan.current}, data has {counts}")
    rng = np.random.default_rng(seed)
    new_rows, new_labels, parents, nbrs, lams = [], [], [], [], []
    for class_id, (have, want) in enumerate(zip(plan.current, plan.target)):
        need = want - have
        if need == 0:
            continue
        nn = knn_indices(features, class_id, plan.k)
        members = np.flatnonzero(features.labels == class_id)
        pick = rng.integers(len(members), size=need)
        which = rng.integers(nn.shape[1], size=need)
        lam = rng.random(need)
        p, q = members[pick], nn[pick, which]
        x = features.values[p].astype(np.float64)
        y = features.values[q].astype(np.float64)
        new_rows.append((x + lam[:, None] * (y - x)).astype(features.values.dtype))
        new_labels.append(np.full(need, class_id))
        parents.append(p)
        nbrs.append(q)
        lams.append(lam)
    if not new_rows:
        return FeatureMatrix(features.values.copy(), features.labels.copy(),
                             Provenance(np.zeros(0, int), np.zeros(0, int), np.zeros(0), len(features)))
    values = np.concatenate([features.values, *new_rows])
    labels = np.concatenate([features.labels, *new_labels])
    prov = Provenance(np.concatenate(parents), np.concatenate(nbrs), np.concatenate(lams),
                      len(features))
    return FeatureMatrix(values, labels, prov)


def balance(data: LabeledSet, k: int = 5, seed: int = 42) -> tuple[LabeledSet, BalancePlan]:
    """Flatten, oversample every class to the majority count, restore to 4-D."""
    features = flatten_images(data)
    plan = BalancePlan.to_majority(features.labels, k)
    return restore_tensor4d(smote_oversample(features, plan, seed)), plan
