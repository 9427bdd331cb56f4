"""Incremental Bayesian category learner.

Each category keeps only an instance count n and an accumulator vector a
(the componentwise sum of every absorbed feature vector), so an instance
can be folded in and forgotten. Priors are n/N, per-component likelihoods
are the Laplace-smoothed average probability (a_i + lambda) / (n + lambda*d),
and classification takes the maximum of

    log P(C) + sum_i x_i * log P(x_i | C)

over all known categories.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import FormatError, NoKnowledgeError, UnknownCategoryError
from .features import FeatureVector

DEFAULT_SMOOTHING = 0.01
KB_SCHEMA_VERSION = 1


@dataclass
class CategoryModel:
    label: str
    n: int
    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64).reshape(-1)


@dataclass(frozen=True)
class Prediction:
    """Classification outcome: the argmax label and the per-label scores."""

    label: str
    log_scores: Dict[str, float]


def argmax_label(log_scores: Dict[str, float]) -> str:
    """Deterministic argmax: ties go to the lexicographically smallest label."""
    best = None
    best_score = -math.inf
    for label in sorted(log_scores):
        if log_scores[label] > best_score:
            best, best_score = label, log_scores[label]
    if best is None:
        raise ValueError("no scores to take argmax over")
    return best


class KnowledgeBase:
    """Mutable store of category models.

    teach/correct must be serialized by the caller; classify and likelihood
    only read. The feature dimension is fixed by the first taught instance.
    """

    def __init__(self, smoothing: float = DEFAULT_SMOOTHING):
        if smoothing <= 0.0:
            raise ValueError("smoothing constant must be > 0")
        self.smoothing = float(smoothing)
        self.d: Optional[int] = None
        self.categories: Dict[str, CategoryModel] = {}

    @property
    def n_total(self) -> int:
        """Total instances absorbed across all categories (N)."""
        return sum(c.n for c in self.categories.values())

    @property
    def labels(self) -> List[str]:
        return sorted(self.categories)

    def prior(self, label: str) -> float:
        cat = self._category(label)
        return cat.n / self.n_total

    def _category(self, label: str) -> CategoryModel:
        if label not in self.categories:
            raise UnknownCategoryError(f"unknown category {label!r}")
        return self.categories[label]

    def _check_instance(self, x: FeatureVector) -> None:
        if self.d is not None and x.d != self.d:
            raise ValueError(f"feature dimension {x.d} != knowledge base dimension {self.d}")

    def teach(self, label: str, instances: List[FeatureVector]) -> "KnowledgeBase":
        """Introduce or extend a category with a batch of instances. Updating
        N implicitly refreshes the priors of every category."""
        if not instances:
            raise ValueError("teach needs at least one instance")
        for x in instances:
            self._check_instance(x)
        if self.d is None:
            self.d = instances[0].d
        cat = self.categories.get(label)
        if cat is None:
            cat = CategoryModel(label=label, n=0, a=np.zeros(self.d))
            self.categories[label] = cat
        for x in instances:
            cat.a += x.values
            cat.n += 1
        return self

    def correct(self, label: str, instance: FeatureVector) -> "KnowledgeBase":
        """Fold the mistaken instance into an existing category; identical
        arithmetic to a one-instance teach."""
        self._category(label)
        return self.teach(label, [instance])

    def likelihood(self, label: str, i: int) -> float:
        """Smoothed P(x_i | C): (a_i + lambda) / (n + lambda * d). i is a
        0-based component index."""
        cat = self._category(label)
        if not 0 <= i < self.d:
            raise ValueError(f"component index {i} out of range for d={self.d}")
        lam = self.smoothing
        return (cat.a[i] + lam) / (cat.n + lam * self.d)

    def log_likelihoods(self, label: str) -> np.ndarray:
        cat = self._category(label)
        lam = self.smoothing
        return np.log((cat.a + lam) / (cat.n + lam * self.d))

    def classify(self, x: FeatureVector) -> Prediction:
        if not self.categories:
            raise NoKnowledgeError("no categories taught yet")
        self._check_instance(x)
        total = self.n_total
        scores = {}
        for label, cat in self.categories.items():
            scores[label] = float(
                math.log(cat.n / total) + x.values @ self.log_likelihoods(label)
            )
        return Prediction(label=argmax_label(scores), log_scores=scores)


def save_kb(kb: KnowledgeBase, path=None) -> dict:
    """Serialize to a JSON document; floats keep full precision. Returns
    the document and writes it when a path is given."""
    doc = {
        "version": KB_SCHEMA_VERSION,
        "d": kb.d,
        "lambda": kb.smoothing,
        "N": kb.n_total,
        "categories": [
            {"label": c.label, "n": c.n, "a": [float(v) for v in c.a]}
            for c in (kb.categories[l] for l in kb.labels)
        ],
    }
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def load_kb(source) -> KnowledgeBase:
    """Rebuild a knowledge base from save_kb output (a dict, JSON text, or
    file path)."""
    if isinstance(source, dict):
        doc = source
    else:
        if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
            text = Path(source).read_text()
        else:
            text = str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"knowledge base document is not valid JSON: {exc}") from None
    try:
        if doc["version"] != KB_SCHEMA_VERSION:
            raise FormatError(
                f"unsupported knowledge base version {doc['version']!r}"
            )
        kb = KnowledgeBase(smoothing=doc["lambda"])
        kb.d = doc["d"]
        for entry in doc["categories"]:
            kb.categories[entry["label"]] = CategoryModel(
                label=entry["label"], n=entry["n"], a=np.array(entry["a"])
            )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"knowledge base document is malformed: {exc!r}") from None
    if kb.n_total != doc["N"]:
        raise FormatError("stored N does not match category counts")
    return kb
