"""Simulated-user evaluation loop for open-ended category learning.

A scripted teacher introduces categories one at a time, quizzes the learner
on unseen instances of the categories taught so far, and supplies the true
label after each mistake. A new category is introduced once the sliding
window of recent answers clears an accuracy threshold; the run stops when
either no progress is made for a fixed number of iterations (breakpoint) or
the teacher runs out of material (lack of data).

The report carries the usual run metrics:

  qci  question/correction iterations (one per ask, corrections included)
  alc  learned categories at the end of the run
  aic  absorbed instances per category (teach + correct)
  gca  global accuracy over every ask of the run
  apa  mean window accuracy over the moments the threshold was checked
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParseError
from .features import FeatureVector, describe_cloud, load_embeddings
from .geometry import load_cloud
from .learner import KnowledgeBase

STOP_BREAKPOINT = "breakpoint"
STOP_LACK_OF_DATA = "lack_of_data"

_CLOUD_SUFFIXES = (".xyz", ".ply")


@dataclass(frozen=True)
class ProtocolConfig:
    tau: float = 0.75
    window_factor: int = 3
    breakpoint_iters: int = 100
    instances_per_teach: int = 3
    max_runs: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie strictly between 0 and 1")
        if self.window_factor < 1:
            raise ValueError("window_factor must be >= 1")
        if self.breakpoint_iters < 1:
            raise ValueError("breakpoint_iters must be >= 1")
        if self.instances_per_teach < 1:
            raise ValueError("instances_per_teach must be >= 1")
        if self.max_runs < 1:
            raise ValueError("max_runs must be >= 1")


@dataclass(frozen=True)
class Instance:
    """One labelled example; ids keep teach/ask/correct bookkeeping honest."""

    id: str
    label: str
    x: FeatureVector


class DatasetHandle:
    """Label -> instances, every category nonempty, labels iterated sorted."""

    def __init__(self, categories: Dict[str, List[Instance]]):
        if not categories:
            raise ValueError("dataset has no categories")
        for label, instances in categories.items():
            if not instances:
                raise ValueError(f"category {label!r} has no instances")
        self.categories = {label: list(categories[label]) for label in sorted(categories)}

    @property
    def labels(self) -> List[str]:
        return list(self.categories)

    def size(self, label: str) -> int:
        return len(self.categories[label])

    @classmethod
    def from_feature_map(cls, features: Dict[str, List[FeatureVector]]) -> "DatasetHandle":
        cats = {
            label: [
                Instance(id=f"{label}/{i}", label=label, x=x)
                for i, x in enumerate(vectors)
            ]
            for label, vectors in features.items()
        }
        return cls(cats)


@dataclass(frozen=True)
class TimelineEvent:
    """One protocol step. `iteration` is the ask count when the event fired;
    teach rows are one per absorbed instance."""

    iteration: int
    event: str  # teach | ask | correct
    label: str
    predicted: Optional[str] = None
    correct: Optional[bool] = None


@dataclass(frozen=True)
class ProtocolReport:
    qci: int
    alc: int
    aic: float
    gca: float
    apa: float
    stop_reason: str
    timeline: Tuple[TimelineEvent, ...]
    window_samples: Tuple[float, ...]
    seed: int


def sliding_accuracy(
    results: Sequence[bool], n: int, window_factor: int = 3
) -> Optional[float]:
    """Fraction correct over the last window_factor*n ask results.

    Before a full window exists the fraction is taken over everything
    available; with no results at all there is no defined accuracy and the
    caller gets None (keep asking).
    """
    if n < 1:
        raise ValueError("known-category count must be >= 1")
    if not results:
        return None
    window = list(results)[-window_factor * n :]
    return sum(window) / len(window)


class _Pools:
    """Per-category unseen-instance pools; every draw consumes."""

    def __init__(self, data: DatasetHandle):
        self.data = data
        self.remaining = {label: list(range(data.size(label))) for label in data.labels}

    def draw_for_teach(self, label: str, count: int, rng) -> List[Instance]:
        pool = self.remaining[label]
        picked = []
        for _ in range(min(count, len(pool))):
            picked.append(pool.pop(int(rng.integers(len(pool)))))
        return [self.data.categories[label][i] for i in picked]

    def draw_for_ask(self, known: List[str], rng) -> Optional[Instance]:
        candidates = [
            (label, i) for label in known for i in self.remaining[label]
        ]
        if not candidates:
            return None
        label, i = candidates[int(rng.integers(len(candidates)))]
        self.remaining[label].remove(i)
        return self.data.categories[label][i]


def run_experiment(config: ProtocolConfig, data: DatasetHandle) -> ProtocolReport:
    """Run one seeded teach/ask/correct experiment to termination."""
    if max(data.size(l) for l in data.labels) < config.instances_per_teach + 1:
        raise ValueError(
            "dataset needs at least one category with "
            f"{config.instances_per_teach + 1} instances"
        )

    rng = np.random.default_rng(config.seed)
    intro_order = [data.labels[i] for i in rng.permutation(len(data.labels))]
    pools = _Pools(data)
    kb = KnowledgeBase()

    timeline: List[TimelineEvent] = []
    results: List[bool] = []
    window_samples: List[float] = []
    iteration = 0
    asks_since_teach = 0
    next_intro = 0

    def teach_next() -> None:
        nonlocal next_intro, asks_since_teach
        label = intro_order[next_intro]
        next_intro += 1
        instances = pools.draw_for_teach(label, config.instances_per_teach, rng)
        kb.teach(label, [inst.x for inst in instances])
        for _ in instances:
            timeline.append(TimelineEvent(iteration=iteration, event="teach", label=label))
        asks_since_teach = 0

    teach_next()
    stop_reason = None
    while stop_reason is None:
        n = len(kb.categories)
        # Threshold check: needs at least n answers since the last teach so a
        # category is never introduced off one lucky prediction.
        if asks_since_teach >= n:
            acc = sliding_accuracy(results, n, config.window_factor)
            if acc is not None:
                window_samples.append(acc)
                if acc > config.tau:
                    if next_intro < len(intro_order):
                        teach_next()
                        continue
                    stop_reason = STOP_LACK_OF_DATA
                    break

        instance = pools.draw_for_ask(list(kb.categories), rng)
        if instance is None:
            stop_reason = STOP_LACK_OF_DATA
            break
        iteration += 1
        asks_since_teach += 1
        prediction = kb.classify(instance.x)
        hit = prediction.label == instance.label
        results.append(hit)
        timeline.append(
            TimelineEvent(
                iteration=iteration,
                event="ask",
                label=instance.label,
                predicted=prediction.label,
                correct=hit,
            )
        )
        if not hit:
            kb.correct(instance.label, instance.x)
            timeline.append(
                TimelineEvent(iteration=iteration, event="correct", label=instance.label)
            )
        if asks_since_teach >= config.breakpoint_iters:
            stop_reason = STOP_BREAKPOINT

    return _report_from_timeline(
        timeline, window_samples, stop_reason, config.seed
    )


def _report_from_timeline(
    timeline: List[TimelineEvent],
    window_samples: List[float],
    stop_reason: str,
    seed: int,
) -> ProtocolReport:
    """Metrics are derived from the timeline itself, so the report is
    self-consistent by construction."""
    asks = [e for e in timeline if e.event == "ask"]
    absorbed = sum(1 for e in timeline if e.event in ("teach", "correct"))
    labels = {e.label for e in timeline if e.event == "teach"}
    alc = len(labels)
    return ProtocolReport(
        qci=len(asks),
        alc=alc,
        aic=absorbed / alc if alc else 0.0,
        gca=sum(e.correct for e in asks) / len(asks) if asks else 0.0,
        apa=float(np.mean(window_samples)) if window_samples else 0.0,
        stop_reason=stop_reason,
        timeline=tuple(timeline),
        window_samples=tuple(window_samples),
        seed=seed,
    )


def run_many(config: ProtocolConfig, data: DatasetHandle) -> List[ProtocolReport]:
    """max_runs independent experiments seeded seed, seed+1, ..."""
    reports = []
    for i in range(config.max_runs):
        cfg = ProtocolConfig(
            tau=config.tau,
            window_factor=config.window_factor,
            breakpoint_iters=config.breakpoint_iters,
            instances_per_teach=config.instances_per_teach,
            max_runs=config.max_runs,
            seed=config.seed + i,
        )
        reports.append(run_experiment(cfg, data))
    return reports


def aggregate_runs(reports: Sequence[ProtocolReport]) -> Dict[str, Dict[str, float]]:
    """Per-metric mean and (population) standard deviation across runs."""
    if not reports:
        raise ValueError("nothing to aggregate")
    out = {}
    for metric in ("qci", "alc", "aic", "gca", "apa"):
        vals = np.array([getattr(r, metric) for r in reports], dtype=np.float64)
        out[metric] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out


# ---------------------------------------------------------------------------
# datasets


def gaussian_dataset(
    labels: Sequence[str],
    instances_per_category: int,
    d: int = 16,
    noise: float = 0.01,
    seed: int = 0,
) -> DatasetHandle:
    """Synthetic well-separated clusters: category k gets most of its
    probability mass on component k plus small Gaussian jitter, so a
    handful of examples suffices to tell the categories apart."""
    if len(labels) > d:
        raise ValueError("need d >= number of categories for disjoint clusters")
    rng = np.random.default_rng(seed)
    features: Dict[str, List[FeatureVector]] = {}
    for k, label in enumerate(labels):
        mean = np.full(d, 0.4 / d)
        mean[k] += 0.6
        rows = []
        for _ in range(instances_per_category):
            v = np.clip(mean + rng.normal(0.0, noise, size=d), 1e-9, None)
            rows.append(FeatureVector(values=v / v.sum()))
        features[label] = rows
    return DatasetHandle.from_feature_map(features)


def constant_dataset(
    labels: Sequence[str], instances_per_category: int, d: int = 16
) -> DatasetHandle:
    """Every instance of every category is the identical uniform vector;
    no learner can tell the categories apart."""
    x = FeatureVector(values=np.full(d, 1.0 / d))
    return DatasetHandle.from_feature_map(
        {label: [x] * instances_per_category for label in labels}
    )


def load_dataset(root, **describe_kwargs) -> DatasetHandle:
    """Directory dataset: one subdirectory per category holding feature CSVs
    and/or point-cloud files (rendered to descriptors on the fly)."""
    root = Path(root)
    if not root.is_dir():
        raise ParseError(f"dataset root {root} is not a directory")
    categories: Dict[str, List[Instance]] = {}
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        label = sub.name
        instances: List[Instance] = []
        for f in sorted(sub.iterdir()):
            if f.suffix == ".csv":
                for fid, x in load_embeddings(f).items():
                    instances.append(
                        Instance(id=f"{label}/{f.name}#{fid}", label=label, x=x)
                    )
            elif f.suffix in _CLOUD_SUFFIXES:
                x = describe_cloud(load_cloud(f), **describe_kwargs)
                instances.append(Instance(id=f"{label}/{f.name}", label=label, x=x))
        if instances:
            categories[label] = instances
    if not categories:
        raise ParseError(f"no category directories with instances under {root}")
    return DatasetHandle(categories)


# ---------------------------------------------------------------------------
# report IO


def report_to_json(report: ProtocolReport) -> dict:
    return {
        "seed": report.seed,
        "qci": report.qci,
        "alc": report.alc,
        "aic": report.aic,
        "gca": report.gca,
        "apa": report.apa,
        "stop_reason": report.stop_reason,
        "window_samples": list(report.window_samples),
        "timeline": [
            {
                "iteration": e.iteration,
                "event": e.event,
                "label": e.label,
                "predicted": e.predicted,
                "correct": e.correct,
            }
            for e in report.timeline
        ],
    }


def write_report(report: ProtocolReport, path) -> None:
    Path(path).write_text(json.dumps(report_to_json(report), indent=2) + "\n")


def write_timeline_csv(report: ProtocolReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "event", "label", "predicted", "correct"])
        for e in report.timeline:
            writer.writerow(
                [
                    e.iteration,
                    e.event,
                    e.label,
                    "" if e.predicted is None else e.predicted,
                    "" if e.correct is None else int(e.correct),
                ]
            )
