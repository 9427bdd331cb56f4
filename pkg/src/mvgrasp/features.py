"""Feature vectors for the category learner.

Depth views become features by flattening the normalized grid; multi-view
features are fused by max, avg, or append pooling. Externally computed
embeddings can be ingested from CSV as drop-in replacements, shifted and
renormalized so every vector entering the learner is non-negative and sums
to one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import EmptyFeatureError, EmptyViewError, ParseError
from .geometry import (
    PointCloud,
    aabb,
    identity_frame,
    local_reference_frame,
    transform_to_frame,
)
from .projection import (
    DEFAULT_RECOGNITION_BINS,
    SCALE_INVARIANT,
    DepthView,
    ViewSetup,
    generate_cameras,
    project,
    projection_plane_side,
)

POOLING_MODES = ("max", "avg", "append")

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class FeatureVector:
    """d non-negative reals summing to 1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0:
            raise ValueError("feature dimension must be > 0")
        if np.any(v < 0.0):
            raise ValueError("feature values must be non-negative")
        if abs(v.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"feature values must sum to 1, got {v.sum()!r}")
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.size


def _normalized(values: np.ndarray) -> FeatureVector:
    total = values.sum()
    if total <= 0.0:
        raise EmptyFeatureError("cannot normalize an all-zero feature")
    return FeatureVector(values=values / total)


def view_to_feature(view: DepthView) -> FeatureVector:
    """Row-major flattened normalized grid; d = k*k."""
    total = view.grid.sum()
    if total <= 0.0:
        raise EmptyViewError("view has no occupied bin")
    return FeatureVector(values=view.grid.reshape(-1) / total)


def pool_features(features: List[FeatureVector], mode: str) -> FeatureVector:
    """Fuse per-view features into one vector.

    max: elementwise max, renormalized; avg: elementwise mean; append:
    concatenation in input order, renormalized (d multiplies by the view
    count). max and avg are order-insensitive, append is not.
    """
    if mode not in POOLING_MODES:
        raise ValueError(f"pooling mode must be one of {POOLING_MODES}, got {mode!r}")
    if not features:
        raise ValueError("need at least one feature to pool")
    d = features[0].d
    if any(f.d != d for f in features):
        raise ValueError("all features must share the same dimension")
    stack = np.stack([f.values for f in features])
    if mode == "avg":
        return FeatureVector(values=stack.mean(axis=0))
    if mode == "max":
        return _normalized(stack.max(axis=0))
    return _normalized(stack.reshape(-1))


def load_embeddings(path) -> Dict[str, FeatureVector]:
    """Read a CSV of `id,v_1,...,v_d` rows into feature vectors.

    Rows containing negative components are shifted by their minimum before
    normalization, so any real-valued embedding becomes a valid feature.
    A leading header row is skipped if its value columns are non-numeric.
    """
    out: Dict[str, FeatureVector] = {}
    d = None
    with open(path, newline="") as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) < 2:
                raise ParseError("row needs an id and at least one value", line=rowno)
            try:
                values = np.array([float(t) for t in row[1:]])
            except ValueError:
                if rowno == 1:
                    continue  # header
                raise ParseError(f"non-numeric value in row {row[0]!r}", line=rowno) from None
            if d is None:
                d = values.size
            elif values.size != d:
                raise ParseError(
                    f"row {row[0]!r} has {values.size} values, expected {d}", line=rowno
                )
            if values.min() < 0.0:
                values = values - values.min()
            if values.sum() <= 0.0:
                raise EmptyFeatureError(f"row {row[0]!r} is all zero")
            out[row[0]] = FeatureVector(values=values / values.sum())
    if not out:
        raise ParseError("no embedding rows found", line=1)
    return out


def save_features(features: Dict[str, FeatureVector], path) -> None:
    """Descriptor dump, one `id,d,values...` row per feature."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for fid in features:
            f = features[fid]
            writer.writerow([fid, f.d] + [f"{v:.17g}" for v in f.values])


def render_views(
    cloud: PointCloud,
    setup: Optional[ViewSetup] = None,
    *,
    bins: int = DEFAULT_RECOGNITION_BINS,
    mode: str = SCALE_INVARIANT,
    distance: float = 1.0,
) -> List[DepthView]:
    """Render the rig's views of a cloud expressed in its own frame.

    The cloud is transformed into its local reference frame, the window side
    comes from the projection mode, and one view is rendered per camera.
    """
    if setup is None:
        setup = ViewSetup.orthographic()
    frame = local_reference_frame(cloud)
    local = transform_to_frame(cloud, frame)
    side = projection_plane_side(mode, aabb(local))
    cameras = generate_cameras(
        setup, frame=identity_frame(), distance=distance, plane_side=side, bins=bins
    )
    return [project(local, cam, mode=mode) for cam in cameras]


def describe_cloud(
    cloud: PointCloud,
    setup: Optional[ViewSetup] = None,
    *,
    bins: int = DEFAULT_RECOGNITION_BINS,
    pooling: str = "avg",
) -> FeatureVector:
    """Full recognition descriptor: render scale-invariant views in the
    object's own frame, convert each to a feature, pool."""
    views = render_views(cloud, setup, bins=bins, mode=SCALE_INVARIANT)
    return pool_features([view_to_feature(v) for v in views], mode=pooling)
