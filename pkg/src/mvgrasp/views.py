"""Entropy-based ranking of depth views for grasping.

A view is scored by the Shannon entropy (in bits) of its normalized pixel
distribution; views that spread mass over more of the window carry more
surface information, and the top-entropy view is the one handed to grasp
synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import EmptyViewError
from .projection import DepthView


@dataclass(frozen=True)
class ViewScore:
    view_index: int
    entropy_bits: float


def normalize_view(view: DepthView, occupancy: bool = False) -> np.ndarray:
    """Return the k x k probability grid p = grid / sum(grid).

    With occupancy=True the depth values are ignored and mass is spread
    uniformly over occupied bins instead.
    """
    total = view.grid.sum()
    if total <= 0.0:
        raise EmptyViewError("view has no occupied bin")
    if occupancy:
        occ = view.occupied
        return occ / occ.sum()
    return view.grid / total


def view_entropy(view: DepthView, occupancy: bool = False) -> float:
    """Shannon entropy in bits of the normalized view; empty bins contribute
    nothing (0 log 0 := 0)."""
    p = normalize_view(view, occupancy=occupancy)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def rank_views(views: List[DepthView], occupancy: bool = False) -> List[ViewScore]:
    """Score every view and sort by descending entropy, ties broken by the
    lowest view index. The first entry is the grasp view."""
    if not views:
        raise ValueError("need at least one view to rank")
    scores = [
        ViewScore(view_index=i, entropy_bits=view_entropy(v, occupancy=occupancy))
        for i, v in enumerate(views)
    ]
    return sorted(scores, key=lambda s: (-s.entropy_bits, s.view_index))
