"""Antipodal grasp synthesis on depth views.

Candidates live on view pixels as (center, rotation, width, quality)
tuples. A candidate back-projects to a full 6-DoF pose: the gripper
approaches along the view's depth axis, the closing line starts parallel
to the view's u axis and turns counterclockwise with the rotation angle,
and the grasp point sits at the minimum depth within a small disk around
the chosen pixel. Fitness blends three equally-weighted terms — how many
points end up between the fingers, how well their normals oppose the
closing axis, and how close the pixel is to the view center — and a
simulated-annealing pass over rotation and width polishes each sampled
candidate before it is written into per-pixel quality/rotation/width maps.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    EmptyMapError,
    EmptyNeighborhoodError,
    EmptyViewError,
    FormatError,
)
from .geometry import (
    PointCloud,
    estimate_normals,
    identity_frame,
    local_reference_frame,
    transform_to_frame,
)
from .projection import (
    DEFAULT_GRASP_BINS,
    FIXED_SIZE,
    FIXED_PLANE_SIDE_M,
    DepthView,
    ViewSetup,
    generate_cameras,
    project,
)
from .views import rank_views

DELTA_M = 0.025  # grasp-depth neighborhood radius

DEFAULT_MAX_WIDTH_M = 0.140
DEFAULT_FINGER_THICKNESS_M = 0.02
DEFAULT_FINGER_DEPTH_M = 0.04

IOU_THRESHOLD = 0.25
ANGLE_THRESHOLD_RAD = math.radians(30.0)


@dataclass(frozen=True)
class GripperGeometry:
    """Two-finger parallel gripper; the default stroke matches a 140 mm
    commodity gripper, the finger dimensions are stand-ins."""

    max_width_m: float = DEFAULT_MAX_WIDTH_M
    finger_thickness_m: float = DEFAULT_FINGER_THICKNESS_M
    finger_depth_m: float = DEFAULT_FINGER_DEPTH_M

    def __post_init__(self):
        if min(self.max_width_m, self.finger_thickness_m, self.finger_depth_m) <= 0:
            raise ValueError("gripper dimensions must all be positive")


@dataclass(frozen=True)
class GraspCandidate:
    center_px: Tuple[int, int]
    rotation_rad: float
    width_m: float
    quality: float = 0.0

    def __post_init__(self):
        u, v = self.center_px
        if u < 0 or v < 0:
            raise ValueError("pixel center must be non-negative")
        if self.width_m < 0:
            raise ValueError("width must be >= 0")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError("quality must lie in [0, 1]")


@dataclass(frozen=True)
class GraspPose:
    """6-DoF grasp in the cloud's frame plus the opening width: grasp point,
    unit approach axis, unit closing axis (perpendicular to approach)."""

    point: np.ndarray
    approach: np.ndarray
    closing: np.ndarray
    width_m: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64).reshape(3))
        object.__setattr__(self, "approach", np.asarray(self.approach, dtype=np.float64).reshape(3))
        object.__setattr__(self, "closing", np.asarray(self.closing, dtype=np.float64).reshape(3))
        for axis in (self.approach, self.closing):
            if abs(np.linalg.norm(axis) - 1.0) > 1e-6:
                raise ValueError("pose axes must be unit vectors")
        if abs(self.approach @ self.closing) > 1e-6:
            raise ValueError("closing axis must be perpendicular to the approach axis")
        if self.width_m < 0:
            raise ValueError("width must be >= 0")

    @property
    def lateral(self) -> np.ndarray:
        return np.cross(self.approach, self.closing)


@dataclass(frozen=True)
class GraspMap:
    """Per-pixel quality / rotation / width grids over one depth view."""

    quality: np.ndarray
    rotation: np.ndarray
    width: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quality, dtype=np.float64)
        object.__setattr__(self, "quality", q)
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "width", np.asarray(self.width, dtype=np.float64))
        if not (self.quality.shape == self.rotation.shape == self.width.shape):
            raise ValueError("quality, rotation and width grids must share a shape")
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("grasp map grids must be square")
        finite = q[np.isfinite(q)]
        if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
            raise ValueError("quality values must lie in [0, 1]")

    @property
    def bins(self) -> int:
        return self.quality.shape[0]


@dataclass(frozen=True)
class GraspRect:
    """Oriented grasp rectangle: width spans the opening direction, height
    the finger thickness; angle turns the width direction from the u axis."""

    center: np.ndarray
    angle_rad: float
    width: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(2))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("rectangle sides must be positive")

    def corners(self) -> np.ndarray:
        """4x2 corner array, counterclockwise."""
        c, s = math.cos(self.angle_rad), math.sin(self.angle_rad)
        rot = np.array([[c, -s], [s, c]])
        half = np.array(
            [
                [-self.width / 2, -self.height / 2],
                [self.width / 2, -self.height / 2],
                [self.width / 2, self.height / 2],
                [-self.width / 2, self.height / 2],
            ]
        )
        return self.center + half @ rot.T


@dataclass(frozen=True)
class AnnealSchedule:
    t0: float = 0.1
    cooling: float = 0.95
    iters: int = 300
    seed: object = 0
    sigma_rot: float = 0.2
    sigma_width: float = 0.01

    def __post_init__(self):
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling must lie in (0, 1)")
        if self.iters < 0:
            raise ValueError("iteration count must be >= 0")


# ---------------------------------------------------------------------------
# depth lookup and back-projection


def grasp_depth(view: DepthView, center: Tuple[int, int], delta_m: float = DELTA_M) -> float:
    """Minimum depth over occupied bins within delta of the center pixel
    (distance measured between bin centers on the projection plane)."""
    u, v = center
    k = view.bins
    if not (0 <= u < k and 0 <= v < k):
        raise ValueError(f"center {center} outside a {k}x{k} view")
    if delta_m < 0:
        raise ValueError("delta must be >= 0")
    delta_px = delta_m * k / view.camera.plane_side
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    near = (ii - u) ** 2 + (jj - v) ** 2 <= delta_px**2
    depths = view.grid[near & (view.grid > 0.0)]
    if depths.size == 0:
        raise EmptyNeighborhoodError(
            f"no occupied bin within {delta_m} m of pixel {center}"
        )
    return float(depths.min())


def pixel_to_plane(view: DepthView, u: int, v: int) -> Tuple[float, float]:
    """Bin-center coordinates on the projection plane, in meters."""
    l, k = view.camera.plane_side, view.bins
    return (u + 0.5) * l / k - l / 2, (v + 0.5) * l / k - l / 2


def back_project(
    candidate: GraspCandidate, view: DepthView, delta_m: float = DELTA_M
) -> GraspPose:
    """Lift a pixel candidate to a 6-DoF pose in the cloud's frame: approach
    along the view axis, grasp point at the neighborhood minimum depth."""
    u, v = candidate.center_px
    a, b = pixel_to_plane(view, u, v)
    depth = grasp_depth(view, (u, v), delta_m)
    axes = view.camera.pose.axes
    point = view.camera.pose.origin + axes @ np.array([a, b, depth])
    phi = candidate.rotation_rad
    closing = math.cos(phi) * axes[:, 0] + math.sin(phi) * axes[:, 1]
    return GraspPose(
        point=point, approach=axes[:, 2], closing=closing, width_m=candidate.width_m
    )


# ---------------------------------------------------------------------------
# fitness


def _normalize_weights(weights: Optional[Sequence[float]]) -> np.ndarray:
    if weights is None:
        return np.full(3, 1.0 / 3.0)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (3,) or w.min() < 0 or w.sum() <= 0:
        raise ValueError("need three non-negative weights")
    return w / w.sum()


def captured_mask(cloud: PointCloud, pose: GraspPose, grip: GripperGeometry) -> np.ndarray:
    """Points inside the closing volume: between the fingertips along the
    closing axis, within the finger breadth laterally, and within one finger
    length past the grasp point along the approach."""
    rel = cloud.points - pose.point
    c = rel @ pose.closing
    l = rel @ pose.lateral
    a = rel @ pose.approach
    return (
        (np.abs(c) <= pose.width_m / 2)
        & (np.abs(l) <= grip.finger_thickness_m / 2)
        & (a >= 0.0)
        & (a <= grip.finger_depth_m)
    )


def fitness(
    cloud: PointCloud,
    pose: GraspPose,
    grip: GripperGeometry,
    view: DepthView,
    weights: Optional[Sequence[float]] = None,
) -> float:
    """Grasp quality in [0, 1].

    coverage: captured points / all points. stability: mean |cos| between
    captured normals and the closing axis (0 when nothing is captured).
    centering: 1 - (in-plane distance of the grasp point to the view
    center) / (plane half-diagonal), linear falloff, floored at 0.
    """
    if not cloud.has_normals:
        raise ValueError("fitness needs per-point normals")
    w = _normalize_weights(weights)

    inside = captured_mask(cloud, pose, grip)
    coverage = inside.sum() / len(cloud)
    if inside.any():
        stability = float(np.mean(np.abs(cloud.normals[inside] @ pose.closing)))
    else:
        stability = 0.0

    rel = pose.point - view.camera.pose.origin
    axes = view.camera.pose.axes
    dist = math.hypot(rel @ axes[:, 0], rel @ axes[:, 1])
    half_diag = view.camera.plane_side / 2 * math.sqrt(2.0)
    centering = max(0.0, 1.0 - dist / half_diag)

    return float(w @ [coverage, stability, centering])


# ---------------------------------------------------------------------------
# sampling and annealing


def sample_candidates(
    view: DepthView,
    count: int,
    seed: int,
    grip: GripperGeometry = GripperGeometry(),
) -> List[GraspCandidate]:
    """Seeded uniform candidates: centers over occupied bins, rotations over
    [0, pi), widths over (0, max_width]."""
    if count <= 0:
        raise ValueError("candidate count must be > 0")
    occupied = np.argwhere(view.grid > 0.0)
    if occupied.size == 0:
        raise EmptyViewError("cannot sample grasp candidates on an empty view")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        u, v = occupied[int(rng.integers(len(occupied)))]
        rotation = float(rng.uniform(0.0, math.pi))
        width = float(grip.max_width_m * (1.0 - rng.random()))
        out.append(
            GraspCandidate(center_px=(int(u), int(v)), rotation_rad=rotation, width_m=width)
        )
    return out


def _pose_for(
    view: DepthView, u: int, v: int, rotation: float, width: float, depth: float
) -> GraspPose:
    a, b = pixel_to_plane(view, u, v)
    axes = view.camera.pose.axes
    point = view.camera.pose.origin + axes @ np.array([a, b, depth])
    closing = math.cos(rotation) * axes[:, 0] + math.sin(rotation) * axes[:, 1]
    return GraspPose(point=point, approach=axes[:, 2], closing=closing, width_m=width)


def anneal(
    candidate: GraspCandidate,
    cloud: PointCloud,
    grip: GripperGeometry,
    view: DepthView,
    schedule: AnnealSchedule = AnnealSchedule(),
    weights: Optional[Sequence[float]] = None,
) -> GraspCandidate:
    """Metropolis refinement of rotation and width at a fixed pixel; the
    best configuration ever visited is returned, so the result never scores
    below the input."""
    u, v = candidate.center_px
    depth = grasp_depth(view, (u, v))
    rng = np.random.default_rng(schedule.seed)

    def score(rotation: float, width: float) -> float:
        pose = _pose_for(view, u, v, rotation, width, depth)
        return fitness(cloud, pose, grip, view, weights)

    rot, width = candidate.rotation_rad % math.pi, candidate.width_m
    current = score(rot, width)
    best = (current, rot, width)
    for step in range(schedule.iters):
        t = schedule.t0 * schedule.cooling**step
        rot_p = (rot + rng.normal(0.0, schedule.sigma_rot)) % math.pi
        width_p = float(np.clip(width + rng.normal(0.0, schedule.sigma_width), 0.0, grip.max_width_m))
        proposed = score(rot_p, width_p)
        if proposed >= current or rng.random() < math.exp((proposed - current) / t):
            rot, width, current = rot_p, width_p, proposed
            if current > best[0]:
                best = (current, rot, width)
    return GraspCandidate(
        center_px=candidate.center_px,
        rotation_rad=best[1],
        width_m=best[2],
        quality=best[0],
    )


def synthesize_grasp_map(
    cloud: PointCloud,
    view: DepthView,
    grip: GripperGeometry = GripperGeometry(),
    budget: int = 64,
    seed: int = 0,
    schedule: AnnealSchedule = AnnealSchedule(),
    weights: Optional[Sequence[float]] = None,
) -> GraspMap:
    """Sample, anneal, and rasterize `budget` candidates; per pixel the
    highest quality writer wins (first writer on exact ties)."""
    candidates = sample_candidates(view, budget, seed, grip)
    k = view.bins
    q = np.zeros((k, k))
    phi = np.zeros((k, k))
    w = np.zeros((k, k))
    for i, cand in enumerate(candidates):
        refined = anneal(
            cand, cloud, grip, view, dataclasses.replace(schedule, seed=(seed, i)), weights
        )
        u, v = refined.center_px
        if refined.quality > q[u, v]:
            q[u, v] = refined.quality
            phi[u, v] = refined.rotation_rad
            w[u, v] = refined.width_m
    return GraspMap(quality=q, rotation=phi, width=w)


def best_grasp(grasp_map: GraspMap) -> GraspCandidate:
    """Candidate at the quality argmax; ties go to the smallest row-major
    index; a map with no finite quality is an error."""
    q = grasp_map.quality
    if q.size == 0 or not np.isfinite(q).any():
        raise EmptyMapError("grasp map has no finite quality value")
    flat = np.where(np.isfinite(q), q, -np.inf).reshape(-1)
    idx = int(np.argmax(flat))
    u, v = divmod(idx, grasp_map.bins)
    return GraspCandidate(
        center_px=(u, v),
        rotation_rad=float(grasp_map.rotation[u, v]),
        width_m=float(grasp_map.width[u, v]),
        quality=float(q[u, v]),
    )


# ---------------------------------------------------------------------------
# collision


def _box_corners(pose: GraspPose, c_lo, c_hi, l_half, a_lo, a_hi) -> np.ndarray:
    corners = []
    for c in (c_lo, c_hi):
        for l in (-l_half, l_half):
            for a in (a_lo, a_hi):
                corners.append(pose.point + c * pose.closing + l * pose.lateral + a * pose.approach)
    return np.array(corners)


def collision_free(
    pose: GraspPose,
    cloud: PointCloud,
    grip: GripperGeometry,
    table_height: Optional[float] = None,
) -> bool:
    """True when neither finger volume contains a cloud point and no part of
    the gripper (fingers or the palm bridging them) dips below the table
    plane z = table_height."""
    rel = cloud.points - pose.point
    c = rel @ pose.closing
    l = rel @ pose.lateral
    a = rel @ pose.approach
    half_gap = pose.width_m / 2
    in_finger = (
        (np.abs(c) > half_gap)
        & (np.abs(c) <= half_gap + grip.finger_thickness_m)
        & (np.abs(l) <= grip.finger_thickness_m / 2)
        & (a >= 0.0)
        & (a <= grip.finger_depth_m)
    )
    if in_finger.any():
        return False
    if table_height is not None:
        c_out = half_gap + grip.finger_thickness_m
        fingers_and_palm = np.vstack(
            [
                _box_corners(pose, half_gap, c_out, grip.finger_thickness_m / 2, 0.0, grip.finger_depth_m),
                _box_corners(pose, -c_out, -half_gap, grip.finger_thickness_m / 2, 0.0, grip.finger_depth_m),
                _box_corners(pose, -c_out, c_out, grip.finger_thickness_m / 2, -grip.finger_thickness_m, 0.0),
            ]
        )
        if fingers_and_palm[:, 2].min() < table_height:
            return False
    return True


# ---------------------------------------------------------------------------
# rectangle overlap


def _clip_polygon(poly: np.ndarray, edge_a: np.ndarray, edge_b: np.ndarray) -> np.ndarray:
    """Keep the part of a convex polygon left of the directed edge a->b."""
    normal = np.array([-(edge_b[1] - edge_a[1]), edge_b[0] - edge_a[0]])
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        dp = (p - edge_a) @ normal
        dq = (q - edge_a) @ normal
        if dp >= 0:
            out.append(p)
        if (dp < 0) != (dq < 0) and dp != dq:
            out.append(p + (q - p) * (dp / (dp - dq)))
    return np.array(out) if out else np.empty((0, 2))


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def rect_iou(a: GraspRect, b: GraspRect) -> float:
    """Intersection-over-union of two oriented rectangles (convex clip +
    shoelace)."""
    poly = a.corners()
    clip = b.corners()
    m = len(clip)
    for i in range(m):
        if len(poly) == 0:
            break
        poly = _clip_polygon(poly, clip[i], clip[(i + 1) % m])
    inter = _polygon_area(poly)
    union = a.width * a.height + b.width * b.height - inter
    return float(inter / union) if union > 0 else 0.0


def angle_difference(a_rad: float, b_rad: float) -> float:
    """Undirected angle between two closing lines, folded into [0, pi/2]
    (a grasp rectangle is symmetric under a half turn)."""
    d = abs(a_rad - b_rad) % math.pi
    return min(d, math.pi - d)


def iou_valid(pred: GraspRect, gt: GraspRect) -> bool:
    """Overlap strictly above 25% and angle strictly below 30 degrees."""
    return (
        rect_iou(pred, gt) > IOU_THRESHOLD
        and angle_difference(pred.angle_rad, gt.angle_rad) < ANGLE_THRESHOLD_RAD
    )


def candidate_rect(
    candidate: GraspCandidate, view: DepthView, grip: GripperGeometry = GripperGeometry()
) -> GraspRect:
    """Candidate footprint on the projection plane, in meters."""
    a, b = pixel_to_plane(view, *candidate.center_px)
    return GraspRect(
        center=np.array([a, b]),
        angle_rad=candidate.rotation_rad,
        width=max(candidate.width_m, 1e-9),
        height=grip.finger_thickness_m,
    )


# ---------------------------------------------------------------------------
# end-to-end planning


@dataclass(frozen=True)
class GraspPlan:
    view_index: int
    views: Tuple[DepthView, ...]
    entropies: Tuple[float, ...]
    grasp_map: GraspMap
    best: GraspCandidate
    pose: GraspPose
    collision_free: bool


def plan_grasp(
    cloud: PointCloud,
    grip: GripperGeometry = GripperGeometry(),
    budget: int = 64,
    seed: int = 0,
    bins: int = DEFAULT_GRASP_BINS,
    setup: Optional[ViewSetup] = None,
    schedule: AnnealSchedule = AnnealSchedule(),
    table_height: Optional[float] = None,
    normal_neighbors: int = 12,
) -> GraspPlan:
    """Full pipeline on one cloud: fixed-size views in the object's own
    frame, entropy ranking, map synthesis on the winning view, best-grasp
    extraction, collision check."""
    if setup is None:
        setup = ViewSetup.orthographic()
    frame = local_reference_frame(cloud)
    local = transform_to_frame(cloud, frame)
    if not local.has_normals:
        local = estimate_normals(local, normal_neighbors)
    cameras = generate_cameras(
        setup, identity_frame(), plane_side=FIXED_PLANE_SIDE_M, bins=bins
    )
    views = tuple(project(local, cam, mode=FIXED_SIZE) for cam in cameras)
    ranked = rank_views(list(views))
    view_index = ranked[0].view_index
    view = views[view_index]
    grasp_map = synthesize_grasp_map(
        local, view, grip, budget=budget, seed=seed, schedule=schedule
    )
    # Colliding configurations are discarded: walk the map's pixels from the
    # highest quality down and keep the first candidate whose pose is clear.
    best, pose, clear = None, None, False
    q = grasp_map.quality
    for idx in np.argsort(-q, axis=None, kind="stable"):
        u, v = divmod(int(idx), grasp_map.bins)
        if q[u, v] <= 0.0:
            break
        cand = GraspCandidate(
            center_px=(u, v),
            rotation_rad=float(grasp_map.rotation[u, v]),
            width_m=float(grasp_map.width[u, v]),
            quality=float(q[u, v]),
        )
        cand_pose = back_project(cand, view)
        if best is None:
            best, pose = cand, cand_pose  # raw argmax, the fallback answer
        if collision_free(cand_pose, local, grip, table_height):
            best, pose, clear = cand, cand_pose, True
            break
    if best is None:
        best = best_grasp(grasp_map)
        pose = back_project(best, view)
    return GraspPlan(
        view_index=view_index,
        views=views,
        entropies=tuple(s.entropy_bits for s in ranked),
        grasp_map=grasp_map,
        best=best,
        pose=pose,
        collision_free=clear,
    )


# ---------------------------------------------------------------------------
# file formats


def write_grasp_map(grasp_map: GraspMap, path) -> None:
    """`GMAP <k>` header, then the Q, Phi and W grids as k rows each."""
    k = grasp_map.bins
    lines = [f"GMAP {k}"]
    for grid in (grasp_map.quality, grasp_map.rotation, grasp_map.width):
        for row in grid:
            lines.append(" ".join(f"{v:.9g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_grasp_map(path) -> GraspMap:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty grasp map file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "GMAP":
        raise FormatError(f"bad grasp map header: {lines[0]!r}")
    try:
        k = int(header[1])
    except ValueError:
        raise FormatError(f"bad grasp map header: {lines[0]!r}") from None
    if len(lines) != 1 + 3 * k:
        raise FormatError(f"expected {3 * k} grid rows, found {len(lines) - 1}")
    try:
        rows = [np.array([float(t) for t in ln.split()]) for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"bad grid row: {exc}") from None
    if any(len(r) != k for r in rows):
        raise FormatError("grid row length does not match the header")
    grids = np.array(rows).reshape(3, k, k)
    return GraspMap(quality=grids[0], rotation=grids[1], width=grids[2])


def write_grasp_csv(candidates: Sequence[GraspCandidate], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "rotation_rad", "width_m", "quality"])
        for c in candidates:
            writer.writerow(
                [c.center_px[0], c.center_px[1], f"{c.rotation_rad:.9g}", f"{c.width_m:.9g}", f"{c.quality:.9g}"]
            )
