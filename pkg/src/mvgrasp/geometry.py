"""Point-cloud ingestion, statistics, and object-local reference frames.

Clouds are plain numpy arrays wrapped in a small dataclass. The local
reference frame is built from the eigendecomposition of the point
covariance; its axes are what make every downstream projection
rotation-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, EmptyCloudError, ParseError

# Eigenvalue ratios below these make the principal axes numerically unstable.
EIGENVALUE_ABS_CUTOFF = 1e-12
EIGENVALUE_RATIO_CUTOFF = 1e-6

_NORMAL_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class PointCloud:
    """An ordered set of 3D points in meters, with optional unit normals."""

    points: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if nrm.shape[0] != pts.shape[0]:
                raise ValueError(
                    f"normal count {nrm.shape[0]} != point count {pts.shape[0]}"
                )
            lengths = np.linalg.norm(nrm, axis=1)
            if nrm.shape[0] and np.max(np.abs(lengths - 1.0)) > _NORMAL_UNIT_TOL:
                raise ValueError("normals must be unit length")
            object.__setattr__(self, "normals", nrm)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def has_normals(self) -> bool:
        return self.normals is not None


@dataclass(frozen=True)
class ReferenceFrame:
    """Object-local orthonormal basis: origin at the centroid, axis columns
    X, Y, Z sorted by descending point variance, right-handed."""

    origin: np.ndarray
    axes: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        axes = np.asarray(self.axes, dtype=np.float64).reshape(3, 3)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "axes", axes)
        if np.max(np.abs(axes.T @ axes - np.eye(3))) > 1e-9:
            raise ValueError("frame axes must be orthonormal")
        if abs(np.linalg.det(axes) - 1.0) > 1e-9:
            raise ValueError("frame must be right-handed (det +1)")
        if np.max(np.abs(np.cross(axes[:, 0], axes[:, 1]) - axes[:, 2])) > 1e-9:
            raise ValueError("Z axis must equal cross(X, Y)")

    @property
    def x(self) -> np.ndarray:
        return self.axes[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.axes[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.axes[:, 2]


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, min/max corners in meters."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if np.any(lo > hi):
            raise ValueError("aabb min must be <= max componentwise")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def sides(self) -> np.ndarray:
        return self.max - self.min

    @property
    def largest_side(self) -> float:
        """Longest box edge; the side length of scale-invariant projections."""
        return float(np.max(self.sides))


def identity_frame() -> ReferenceFrame:
    return ReferenceFrame(origin=np.zeros(3), axes=np.eye(3))


def centroid(cloud: PointCloud) -> np.ndarray:
    """Arithmetic mean position of all points."""
    if len(cloud) == 0:
        raise EmptyCloudError("cannot take centroid of an empty cloud")
    return cloud.points.mean(axis=0)


def local_reference_frame(cloud: PointCloud) -> ReferenceFrame:
    """Build the object-local frame from the point covariance.

    The covariance (1/n) * sum (p-c)(p-c)^T is eigendecomposed; the two
    leading eigenvectors become X and Y, and Z = X x Y. Each of X and Y is
    flipped so the third central moment of the point projections along it
    is >= 0, which pins the sign deterministically for any cloud with
    nonzero skew and makes the frame covariant under rigid rotation.
    """
    if len(cloud) < 3:
        raise DegenerateGeometryError("need at least 3 points for a frame")
    c = centroid(cloud)
    q = cloud.points - c
    cov = (q.T @ q) / len(cloud)
    evals, evecs = np.linalg.eigh(cov)
    evals = evals[::-1].copy()
    evecs = evecs[:, ::-1].copy()
    evals[evals < 0.0] = 0.0
    if evals[0] < EIGENVALUE_ABS_CUTOFF:
        raise DegenerateGeometryError("all points coincide")
    if evals[1] / evals[0] < EIGENVALUE_RATIO_CUTOFF:
        raise DegenerateGeometryError("points are collinear")

    x, y = evecs[:, 0], evecs[:, 1]
    if np.sum((q @ x) ** 3) < 0.0:
        x = -x
    if np.sum((q @ y) ** 3) < 0.0:
        y = -y
    z = np.cross(x, y)
    return ReferenceFrame(origin=c, axes=np.column_stack([x, y, z]))


def transform_to_frame(cloud: PointCloud, frame: ReferenceFrame) -> PointCloud:
    """Express the cloud in frame coordinates: p -> axes^T (p - origin)."""
    pts = (cloud.points - frame.origin) @ frame.axes
    nrm = cloud.normals @ frame.axes if cloud.has_normals else None
    return PointCloud(points=pts, normals=nrm)


def transform_from_frame(cloud: PointCloud, frame: ReferenceFrame) -> PointCloud:
    """Inverse of transform_to_frame: p -> axes p + origin."""
    pts = cloud.points @ frame.axes.T + frame.origin
    nrm = cloud.normals @ frame.axes.T if cloud.has_normals else None
    return PointCloud(points=pts, normals=nrm)


def aabb(cloud: PointCloud) -> Aabb:
    """Componentwise min/max corners of the cloud."""
    if len(cloud) == 0:
        raise EmptyCloudError("cannot bound an empty cloud")
    return Aabb(min=cloud.points.min(axis=0), max=cloud.points.max(axis=0))


def estimate_normals(cloud: PointCloud, neighbors: int) -> PointCloud:
    """Attach per-point unit normals from local neighborhood covariance.

    The normal at p is the smallest-eigenvalue eigenvector of the covariance
    of p and its `neighbors` nearest points, flipped to point away from the
    cloud centroid.
    """
    if neighbors < 2:
        raise ValueError("neighbors must be >= 2")
    if len(cloud) <= neighbors:
        raise DegenerateGeometryError(
            f"need more than {neighbors} points, got {len(cloud)}"
        )
    pts = cloud.points
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=neighbors + 1)
    hoods = pts[idx]  # (n, k+1, 3), self included
    centers = hoods.mean(axis=1, keepdims=True)
    q = hoods - centers
    cov = np.einsum("nki,nkj->nij", q, q) / hoods.shape[1]
    _, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]  # smallest-eigenvalue direction
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    outward = pts - pts.mean(axis=0)
    flip = np.einsum("ni,ni->n", normals, outward) < 0.0
    normals[flip] *= -1.0
    return PointCloud(points=pts, normals=normals)


def sample_primitive(
    shape: str, params, count: int, seed: int
) -> PointCloud:
    """Deterministic surface samples of a primitive, with analytic normals.

    shape "box" takes (sx, sy, sz) full extents, "cylinder" takes
    (radius, height) with the axis along z, "sphere" takes (radius,).
    All primitives are centered at the origin.
    """
    dims = np.asarray(params, dtype=np.float64).reshape(-1)
    if np.any(dims <= 0.0):
        raise ValueError("primitive dimensions must be positive")
    if count <= 0:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)

    if shape == "box":
        if dims.shape != (3,):
            raise ValueError("box expects (sx, sy, sz)")
        return _sample_box(dims, count, rng)
    if shape == "cylinder":
        if dims.shape != (2,):
            raise ValueError("cylinder expects (radius, height)")
        return _sample_cylinder(dims[0], dims[1], count, rng)
    if shape == "sphere":
        if dims.shape != (1,):
            raise ValueError("sphere expects (radius,)")
        return _sample_sphere(dims[0], count, rng)
    raise ValueError(f"unknown primitive shape {shape!r}")


def _sample_box(dims, count, rng):
    sx, sy, sz = dims
    # Face areas; pairs of opposite faces along each axis.
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    face = rng.choice(6, size=count, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=count)
    v = rng.uniform(-0.5, 0.5, size=count)
    pts = np.empty((count, 3))
    nrm = np.zeros((count, 3))
    half = dims / 2.0
    for f in range(6):
        m = face == f
        axis = f // 2
        sign = 1.0 if f % 2 == 0 else -1.0
        a, b = [i for i in range(3) if i != axis]
        pts[m, axis] = sign * half[axis]
        pts[m, a] = u[m] * dims[a]
        pts[m, b] = v[m] * dims[b]
        nrm[m, axis] = sign
    return PointCloud(points=pts, normals=nrm)


def _sample_cylinder(radius, height, count, rng):
    lateral = 2.0 * math.pi * radius * height
    cap = math.pi * radius**2
    total = lateral + 2.0 * cap
    which = rng.choice(3, size=count, p=[lateral / total, cap / total, cap / total])
    theta = rng.uniform(0.0, 2.0 * math.pi, size=count)
    pts = np.empty((count, 3))
    nrm = np.zeros((count, 3))

    side = which == 0
    pts[side, 0] = radius * np.cos(theta[side])
    pts[side, 1] = radius * np.sin(theta[side])
    pts[side, 2] = rng.uniform(-height / 2.0, height / 2.0, size=int(side.sum()))
    nrm[side, 0] = np.cos(theta[side])
    nrm[side, 1] = np.sin(theta[side])

    for cap_id, z_sign in ((1, 1.0), (2, -1.0)):
        m = which == cap_id
        r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=int(m.sum())))
        pts[m, 0] = r * np.cos(theta[m])
        pts[m, 1] = r * np.sin(theta[m])
        pts[m, 2] = z_sign * height / 2.0
        nrm[m, 2] = z_sign
    return PointCloud(points=pts, normals=nrm)


def _sample_sphere(radius, count, rng):
    # Fibonacci lattice under a seeded random rotation: deterministic,
    # evenly spread at any count (a plain Gaussian draw leaves visible
    # clumps and a biased centroid at small counts).
    i = np.arange(count, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / count
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    v = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    v = v @ q.T
    return PointCloud(points=radius * v, normals=v)


# ---------------------------------------------------------------------------
# File formats: xyz-ascii ("x y z [nx ny nz]" per line) and a minimal
# ascii PLY vertex-element subset.

def load_cloud(path, format: Optional[str] = None) -> PointCloud:
    """Read a cloud from disk. format is "xyz" or "ply"; inferred from the
    file extension when omitted."""
    path = Path(path)
    if format is None:
        format = "ply" if path.suffix.lower() == ".ply" else "xyz"
    text = path.read_text()
    if format == "xyz":
        return _parse_xyz(text)
    if format == "ply":
        return _parse_ply(text)
    raise ValueError(f"unknown cloud format {format!r}")


def save_cloud(cloud: PointCloud, path) -> None:
    """Write xyz-ascii with 9-significant-digit decimals."""
    rows = []
    for i in range(len(cloud)):
        vals = list(cloud.points[i])
        if cloud.has_normals:
            vals += list(cloud.normals[i])
        rows.append(" ".join(f"{v:.9g}" for v in vals))
    Path(path).write_text("\n".join(rows) + ("\n" if rows else ""))


def _parse_xyz(text: str) -> PointCloud:
    points, normals = [], []
    arity = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (3, 6):
            raise ParseError(
                f"expected 3 or 6 values, got {len(tokens)}", line=lineno
            )
        if arity is None:
            arity = len(tokens)
        elif len(tokens) != arity:
            raise ParseError(
                f"inconsistent column count {len(tokens)} (file uses {arity})",
                line=lineno,
            )
        try:
            vals = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"non-numeric value in {line!r}", line=lineno) from None
        points.append(vals[:3])
        if arity == 6:
            normals.append(vals[3:])
    if not points:
        raise EmptyCloudError("file contains no points")
    return PointCloud(
        points=np.array(points), normals=np.array(normals) if normals else None
    )


def _parse_ply(text: str) -> PointCloud:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", line=1)

    elements = []  # (name, count, [property names]) in declaration order
    header_end = None
    for lineno, raw in enumerate(lines[1:], start=2):
        tokens = raw.strip().split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if tokens[1:] != ["ascii", "1.0"]:
                raise ParseError("only 'format ascii 1.0' is supported", line=lineno)
        elif tokens[0] == "element":
            try:
                elements.append([tokens[1], int(tokens[2]), []])
            except (IndexError, ValueError):
                raise ParseError("malformed element declaration", line=lineno) from None
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before any element", line=lineno)
            elements[-1][2].append(tokens[-1])
        elif tokens[0] == "end_header":
            header_end = lineno
            break
    if header_end is None:
        raise ParseError("missing end_header", line=len(lines))

    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise ParseError("no vertex element declared", line=header_end)
    _, vcount, props = vertex
    if vcount == 0:
        raise EmptyCloudError("ply file declares zero vertices")
    for need in ("x", "y", "z"):
        if need not in props:
            raise ParseError(f"vertex element lacks property {need!r}", line=header_end)
    has_normals = all(p in props for p in ("nx", "ny", "nz"))

    # Data blocks follow element declaration order; skip blocks before vertex.
    offset = header_end
    for name, count, _ in elements:
        if name == "vertex":
            break
        offset += count

    rows = np.empty((vcount, 3))
    nrm = np.empty((vcount, 3)) if has_normals else None
    xi, yi, zi = props.index("x"), props.index("y"), props.index("z")
    for i in range(vcount):
        lineno = offset + 1 + i
        if lineno > len(lines):
            raise ParseError("unexpected end of file in vertex data", line=len(lines))
        tokens = lines[lineno - 1].split()
        if len(tokens) < len(props):
            raise ParseError(
                f"expected {len(props)} values, got {len(tokens)}", line=lineno
            )
        try:
            rows[i] = [float(tokens[xi]), float(tokens[yi]), float(tokens[zi])]
            if has_normals:
                nrm[i] = [
                    float(tokens[props.index("nx")]),
                    float(tokens[props.index("ny")]),
                    float(tokens[props.index("nz")]),
                ]
        except ValueError:
            raise ParseError("non-numeric vertex value", line=lineno) from None
    return PointCloud(points=rows, normals=nrm)
