"""Virtual-camera rigs and z-buffered orthogonal depth rendering.

Three rig layouts are supported: three orthographic cameras along the
object axes, a ring of cameras around Z at a fixed elevation, and a full
sphere of cameras at several elevation bands. Rendering projects the cloud
onto a square plane split into k x k bins; each bin keeps the depth of the
nearest surface point, 0 meaning empty.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DegenerateGeometryError, EmptyCloudError, ParseError
from .geometry import Aabb, PointCloud, ReferenceFrame

# Fixed projection plane side for grasp views, in meters. Grasp geometry
# depends on the true object size, so these views must not be scale-invariant.
FIXED_PLANE_SIDE_M = 0.45

DEFAULT_RECOGNITION_BINS = 32
DEFAULT_GRASP_BINS = 64
DEFAULT_CAMERA_DISTANCE_M = 1.0

SCALE_INVARIANT = "scale-invariant"
FIXED_SIZE = "fixed-size"

_DIVISOR_TOL = 1e-9


def _check_divides(interval: float, whole: float, name: str) -> int:
    if interval is None or interval <= 0:
        raise ValueError(f"{name} must be a positive angle in degrees")
    count = whole / interval
    if abs(count - round(count)) > _DIVISOR_TOL:
        raise ValueError(f"{name}={interval} does not divide {whole} evenly")
    return int(round(count))


@dataclass(frozen=True)
class ViewSetup:
    """Camera rig description.

    kind is "orthographic", "orbit", or "sphere". Orbit and sphere place
    cameras at azimuth intervals of alpha_deg; orbit holds a fixed elevation
    phi_deg, sphere spans elevations in steps of beta_deg. Rig sizes are also
    commonly quoted as camera *counts*; use the *_counts constructors for
    that spelling (count c converts to an interval of 360/c or 180/c).
    """

    kind: str
    alpha_deg: Optional[float] = None
    phi_deg: Optional[float] = None
    beta_deg: Optional[float] = None

    def __post_init__(self):
        if self.kind == "orthographic":
            if not (self.alpha_deg is None and self.phi_deg is None and self.beta_deg is None):
                raise ValueError("orthographic setup takes no angle parameters")
        elif self.kind == "orbit":
            _check_divides(self.alpha_deg, 360.0, "alpha_deg")
            if self.phi_deg is None or not -90.0 < self.phi_deg < 90.0:
                raise ValueError("orbit needs an elevation phi_deg in (-90, 90)")
            if self.beta_deg is not None:
                raise ValueError("orbit does not take beta_deg")
        elif self.kind == "sphere":
            _check_divides(self.alpha_deg, 360.0, "alpha_deg")
            _check_divides(self.beta_deg, 180.0, "beta_deg")
            if self.phi_deg is not None:
                raise ValueError("sphere does not take phi_deg")
        else:
            raise ValueError(f"unknown setup kind {self.kind!r}")

    @classmethod
    def orthographic(cls) -> "ViewSetup":
        return cls(kind="orthographic")

    @classmethod
    def orbit(cls, alpha_deg: float, phi_deg: float) -> "ViewSetup":
        return cls(kind="orbit", alpha_deg=alpha_deg, phi_deg=phi_deg)

    @classmethod
    def orbit_counts(cls, azimuths: int, phi_deg: float) -> "ViewSetup":
        return cls.orbit(360.0 / azimuths, phi_deg)

    @classmethod
    def sphere(cls, alpha_deg: float, beta_deg: float) -> "ViewSetup":
        return cls(kind="sphere", alpha_deg=alpha_deg, beta_deg=beta_deg)

    @classmethod
    def sphere_counts(cls, azimuths: int, elevations: int) -> "ViewSetup":
        return cls.sphere(360.0 / azimuths, 180.0 / elevations)


def view_count(setup: ViewSetup) -> int:
    """Closed-form camera count: 3, 360/alpha, or (360/alpha)*(180/beta)."""
    if setup.kind == "orthographic":
        return 3
    if setup.kind == "orbit":
        return int(round(360.0 / setup.alpha_deg))
    return int(round(360.0 / setup.alpha_deg)) * int(round(180.0 / setup.beta_deg))


@dataclass(frozen=True)
class VirtualCamera:
    """A camera pose whose Z axis points at the object, plus the square
    projection window: side length plane_side meters, bins x bins pixels."""

    pose: ReferenceFrame
    plane_side: float
    bins: int

    def __post_init__(self):
        if self.plane_side < 0:
            raise ValueError("plane_side must be >= 0")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")

    def with_window(self, plane_side=None, bins=None) -> "VirtualCamera":
        return replace(
            self,
            plane_side=self.plane_side if plane_side is None else plane_side,
            bins=self.bins if bins is None else bins,
        )


@dataclass(frozen=True)
class DepthView:
    """k x k grid of depths in meters rendered by one camera; 0 = empty bin.

    grid[i, j]: i bins the camera X (u) plane coordinate, j the camera Y (v)
    coordinate, both via floor((coord + l/2) / (l/k)) clamped to k-1.
    """

    grid: np.ndarray
    camera: VirtualCamera
    mode: str

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        k = self.camera.bins
        if g.shape != (k, k):
            raise ValueError(f"grid shape {g.shape} != ({k}, {k})")
        if np.any(g < 0):
            raise ValueError("depths must be >= 0")
        if self.mode not in (SCALE_INVARIANT, FIXED_SIZE):
            raise ValueError(f"unknown projection mode {self.mode!r}")
        object.__setattr__(self, "grid", g)

    @property
    def bins(self) -> int:
        return self.camera.bins

    @property
    def occupied(self) -> np.ndarray:
        return self.grid > 0.0


def camera_directions(setup: ViewSetup) -> np.ndarray:
    """Unit directions from the object center to each camera, in the object
    frame, in deterministic rig order.

    Orbit cameras sit at azimuths i*alpha. Sphere elevations are band
    centers, -90 + (i + 1/2)*beta, so no camera degenerates onto a pole and
    rig spacing stays symmetric about the equator.
    """
    if setup.kind == "orthographic":
        return np.eye(3)
    n_az = int(round(360.0 / setup.alpha_deg))
    az = np.deg2rad(setup.alpha_deg) * np.arange(n_az)
    if setup.kind == "orbit":
        elev = np.full(n_az, np.deg2rad(setup.phi_deg))
        az_g, el_g = az, elev
    else:
        n_el = int(round(180.0 / setup.beta_deg))
        centers = np.deg2rad(-90.0 + (np.arange(n_el) + 0.5) * setup.beta_deg)
        el_g = np.repeat(centers, n_az)
        az_g = np.tile(az, n_el)
    return np.column_stack(
        [np.cos(el_g) * np.cos(az_g), np.cos(el_g) * np.sin(az_g), np.sin(el_g)]
    )


def generate_cameras(
    setup: ViewSetup,
    frame: ReferenceFrame,
    distance: float = DEFAULT_CAMERA_DISTANCE_M,
    *,
    plane_side: float = FIXED_PLANE_SIDE_M,
    bins: int = DEFAULT_RECOGNITION_BINS,
) -> list:
    """Place the rig's cameras around the frame origin at a constant distance,
    each looking at the origin.

    Camera distance does not change orthogonal projection geometry; it is
    kept so poses stay physically meaningful.
    """
    if distance <= 0:
        raise ValueError("distance must be positive")
    dirs_local = camera_directions(setup)
    dirs_world = dirs_local @ frame.axes.T
    positions = frame.origin + distance * dirs_world
    z = -dirs_world  # toward the object center

    # Image-plane axes from an up hint; fall back when looking along the hint.
    hint = np.broadcast_to(frame.z, z.shape).copy()
    parallel = np.abs(np.einsum("ni,ni->n", z, hint)) > 0.999
    hint[parallel] = frame.x
    x = np.cross(hint, z)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = np.cross(z, x)

    cameras = []
    for i in range(z.shape[0]):
        pose = ReferenceFrame(
            origin=positions[i], axes=np.column_stack([x[i], y[i], z[i]])
        )
        cameras.append(VirtualCamera(pose=pose, plane_side=plane_side, bins=bins))
    return cameras


def projection_plane_side(mode: str, box: Optional[Aabb] = None) -> float:
    """Side length of the projection window for the given mode."""
    if mode == FIXED_SIZE:
        return FIXED_PLANE_SIDE_M
    if mode == SCALE_INVARIANT:
        if box is None:
            raise ValueError("scale-invariant mode needs the object aabb")
        side = box.largest_side
        if side <= 0.0:
            raise DegenerateGeometryError("zero-extent bounding box")
        return side
    raise ValueError(f"unknown projection mode {mode!r}")


def project(cloud: PointCloud, camera: VirtualCamera, mode: str = SCALE_INVARIANT) -> DepthView:
    """Render the cloud through one camera with an orthogonal projection.

    Points map onto the camera plane; each bin keeps the minimum depth
    (nearest surface wins). Points outside the l x l window, or behind the
    camera plane, are discarded.
    """
    if len(cloud) == 0:
        raise EmptyCloudError("cannot project an empty cloud")
    l = camera.plane_side
    if l <= 0.0:
        raise DegenerateGeometryError("projection window has zero side")
    k = camera.bins

    q = (cloud.points - camera.pose.origin) @ camera.pose.axes
    a, b, depth = q[:, 0], q[:, 1], q[:, 2]
    half = l / 2.0
    keep = (depth >= 0) & (np.abs(a) <= half) & (np.abs(b) <= half)
    a, b, depth = a[keep], b[keep], depth[keep]

    i = np.clip(np.floor((a + half) * k / l).astype(np.intp), 0, k - 1)
    j = np.clip(np.floor((b + half) * k / l).astype(np.intp), 0, k - 1)

    grid = np.full((k, k), np.inf)
    np.minimum.at(grid, (i, j), depth)
    grid[np.isinf(grid)] = 0.0
    return DepthView(grid=grid, camera=camera, mode=mode)


# ---------------------------------------------------------------------------
# DVIEW file format: "DVIEW <k> <plane_side_m> <mode>" header, then k rows of
# k space-separated depths at 9 significant digits, row 0 first.

def write_view(view: DepthView, path) -> None:
    k = view.bins
    lines = [f"DVIEW {k} {view.camera.plane_side:.9g} {view.mode}"]
    for i in range(k):
        lines.append(" ".join(f"{v:.9g}" for v in view.grid[i]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_view(path) -> DepthView:
    """Read a DVIEW file. The stored view carries a placeholder identity
    camera pose; only the window geometry survives serialization."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty DVIEW file", line=1)
    header = lines[0].split()
    if len(header) != 4 or header[0] != "DVIEW":
        raise ParseError("bad DVIEW header", line=1)
    try:
        k = int(header[1])
        plane_side = float(header[2])
    except ValueError:
        raise ParseError("bad DVIEW header numbers", line=1) from None
    mode = header[3]
    if len(lines) < 1 + k:
        raise ParseError(f"expected {k} grid rows", line=len(lines))
    grid = np.empty((k, k))
    for i in range(k):
        tokens = lines[1 + i].split()
        if len(tokens) != k:
            raise ParseError(f"expected {k} values per row", line=2 + i)
        try:
            grid[i] = [float(t) for t in tokens]
        except ValueError:
            raise ParseError("non-numeric depth value", line=2 + i) from None
    camera = VirtualCamera(
        pose=ReferenceFrame(origin=np.zeros(3), axes=np.eye(3)),
        plane_side=plane_side,
        bins=k,
    )
    return DepthView(grid=grid, camera=camera, mode=mode)
