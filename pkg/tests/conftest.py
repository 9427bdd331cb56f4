import numpy as np
import pytest

from mvgrasp.geometry import PointCloud, identity_frame, sample_primitive
from mvgrasp.projection import DepthView, VirtualCamera

_pytest_config = {}


def pytest_configure(config):
    _pytest_config["config"] = config


def report_line(text):
    """Write a status line past output capture, straight to the terminal."""
    config = _pytest_config.get("config")
    reporter = (
        config.pluginmanager.get_plugin("terminalreporter") if config else None
    )
    if reporter is None:
        print(text)
    else:
        reporter.write_line(text)


@pytest.fixture
def box_cloud():
    return sample_primitive("box", (0.08, 0.05, 0.03), 600, seed=11)


@pytest.fixture
def cylinder_cloud():
    return sample_primitive("cylinder", (0.03, 0.12), 600, seed=12)


@pytest.fixture
def sphere_cloud():
    return sample_primitive("sphere", (0.04,), 600, seed=13)


def make_view(grid, plane_side=0.45, mode="fixed-size"):
    """DepthView wrapper around a raw grid with an identity-pose camera."""
    grid = np.asarray(grid, dtype=np.float64)
    camera = VirtualCamera(
        pose=identity_frame(), plane_side=plane_side, bins=grid.shape[0]
    )
    return DepthView(grid=grid, camera=camera, mode=mode)


def random_rotation(rng):
    """Uniform-ish random rotation matrix (QR of a Gaussian, det +1)."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def rotate_cloud(cloud: PointCloud, rot: np.ndarray, shift=None) -> PointCloud:
    pts = cloud.points @ rot.T
    if shift is not None:
        pts = pts + shift
    normals = cloud.normals @ rot.T if cloud.has_normals else None
    return PointCloud(points=pts, normals=normals)
