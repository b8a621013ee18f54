import numpy as np
import pytest

from dfvo.geometry.transforms import Intrinsics, RigidTransform


def random_rotation(rng, max_angle=0.5):
    """Rotation about a random axis with angle up to max_angle radians."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.1 * max_angle, max_angle)
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
    return R


def vector_angle(a, b):
    """Angle between vectors, accurate for near-parallel inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b))


def synth_scene_points(rng, n, depth_range=(4.0, 20.0), spread=6.0):
    """Random camera-frame points in front of the source camera."""
    x = rng.uniform(-spread, spread, n)
    y = rng.uniform(-spread * 0.75, spread * 0.75, n)
    z = rng.uniform(*depth_range, n)
    return np.stack([x, y, z], axis=1)


def project_visible(points, pose, K):
    """Project points into both views; keep those in front of both cameras."""
    src = K.project(points)
    dst_pts = pose.apply(points)
    keep = (points[:, 2] > 0) & (dst_pts[:, 2] > 0)
    dst = K.project(dst_pts[keep])
    return src[keep], dst, points[keep]


@pytest.fixture
def intrinsics():
    return Intrinsics(fx=140.0, fy=150.0, cx=63.5, cy=47.5)


@pytest.fixture
def general_pose():
    rng = np.random.default_rng(11)
    R = random_rotation(rng, max_angle=0.15)
    return RigidTransform(R, np.array([0.4, -0.15, 0.25]))
