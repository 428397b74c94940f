"""Pinhole/orthographic camera, depth unprojection, and depth rendering.

Conventions: camera frame has +z forward (viewing direction), +x right,
+y down (matching image rows). Pixel (u, v) samples at the half-integer
center (u+0.5, v+0.5). Depth is optical-axis depth (camera-frame z),
not ray length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .raycast import TriangleRaycaster
from .types import DepthMap, PointCloud, Pose, TriangleMesh

__all__ = ["Camera", "look_at_pose", "unproject_depth", "render_depth"]

# depth strictly below this is treated as "at the camera" and rejected
_T_EPS = 1e-12


@dataclass(frozen=True)
class Camera:
    """Camera intrinsics plus camera-to-world pose.

    Perspective: focal length in pixels. Orthographic: pixel_size in
    world units per pixel (focal is ignored).
    """

    model: str = "perspective"
    width: int = 128
    height: int = 128
    focal: float = 137.24
    cx: float = 64.0
    cy: float = 64.0
    pixel_size: float = 0.01
    pose: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if self.model not in ("perspective", "orthographic"):
            raise ContractError(f"unknown camera model {self.model!r}")
        if self.width < 1 or self.height < 1:
            raise ContractError("image dimensions must be >= 1")
        if self.model == "perspective" and not self.focal > 0:
            raise ContractError("focal length must be > 0")
        if self.model == "orthographic" and not self.pixel_size > 0:
            raise ContractError("pixel size must be > 0")
        if not (-self.width <= self.cx <= 2 * self.width
                and -self.height <= self.cy <= 2 * self.height):
            raise ContractError("principal point too far outside the image")

    @classmethod
    def perspective(cls, width: int, height: int, vfov_deg: float = 50.0,
                    pose: Pose | None = None) -> "Camera":
        focal = 0.5 * height / math.tan(math.radians(vfov_deg) / 2)
        return cls("perspective", width, height, focal,
                   width / 2.0, height / 2.0, pose=pose or Pose())

    @classmethod
    def orthographic(cls, width: int, height: int, frame_width: float = 1.2,
                     pose: Pose | None = None) -> "Camera":
        return cls("orthographic", width, height, 0.0,
                   width / 2.0, height / 2.0, frame_width / width,
                   pose=pose or Pose())

    def with_pose(self, pose: Pose) -> "Camera":
        return Camera(self.model, self.width, self.height, self.focal,
                      self.cx, self.cy, self.pixel_size, pose)

    def pixel_rays(self):
        """(origins, dirs) world-space rays for every pixel, row-major.

        Directions are scaled so the ray parameter t equals the
        optical-axis depth.
        """
        u = (np.arange(self.width) + 0.5 - self.cx)
        v = (np.arange(self.height) + 0.5 - self.cy)
        uu, vv = np.meshgrid(u, v)  # (H, W)
        n = self.width * self.height
        r = self.pose.rotation
        t = self.pose.translation
        if self.model == "perspective":
            d_cam = np.stack([uu / self.focal, vv / self.focal,
                              np.ones_like(uu)], axis=-1).reshape(n, 3)
            dirs = d_cam @ r.T
            origins = np.broadcast_to(t, (n, 3)).copy()
        else:
            o_cam = np.stack([uu * self.pixel_size, vv * self.pixel_size,
                              np.zeros_like(uu)], axis=-1).reshape(n, 3)
            origins = o_cam @ r.T + t
            dirs = np.broadcast_to(r[:, 2], (n, 3)).copy()
        return origins, dirs


def look_at_pose(eye, target=(0.0, 0.0, 0.0), up=(0.0, 0.0, 1.0)) -> Pose:
    """Camera-to-world pose looking from eye toward target, +z-up world."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise ContractError("eye and target coincide")
    forward = forward / norm
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-9:  # looking along up: fall back to +x
        right = np.cross(forward, np.array([1.0, 0.0, 0.0]))
        if np.linalg.norm(right) < 1e-9:
            right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    rot = np.stack([right, down, forward], axis=1)  # columns = camera axes
    return Pose(rot, eye)


def view_pose(elev_deg: float, azim_deg: float, distance: float) -> Pose:
    """Pose on the view sphere at (elevation, azimuth), looking at the origin."""
    e = math.radians(elev_deg)
    a = math.radians(azim_deg)
    eye = distance * np.array([math.cos(e) * math.cos(a),
                               math.cos(e) * math.sin(a),
                               math.sin(e)])
    return look_at_pose(eye)


def unproject_depth(depth: DepthMap, cam: Camera) -> PointCloud:
    """One world-space point per masked-in pixel, row-major pixel order."""
    if (depth.height, depth.width) != (cam.height, cam.width):
        raise ContractError(
            f"depth is {depth.height}x{depth.width}, camera expects "
            f"{cam.height}x{cam.width}")
    vv, uu = np.nonzero(depth.mask)
    d = depth.values[vv, uu].astype(np.float64)
    x = (uu + 0.5 - cam.cx)
    y = (vv + 0.5 - cam.cy)
    if cam.model == "perspective":
        pts_cam = np.stack([d * x / cam.focal, d * y / cam.focal, d], axis=1)
    else:
        pts_cam = np.stack([x * cam.pixel_size, y * cam.pixel_size, d], axis=1)
    return PointCloud(cam.pose.apply(pts_cam))


def render_depth(mesh: TriangleMesh, cam: Camera) -> DepthMap:
    """Nearest-surface optical-axis depth per pixel; no hit = masked out."""
    if mesh.is_empty():
        raise ContractError("cannot render an empty mesh")
    origins, dirs = cam.pixel_rays()
    caster = TriangleRaycaster(mesh)
    hit, t, _ = caster.cast(origins, dirs, t_min=_T_EPS)
    values = np.where(hit, t, 0.0).reshape(cam.height, cam.width)
    mask = hit.reshape(cam.height, cam.width)
    return DepthMap(values.astype(np.float32), mask)
