"""Domain types shared by every pipeline stage.

All types validate their invariants at construction and freeze their
arrays afterwards, so instances are safe to share across threads.
Grid-valued types (DepthMap, SphericalMap, VoxelGrid) store float32 --
that is their on-disk precision, which keeps dump/reload cycles
bit-exact. Point/vertex data stays float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DegenerateInputError

__all__ = [
    "DepthMap",
    "PointCloud",
    "TriangleMesh",
    "SphericalMap",
    "VoxelGrid",
    "Extent",
    "Pose",
    "SimilarityTransform",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _as_float(arr, dtype, name: str) -> np.ndarray:
    try:
        return np.asarray(arr, dtype=dtype)
    except (TypeError, ValueError) as e:
        raise ContractError(f"{name}: not numeric ({e})") from None


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel view-space depth with a foreground validity mask.

    values[v, u] is depth in world units at pixel row v, column u.
    Masked-out values are normalized to 0 so the one-file PFM encoding
    (non-positive = background) is lossless.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = _as_float(self.values, np.float32, "depth values")
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ContractError(f"depth values must be 2D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ContractError(
                f"mask shape {mask.shape} != values shape {values.shape}")
        fg = values[mask]
        if fg.size and (not np.all(np.isfinite(fg)) or np.any(fg <= 0)):
            raise ContractError("masked-in depth values must be finite and > 0")
        values = np.where(mask, values, np.float32(0.0))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PointCloud:
    """An unordered set of 3D points in world units."""

    points: np.ndarray

    def __post_init__(self):
        pts = _as_float(self.points, np.float64, "points")
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ContractError(f"points must be (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ContractError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle surface; may be empty."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = _as_float(self.vertices, np.float64, "vertices")
        tris = np.asarray(self.triangles)
        if verts.size == 0:
            verts = verts.reshape(0, 3)
        if tris.size == 0:
            tris = np.zeros((0, 3), dtype=np.int64)
        tris = tris.astype(np.int64, copy=False)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ContractError(f"vertices must be (V, 3), got {verts.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ContractError(f"triangles must be (T, 3), got {tris.shape}")
        if not np.all(np.isfinite(verts)):
            raise ContractError("vertex coordinates must be finite")
        if tris.size:
            if tris.min() < 0 or tris.max() >= len(verts):
                raise ContractError("triangle index out of range")
            a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
            if np.any((a == b) | (b == c) | (a == c)):
                raise ContractError("degenerate triangle (repeated vertex index)")
        object.__setattr__(self, "vertices", _frozen(verts))
        object.__setattr__(self, "triangles", _frozen(tris))

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def is_empty(self) -> bool:
        return self.triangles.shape[0] == 0


@dataclass(frozen=True)
class SphericalMap:
    """Equirectangular grid of inward radial distances on the unit sphere.

    values[j, i]: distance travelled from the sphere point of cell
    (lon i, lat j) toward the origin before the first surface hit, in
    [0, 1]. mask[j, i] is False where the ray meets no surface within
    the radius; such cells store the sentinel 0 (never read).
    Columns wrap: column 0 and column n_lon are the same ray family.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = _as_float(self.values, np.float32, "spherical values")
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ContractError(f"spherical values must be 2D, got {values.shape}")
        if mask.shape != values.shape:
            raise ContractError(
                f"mask shape {mask.shape} != values shape {values.shape}")
        seen = values[mask]
        if seen.size and (not np.all(np.isfinite(seen))
                          or seen.min() < 0 or seen.max() > 1):
            raise ContractError("masked-in spherical values must lie in [0, 1]")
        values = np.where(mask, values, np.float32(0.0))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def n_lat(self) -> int:
        return self.values.shape[0]

    @property
    def n_lon(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Extent:
    """Axis-aligned world-space bounding cube: center plus side length."""

    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    side: float = 1.0

    def __post_init__(self):
        center = _as_float(self.center, np.float64, "extent center")
        if center.shape != (3,) or not np.all(np.isfinite(center)):
            raise ContractError("extent center must be a finite 3-vector")
        side = float(self.side)
        if not np.isfinite(side) or side <= 0:
            raise ContractError("extent side must be finite and > 0")
        object.__setattr__(self, "center", _frozen(center))
        object.__setattr__(self, "side", side)

    @property
    def lo(self) -> np.ndarray:
        return self.center - 0.5 * self.side

    @property
    def hi(self) -> np.ndarray:
        return self.center + 0.5 * self.side

    def __eq__(self, other) -> bool:
        if not isinstance(other, Extent):
            return NotImplemented
        return self.side == other.side and bool(np.all(self.center == other.center))


@dataclass(frozen=True)
class VoxelGrid:
    """Cubic grid of [0, 1] occupancy values over a world-space extent.

    values[i, j, k] is the occupancy of the cell whose center is
    extent.lo + (index + 0.5) * cell_size, axes x, y, z.
    """

    values: np.ndarray
    extent: Extent = field(default_factory=Extent)

    def __post_init__(self):
        values = _as_float(self.values, np.float32, "voxel values")
        if values.ndim != 3:
            raise ContractError(f"voxel values must be 3D, got {values.shape}")
        r = values.shape[0]
        if values.shape != (r, r, r):
            raise ContractError(f"voxel grid must be cubic, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ContractError("voxel values must be finite")
        if values.size and (values.min() < 0 or values.max() > 1):
            raise ContractError("voxel values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def cell_size(self) -> float:
        return self.extent.side / self.resolution

    def cell_centers_1d(self, axis: int) -> np.ndarray:
        lo = self.extent.lo[axis]
        h = self.cell_size
        return lo + (np.arange(self.resolution) + 0.5) * h


@dataclass(frozen=True)
class Pose:
    """Rigid transform x_world = rotation @ x_local + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = _as_float(self.rotation, np.float64, "rotation")
        tr = _as_float(self.translation, np.float64, "translation")
        if rot.shape != (3, 3) or tr.shape != (3,):
            raise ContractError("pose needs a 3x3 rotation and a 3-translation")
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(tr))):
            raise ContractError("pose entries must be finite")
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > 1e-6:
            raise ContractError("rotation is not orthonormal (tolerance 1e-6)")
        if abs(np.linalg.det(rot) - 1.0) > 1e-6:
            raise ContractError("rotation determinant must be +1 (tolerance 1e-6)")
        object.__setattr__(self, "rotation", _frozen(rot))
        object.__setattr__(self, "translation", _frozen(tr))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)


@dataclass(frozen=True)
class SimilarityTransform:
    """x' = scale * x + translation (rotation-free similarity)."""

    scale: float = 1.0
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        tr = _as_float(self.translation, np.float64, "translation")
        scale = float(self.scale)
        if tr.shape != (3,) or not np.all(np.isfinite(tr)):
            raise ContractError("translation must be a finite 3-vector")
        if not np.isfinite(scale) or scale == 0:
            raise DegenerateInputError("similarity scale must be finite and nonzero")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "translation", _frozen(tr))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points * self.scale + self.translation

    def inverse(self) -> "SimilarityTransform":
        return SimilarityTransform(1.0 / self.scale, -self.translation / self.scale)

    def is_identity(self, tol: float = 0.0) -> bool:
        return (abs(self.scale - 1.0) <= tol
                and bool(np.all(np.abs(self.translation) <= tol)))
