"""Isosurface extraction, shape normalization, and surface sampling."""

from __future__ import annotations

import numpy as np

from ._mc_tables import EDGE_CORNERS, EDGE_TABLE, TRI_TABLE
from .errors import ContractError, DegenerateInputError
from .rng import uniform
from .types import PointCloud, SimilarityTransform, TriangleMesh, VoxelGrid

__all__ = [
    "marching_cubes",
    "normalize_shape",
    "minimal_enclosing_sphere",
    "sample_surface",
]

_CORNER_OFFSETS = np.array([
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
], dtype=np.int64)

# per local edge: lattice offset of its low corner and its axis
_EDGE_BASE = np.array([np.minimum(_CORNER_OFFSETS[a], _CORNER_OFFSETS[b])
                       for a, b in EDGE_CORNERS], dtype=np.int64)
_EDGE_AXIS = np.array([int(np.argmax(np.abs(_CORNER_OFFSETS[b] - _CORNER_OFFSETS[a])))
                       for a, b in EDGE_CORNERS], dtype=np.int64)

_EDGE_TABLE = np.asarray(EDGE_TABLE, dtype=np.int64)
_TRI_TABLE = np.asarray(TRI_TABLE, dtype=np.int64)


def marching_cubes(grid: VoxelGrid, iso: float) -> TriangleMesh:
    """Extract the iso-level surface of a voxel grid as a triangle mesh.

    Values are samples at cell centers; vertices land on lattice edges by
    linear interpolation. Values above iso are inside and triangles are
    wound with outward-facing normals. Returns an empty mesh when the
    field never crosses iso.
    """
    iso = float(iso)
    if not 0.0 < iso < 1.0:
        raise ContractError(f"iso threshold must lie in (0, 1), got {iso}")
    res = grid.resolution
    if res < 2:
        raise ContractError("marching cubes needs grid resolution >= 2")

    v = grid.values.astype(np.float64)
    v = np.where(v == iso, iso + 1e-9, v)  # no zero-length interpolation spans

    below = v < iso
    n = res - 1
    case = np.zeros((n, n, n), dtype=np.int64)
    for k, (dx, dy, dz) in enumerate(_CORNER_OFFSETS):
        case |= below[dx:n + dx, dy:n + dy, dz:n + dz].astype(np.int64) << k

    active = (case != 0) & (case != 255)
    if not active.any():
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    cells = np.argwhere(active)           # (A, 3), row-major order
    cases = case[active]

    # global edge id = axis * R^3 + linear lattice index of the low corner
    lat_lin = (cells[:, 0] * res + cells[:, 1]) * res + cells[:, 2]
    base_lin = (lat_lin[:, None]
                + (_EDGE_BASE[:, 0] * res + _EDGE_BASE[:, 1]) * res
                + _EDGE_BASE[:, 2])
    gids = _EDGE_AXIS[None, :] * res ** 3 + base_lin    # (A, 12)

    edge_mask = _EDGE_TABLE[cases]
    used = (edge_mask[:, None] >> np.arange(12)) & 1    # (A, 12)
    unique_gids = np.unique(gids[used.astype(bool)])

    # interpolate one vertex per unique lattice edge
    axis = unique_gids // res ** 3
    rem = unique_gids % res ** 3
    bx = rem // (res * res)
    by = (rem // res) % res
    bz = rem % res
    p0 = v[bx, by, bz]
    step = np.eye(3, dtype=np.int64)[axis]
    p1 = v[bx + step[:, 0], by + step[:, 1], bz + step[:, 2]]
    frac = (iso - p0) / (p1 - p0)
    h = grid.cell_size
    lo = grid.extent.lo
    verts = lo + (np.stack([bx, by, bz], axis=1) + 0.5) * h
    verts = verts + frac[:, None] * h * step

    # emit triangles grouped by case, then restore row-major cell order
    tri_chunks, key_chunks = [], []
    cell_order = np.arange(len(cells))
    for c in np.unique(cases):
        row = _TRI_TABLE[c]
        k = int(np.argmax(row == -1)) if (row == -1).any() else 16
        k -= k % 3
        if k == 0:
            continue
        local = row[:k].reshape(-1, 3)                   # (m, 3) local edges
        in_case = cases == c
        cell_gids = gids[in_case]                        # (B, 12)
        tri = cell_gids[:, local.reshape(-1)].reshape(-1, 3)
        slot = np.tile(np.arange(local.shape[0]), in_case.sum())
        keys = np.repeat(cell_order[in_case], local.shape[0]) * 8 + slot
        tri_chunks.append(tri)
        key_chunks.append(keys)
    tris = np.concatenate(tri_chunks)
    keys = np.concatenate(key_chunks)
    tris = tris[np.argsort(keys, kind="stable")]
    tris = np.searchsorted(unique_gids, tris)

    # table winding is inward for the below-iso convention; flip for outward
    tris = tris[:, ::-1]
    return TriangleMesh(verts, np.ascontiguousarray(tris))


# ---------------------------------------------------------------------------
# Minimal enclosing sphere (randomized incremental Welzl, support size <= 4)


def _circumsphere(support: np.ndarray):
    """Smallest sphere with all support points (2-4 of them) on its boundary."""
    p0 = support[0]
    d = support[1:] - p0
    rhs = 0.5 * np.einsum("ij,ij->i", d, d)
    try:
        sol, *_ = np.linalg.lstsq(d, rhs, rcond=None)
    except np.linalg.LinAlgError:
        sol = np.zeros(3)
    center = p0 + sol
    r2 = float(np.max(np.einsum("ij,ij->i", support - center, support - center)))
    return center, r2


def _first_violator(pts, start, center, r2):
    """Index of the first point outside the sphere, or -1."""
    if start >= len(pts):
        return -1
    d = pts[start:] - center
    d2 = np.einsum("ij,ij->i", d, d)
    bad = d2 > r2 + 1e-12 * max(r2, 1.0)
    if not bad.any():
        return -1
    return start + int(np.argmax(bad))


def minimal_enclosing_sphere(points: np.ndarray):
    """Exact smallest enclosing sphere; returns (center, radius)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise DegenerateInputError("no points")
    # canonical order, then a fixed shuffle: the result is deterministic
    # and independent of the caller's point ordering
    pts = pts[np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))]
    pts = pts[np.argsort(uniform(0xB0B, 0, len(pts)), kind="stable")]

    def scan(level_pts, boundary):
        if len(boundary) == 1:
            center, r2 = boundary[0], 0.0
        else:
            center, r2 = _circumsphere(np.array(boundary))
        i = _first_violator(level_pts, 0, center, r2)
        while i >= 0:
            if len(boundary) == 3:
                center, r2 = _circumsphere(np.array(boundary + [level_pts[i]]))
            else:
                center, r2 = scan(level_pts[:i], boundary + [level_pts[i]])
            i = _first_violator(level_pts, i + 1, center, r2)
        return center, r2

    center, r2 = pts[0], 0.0
    i = _first_violator(pts, 1, center, r2)
    while i >= 0:
        center, r2 = scan(pts[:i], [pts[i]])
        i = _first_violator(pts, i + 1, center, r2)
    return center, float(np.sqrt(max(r2, 0.0)))


def normalize_shape(mesh: TriangleMesh):
    """Center the mesh at the origin with bounding-sphere radius 0.5.

    Returns (normalized mesh, applied SimilarityTransform); the transform
    maps original coordinates to normalized ones.
    """
    if len(mesh.vertices) == 0:
        raise ContractError("cannot normalize an empty mesh")
    center, radius = minimal_enclosing_sphere(mesh.vertices)
    if radius < 1e-12:
        raise DegenerateInputError("mesh has zero spatial extent")
    scale = 0.5 / radius
    transform = SimilarityTransform(scale, -scale * center)
    return TriangleMesh(transform.apply(mesh.vertices), mesh.triangles), transform


def normalize_points(cloud: PointCloud):
    """Point-cloud counterpart of normalize_shape."""
    if len(cloud) == 0:
        raise DegenerateInputError("cannot normalize an empty point cloud")
    center, radius = minimal_enclosing_sphere(cloud.points)
    if radius < 1e-12:
        raise DegenerateInputError("point cloud has zero spatial extent")
    scale = 0.5 / radius
    transform = SimilarityTransform(scale, -scale * center)
    return PointCloud(transform.apply(cloud.points)), transform


# ---------------------------------------------------------------------------
# Surface sampling


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    tv = mesh.vertices[mesh.triangles]
    cross = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> PointCloud:
    """n points, area-weighted across triangles, uniform within each.

    Uses the repo's counter-based generator (3 draws per point), so the
    result is bit-identical for a given seed on every platform.
    """
    if n < 0:
        raise ContractError("sample count must be >= 0")
    areas = triangle_areas(mesh)
    total = areas.sum()
    if not total > 0:
        raise DegenerateInputError("mesh has zero total surface area")
    if n == 0:
        return PointCloud(np.zeros((0, 3)))
    u = uniform(seed, 0, 3 * n).reshape(n, 3)
    cdf = np.cumsum(areas) / total
    tri = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(areas) - 1)
    tv = mesh.vertices[mesh.triangles[tri]]
    r1 = np.sqrt(u[:, 1])[:, None]
    r2 = u[:, 2][:, None]
    pts = (1 - r1) * tv[:, 0] + r1 * (1 - r2) * tv[:, 1] + r1 * r2 * tv[:, 2]
    return PointCloud(pts)
