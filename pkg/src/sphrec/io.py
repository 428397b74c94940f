"""Bit-exact file I/O for all artifact types.

VOXB tensor container (little-endian throughout):

    magic   4 bytes  b"VOXB"
    version u32      1
    etype   u32      0 = float32, 1 = uint8
    rank    u32
    dims    rank x u64
    data    raw row-major elements

Meshes and point clouds are Wavefront OBJ restricted to v/f records,
printed with repr-precision floats so float64 coordinates round-trip
exactly. Depth maps are grayscale PFM (bottom-up rows, negative scale =
little-endian) with the mask either encoded as non-positive values or
written as a second PFM.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ContractError, CorruptionError, FormatError
from .types import DepthMap, Extent, PointCloud, SphericalMap, TriangleMesh, VoxelGrid

_MAGIC = b"VOXB"
_VERSION = 1
_ETYPES = {0: np.dtype("<f4"), 1: np.dtype("<u1")}
_ECODES = {np.dtype("float32"): 0, np.dtype("uint8"): 1}
_MAX_RANK = 32

SPHERICAL_PARAMETERIZATION = "equirect-cell-center-v1"


# ---------------------------------------------------------------------------
# VOXB tensors


def write_tensor(path, tensor: np.ndarray) -> None:
    """Write a float32 or uint8 tensor; write-then-read is the identity."""
    tensor = np.asarray(tensor)
    code = _ECODES.get(tensor.dtype)
    if code is None:
        raise ContractError(
            f"VOXB stores float32 or uint8 tensors, got dtype {tensor.dtype}")
    header = _MAGIC + struct.pack("<III", _VERSION, code, tensor.ndim)
    header += struct.pack(f"<{tensor.ndim}Q", *tensor.shape)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(tensor).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: not a VOXB file (bad magic)")
    version, code, rank = struct.unpack_from("<III", raw, 4)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported VOXB version {version}")
    if code not in _ETYPES:
        raise FormatError(f"{path}: unknown element-type code {code}")
    if rank > _MAX_RANK:
        raise FormatError(f"{path}: implausible rank {rank}")
    header_end = 16 + 8 * rank
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated VOXB header")
    dims = struct.unpack_from(f"<{rank}Q", raw, 16)
    dtype = _ETYPES[code]
    n_elems = 1
    for d in dims:
        n_elems *= d
    expected = header_end + n_elems * dtype.itemsize
    if len(raw) != expected:
        raise CorruptionError(
            f"{path}: header declares {n_elems} elements "
            f"({expected} bytes total), file has {len(raw)} bytes")
    data = np.frombuffer(raw, dtype=dtype, count=n_elems, offset=header_end)
    return data.reshape(dims).copy()


# ---------------------------------------------------------------------------
# OBJ meshes and point clouds


def write_mesh(path, mesh: TriangleMesh) -> None:
    with open(path, "w") as f:
        for v in mesh.vertices:
            f.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        for t in mesh.triangles:
            f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def write_pointcloud(path, cloud: PointCloud) -> None:
    with open(path, "w") as f:
        for p in cloud.points:
            f.write(f"v {p[0]!r} {p[1]!r} {p[2]!r}\n")


def _parse_obj(path):
    verts, tris = [], []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise FormatError(f"{path}:{lineno}: malformed vertex record")
                try:
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: non-numeric vertex") from None
            elif tag == "f":
                if len(parts) != 4:
                    raise FormatError(
                        f"{path}:{lineno}: only triangle faces are supported")
                try:
                    tris.append(tuple(int(p.split("/")[0]) - 1 for p in parts[1:]))
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: non-numeric face") from None
            # other records (vn, vt, o, g, usemtl, ...) are ignored
    return np.array(verts, dtype=np.float64).reshape(-1, 3), \
        np.array(tris, dtype=np.int64).reshape(-1, 3)


def read_mesh(path) -> TriangleMesh:
    verts, tris = _parse_obj(path)
    try:
        return TriangleMesh(verts, tris)
    except ContractError as e:
        raise CorruptionError(f"{path}: {e}") from None


def read_pointcloud(path) -> PointCloud:
    verts, _ = _parse_obj(path)
    return PointCloud(verts)


# ---------------------------------------------------------------------------
# PFM depth maps


def _write_pfm(path, image: np.ndarray) -> None:
    image = np.asarray(image, dtype="<f4")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{image.shape[1]} {image.shape[0]}\n".encode())
        f.write(b"-1.0\n")  # negative scale = little-endian
        f.write(image[::-1].tobytes())  # PFM stores rows bottom-up


def _read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        # header is three whitespace-terminated tokens groups
        if not raw.startswith(b"Pf"):
            raise FormatError(f"{path}: not a grayscale PFM (bad magic)")
        pos = 2
        tokens = []
        while len(tokens) < 3:
            while pos < len(raw) and raw[pos] in b" \t\r\n":
                pos += 1
            start = pos
            while pos < len(raw) and raw[pos] not in b" \t\r\n":
                pos += 1
            if start == pos:
                raise FormatError(f"{path}: truncated PFM header")
            tokens.append(raw[start:pos])
        pos += 1  # single whitespace after the scale token
        width, height = int(tokens[0]), int(tokens[1])
        scale = float(tokens[2])
    except (ValueError, IndexError):
        raise FormatError(f"{path}: malformed PFM header") from None
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    expected = width * height * 4
    if len(raw) - pos != expected:
        raise CorruptionError(
            f"{path}: PFM payload is {len(raw) - pos} bytes, expected {expected}")
    img = np.frombuffer(raw, dtype=dtype, count=width * height, offset=pos)
    return img.reshape(height, width)[::-1].astype(np.float32)


def write_depth(path, depth: DepthMap, mask_path=None) -> None:
    """One-file form encodes background as 0; mask_path writes it separately."""
    _write_pfm(path, depth.values)
    if mask_path is not None:
        _write_pfm(mask_path, depth.mask.astype(np.float32))


def read_depth(path, mask_path=None) -> DepthMap:
    values = _read_pfm(path)
    if mask_path is not None:
        mask = _read_pfm(mask_path) > 0.5
        if mask.shape != values.shape:
            raise CorruptionError(f"{mask_path}: mask shape differs from depth")
    else:
        mask = values > 0
    try:
        return DepthMap(values, mask)
    except ContractError as e:
        raise CorruptionError(f"{path}: {e}") from None


# ---------------------------------------------------------------------------
# Composite artifacts (VOXB + JSON sidecar)


def _read_json(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON sidecar ({e})") from None


def save_voxel_grid(path, grid: VoxelGrid) -> None:
    path = Path(path)
    write_tensor(path, grid.values)
    sidecar = {
        "format": "voxel-grid",
        "version": 1,
        "resolution": grid.resolution,
        "extent": {"center": [float(c) for c in grid.extent.center],
                   "side": grid.extent.side},
    }
    with open(path.with_name(path.name + ".json"), "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_voxel_grid(path) -> VoxelGrid:
    path = Path(path)
    values = read_tensor(path)
    meta = _read_json(path.with_name(path.name + ".json"))
    try:
        extent = Extent(np.array(meta["extent"]["center"]), meta["extent"]["side"])
        grid = VoxelGrid(values, extent)
        if grid.resolution != meta["resolution"]:
            raise CorruptionError(
                f"{path}: sidecar resolution {meta['resolution']} != "
                f"tensor resolution {grid.resolution}")
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: incomplete voxel-grid sidecar ({e})") from None
    except ContractError as e:
        raise CorruptionError(f"{path}: {e}") from None
    return grid


def save_spherical_map(path, smap: SphericalMap) -> None:
    """`path` is the JSON manifest; tensors go to <path>.values/.mask.voxb."""
    path = Path(path)
    values_name = path.name + ".values.voxb"
    mask_name = path.name + ".mask.voxb"
    write_tensor(path.with_name(values_name), smap.values)
    write_tensor(path.with_name(mask_name), smap.mask.astype(np.uint8))
    manifest = {
        "format": "spherical-map",
        "version": 1,
        "n_lon": smap.n_lon,
        "n_lat": smap.n_lat,
        "parameterization": SPHERICAL_PARAMETERIZATION,
        "values": values_name,
        "mask": mask_name,
    }
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_spherical_map(path) -> SphericalMap:
    path = Path(path)
    meta = _read_json(path)
    try:
        if meta.get("parameterization") != SPHERICAL_PARAMETERIZATION:
            raise FormatError(
                f"{path}: unsupported parameterization "
                f"{meta.get('parameterization')!r}")
        values = read_tensor(path.with_name(meta["values"]))
        mask = read_tensor(path.with_name(meta["mask"])).astype(bool)
        smap = SphericalMap(values, mask)
        if (smap.n_lon, smap.n_lat) != (meta["n_lon"], meta["n_lat"]):
            raise CorruptionError(f"{path}: manifest grid size != tensor size")
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: incomplete spherical-map manifest ({e})") from None
    except ContractError as e:
        raise CorruptionError(f"{path}: {e}") from None
    return smap
