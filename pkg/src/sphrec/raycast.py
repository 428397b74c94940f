"""First-hit ray casting against triangle meshes.

The fast path bins triangles into a uniform grid and walks each ray
through it (3D-DDA), testing candidates with a watertight
Moller-Trumbore-style test (shear + 2D edge functions), so rays passing
exactly through shared edges or vertices are claimed by at least one
adjacent triangle. Exact-t ties go to the lowest triangle index.
Everything is sequential per ray and float64, so results are
bit-identical across runs and thread counts.

`raycast_bruteforce` is an independent all-pairs reference used by the
test suite to pin the accelerated path.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .types import TriangleMesh

_LAMBDA = 3.0  # target triangles per grid cell
_MAX_RES = 128


@njit(cache=True, error_model="numpy")
def _hit_triangle(ox, oy, oz, kx, ky, kz, sx, sy, sz,
                  ax, ay, az, bx, by, bz, cx, cy, cz):
    """Watertight ray/triangle test. Returns t >= 0 or -1.0 for a miss.

    The ray was pre-transformed into (kx, ky, kz) axis order with shear
    constants (sx, sy, sz); t is in units of the caller's direction.
    """
    av = (ax - ox, ay - oy, az - oz)
    bv = (bx - ox, by - oy, bz - oz)
    cv = (cx - ox, cy - oy, cz - oz)
    akx = av[kx] - sx * av[kz]
    aky = av[ky] - sy * av[kz]
    bkx = bv[kx] - sx * bv[kz]
    bky = bv[ky] - sy * bv[kz]
    ckx = cv[kx] - sx * cv[kz]
    cky = cv[ky] - sy * cv[kz]
    u = ckx * bky - cky * bkx
    v = akx * cky - aky * ckx
    w = bkx * aky - bky * akx
    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
        return -1.0
    det = u + v + w
    if det == 0.0:
        return -1.0
    t_scaled = u * sz * av[kz] + v * sz * bv[kz] + w * sz * cv[kz]
    t = t_scaled / det
    if t < 0.0:
        return -1.0
    return t


@njit(cache=True, error_model="numpy")
def _cast_rays(origins, dirs, t_lo, t_hi, verts, tris,
               grid_lo, cell_size, grid_res, cell_start, cell_items):
    n = origins.shape[0]
    out_t = np.full(n, np.inf)
    out_tri = np.full(n, -1, dtype=np.int64)
    gx, gy, gz = grid_res[0], grid_res[1], grid_res[2]
    grid_hi = (grid_lo[0] + cell_size[0] * gx,
               grid_lo[1] + cell_size[1] * gy,
               grid_lo[2] + cell_size[2] * gz)

    for i in range(n):
        ox, oy, oz = origins[i, 0], origins[i, 1], origins[i, 2]
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]

        # shear setup: kz is the dominant direction axis
        adx, ady, adz = abs(dx), abs(dy), abs(dz)
        if adx >= ady and adx >= adz:
            kz = 0
        elif ady >= adz:
            kz = 1
        else:
            kz = 2
        kx = kz + 1
        if kx == 3:
            kx = 0
        ky = kx + 1
        if ky == 3:
            ky = 0
        d = (dx, dy, dz)
        if d[kz] < 0.0:
            kx, ky = ky, kx
        sz = 1.0 / d[kz]
        sx = d[kx] * sz
        sy = d[ky] * sz

        # clip the ray's [t_lo, t_hi] span to the grid box
        t0 = t_lo
        t1 = t_hi
        ok = True
        o3 = (ox, oy, oz)
        for a in range(3):
            if d[a] != 0.0:
                inv = 1.0 / d[a]
                ta = (grid_lo[a] - o3[a]) * inv
                tb = (grid_hi[a] - o3[a]) * inv
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
            elif o3[a] < grid_lo[a] or o3[a] > grid_hi[a]:
                ok = False
        if not ok or t0 > t1:
            continue

        # starting cell at the entry point (nudged off exact boundaries)
        px = ox + t0 * dx
        py = oy + t0 * dy
        pz = oz + t0 * dz
        ix = int((px - grid_lo[0]) / cell_size[0])
        iy = int((py - grid_lo[1]) / cell_size[1])
        iz = int((pz - grid_lo[2]) / cell_size[2])
        if ix < 0:
            ix = 0
        if ix >= gx:
            ix = gx - 1
        if iy < 0:
            iy = 0
        if iy >= gy:
            iy = gy - 1
        if iz < 0:
            iz = 0
        if iz >= gz:
            iz = gz - 1
        cell = (ix, iy, iz)

        step = (1 if dx > 0.0 else (-1 if dx < 0.0 else 0),
                1 if dy > 0.0 else (-1 if dy < 0.0 else 0),
                1 if dz > 0.0 else (-1 if dz < 0.0 else 0))
        t_next = [np.inf, np.inf, np.inf]
        t_delta = [np.inf, np.inf, np.inf]
        cell3 = [ix, iy, iz]
        for a in range(3):
            if d[a] > 0.0:
                t_next[a] = (grid_lo[a] + (cell3[a] + 1) * cell_size[a] - o3[a]) / d[a]
                t_delta[a] = cell_size[a] / d[a]
            elif d[a] < 0.0:
                t_next[a] = (grid_lo[a] + cell3[a] * cell_size[a] - o3[a]) / d[a]
                t_delta[a] = -cell_size[a] / d[a]

        best_t = np.inf
        best_tri = -1
        while True:
            lin = (cell3[0] * gy + cell3[1]) * gz + cell3[2]
            for s in range(cell_start[lin], cell_start[lin + 1]):
                j = cell_items[s]
                va = tris[j, 0]
                vb = tris[j, 1]
                vc = tris[j, 2]
                t = _hit_triangle(
                    ox, oy, oz, kx, ky, kz, sx, sy, sz,
                    verts[va, 0], verts[va, 1], verts[va, 2],
                    verts[vb, 0], verts[vb, 1], verts[vb, 2],
                    verts[vc, 0], verts[vc, 1], verts[vc, 2])
                if t >= t_lo and t <= t_hi:
                    if t < best_t or (t == best_t and j < best_tri):
                        best_t = t
                        best_tri = j

            t_exit = t_next[0]
            if t_next[1] < t_exit:
                t_exit = t_next[1]
            if t_next[2] < t_exit:
                t_exit = t_next[2]
            if best_t <= t_exit:
                break  # no unvisited cell can hold a closer hit
            if t_next[0] <= t_next[1] and t_next[0] <= t_next[2]:
                a = 0
            elif t_next[1] <= t_next[2]:
                a = 1
            else:
                a = 2
            cell3[a] += step[a]
            if cell3[a] < 0 or cell3[a] >= grid_res[a]:
                break
            t_next[a] += t_delta[a]

        if best_tri >= 0:
            out_t[i] = best_t
            out_tri[i] = best_tri
    return out_t, out_tri


class TriangleRaycaster:
    """Uniform-grid accelerated first-hit caster for one mesh."""

    def __init__(self, mesh: TriangleMesh):
        if mesh.is_empty():
            self._empty = True
            return
        self._empty = False
        verts = mesh.vertices
        tris = mesh.triangles
        self.verts = np.ascontiguousarray(verts, dtype=np.float64)
        self.tris = np.ascontiguousarray(tris, dtype=np.int64)

        tv = verts[tris]  # (T, 3, 3)
        tri_lo = tv.min(axis=1)
        tri_hi = tv.max(axis=1)
        lo = tri_lo.min(axis=0)
        hi = tri_hi.max(axis=0)
        ext = np.maximum(hi - lo, 1e-9)
        pad = 1e-9 + 1e-7 * ext
        lo = lo - pad
        ext = ext + 2 * pad

        n_tri = len(tris)
        target = (ext.prod() / max(n_tri, 1) / _LAMBDA) ** (1.0 / 3.0)
        res = np.clip((ext / max(target, 1e-12)).astype(np.int64), 1, _MAX_RES)
        csize = ext / res

        x0 = np.clip(((tri_lo - lo) / csize).astype(np.int64), 0, res - 1)
        x1 = np.clip(((tri_hi - lo) / csize).astype(np.int64), 0, res - 1)
        span = x1 - x0 + 1
        m_per_tri = span.prod(axis=1)
        total = int(m_per_tri.sum())
        tri_ids = np.repeat(np.arange(n_tri), m_per_tri)
        offsets = np.concatenate([[0], np.cumsum(m_per_tri)[:-1]])
        local = np.arange(total) - np.repeat(offsets, m_per_tri)
        syz = np.repeat(span[:, 1] * span[:, 2], m_per_tri)
        sz = np.repeat(span[:, 2], m_per_tri)
        cx = np.repeat(x0[:, 0], m_per_tri) + local // syz
        cy = np.repeat(x0[:, 1], m_per_tri) + (local % syz) // sz
        cz = np.repeat(x0[:, 2], m_per_tri) + local % sz
        lin = (cx * res[1] + cy) * res[2] + cz

        order = np.argsort(lin, kind="stable")  # keeps tri ids sorted per cell
        self.cell_items = np.ascontiguousarray(tri_ids[order])
        counts = np.bincount(lin, minlength=int(res.prod()))
        self.cell_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.grid_lo = np.ascontiguousarray(lo)
        self.cell_size = np.ascontiguousarray(csize)
        self.grid_res = np.ascontiguousarray(res)

    def cast(self, origins: np.ndarray, dirs: np.ndarray,
             t_max: float = np.inf, t_min: float = 0.0):
        """Returns (hit bool[N], t float64[N], triangle index int64[N]).

        t is in units of the given (not necessarily unit) directions.
        """
        origins = np.ascontiguousarray(origins, dtype=np.float64)
        dirs = np.ascontiguousarray(dirs, dtype=np.float64)
        if self._empty:
            n = origins.shape[0]
            return (np.zeros(n, dtype=bool), np.full(n, np.inf),
                    np.full(n, -1, dtype=np.int64))
        t, tri = _cast_rays(origins, dirs, float(t_min), float(t_max),
                            self.verts, self.tris, self.grid_lo,
                            self.cell_size, self.grid_res,
                            self.cell_start, self.cell_items)
        return tri >= 0, t, tri


def raycast_bruteforce(mesh: TriangleMesh, origins: np.ndarray, dirs: np.ndarray,
                       t_max: float = np.inf, t_min: float = 0.0,
                       chunk: int = 2048):
    """All-pairs Moller-Trumbore reference; same tie-break as the fast path."""
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    n = origins.shape[0]
    if mesh.is_empty() or n == 0:
        return (np.zeros(n, dtype=bool), np.full(n, np.inf),
                np.full(n, -1, dtype=np.int64))
    tv = mesh.vertices[mesh.triangles]
    a = tv[:, 0]
    e1 = tv[:, 1] - a
    e2 = tv[:, 2] - a
    best_t = np.full(n, np.inf)
    best_tri = np.full(n, -1, dtype=np.int64)
    for s in range(0, n, chunk):
        o = origins[s:s + chunk, None, :]
        d = dirs[s:s + chunk, None, :]
        p = np.cross(d, e2[None])
        det = np.einsum("tk,ntk->nt", e1, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            sv = o - a[None]
            u = np.einsum("ntk,ntk->nt", sv, p) * inv
            q = np.cross(sv, e1[None])
            v = np.einsum("ntk,ntk->nt", d, q) * inv
            t = np.einsum("tk,ntk->nt", e2, q) * inv
        ok = ((det != 0) & (u >= 0) & (v >= 0) & (u + v <= 1)
              & (t >= t_min) & (t <= t_max))
        t = np.where(ok, t, np.inf)
        j = np.argmin(t, axis=1)  # first minimum = lowest triangle index
        rows = np.arange(t.shape[0])
        tbest = t[rows, j]
        hit = np.isfinite(tbest)
        best_t[s:s + chunk] = np.where(hit, tbest, np.inf)
        best_tri[s:s + chunk] = np.where(hit, j, -1)
    return best_tri >= 0, best_t, best_tri
