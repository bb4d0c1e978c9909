"""Open garment meshes from closed extractions: trim against the continuous
indication argument g(p) and extract boundary loops.

Triangles entirely on the g > 0 side are kept, entirely non-positive ones are
dropped, and mixed-sign triangles are split at the linear zero crossing along
each sign-changing edge (crossings within 1e-6 of an endpoint snap to it).
The binary indication field cannot be interpolated; its continuous argument
shares the same zero set and is the trimming scalar.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh

SNAP_T = 1e-6


class NonManifoldBoundaryError(Exception):
    def __init__(self, edges):
        self.edges = list(edges)
        super().__init__(f"non-manifold boundary: {len(self.edges)} edges shared by >2 triangles")


@dataclass(frozen=True)
class TrimmedMesh:
    mesh: TriangleMesh
    boundary_loops: tuple[tuple[int, ...], ...]


def boundary_loops(mesh: TriangleMesh) -> list[list[int]]:
    """Partition boundary edges into closed vertex cycles.

    Traversal is deterministic: each loop starts at its lowest vertex and
    follows the triangles' winding. Raises NonManifoldBoundaryError for edges
    shared by more than two triangles.
    """
    undirected = Counter()
    for a, b, c in mesh.triangles:
        for e in ((a, b), (b, c), (c, a)):
            undirected[(min(e), max(e))] += 1
    bad = [e for e, n in undirected.items() if n > 2]
    if bad:
        raise NonManifoldBoundaryError(bad)
    # boundary edges keep the orientation they have in their single triangle
    succ: dict[int, list[int]] = {}
    directed = set()
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            if undirected[(min(u, v), max(u, v))] == 1:
                succ.setdefault(int(u), []).append(int(v))
                directed.add((int(u), int(v)))
    for lst in succ.values():
        lst.sort()
    loops: list[list[int]] = []
    used: set[tuple[int, int]] = set()
    for start_edge in sorted(directed):
        if start_edge in used:
            continue
        loop = [start_edge[0]]
        u, v = start_edge
        used.add((u, v))
        while v != loop[0]:
            loop.append(v)
            nxts = [w for w in succ.get(v, []) if (v, w) not in used]
            if not nxts:
                break  # open chain: dangling boundary, keep what we traced
            u, v = v, nxts[0]
            used.add((u, v))
        loops.append(loop)
    # canonical start: rotate each closed loop to its smallest vertex
    canon = []
    for loop in loops:
        k = int(np.argmin(loop))
        canon.append(loop[k:] + loop[:k])
    canon.sort(key=lambda l: l[0])
    return canon


def trim_by_gif(mesh: TriangleMesh, g) -> TrimmedMesh:
    """Trim `mesh` against scalar field g (callable over an (N,3) batch or
    per point). Keeps the g > 0 side; new vertices lie at the linear zero
    crossing of g along original edges. Deterministic."""
    try:
        gv = np.asarray(g(mesh.vertices), dtype=np.float64).reshape(-1)
    except Exception:
        gv = np.array([float(g(v)) for v in mesh.vertices])
    if gv.shape[0] != mesh.num_vertices:
        raise ValueError("g must yield one value per vertex")
    pos = gv > 0.0

    verts: list[np.ndarray] = list(mesh.vertices)
    tris: list[tuple[int, int, int]] = []
    crossing_cache: dict[tuple[int, int], int] = {}

    def crossing(i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        if key in crossing_cache:
            return crossing_cache[key]
        gi, gj = gv[key[0]], gv[key[1]]
        t = gi / (gi - gj)  # signs differ, so gi != gj
        if t < SNAP_T:
            idx = key[0]
        elif t > 1.0 - SNAP_T:
            idx = key[1]
        else:
            idx = len(verts)
            verts.append((1.0 - t) * mesh.vertices[key[0]] + t * mesh.vertices[key[1]])
        crossing_cache[key] = idx
        return idx

    def emit(a: int, b: int, c: int) -> None:
        if a != b and b != c and c != a:
            tris.append((a, b, c))

    for a, b, c in mesh.triangles:
        pa, pb, pc = pos[a], pos[b], pos[c]
        n_pos = int(pa) + int(pb) + int(pc)
        if n_pos == 3:
            tris.append((int(a), int(b), int(c)))
        elif n_pos == 0:
            continue
        elif n_pos == 1:
            # rotate so the positive vertex is first
            v0, v1, v2 = (a, b, c) if pa else ((b, c, a) if pb else (c, a, b))
            e01 = crossing(int(v0), int(v1))
            e02 = crossing(int(v0), int(v2))
            emit(int(v0), e01, e02)
        else:
            # rotate so the negative vertex is first
            v0, v1, v2 = (a, b, c) if not pa else ((b, c, a) if not pb else (c, a, b))
            e01 = crossing(int(v0), int(v1))
            e02 = crossing(int(v0), int(v2))
            emit(e01, int(v1), int(v2))
            emit(e01, int(v2), e02)

    if not tris:
        empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64),
                             name=f"{mesh.name}_trimmed")
        return TrimmedMesh(empty, ())
    tri_arr = np.array(tris, dtype=np.int64)
    vert_arr = np.array(verts)
    used = np.unique(tri_arr)
    remap = np.full(len(vert_arr), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = TriangleMesh(vert_arr[used], remap[tri_arr], name=f"{mesh.name}_trimmed")
    loops = tuple(tuple(l) for l in boundary_loops(out))
    return TrimmedMesh(out, loops)
