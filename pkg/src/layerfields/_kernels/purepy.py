"""Pure-numpy fallback for the hot kernels.

Same contracts as the compiled `fastcore` extension: raw solid-angle sums
(caller divides by 4*pi), dipole-accelerated winding over a flattened BVH,
and closest-point queries. Used when the extension is unavailable or when
LAYERFIELDS_PURE=1 is set; the compiled module is the production path.
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def _chunked(n: int, nt: int, budget: int = 2_000_000) -> int:
    return max(1, budget // max(nt, 1))


def solid_angle_sum(tv: np.ndarray, pts: np.ndarray, out: np.ndarray) -> None:
    """out[i] = sum over triangles of the signed solid angle at pts[i].

    tv is (nt, 9): the three corners of each triangle, row-flattened.
    Summation is a deterministic reduction in ascending triangle order.
    """
    nt = tv.shape[0]
    if nt == 0:
        out[:] = 0.0
        return
    A = tv[:, 0:3]
    B = tv[:, 3:6]
    C = tv[:, 6:9]
    chunk = _chunked(len(pts), nt)
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk]
        a = A[None, :, :] - p[:, None, :]
        b = B[None, :, :] - p[:, None, :]
        c = C[None, :, :] - p[:, None, :]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        num = np.einsum("ptk,ptk->pt", a, np.cross(b, c))
        den = (
            la * lb * lc
            + np.einsum("ptk,ptk->pt", a, b) * lc
            + np.einsum("ptk,ptk->pt", b, c) * la
            + np.einsum("ptk,ptk->pt", c, a) * lb
        )
        omega = 2.0 * np.arctan2(num, den)
        omega[(la == 0) | (lb == 0) | (lc == 0)] = 0.0
        out[s : s + chunk] = omega.sum(axis=1)


def _leaf_angle(tvl, lo, hi, p):
    a = tvl[lo:hi, 0:3] - p
    b = tvl[lo:hi, 3:6] - p
    c = tvl[lo:hi, 6:9] - p
    la = np.linalg.norm(a, axis=1)
    lb = np.linalg.norm(b, axis=1)
    lc = np.linalg.norm(c, axis=1)
    num = np.einsum("tk,tk->t", a, np.cross(b, c))
    den = (
        la * lb * lc
        + np.einsum("tk,tk->t", a, b) * lc
        + np.einsum("tk,tk->t", b, c) * la
        + np.einsum("tk,tk->t", c, a) * lb
    )
    omega = 2.0 * np.arctan2(num, den)
    omega[(la == 0) | (lb == 0) | (lc == 0)] = 0.0
    return omega.sum()


def winding_fast(
    nmin, nmax, left, right, start, count, centroid, nvec, radius, tvl, pts, beta, out
) -> None:
    """Dipole-approximated winding sums over a flat BVH (raw solid angle).

    Nodes whose aggregate centroid is farther than beta * node radius from the
    query are replaced by the first-order dipole term; near nodes are descended.
    Callers must route beta == 0 through solid_angle_sum for exact evaluation.
    """
    b2 = beta * beta
    for i in range(len(pts)):
        p = pts[i]
        acc = 0.0
        stack = [0]
        while stack:
            node = stack.pop()
            d = centroid[node] - p
            d2 = float(d @ d)
            if beta > 0.0 and d2 > b2 * radius[node] * radius[node] and d2 > 0.0:
                acc += float(nvec[node] @ d) / (d2 * np.sqrt(d2))
            elif left[node] < 0:
                lo = start[node]
                acc += _leaf_angle(tvl, lo, lo + count[node], p)
            else:
                stack.append(right[node])
                stack.append(left[node])
        out[i] = acc


def _tri_closest_batch(A, B, C, p):
    """Closest points on triangles (A,B,C) to a single point p (Ericson)."""
    ab = B - A
    ac = C - A
    ap = p - A
    d1 = np.einsum("tk,tk->t", ab, ap)
    d2 = np.einsum("tk,tk->t", ac, ap)
    bp = p - B
    d3 = np.einsum("tk,tk->t", ab, bp)
    d4 = np.einsum("tk,tk->t", ac, bp)
    cp = p - C
    d5 = np.einsum("tk,tk->t", ab, cp)
    d6 = np.einsum("tk,tk->t", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        denom_bc = (d4 - d3) + (d5 - d6)
        w_bc = np.where(denom_bc != 0, (d4 - d3) / denom_bc, 0.0)
        denom = va + vb + vc
        v_in = np.where(denom != 0, vb / denom, 0.0)
        w_in = np.where(denom != 0, vc / denom, 0.0)

    q = A + v_in[:, None] * ab + w_in[:, None] * ac  # interior default
    cond_a = (d1 <= 0) & (d2 <= 0)
    cond_b = (d3 >= 0) & (d4 <= d3)
    cond_c = (d6 >= 0) & (d5 <= d6)
    cond_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    cond_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    cond_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)

    q_ab = A + v_ab[:, None] * ab
    q_ac = A + w_ac[:, None] * ac
    q_bc = B + w_bc[:, None] * (C - B)

    # later assignments win, so order from lowest to highest priority
    q = np.where(cond_bc[:, None], q_bc, q)
    q = np.where(cond_ac[:, None], q_ac, q)
    q = np.where(cond_ab[:, None], q_ab, q)
    q = np.where(cond_c[:, None], C, q)
    q = np.where(cond_b[:, None], B, q)
    q = np.where(cond_a[:, None], A, q)
    diff = q - p
    return q, np.einsum("tk,tk->t", diff, diff)


def closest_point(
    nmin, nmax, left, right, start, count, tvl, pts, out_q, out_d, out_t
) -> None:
    """BVH closest-point query; out_t holds leaf-order triangle indices."""
    for i in range(len(pts)):
        p = pts[i]
        best = np.inf
        bq = np.zeros(3)
        bt = -1
        stack = [0]
        while stack:
            node = stack.pop()
            lo_d = np.maximum(nmin[node] - p, 0.0)
            hi_d = np.maximum(p - nmax[node], 0.0)
            box2 = float(lo_d @ lo_d + hi_d @ hi_d)
            if box2 >= best:
                continue
            if left[node] < 0:
                lo = start[node]
                hi = lo + count[node]
                q, d2 = _tri_closest_batch(
                    tvl[lo:hi, 0:3], tvl[lo:hi, 3:6], tvl[lo:hi, 6:9], p
                )
                k = int(np.argmin(d2))
                if d2[k] < best:
                    best = float(d2[k])
                    bq = q[k]
                    bt = lo + k
            else:
                stack.append(right[node])
                stack.append(left[node])
        out_q[i] = bq
        out_d[i] = np.sqrt(best)
        out_t[i] = bt


def second_nearest(
    nmin, nmax, left, right, start, count, tvl, pts, foot, rho, cap, out_d
) -> None:
    """Nearest distance over triangles whose closest point to the query lies
    at least rho away from foot[i] (the first closest point). The search is
    clipped to cap[i]: when nothing closer exists, out_d[i] == cap[i]."""
    rho2 = rho * rho
    for i in range(len(pts)):
        p = pts[i]
        f = foot[i]
        best = cap[i] * cap[i]
        stack = [0]
        while stack:
            node = stack.pop()
            lo_d = np.maximum(nmin[node] - p, 0.0)
            hi_d = np.maximum(p - nmax[node], 0.0)
            if float(lo_d @ lo_d + hi_d @ hi_d) >= best:
                continue
            if left[node] < 0:
                lo = start[node]
                hi = lo + count[node]
                q, d2 = _tri_closest_batch(
                    tvl[lo:hi, 0:3], tvl[lo:hi, 3:6], tvl[lo:hi, 6:9], p
                )
                sep2 = ((q - f) ** 2).sum(axis=1)
                d2 = np.where(sep2 < rho2, np.inf, d2)
                k = int(np.argmin(d2))
                if d2[k] < best:
                    best = float(d2[k])
            else:
                stack.append(right[node])
                stack.append(left[node])
        out_d[i] = np.sqrt(best)
