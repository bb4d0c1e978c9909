# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: solid-angle sums, dipole-accelerated winding over a
flat BVH, and closest-point queries. Mirrors the purepy module's contracts.
All loops run without the GIL so callers can chunk work across threads.
"""

from libc.math cimport atan2, sqrt

import numpy as np

NAME = "compiled"

DEF STACK_MAX = 256


cdef inline double _solid_angle(const double* tv, double px, double py, double pz) noexcept nogil:
    cdef double ax = tv[0] - px, ay = tv[1] - py, az = tv[2] - pz
    cdef double bx = tv[3] - px, by = tv[4] - py, bz = tv[5] - pz
    cdef double cx = tv[6] - px, cy = tv[7] - py, cz = tv[8] - pz
    cdef double la = sqrt(ax * ax + ay * ay + az * az)
    cdef double lb = sqrt(bx * bx + by * by + bz * bz)
    cdef double lc = sqrt(cx * cx + cy * cy + cz * cz)
    if la == 0.0 or lb == 0.0 or lc == 0.0:
        return 0.0
    cdef double num = (
        ax * (by * cz - bz * cy)
        - ay * (bx * cz - bz * cx)
        + az * (bx * cy - by * cx)
    )
    cdef double den = (
        la * lb * lc
        + (ax * bx + ay * by + az * bz) * lc
        + (bx * cx + by * cy + bz * cz) * la
        + (cx * ax + cy * ay + cz * az) * lb
    )
    if num == 0.0 and den == 0.0:
        return 0.0
    return 2.0 * atan2(num, den)


def solid_angle_sum(const double[:, ::1] tv, const double[:, ::1] pts, double[::1] out):
    """out[i] = raw solid-angle sum over all triangles, ascending index order."""
    cdef Py_ssize_t n = pts.shape[0], nt = tv.shape[0], i, t
    cdef double acc, px, py, pz
    with nogil:
        for i in range(n):
            px = pts[i, 0]
            py = pts[i, 1]
            pz = pts[i, 2]
            acc = 0.0
            for t in range(nt):
                acc += _solid_angle(&tv[t, 0], px, py, pz)
            out[i] = acc


def winding_fast(
    const double[:, ::1] nmin, const double[:, ::1] nmax,
    const long long[::1] left, const long long[::1] right,
    const long long[::1] start, const long long[::1] count,
    const double[:, ::1] centroid, const double[:, ::1] nvec,
    const double[::1] radius,
    const double[:, ::1] tvl, const double[:, ::1] pts,
    double beta, double[::1] out):
    """Dipole-approximated raw solid-angle sums; beta == 0 must not reach here."""
    cdef Py_ssize_t n = pts.shape[0], i, t, lo, hi
    cdef long long node
    cdef long long stk[STACK_MAX]
    cdef int top
    cdef double acc, px, py, pz, dx, dy, dz, d2, b2 = beta * beta
    with nogil:
        for i in range(n):
            px = pts[i, 0]
            py = pts[i, 1]
            pz = pts[i, 2]
            acc = 0.0
            top = 0
            stk[0] = 0
            while top >= 0:
                node = stk[top]
                top -= 1
                dx = centroid[node, 0] - px
                dy = centroid[node, 1] - py
                dz = centroid[node, 2] - pz
                d2 = dx * dx + dy * dy + dz * dz
                if beta > 0.0 and d2 > b2 * radius[node] * radius[node] and d2 > 0.0:
                    acc += (nvec[node, 0] * dx + nvec[node, 1] * dy + nvec[node, 2] * dz) / (d2 * sqrt(d2))
                elif left[node] < 0:
                    lo = start[node]
                    hi = lo + count[node]
                    for t in range(lo, hi):
                        acc += _solid_angle(&tvl[t, 0], px, py, pz)
                else:
                    top += 1
                    stk[top] = right[node]
                    top += 1
                    stk[top] = left[node]
            out[i] = acc


cdef inline double _clamp01(double x) noexcept nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


cdef inline double _tri_closest(const double* tv, double px, double py, double pz,
                                double* qx, double* qy, double* qz) noexcept nogil:
    """Squared distance from p to triangle tv (Ericson's region walk)."""
    cdef double ax = tv[0], ay = tv[1], az = tv[2]
    cdef double bx = tv[3], by = tv[4], bz = tv[5]
    cdef double cx = tv[6], cy = tv[7], cz = tv[8]
    cdef double abx = bx - ax, aby = by - ay, abz = bz - az
    cdef double acx = cx - ax, acy = cy - ay, acz = cz - az
    cdef double apx = px - ax, apy = py - ay, apz = pz - az
    cdef double d1 = abx * apx + aby * apy + abz * apz
    cdef double d2 = acx * apx + acy * apy + acz * apz
    cdef double bpx, bpy, bpz, cpx, cpy, cpz
    cdef double d3, d4, d5, d6, vc, vb, va, v, w, denom
    if d1 <= 0.0 and d2 <= 0.0:
        qx[0] = ax; qy[0] = ay; qz[0] = az
    else:
        bpx = px - bx; bpy = py - by; bpz = pz - bz
        d3 = abx * bpx + aby * bpy + abz * bpz
        d4 = acx * bpx + acy * bpy + acz * bpz
        if d3 >= 0.0 and d4 <= d3:
            qx[0] = bx; qy[0] = by; qz[0] = bz
        else:
            vc = d1 * d4 - d3 * d2
            if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0 and d1 - d3 != 0.0:
                v = _clamp01(d1 / (d1 - d3))
                qx[0] = ax + v * abx; qy[0] = ay + v * aby; qz[0] = az + v * abz
            else:
                cpx = px - cx; cpy = py - cy; cpz = pz - cz
                d5 = abx * cpx + aby * cpy + abz * cpz
                d6 = acx * cpx + acy * cpy + acz * cpz
                if d6 >= 0.0 and d5 <= d6:
                    qx[0] = cx; qy[0] = cy; qz[0] = cz
                else:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0 and d2 - d6 != 0.0:
                        w = _clamp01(d2 / (d2 - d6))
                        qx[0] = ax + w * acx; qy[0] = ay + w * acy; qz[0] = az + w * acz
                    else:
                        va = d3 * d6 - d5 * d4
                        if va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0 and (d4 - d3) + (d5 - d6) != 0.0:
                            w = _clamp01((d4 - d3) / ((d4 - d3) + (d5 - d6)))
                            qx[0] = bx + w * (cx - bx); qy[0] = by + w * (cy - by); qz[0] = bz + w * (cz - bz)
                        else:
                            denom = va + vb + vc
                            if denom != 0.0:
                                v = vb / denom
                                w = vc / denom
                            else:
                                v = 0.0
                                w = 0.0
                            qx[0] = ax + v * abx + w * acx
                            qy[0] = ay + v * aby + w * acy
                            qz[0] = az + v * abz + w * acz
    cdef double ddx = qx[0] - px, ddy = qy[0] - py, ddz = qz[0] - pz
    return ddx * ddx + ddy * ddy + ddz * ddz


cdef inline double _aabb_dist2(const double* bmin, const double* bmax,
                               double px, double py, double pz) noexcept nogil:
    cdef double d = 0.0, t
    t = bmin[0] - px
    if t > 0.0:
        d += t * t
    t = px - bmax[0]
    if t > 0.0:
        d += t * t
    t = bmin[1] - py
    if t > 0.0:
        d += t * t
    t = py - bmax[1]
    if t > 0.0:
        d += t * t
    t = bmin[2] - pz
    if t > 0.0:
        d += t * t
    t = pz - bmax[2]
    if t > 0.0:
        d += t * t
    return d


def closest_point(
    const double[:, ::1] nmin, const double[:, ::1] nmax,
    const long long[::1] left, const long long[::1] right,
    const long long[::1] start, const long long[::1] count,
    const double[:, ::1] tvl, const double[:, ::1] pts,
    double[:, ::1] out_q, double[::1] out_d, long long[::1] out_t):
    """Globally nearest surface point per query; out_t is leaf-order indexed."""
    cdef Py_ssize_t n = pts.shape[0], i, t, lo, hi
    cdef long long node, bt
    cdef long long stk[STACK_MAX]
    cdef int top
    cdef double px, py, pz, best, d2, qx, qy, qz, bqx, bqy, bqz
    with nogil:
        for i in range(n):
            px = pts[i, 0]
            py = pts[i, 1]
            pz = pts[i, 2]
            best = 1e300
            bqx = bqy = bqz = 0.0
            bt = -1
            top = 0
            stk[0] = 0
            while top >= 0:
                node = stk[top]
                top -= 1
                if _aabb_dist2(&nmin[node, 0], &nmax[node, 0], px, py, pz) >= best:
                    continue
                if left[node] < 0:
                    lo = start[node]
                    hi = lo + count[node]
                    for t in range(lo, hi):
                        d2 = _tri_closest(&tvl[t, 0], px, py, pz, &qx, &qy, &qz)
                        if d2 < best:
                            best = d2
                            bqx = qx; bqy = qy; bqz = qz
                            bt = t
                else:
                    top += 1
                    stk[top] = right[node]
                    top += 1
                    stk[top] = left[node]
            out_q[i, 0] = bqx
            out_q[i, 1] = bqy
            out_q[i, 2] = bqz
            out_d[i] = sqrt(best)
            out_t[i] = bt


def second_nearest(
    const double[:, ::1] nmin, const double[:, ::1] nmax,
    const long long[::1] left, const long long[::1] right,
    const long long[::1] start, const long long[::1] count,
    const double[:, ::1] tvl, const double[:, ::1] pts,
    const double[:, ::1] foot, double rho,
    const double[::1] cap,
    double[::1] out_d):
    """Nearest distance over triangles whose closest point to the query lies
    at least rho away from foot[i] (the first closest point). The search is
    clipped to cap[i]: when nothing closer exists, out_d[i] == cap[i]."""
    cdef Py_ssize_t n = pts.shape[0], i, t, lo, hi
    cdef long long node
    cdef long long stk[STACK_MAX]
    cdef int top
    cdef double px, py, pz, fx, fy, fz, best, d2, qx, qy, qz, sx, sy, sz, rho2
    rho2 = rho * rho
    with nogil:
        for i in range(n):
            px = pts[i, 0]
            py = pts[i, 1]
            pz = pts[i, 2]
            fx = foot[i, 0]
            fy = foot[i, 1]
            fz = foot[i, 2]
            best = cap[i] * cap[i]
            top = 0
            stk[0] = 0
            while top >= 0:
                node = stk[top]
                top -= 1
                if _aabb_dist2(&nmin[node, 0], &nmax[node, 0], px, py, pz) >= best:
                    continue
                if left[node] < 0:
                    lo = start[node]
                    hi = lo + count[node]
                    for t in range(lo, hi):
                        d2 = _tri_closest(&tvl[t, 0], px, py, pz, &qx, &qy, &qz)
                        if d2 >= best:
                            continue
                        sx = qx - fx
                        sy = qy - fy
                        sz = qz - fz
                        if sx * sx + sy * sy + sz * sz < rho2:
                            continue
                        best = d2
                else:
                    top += 1
                    stk[top] = right[node]
                    top += 1
                    stk[top] = left[node]
            out_d[i] = sqrt(best)
