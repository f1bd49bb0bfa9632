# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled collision kernels.

Boxes are rows of 5 doubles: (cx, cy, yaw, half_len, half_wid), where
half_len is the half extent along the heading axis. Touching boxes count
as overlapping (closed rectangles), so separation requires a strict gap.
"""

from libc.math cimport cos, sin, fabs

import numpy as np


cdef inline bint _overlap(double ax, double ay, double ayaw, double ahl, double ahw,
                          double bx, double by, double byaw, double bhl, double bhw) noexcept nogil:
    cdef double ca = cos(ayaw)
    cdef double sa = sin(ayaw)
    cdef double cb = cos(byaw)
    cdef double sb = sin(byaw)
    cdef double tx = bx - ax
    cdef double ty = by - ay
    # candidate separating axes: the two edge normals of each rectangle
    cdef double lx[4]
    cdef double ly[4]
    cdef double ra, rb, i
    cdef int k
    lx[0] = ca; ly[0] = sa
    lx[1] = -sa; ly[1] = ca
    lx[2] = cb; ly[2] = sb
    lx[3] = -sb; ly[3] = cb
    for k in range(4):
        ra = ahl * fabs(ca * lx[k] + sa * ly[k]) + ahw * fabs(-sa * lx[k] + ca * ly[k])
        rb = bhl * fabs(cb * lx[k] + sb * ly[k]) + bhw * fabs(-sb * lx[k] + cb * ly[k])
        i = fabs(tx * lx[k] + ty * ly[k])
        if i > ra + rb:
            return False
    return True


def obb_overlap(double ax, double ay, double ayaw, double ahl, double ahw,
                double bx, double by, double byaw, double bhl, double bhw):
    """Closed-rectangle intersection test for a single box pair."""
    return bool(_overlap(ax, ay, ayaw, ahl, ahw, bx, by, byaw, bhl, bhw))


def overlap_mask(double[:, ::1] a, double[:, ::1] b):
    """Elementwise overlap of paired box rows; returns a uint8 array."""
    cdef Py_ssize_t n = a.shape[0]
    out = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] m = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            m[i] = _overlap(a[i, 0], a[i, 1], a[i, 2], a[i, 3], a[i, 4],
                            b[i, 0], b[i, 1], b[i, 2], b[i, 3], b[i, 4])
    return out


def plan_collides(double[:, ::1] ego, double[:, :, ::1] agents):
    """True if any agent box overlaps the ego box at the same timestep.

    ego: (T, 5); agents: (M, T, 5). Early exit on the first hit.
    """
    cdef Py_ssize_t t_steps = ego.shape[0]
    cdef Py_ssize_t m_boxes = agents.shape[0]
    cdef Py_ssize_t t, m
    cdef bint hit = False
    with nogil:
        for t in range(t_steps):
            for m in range(m_boxes):
                if _overlap(ego[t, 0], ego[t, 1], ego[t, 2], ego[t, 3], ego[t, 4],
                            agents[m, t, 0], agents[m, t, 1], agents[m, t, 2],
                            agents[m, t, 3], agents[m, t, 4]):
                    hit = True
                    break
            if hit:
                break
    return bool(hit)
