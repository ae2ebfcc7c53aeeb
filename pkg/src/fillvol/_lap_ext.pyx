# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shortest-augmenting-path assignment kernel.

Same algorithm and outputs as :mod:`fillvol._lap_py`.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def solve(double[:, ::1] cost):
    """Min-cost assignment of every row to a distinct column (rows <= cols).

    Returns ``(col_of_row, u, v)`` where ``u``/``v`` are dual potentials with
    ``cost[i, j] - u[i] - v[j] >= 0``, equality on assigned pairs, ``v <= 0``
    and ``v == 0`` on unassigned columns.
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t m = cost.shape[1]
    if n > m:
        raise ValueError("need rows <= cols")
    u_arr = np.zeros(n + 1, dtype=np.float64)
    v_arr = np.zeros(m + 1, dtype=np.float64)
    p_arr = np.zeros(m + 1, dtype=np.intp)
    way_arr = np.zeros(m + 1, dtype=np.intp)
    minv_arr = np.empty(m + 1, dtype=np.float64)
    used_arr = np.zeros(m + 1, dtype=np.uint8)
    row_done_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t[::1] p = p_arr
    cdef Py_ssize_t[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr
    cdef unsigned char[::1] row_done = row_done_arr
    cdef Py_ssize_t i, j, j0, j1, i0, jbest
    cdef double delta, cur, best

    with nogil:
        # row-minimum duals and greedy seeding keep every invariant intact
        for i in range(1, n + 1):
            best = INFINITY
            jbest = 0
            for j in range(1, m + 1):
                cur = cost[i - 1, j - 1]
                if cur < best:
                    best = cur
                    jbest = j
            u[i] = best
            if jbest > 0 and p[jbest] == 0:
                p[jbest] = i
                row_done[i] = 1

        for i in range(1, n + 1):
            if row_done[i]:
                continue
            p[0] = i
            j0 = 0
            for j in range(m + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, m + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(m + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while j0 != 0:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1

    col_of_row = np.full(n, -1, dtype=np.intp)
    for j in range(1, m + 1):
        if p[j] != 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row, u_arr[1:].copy(), v_arr[1:].copy()
