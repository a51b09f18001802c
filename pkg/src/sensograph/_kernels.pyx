# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Gabriel adjacency and Kamada-Kawai node-wise Newton sweep.

Must stay semantically identical to ``_kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def gabriel_adjacency(const double[:, ::1] xy, double tau):
    cdef Py_ssize_t q = xy.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double dij, dx, dy
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] adj = np.zeros((q, q), dtype=np.uint8)
    cdef double[:, ::1] d2 = np.empty((q, q), dtype=np.float64)
    cdef bint blocked

    for i in range(q):
        d2[i, i] = 0.0
        for j in range(i + 1, q):
            dx = xy[i, 0] - xy[j, 0]
            dy = xy[i, 1] - xy[j, 1]
            d2[i, j] = dx * dx + dy * dy
            d2[j, i] = d2[i, j]

    for i in range(q):
        for j in range(i + 1, q):
            dij = d2[i, j]
            blocked = False
            for k in range(q):
                if k == i or k == j:
                    continue
                if d2[i, k] + d2[j, k] <= dij + tau:
                    blocked = True
                    break
            if not blocked:
                adj[i, j] = 1
                adj[j, i] = 1
    return adj


cdef double _stress(double[:, ::1] x, const double[:, ::1] t, double[:, ::1] w, Py_ssize_t q) nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0, dx, dy, r
    for i in range(q):
        for j in range(i + 1, q):
            dx = x[i, 0] - x[j, 0]
            dy = x[i, 1] - x[j, 1]
            r = sqrt(dx * dx + dy * dy) - t[i, j]
            s += w[i, j] * r * r
    return s


cdef double _local_energy(double px, double py, Py_ssize_t m, double[:, ::1] x,
                          const double[:, ::1] t, double[:, ::1] w, Py_ssize_t q) nogil:
    cdef Py_ssize_t j
    cdef double e = 0.0, dx, dy, r
    for j in range(q):
        if j == m:
            continue
        dx = px - x[j, 0]
        dy = py - x[j, 1]
        r = sqrt(dx * dx + dy * dy) - t[m, j]
        e += w[m, j] * r * r
    return e


cdef void _gradient(Py_ssize_t m, double[:, ::1] x, const double[:, ::1] t, double[:, ::1] w,
                    Py_ssize_t q, double* gx, double* gy) nogil:
    cdef Py_ssize_t j
    cdef double dx, dy, r, c
    gx[0] = 0.0
    gy[0] = 0.0
    for j in range(q):
        if j == m:
            continue
        dx = x[m, 0] - x[j, 0]
        dy = x[m, 1] - x[j, 1]
        r = sqrt(dx * dx + dy * dy)
        if r < 1e-300:
            continue
        c = 2.0 * w[m, j] * (1.0 - t[m, j] / r)
        gx[0] += c * dx
        gy[0] += c * dy


def kk_solve(const double[:, ::1] targets, const double[:, ::1] init, double tol, long max_updates):
    """Node-wise safeguarded Newton minimisation of the weighted stress.

    Returns ``(coords, n_updates, converged, trace)`` where ``trace`` holds
    the total stress before the first and after every node update.
    """
    cdef Py_ssize_t q = targets.shape[0]
    cdef Py_ssize_t i, j, m, it
    cdef cnp.ndarray[double, ndim=2] coords = np.array(init, dtype=np.float64, copy=True)
    cdef double[:, ::1] x = coords
    cdef const double[:, ::1] t = targets
    cdef double[:, ::1] w = np.zeros((q, q), dtype=np.float64)
    cdef double[::1] gnorm = np.empty(q, dtype=np.float64)
    cdef double gx, gy, best, dx, dy, r, r3, c, hxx, hxy, hyy
    cdef double half_tr, disc, lmin, mu, det, sx, sy, e0, e1, step, px, py, scale
    cdef long updates = 0
    cdef bint converged = False, stuck = False, accepted
    trace = [0.0]

    for i in range(q):
        for j in range(q):
            if i != j:
                w[i, j] = 1.0 / (t[i, j] * t[i, j])
    trace[0] = _stress(x, t, w, q)

    while updates < max_updates and not stuck:
        m = 0
        best = -1.0
        for i in range(q):
            _gradient(i, x, t, w, q, &gx, &gy)
            gnorm[i] = sqrt(gx * gx + gy * gy)
            if gnorm[i] > best:
                best = gnorm[i]
                m = i
        if best < tol:
            converged = True
            break

        _gradient(m, x, t, w, q, &gx, &gy)
        while sqrt(gx * gx + gy * gy) >= tol and updates < max_updates:
            hxx = 0.0
            hxy = 0.0
            hyy = 0.0
            for j in range(q):
                if j == m:
                    continue
                dx = x[m, 0] - x[j, 0]
                dy = x[m, 1] - x[j, 1]
                r = sqrt(dx * dx + dy * dy)
                if r < 1e-300:
                    continue
                r3 = r * r * r
                c = 2.0 * w[m, j]
                hxx += c * (1.0 - t[m, j] * dy * dy / r3)
                hyy += c * (1.0 - t[m, j] * dx * dx / r3)
                hxy += c * (t[m, j] * dx * dy / r3)
            half_tr = 0.5 * (hxx + hyy)
            disc = sqrt(0.25 * (hxx - hyy) * (hxx - hyy) + hxy * hxy)
            lmin = half_tr - disc
            scale = half_tr + disc
            if scale <= 0.0:
                scale = 1.0
            mu = 0.0
            if lmin <= 1e-3 * scale:
                mu = 1e-3 * scale - lmin
            hxx += mu
            hyy += mu
            det = hxx * hyy - hxy * hxy
            sx = -(hyy * gx - hxy * gy) / det
            sy = -(hxx * gy - hxy * gx) / det

            e0 = _local_energy(x[m, 0], x[m, 1], m, x, t, w, q)
            step = 1.0
            accepted = False
            for it in range(60):
                px = x[m, 0] + step * sx
                py = x[m, 1] + step * sy
                e1 = _local_energy(px, py, m, x, t, w, q)
                if e1 < e0:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                stuck = True
                break
            x[m, 0] = px
            x[m, 1] = py
            updates += 1
            trace.append(_stress(x, t, w, q))
            _gradient(m, x, t, w, q, &gx, &gy)

    if not converged and not stuck:
        best = 0.0
        for i in range(q):
            _gradient(i, x, t, w, q, &gx, &gy)
            best = max(best, sqrt(gx * gx + gy * gy))
        converged = best < tol
    return coords, int(updates), bool(converged), np.asarray(trace, dtype=np.float64)
