"""Pure-Python kernels, used when the compiled extension is unavailable.

Same algorithms and return contracts as ``_kernels.pyx``.
"""

import math

import numpy as np


def gabriel_adjacency(xy, tau):
    xy = np.asarray(xy, dtype=float)
    q = xy.shape[0]
    diff = xy[:, None, :] - xy[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    # blocked[i, j, k]: k lies in the closed disk with diameter ij
    blocked = d2[:, None, :] + d2[None, :, :] <= d2[:, :, None] + tau
    idx = np.arange(q)
    blocked &= (idx[None, None, :] != idx[:, None, None]) & (idx[None, None, :] != idx[None, :, None])
    adj = ~blocked.any(axis=2)
    adj[idx, idx] = False
    return adj.astype(np.uint8)


def _stress(x, t, w):
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu = np.triu_indices(len(x), 1)
    res = r[iu] - t[iu]
    return float(np.sum(w[iu] * res * res))


def _local_energy(p, m, x, t, w):
    d = p[None, :] - x
    r = np.sqrt(np.einsum("ij,ij->i", d, d)) - t[m]
    r[m] = 0.0
    return float(np.sum(w[m] * r * r))


def _gradients(x, t, w):
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 2.0 * w * (1.0 - t / r)
    c[~np.isfinite(c)] = 0.0
    c[r < 1e-300] = 0.0
    np.fill_diagonal(c, 0.0)
    return np.einsum("ij,ijk->ik", c, diff)


def _gradient(m, x, t, w):
    d = x[m][None, :] - x
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 2.0 * w[m] * (1.0 - t[m] / r)
    c[m] = 0.0
    c[r < 1e-300] = 0.0
    return c @ d


def kk_solve(targets, init, tol, max_updates):
    t = np.asarray(targets, dtype=float)
    x = np.array(init, dtype=float)
    q = t.shape[0]
    with np.errstate(divide="ignore"):
        w = 1.0 / (t * t)
    np.fill_diagonal(w, 0.0)
    trace = [_stress(x, t, w)]
    updates = 0
    converged = False
    stuck = False
    others = [np.arange(q) != m for m in range(q)]

    while updates < max_updates and not stuck:
        gn = np.hypot(*_gradients(x, t, w).T)
        m = int(np.argmax(gn))
        if gn[m] < tol:
            converged = True
            break
        g = _gradient(m, x, t, w)
        while math.hypot(g[0], g[1]) >= tol and updates < max_updates:
            sel = others[m]
            d = x[m][None, :] - x[sel]
            r = np.sqrt(np.einsum("ij,ij->i", d, d))
            ok = r >= 1e-300
            d, r, tm, c = d[ok], r[ok], t[m][sel][ok], 2.0 * w[m][sel][ok]
            r3 = r * r * r
            hxx = float(np.sum(c * (1.0 - tm * d[:, 1] ** 2 / r3)))
            hyy = float(np.sum(c * (1.0 - tm * d[:, 0] ** 2 / r3)))
            hxy = float(np.sum(c * (tm * d[:, 0] * d[:, 1] / r3)))
            half_tr = 0.5 * (hxx + hyy)
            disc = math.sqrt(0.25 * (hxx - hyy) ** 2 + hxy * hxy)
            lmin = half_tr - disc
            scale = half_tr + disc
            if scale <= 0.0:
                scale = 1.0
            if lmin <= 1e-3 * scale:
                mu = 1e-3 * scale - lmin
                hxx += mu
                hyy += mu
            det = hxx * hyy - hxy * hxy
            step_dir = np.array([-(hyy * g[0] - hxy * g[1]) / det,
                                 -(hxx * g[1] - hxy * g[0]) / det])

            e0 = _local_energy(x[m], m, x, t, w)
            step = 1.0
            accepted = False
            for _ in range(60):
                p = x[m] + step * step_dir
                if _local_energy(p, m, x, t, w) < e0:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                stuck = True
                break
            x[m] = p
            updates += 1
            trace.append(_stress(x, t, w))
            g = _gradient(m, x, t, w)

    if not converged and not stuck:
        converged = bool(np.hypot(*_gradients(x, t, w).T).max() < tol)
    return x, updates, converged, np.asarray(trace)
