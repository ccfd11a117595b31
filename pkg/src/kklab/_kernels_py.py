"""Pure-numpy versions of the Monte Carlo inner loops.

Used when the compiled extension is unavailable or when the backend is
forced with :func:`kklab.kernels.set_backend`.
"""
from __future__ import annotations

import numpy as np

# paths x nodes entries per chunk in class_bump_sum
_CHUNK = 1 << 21


def em_step(x, drift, frame, dw, dt, scale, lower, upper, periodic, alive):
    """One Euler-Maruyama update of the live rows of ``x``, in place.

    ``x += drift dt + scale * frame @ dw``; periodic axes are wrapped into
    ``[lower, upper)`` and a row whose non-periodic coordinate reaches the
    boundary is marked dead in ``alive``.  Dead rows are left untouched.
    """
    live = alive.astype(bool)
    incr = drift * dt + scale * np.einsum("nak,nk->na", frame, dw)
    x[live] += incr[live]
    per = periodic.astype(bool)
    if per.any():
        period = upper[per] - lower[per]
        xp = x[np.ix_(live, per)]
        x[np.ix_(live, per)] = xp - period * np.floor((xp - lower[per]) / period)
    if (~per).any():
        out = np.any((x[:, ~per] <= lower[~per]) | (x[:, ~per] >= upper[~per]), axis=1)
        alive[live & out] = 0


def class_bump_sum(points, nodes, weights, beta, norm, su2):
    """``sum_k w_k exp(beta s_k(p)) / norm`` with the SU(2) or torus overlap ``s_k``."""
    n, m = len(points), len(nodes)
    out = np.empty(n)
    step = max(1, _CHUNK // max(m, 1))
    for lo in range(0, n, step):
        p = points[lo:lo + step]
        if su2:
            s = p @ nodes.T
            t = beta * s * s
        else:
            t = beta * np.cos(p[:, None, :] - nodes[None, :, :]).sum(-1)
        out[lo:lo + step] = np.exp(t) @ weights / norm
    return out


def neumaier_sum(values) -> float:
    """Compensated sum in index order."""
    s = 0.0
    c = 0.0
    for v in np.asarray(values, dtype=float).tolist():
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def spd_inv_det(g):
    """Inverse and determinant of a stack of SPD matrices."""
    g = np.asarray(g, dtype=float)
    det = np.linalg.det(g)
    ok = np.all(np.linalg.eigvalsh(g) > 0, axis=-1)
    inv = np.full_like(g, np.nan)
    if ok.any():
        inv[ok] = np.linalg.inv(g[ok])
    return inv, np.where(ok, det, 0.0)


def spd_inv_sqrt(g):
    """Principal inverse square root of a stack of SPD matrices."""
    g = np.asarray(g, dtype=float)
    lam, vec = np.linalg.eigh(0.5 * (g + np.swapaxes(g, -1, -2)))
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(lam > 0, lam, np.nan) ** -0.5
    return (vec * w[..., None, :]) @ np.swapaxes(vec, -1, -2)
