"""Compiled time-stepping loops.

All kernels share :func:`svi_step`, the semi-implicit Euler step followed by
projection onto ``[-Y, Y]``.  Batch kernels take increments as an
``(n_paths, n_steps)`` array and release the GIL so the harness can run
batches on a thread pool.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def svi_step(y, z, dw, dt, c0, k, Y):
    y1 = y - (c0 * y + k * z) * dt + dw
    z1 = z + y1 * dt
    if z1 > Y:
        z1 = Y
    elif z1 < -Y:
        z1 = -Y
    return y1, z1


@njit(cache=True, inline="always")
def plastic_sign(y, z, Y):
    if z == Y and y > 0.0:
        return 1
    if z == -Y and y < 0.0:
        return -1
    return 0


@njit(cache=True, nogil=True)
def baseline_record(y0, z0, inc, dt, c0, k, Y):
    n = inc.shape[0]
    ys = np.empty(n + 1)
    zs = np.empty(n + 1)
    ys[0] = y0
    zs[0] = z0
    y, z = y0, z0
    for i in range(n):
        y, z = svi_step(y, z, inc[i], dt, c0, k, Y)
        ys[i + 1] = y
        zs[i + 1] = z
    return ys, zs


@njit(cache=True, nogil=True)
def coupled_record(y0, z0, inc, dt, c0, k, Y, eps):
    """Baseline and jumped process on one path, full record.

    Returns ``(yb, zb, ye, ze, jump_idx, sigma, y_pre, z_pre, n_jumps)``;
    ``y_pre, z_pre`` hold the jumped state the ordinary step would have
    produced at each jump index, before the reset to ``(0, sigma (Y - eps))``.
    """
    n = inc.shape[0]
    yb = np.empty(n + 1)
    zb = np.empty(n + 1)
    ye = np.empty(n + 1)
    ze = np.empty(n + 1)
    jump_idx = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.int64)
    y_pre = np.empty(n)
    z_pre = np.empty(n)
    nj = 0
    yb[0] = y0
    zb[0] = z0
    ye[0] = y0
    ze[0] = z0
    b_y, b_z, e_y, e_z = y0, z0, y0, z0
    for i in range(n):
        dw = inc[i]
        b_y, b_z = svi_step(b_y, b_z, dw, dt, c0, k, Y)
        sg = plastic_sign(e_y, e_z, Y)
        e_y, e_z = svi_step(e_y, e_z, dw, dt, c0, k, Y)
        if sg != 0 and e_y * sg <= 0.0:
            jump_idx[nj] = i + 1
            sigma[nj] = sg
            y_pre[nj] = e_y
            z_pre[nj] = e_z
            nj += 1
            e_y = 0.0
            e_z = sg * (Y - eps)
        yb[i + 1] = b_y
        zb[i + 1] = b_z
        ye[i + 1] = e_y
        ze[i + 1] = e_z
    return yb, zb, ye, ze, jump_idx[:nj], sigma[:nj], y_pre[:nj], z_pre[:nj], nj


@njit(cache=True, nogil=True)
def coupled_stats(y0, z0, incs, dt, c0, k, Y, eps, sup_out, jumps_out, margin_out):
    """Per-path sup metric, jump count and worst energy-inequality margin.

    The margin of a segment between jump ``n`` and the next jump (or the
    horizon) is ``k eps^2 - LHS`` where ``LHS`` is the left side of the
    per-segment energy inequality; ``margin_out`` gets the minimum over
    segments, ``+inf`` when the path has no jump.
    """
    n_paths, n = incs.shape
    keps2 = k * eps * eps
    for p in range(n_paths):
        b_y, b_z, e_y, e_z = y0, z0, y0, z0
        sup = 0.0
        nj = 0
        worst = np.inf
        seg_open = False
        start = 0.0
        integral = 0.0
        for i in range(n):
            dw = incs[p, i]
            dy_left = b_y - e_y
            if seg_open:
                integral += dy_left * dy_left * dt
            b_y, b_z = svi_step(b_y, b_z, dw, dt, c0, k, Y)
            sg = plastic_sign(e_y, e_z, Y)
            e_y, e_z = svi_step(e_y, e_z, dw, dt, c0, k, Y)
            if sg != 0 and e_y * sg <= 0.0:
                if seg_open:
                    ddy = b_y - e_y
                    ddz = b_z - e_z
                    lhs = ddy * ddy + k * ddz * ddz - start + 2.0 * c0 * integral
                    m = keps2 - lhs
                    if m < worst:
                        worst = m
                zpre = e_z
                nj += 1
                e_y = 0.0
                e_z = sg * (Y - eps)
                dz0 = b_z - zpre
                start = b_y * b_y + k * dz0 * dz0
                integral = 0.0
                seg_open = True
            d2 = (b_y - e_y) ** 2 + k * (b_z - e_z) ** 2
            if d2 > sup:
                sup = d2
        if seg_open:
            ddy = b_y - e_y
            ddz = b_z - e_z
            lhs = ddy * ddy + k * ddz * ddz - start + 2.0 * c0 * integral
            m = keps2 - lhs
            if m < worst:
                worst = m
        sup_out[p] = sup
        jumps_out[p] = nj
        margin_out[p] = worst


@njit(cache=True, nogil=True)
def elastic_record(y0, z0, inc, dt, c0, k):
    n = inc.shape[0]
    ys = np.empty(n + 1)
    zs = np.empty(n + 1)
    ys[0] = y0
    zs[0] = z0
    y, z = y0, z0
    for i in range(n):
        y = y - (c0 * y + k * z) * dt + inc[i]
        z = z + y * dt
        ys[i + 1] = y
        zs[i + 1] = z
    return ys, zs


@njit(cache=True, nogil=True)
def elastic_survival(y0, z_starts, incs, dt, c0, k, Y, out):
    """``out[p, e] = 1`` if the elastic path from ``(y0, z_starts[e])`` keeps ``|z| < Y`` on the grid."""
    n_paths, n = incs.shape
    for e in range(z_starts.shape[0]):
        for p in range(n_paths):
            y = y0
            z = z_starts[e]
            alive = 1
            for i in range(n):
                y = y - (c0 * y + k * z) * dt + incs[p, i]
                z = z + y * dt
                if z >= Y or z <= -Y:
                    alive = 0
                    break
            out[p, e] = alive


@njit(cache=True, nogil=True)
def elastic_endpoints(y0, z0, incs, dt, c0, k, y_out, z_out):
    n_paths, n = incs.shape
    for p in range(n_paths):
        y = y0
        z = z0
        for i in range(n):
            y = y - (c0 * y + k * z) * dt + incs[p, i]
            z = z + y * dt
        y_out[p] = y
        z_out[p] = z
