"""Compiled inner loops for the dense message-passing engine.

Every cluster table and message lives in a flat float64 buffer; ``maps`` holds,
for each (cluster, incident edge) pair, the index of the label-table entry that
each cluster entry projects onto.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def sweep(
    order,
    src,
    rev,
    msg_off,
    msg_len,
    out_map,
    inc_ptr,
    inc_din,
    inc_map,
    psi_off,
    psi_len,
    psi_buf,
    maps,
    msg_buf,
    scratch,
    acc,
    normalize,
):
    """Recompute the messages listed in ``order`` in place.

    Returns ``(failed_edge, max_change)``; ``failed_edge`` is -1 unless some
    message came out with zero (or non-finite) total mass.
    """
    max_change = 0.0
    for t in range(order.shape[0]):
        d = order[t]
        u = src[d]
        size = psi_len[u]
        base = psi_off[u]
        for k in range(size):
            scratch[k] = psi_buf[base + k]
        skip = rev[d]
        for j in range(inc_ptr[u], inc_ptr[u + 1]):
            din = inc_din[j]
            if din == skip:
                continue
            mo = msg_off[din]
            mp = inc_map[j]
            for k in range(size):
                scratch[k] *= msg_buf[mo + maps[mp + k]]
        width = msg_len[d]
        for k in range(width):
            acc[k] = 0.0
        mp = out_map[d]
        for k in range(size):
            acc[maps[mp + k]] += scratch[k]
        total = 0.0
        for k in range(width):
            total += acc[k]
        if not (total > 0.0) or not np.isfinite(total):
            mo = msg_off[d]
            for k in range(width):
                msg_buf[mo + k] = acc[k]  # left in place so the caller can tell underflow from overflow
            return d, max_change
        scale = 1.0 / total if normalize else 1.0
        mo = msg_off[d]
        for k in range(width):
            val = acc[k] * scale
            change = abs(val - msg_buf[mo + k])
            if change > max_change:
                max_change = change
            msg_buf[mo + k] = val
    return -1, max_change


@numba.njit(cache=True)
def cluster_product(u, inc_ptr, inc_din, inc_map, msg_off, psi_off, psi_len, psi_buf, maps, msg_buf):
    size = psi_len[u]
    out = psi_buf[psi_off[u] : psi_off[u] + size].copy()
    for j in range(inc_ptr[u], inc_ptr[u + 1]):
        mo = msg_off[inc_din[j]]
        mp = inc_map[j]
        for k in range(size):
            out[k] *= msg_buf[mo + maps[mp + k]]
    return out


@numba.njit(cache=True)
def sweeps(
    n_iter,
    eps,
    order,
    src,
    rev,
    msg_off,
    msg_len,
    out_map,
    inc_ptr,
    inc_din,
    inc_map,
    psi_off,
    psi_len,
    psi_buf,
    maps,
    msg_buf,
    scratch,
    acc,
    normalize,
):
    """Up to ``n_iter`` sweeps; stops early once the largest change drops below ``eps`` (if ``eps >= 0``).

    Returns ``(failed_edge, iterations_run, converged)``.
    """
    for it in range(n_iter):
        failed, change = sweep(
            order, src, rev, msg_off, msg_len, out_map, inc_ptr, inc_din, inc_map,
            psi_off, psi_len, psi_buf, maps, msg_buf, scratch, acc, normalize,
        )
        if failed >= 0:
            return failed, it + 1, False
        if eps >= 0.0 and it > 0 and change < eps:
            return -1, it + 1, True
    return -1, n_iter, False
