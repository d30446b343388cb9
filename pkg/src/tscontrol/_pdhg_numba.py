"""Numba kernel for the primal-dual iteration.

One call advances the iteration a fixed number of steps entirely in
compiled code: two CSR mat-vecs plus the per-block dual projections. State
(z, y and the running sums used for averaging) is updated in place, so
chunked execution is arithmetically identical to one long run.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _project_l1_block(y, st, ln, scratch):
    total = 0.0
    for i in range(ln):
        scratch[i] = abs(y[st + i])
        total += scratch[i]
    if total <= 1.0:
        return
    u = np.sort(scratch[:ln])[::-1]
    css = 0.0
    theta = 0.0
    for j in range(ln):
        css += u[j]
        tj = (css - 1.0) / (j + 1)
        if u[j] > tj:
            theta = tj
    for i in range(ln):
        v = y[st + i]
        mag = abs(v) - theta
        if mag <= 0.0:
            y[st + i] = 0.0
        elif v > 0.0:
            y[st + i] = mag
        else:
            y[st + i] = -mag


@njit(cache=True)
def pdhg_chunk(
    Kd, Ki, Kp, KTd, KTi, KTp, h,
    blk_start, blk_len, blk_kind,
    z, y, zsum, ysum, tau, sig, iters,
):
    d = z.size
    nrows = y.size
    kty = np.empty(d)
    zbar = np.empty(d)
    u = np.empty(nrows)
    max_blk = 0
    for b in range(blk_len.size):
        if blk_kind[b] == 2 and blk_len[b] > max_blk:
            max_blk = blk_len[b]
    scratch = np.empty(max(max_blk, 1))

    for _ in range(iters):
        for i in range(d):
            acc = 0.0
            for jj in range(KTp[i], KTp[i + 1]):
                acc += KTd[jj] * y[KTi[jj]]
            kty[i] = acc
        for i in range(d):
            zn = z[i] - tau[i] * kty[i]
            zbar[i] = 2.0 * zn - z[i]
            z[i] = zn
            zsum[i] += zn
        for r in range(nrows):
            acc = 0.0
            for jj in range(Kp[r], Kp[r + 1]):
                acc += Kd[jj] * zbar[Ki[jj]]
            u[r] = acc
        for b in range(blk_start.size):
            st = blk_start[b]
            ln = blk_len[b]
            kind = blk_kind[b]
            if kind == 0:
                for i in range(st, st + ln):
                    v = y[i] + sig[i] * (u[i] + h[i])
                    if v > 1.0:
                        v = 1.0
                    elif v < -1.0:
                        v = -1.0
                    y[i] = v
            elif kind == 1:
                nv = 0.0
                for i in range(st, st + ln):
                    v = y[i] + sig[i] * (u[i] + h[i])
                    y[i] = v
                    nv += v * v
                nv = np.sqrt(nv)
                if nv > 1.0:
                    inv = 1.0 / nv
                    for i in range(st, st + ln):
                        y[i] *= inv
            elif kind == 2:
                for i in range(st, st + ln):
                    y[i] = y[i] + sig[i] * (u[i] + h[i])
                _project_l1_block(y, st, ln, scratch)
            else:
                for i in range(st, st + ln):
                    y[i] = (y[i] + sig[i] * (u[i] + h[i])) / (1.0 + sig[i])
        for i in range(nrows):
            ysum[i] += y[i]
