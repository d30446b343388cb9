"""Pure-numpy fallback for the primal-dual iteration.

Same update sequence as the compiled kernel, expressed with scipy CSR
mat-vecs and grouped vectorized projections. Row indices for each dual
projection family are precomputed once per solve (see solver._Groups); the
equal-length norm blocks are handled as 2-D batches.
"""

import numpy as np


def project_l1_rows(V: np.ndarray) -> np.ndarray:
    """Project each row of V onto the l1 unit ball."""
    A = np.abs(V)
    need = A.sum(axis=1) > 1.0
    if not np.any(need):
        return V
    U = -np.sort(-A[need], axis=1)
    css = np.cumsum(U, axis=1)
    j = np.arange(1, V.shape[1] + 1)
    cond = U > (css - 1.0) / j
    rho = cond.sum(axis=1)
    theta = (css[np.arange(rho.size), rho - 1] - 1.0) / rho
    out = V.copy()
    out[need] = np.sign(V[need]) * np.maximum(A[need] - theta[:, None], 0.0)
    return out


def apply_dual_prox(v: np.ndarray, groups, sig: np.ndarray) -> None:
    """In-place dual projections on the pre-prox vector v; sig is the
    per-row step vector (the quad prox is the only one that needs it)."""
    if groups.idx_box.size:
        v[groups.idx_box] = np.clip(v[groups.idx_box], -1.0, 1.0)
    if groups.idx_quad.size:
        v[groups.idx_quad] /= 1.0 + sig[groups.idx_quad]
    for idx in groups.l2_groups:
        M = v[idx]
        nrm = np.sqrt((M * M).sum(axis=1))
        scale = np.where(nrm > 1.0, 1.0 / np.maximum(nrm, 1.0), 1.0)
        v[idx] = M * scale[:, None]
    for idx in groups.l1_groups:
        v[idx] = project_l1_rows(v[idx])


def pdhg_chunk(K, KT, h, groups, z, y, zsum, ysum, tau, sig, iters):
    for _ in range(iters):
        zn = z - tau * (KT @ y)
        zbar = 2.0 * zn - z
        z[:] = zn
        zsum += zn
        v = y + sig * ((K @ zbar) + h)
        apply_dual_prox(v, groups, sig)
        y[:] = v
        ysum += y
