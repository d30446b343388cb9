"""First-order solver with a rigorous optimality certificate.

The method is a primal-dual hybrid gradient iteration (no primal prox is
needed: the whole objective sits in the composition terms) with diagonal
step preconditioning, adaptive restarts to the best running candidate, and
a rebalanced primal weight at each restart. Step sizes follow the absolute
row/column sums of the stacked map (tau_j = 1/sum_i |K_ij|, sig_i =
1/sum_j |K_ij|, held uniform inside each dual block so the ball
projections stay exact projections). Determinism: fixed zero starting
point, fixed step rule, no randomization anywhere.

Certificates do not trust the iteration. For any dual candidate y we
project each block onto its dual ball, giving yt, and use

    min_z F(z) >= <h, yt> - sum_quad (||yt_q||^2/2 - c0) - R * ||K^T yt||_2

where R is the program's coercivity radius at the current best objective
value. Both sides are computable, so certified_gap = best_F - best_LB is a
true bound on suboptimality, whatever the iterates did.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .program import (
    KIND_BOX,
    KIND_L2,
    KIND_L1,
    KIND_QUAD,
    AffineNormProgram,
    MaxIterationsError,
)
from ._pdhg_numpy import project_l1_rows

BACKEND_ENV = "TSCONTROL_BACKEND"
_BACKENDS = ("numba", "numpy")

MIN_TOL = 1e-10
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 1_000_000
CHECK_EVERY = 64


def resolve_backend(name: str | None = None) -> str:
    """Pick the iteration backend: explicit arg > env var > numba if available."""
    req = name or os.environ.get(BACKEND_ENV, "auto")
    if req == "auto":
        try:
            from . import _pdhg_numba  # noqa: F401

            return "numba"
        except ImportError:
            return "numpy"
    if req not in _BACKENDS:
        raise ValueError(f"unknown backend {req!r}; expected one of {_BACKENDS} or 'auto'")
    if req == "numba":
        from . import _pdhg_numba  # noqa: F401
    return req


@dataclass(frozen=True)
class SolveReport:
    z: np.ndarray
    objective: float
    lower_bound: float
    certified_gap: float
    iterations: int
    restarts: int
    backend: str


class _Groups:
    """Precomputed row-index groups for vectorized projections."""

    def __init__(self, folded):
        starts, lens, kinds = folded.blk_start, folded.blk_len, folded.blk_kind
        self.idx_box = np.concatenate(
            [np.arange(s, s + l) for s, l, k in zip(starts, lens, kinds) if k == KIND_BOX]
            or [np.empty(0, dtype=np.int64)]
        )
        self.idx_quad = np.concatenate(
            [np.arange(s, s + l) for s, l, k in zip(starts, lens, kinds) if k == KIND_QUAD]
            or [np.empty(0, dtype=np.int64)]
        )
        self.l2_groups = self._by_length(starts, lens, kinds, KIND_L2)
        self.l1_groups = self._by_length(starts, lens, kinds, KIND_L1)

    @staticmethod
    def _by_length(starts, lens, kinds, want):
        by_len = {}
        for s, l, k in zip(starts, lens, kinds):
            if k == want:
                by_len.setdefault(int(l), []).append(int(s))
        out = []
        for l in sorted(by_len):
            st = np.array(sorted(by_len[l]), dtype=np.int64)
            out.append(st[:, None] + np.arange(l)[None, :])
        return out


def _feasible_dual(y: np.ndarray, groups: _Groups) -> np.ndarray:
    yt = y.copy()
    if groups.idx_box.size:
        yt[groups.idx_box] = np.clip(yt[groups.idx_box], -1.0, 1.0)
    for idx in groups.l2_groups:
        M = yt[idx]
        nrm = np.sqrt((M * M).sum(axis=1))
        scale = np.where(nrm > 1.0, 1.0 / np.maximum(nrm, 1.0), 1.0)
        yt[idx] = M * scale[:, None]
    for idx in groups.l1_groups:
        yt[idx] = project_l1_rows(yt[idx])
    return yt


def _radius(folded, upper: float, h: np.ndarray) -> float:
    """Coercivity radius in the (possibly offset-rescaled) problem."""
    sig = folded.sigma_min
    norm_rows = folded.row_kind != KIND_QUAD
    hn = float(np.linalg.norm(h[norm_rows]))
    hq = float(np.linalg.norm(h[~norm_rows]))
    if folded.has_norm and folded.has_quad:
        num = max(upper + folded.gamma_min * hn + 0.5 * hq * hq - folded.c0_total, 0.0)
        return max(
            math.sqrt(2.0) * num / (folded.gamma_min * sig),
            math.sqrt(8.0 * num) / sig,
        )
    if folded.has_norm:
        return (max(upper, 0.0) / folded.gamma_min + hn) / sig
    num = max(upper + 0.5 * hq * hq - folded.c0_total, 0.0)
    return 2.0 * math.sqrt(num) / sig


def _lower_bound(prog, groups, y, upper: float, h: np.ndarray) -> float:
    f = prog._folded
    yt = _feasible_dual(y, groups)
    val = float(h @ yt) + f.c0_total
    if groups.idx_quad.size:
        q = yt[groups.idx_quad]
        val -= 0.5 * float(q @ q)
    resid = float(np.linalg.norm(f.KT @ yt))
    lb = val - _radius(f, upper, h) * resid
    # every term is nonnegative and the quad floors are unconditional
    return max(lb, f.c0_total)


def solve(
    prog: AffineNormProgram,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: str | None = None,
) -> SolveReport:
    """Minimize the program to a certified relative gap.

    Success means certified_gap <= tol * (1 + |objective|). Raises
    MaxIterationsError (carrying the best report so far) if the budget runs
    out first.
    """
    if tol < MIN_TOL:
        raise ValueError(f"tol {tol:g} below supported floor {MIN_TOL:g}")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    backend = resolve_backend(backend)
    f = prog._folded
    groups = _Groups(f)

    # pure-norm objectives are positively homogeneous in (z, h): rescale the
    # offsets to unit size so the iteration sees O(1) data, undo at the end
    scale = 1.0
    if not f.has_quad and f.h.size:
        hmax = float(np.abs(f.h).max())
        if hmax > 0.0:
            scale = hmax
    h = f.h / scale

    z = np.zeros(prog.dim)
    y = np.zeros(prog.num_rows)
    zsum = np.zeros(prog.dim)
    ysum = np.zeros(prog.num_rows)
    count = 0

    # diagonal steps; sig is flattened to its block max so the l1/l2 ball
    # projections remain the exact prox in the scaled metric
    absK = abs(f.K)
    col_sums = np.asarray(absK.sum(axis=0)).ravel()
    row_sums = np.asarray(absK.sum(axis=1)).ravel()
    tau0 = 0.98 / np.maximum(col_sums, 1e-12)
    sig0 = np.empty(prog.num_rows)
    for s, l in zip(f.blk_start, f.blk_len):
        sig0[s : s + l] = 0.98 / max(float(row_sums[s : s + l].max()), 1e-12)
    omega = 1.0

    if backend == "numba":
        from ._pdhg_numba import pdhg_chunk

        K, KT = f.K, f.KT
        csr_args = (
            K.data, K.indices, K.indptr, KT.data, KT.indices, KT.indptr, h,
            f.blk_start, f.blk_len, f.blk_kind,
        )

        def run(iters, tau, sig):
            pdhg_chunk(*csr_args, z, y, zsum, ysum, tau, sig, iters)

    else:
        from ._pdhg_numpy import pdhg_chunk

        def run(iters, tau, sig):
            pdhg_chunk(f.K, f.KT, h, groups, z, y, zsum, ysum, tau, sig, iters)

    best_obj = prog.objective_from_rows(f.K @ z + h)
    best_z = z.copy()
    best_lb = _lower_bound(prog, groups, y, best_obj, h)
    gap_at_restart = best_obj - best_lb
    iters_done = 0
    restarts = 0
    epoch_iters = 0
    last_epoch = 0
    z_anchor = z.copy()
    y_anchor = y.copy()

    def converged() -> bool:
        return (best_obj - best_lb) * scale <= tol * (1.0 + abs(best_obj) * scale)

    while not converged():
        if iters_done >= max_iters:
            rep = _report(best_z, best_obj, best_lb, scale, iters_done, restarts, backend)
            raise MaxIterationsError(
                f"no certificate after {iters_done} iterations "
                f"(gap {rep.certified_gap:.3e}, objective {rep.objective:.6e})",
                rep,
            )
        step = min(CHECK_EVERY, max_iters - iters_done)
        run(step, tau0 / omega, sig0 * omega)
        iters_done += step
        epoch_iters += step
        count += step

        candidates = [(z, y), (zsum / count, ysum / count)]
        cand_gap = math.inf
        cand_z = cand_y = None
        for zc, yc in candidates:
            fo = prog.objective_from_rows(f.K @ zc + h)
            if fo < best_obj:
                best_obj = fo
                best_z = zc.copy()
            lb = _lower_bound(prog, groups, yc, best_obj, h)
            if lb > best_lb:
                best_lb = lb
            if fo - lb < cand_gap:
                cand_gap = fo - lb
                cand_z, cand_y = zc, yc

        force = epoch_iters >= max(4 * last_epoch, 2048)
        if cand_gap <= 0.5 * gap_at_restart or force:
            dz = float(np.linalg.norm(cand_z - z_anchor))
            dy = float(np.linalg.norm(cand_y - y_anchor))
            if dz > 1e-12 and dy > 1e-12:
                omega = math.exp(0.5 * math.log(dy / dz) + 0.5 * math.log(omega))
                omega = min(max(omega, 1e-4), 1e4)
            z_anchor = cand_z.copy()
            y_anchor = cand_y.copy()
            z[:] = cand_z
            y[:] = cand_y
            zsum[:] = 0.0
            ysum[:] = 0.0
            count = 0
            gap_at_restart = cand_gap
            last_epoch = epoch_iters
            epoch_iters = 0
            restarts += 1

    return _report(best_z, best_obj, best_lb, scale, iters_done, restarts, backend)


def _report(best_z, best_obj, best_lb, scale, iters, restarts, backend) -> SolveReport:
    z = best_z * scale
    z.setflags(write=False)
    return SolveReport(
        z=z,
        objective=best_obj * scale,
        lower_bound=best_lb * scale,
        certified_gap=(best_obj - best_lb) * scale,
        iterations=iters,
        restarts=restarts,
        backend=backend,
    )
