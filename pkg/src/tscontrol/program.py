"""Structured convex programs: sums of weighted norms and quadratics of affine maps.

Every optimization this package performs is an instance of

    min_z  sum_j w_j ||G_j z + h_j||_{p_j}  +  sum_q (m_q/2) ||G_q z + h_q||_2^2 + c0_q

with p_j in {1, 2, inf}. The solver folds the weights into the affine maps:
a norm term becomes ||K_j z + hh_j||_p with K_j = w_j G_j (its Fenchel dual
lives in the unit dual-norm ball), and a quadratic becomes
(1/2)||K_q z + hh_q||^2 + c0 with K_q = sqrt(m_q) G_q. The folded rows are
stacked into one sparse matrix; block metadata records where each term's
rows live and which dual projection applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .norms import check_p, vec_norm

# dual projection codes, consumed by the iteration kernels
KIND_BOX = 0  # primal p=1   -> dual linf ball (clip)
KIND_L2 = 1  # primal p=2   -> dual l2 ball
KIND_L1 = 2  # primal p=inf -> dual l1 ball
KIND_QUAD = 3  # quadratic    -> scaled shrink

_P_TO_KIND = {1.0: KIND_BOX, 2.0: KIND_L2, math.inf: KIND_L1}


class SolverError(Exception):
    pass


class DegenerateProgramError(SolverError, ValueError):
    """The objective is constant along some direction (stacked maps rank-deficient)."""


class UnboundedError(SolverError):
    """Objective unbounded below.

    Unreachable for programs this class accepts (every term is nonnegative),
    but kept so callers can handle the full error surface uniformly.
    """


class MaxIterationsError(SolverError):
    """Iteration budget exhausted before the gap certificate closed."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class NormTerm:
    """weight * ||G z + h||_p."""

    weight: float
    p: float
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))
        if not (self.weight > 0.0 and np.isfinite(self.weight)):
            raise ValueError("norm term weight must be positive and finite")

    def value(self, z: np.ndarray) -> float:
        return self.weight * vec_norm(np.asarray(self.G) @ z + self.h, self.p)


@dataclass(frozen=True)
class QuadTerm:
    """(m/2) * ||G z + h||_2^2 + c0."""

    m: float
    G: np.ndarray
    h: np.ndarray
    c0: float = 0.0

    def __post_init__(self):
        if not (self.m > 0.0 and np.isfinite(self.m)):
            raise ValueError("quadratic curvature m must be positive and finite")
        if not (self.c0 >= 0.0 and np.isfinite(self.c0)):
            raise ValueError("quadratic floor c0 must be nonnegative and finite")

    def value(self, z: np.ndarray) -> float:
        u = np.asarray(self.G) @ z + self.h
        return 0.5 * self.m * float(u @ u) + self.c0


@dataclass
class _Folded:
    """Weight-folded stacked representation used by the solver."""

    K: sp.csr_matrix
    KT: sp.csr_matrix
    h: np.ndarray
    blk_start: np.ndarray
    blk_len: np.ndarray
    blk_kind: np.ndarray
    c0_total: float
    gamma_min: float  # min over norm blocks of the l2-vs-own-norm factor
    sigma_max: float
    sigma_min: float
    has_norm: bool
    has_quad: bool
    h_norm2: float  # l2 norm of folded h over norm rows
    h_quad2: float  # l2 norm of folded h over quad rows
    row_kind: np.ndarray = field(default=None)


class AffineNormProgram:
    """A validated, solver-ready structured convex program.

    Construction folds weights, stacks the affine maps, and runs an SVD of
    the stack. Rank deficiency (objective constant along a direction) is
    rejected here rather than surfacing as solver divergence.
    """

    def __init__(self, dim: int, terms, rank_tol: float = 1e-9):
        if not (isinstance(dim, int) and dim >= 1):
            raise ValueError("dim must be a positive integer")
        terms = list(terms)
        if not terms:
            raise ValueError("program needs at least one term")
        self.dim = dim
        self.terms = terms

        blocks = []
        row_off = 0
        h_parts = []
        k_parts = []
        c0_total = 0.0
        gamma_min = math.inf
        has_norm = has_quad = False
        for term in terms:
            G = np.atleast_2d(np.asarray(term.G, dtype=float))
            h = np.atleast_1d(np.asarray(term.h, dtype=float)).ravel()
            rows = G.shape[0]
            if G.shape != (rows, dim) or h.shape != (rows,):
                raise ValueError(
                    f"term shapes inconsistent: G {G.shape}, h {h.shape}, dim {dim}"
                )
            if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
                raise ValueError("term has non-finite entries")
            if isinstance(term, NormTerm):
                scale = term.weight
                kind = _P_TO_KIND[term.p]
                has_norm = True
                gamma = 1.0 / math.sqrt(rows) if term.p == math.inf else 1.0
                gamma_min = min(gamma_min, gamma)
            elif isinstance(term, QuadTerm):
                scale = math.sqrt(term.m)
                kind = KIND_QUAD
                has_quad = True
                c0_total += term.c0
            else:
                raise TypeError(f"unknown term type {type(term).__name__}")
            k_parts.append(sp.csr_matrix(scale * G))
            h_parts.append(scale * h)
            blocks.append((row_off, rows, kind))
            row_off += rows

        K = sp.vstack(k_parts, format="csr")
        h_fold = np.concatenate(h_parts)
        blk = np.array(blocks, dtype=np.int64)
        row_kind = np.empty(row_off, dtype=np.int64)
        for st, ln, kd in blocks:
            row_kind[st : st + ln] = kd

        svals = np.linalg.svd(K.toarray(), compute_uv=False)
        sigma_max = float(svals[0]) if svals.size else 0.0
        sigma_min = float(svals[-1]) if K.shape[0] >= dim else 0.0
        if sigma_min <= rank_tol * max(1.0, sigma_max):
            raise DegenerateProgramError(
                f"objective is (near-)constant along a direction: "
                f"smallest singular value {sigma_min:.3e} of the stacked maps"
            )

        norm_rows = row_kind != KIND_QUAD
        self._folded = _Folded(
            K=K,
            KT=K.T.tocsr(),
            h=h_fold,
            blk_start=blk[:, 0].copy(),
            blk_len=blk[:, 1].copy(),
            blk_kind=blk[:, 2].copy(),
            c0_total=c0_total,
            gamma_min=gamma_min if has_norm else 1.0,
            sigma_max=sigma_max,
            sigma_min=sigma_min,
            has_norm=has_norm,
            has_quad=has_quad,
            h_norm2=float(np.linalg.norm(h_fold[norm_rows])),
            h_quad2=float(np.linalg.norm(h_fold[~norm_rows])),
            row_kind=row_kind,
        )

    @property
    def num_rows(self) -> int:
        return self._folded.h.size

    def objective(self, z: np.ndarray) -> float:
        """Exact objective at z (computed from the folded stack)."""
        z = np.asarray(z, dtype=float).ravel()
        if z.shape != (self.dim,):
            raise ValueError(f"z must have shape ({self.dim},)")
        u = self._folded.K @ z + self._folded.h
        return self.objective_from_rows(u)

    def objective_from_rows(self, u: np.ndarray) -> float:
        f = self._folded
        total = f.c0_total
        for st, ln, kd in zip(f.blk_start, f.blk_len, f.blk_kind):
            blk = u[st : st + ln]
            if kd == KIND_BOX:
                total += float(np.abs(blk).sum())
            elif kd == KIND_L2:
                total += float(np.sqrt(blk @ blk))
            elif kd == KIND_L1:
                total += float(np.abs(blk).max())
            else:
                total += 0.5 * float(blk @ blk)
        return total

    def coercivity_radius(self, upper: float) -> float:
        """R such that every z with objective <= upper has ||z||_2 <= R.

        Derived from the smallest singular value of the folded stack, so it
        is a sound bound, not a heuristic. Used to turn approximate dual
        feasibility into a rigorous objective lower bound.
        """
        f = self._folded
        sig = f.sigma_min
        if f.has_norm and f.has_quad:
            # one of the two row groups must see at least sig*||z||/sqrt(2)
            num = max(upper + f.gamma_min * f.h_norm2 + 0.5 * f.h_quad2 ** 2 - f.c0_total, 0.0)
            r_norm = math.sqrt(2.0) * num / (f.gamma_min * sig)
            r_quad = math.sqrt(8.0 * num) / sig
            return max(r_norm, r_quad)
        if f.has_norm:
            return (max(upper, 0.0) / f.gamma_min + f.h_norm2) / sig
        num = max(upper + 0.5 * f.h_quad2 ** 2 - f.c0_total, 0.0)
        return 2.0 * math.sqrt(num) / sig
