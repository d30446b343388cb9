"""Vector p-norms, induced matrix norms, and norm-equivalence constants.

Only p in {1, 2, inf} is supported anywhere in this package: those are the
norms with closed-form duals and cheap proximal projections, which the
solver relies on.
"""

from __future__ import annotations

import math

import numpy as np

SUPPORTED_P = (1.0, 2.0, math.inf)


def check_p(p) -> float:
    p = float(p)
    if p not in SUPPORTED_P:
        raise ValueError(f"unsupported norm order {p!r}; expected 1, 2 or inf")
    return p


def vec_norm(v: np.ndarray, p: float) -> float:
    """l_p norm of a flat vector, p in {1, 2, inf}."""
    v = np.asarray(v, dtype=float).ravel()
    if p == 1.0:
        return float(np.abs(v).sum())
    if p == 2.0:
        return float(np.sqrt(v @ v))
    if v.size == 0:
        return 0.0
    return float(np.abs(v).max())


def dual_p(p: float) -> float:
    """Holder conjugate: 1 <-> inf, 2 <-> 2."""
    p = check_p(p)
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return 2.0


def induced_norm(M: np.ndarray, p: float) -> float:
    """Operator norm of M as a map (R^n, l_p) -> (R^m, l_p).

    p=1 is the max column sum, p=inf the max row sum, p=2 the largest
    singular value (LAPACK SVD; accurate to machine precision, well inside
    the 1e-10 relative contract).
    """
    p = check_p(p)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    if p == 1.0:
        return float(np.abs(M).sum(axis=0).max())
    if p == math.inf:
        return float(np.abs(M).sum(axis=1).max())
    return float(np.linalg.svd(M, compute_uv=False)[0])


def norm_equivalence_constant(p_from: float, p_to: float, n: int) -> float:
    """Largest c with ||v||_{p_from} >= c * ||v||_{p_to} for all v in R^n.

    For p_from <= p_to the constant is 1 (l_p norms decrease in p); otherwise
    it is n^(1/p_from - 1/p_to), attained at the all-ones vector.
    """
    p_from = check_p(p_from)
    p_to = check_p(p_to)
    if n < 1:
        raise ValueError("n must be >= 1")
    e_from = 0.0 if p_from == math.inf else 1.0 / p_from
    e_to = 0.0 if p_to == math.inf else 1.0 / p_to
    if e_from >= e_to:  # p_from <= p_to
        return 1.0
    return float(n ** (e_from - e_to))


def extremal_vector(p_from: float, p_to: float, n: int) -> np.ndarray:
    """A nonzero v attaining norm_equivalence_constant's ratio exactly."""
    p_from = check_p(p_from)
    p_to = check_p(p_to)
    e_from = 0.0 if p_from == math.inf else 1.0 / p_from
    e_to = 0.0 if p_to == math.inf else 1.0 / p_to
    if e_from >= e_to:
        v = np.zeros(n)
        v[0] = 1.0
        return v
    return np.ones(n)
