"""Independent scalar minimizer used to cross-check the main solver.

Deliberately primitive: exhaustive grid scan to bracket the minimum of the
(convex) objective, then golden-section refinement. Shares no code path
with the primal-dual iteration, which is the point.
"""

from __future__ import annotations

import math

import numpy as np

from .program import AffineNormProgram

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def solve_1d_oracle(
    prog: AffineNormProgram,
    lo: float,
    hi: float,
    tol: float = 1e-10,
    grid: int = 2001,
):
    """Minimize a 1-D program over [lo, hi]; returns (z_star, value).

    The bracket must contain a minimizer; for the programs this package
    builds, any interval covering all kink locations -h_i/g_i works.
    """
    if prog.dim != 1:
        raise ValueError("oracle only handles 1-D programs")
    if not (lo < hi):
        raise ValueError("need lo < hi")
    xs = np.linspace(lo, hi, grid)
    vals = np.array([prog.objective(np.array([x])) for x in xs])
    i = int(np.argmin(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, grid - 1)]

    # golden-section on [a, b]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = prog.objective(np.array([c]))
    fd = prog.objective(np.array([d]))
    while (b - a) > tol * max(1.0, abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = prog.objective(np.array([c]))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = prog.objective(np.array([d]))
    z = 0.5 * (a + b)
    return z, prog.objective(np.array([z]))


def kink_bracket(prog: AffineNormProgram, pad: float = 1.0):
    """A safe oracle bracket from the program's kink/center locations."""
    f = prog._folded
    K = f.K.toarray().ravel()
    h = f.h
    pts = [0.0]
    for g, hh in zip(K, h):
        if abs(g) > 1e-12:
            pts.append(-hh / g)
    lo, hi = min(pts), max(pts)
    span = max(hi - lo, 1.0)
    return lo - pad * span, hi + pad * span
