"""Plant model, stage costs, and trajectory bookkeeping.

The plant is linear with two actuation channels running at different rates:

    x_t = A x_{t-1} + Bf f_t + Bs s_t + w_t,    x_0 = 0,

where f_t may change every step and s_t is held constant inside consecutive
blocks of k steps starting at t = 1 (the final block may be shorter when k
does not divide T). A trajectory is charged

    sum_t  cx(x_t) + cf(f_t) + cs(s_t).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .norms import check_p, vec_norm


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NormCost:
    """Stage cost weight * ||v||_p."""

    p: float
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))
        if not (self.weight > 0.0 and np.isfinite(self.weight)):
            raise ValueError("cost weight must be positive and finite")

    def value(self, v: np.ndarray, t: int | None = None) -> float:
        return self.weight * vec_norm(v, self.p)


@dataclass(frozen=True)
class QuadFloor:
    """Stage cost (m/2) * ||v - theta_t||_2^2 + c0.

    m > 0 gives strong convexity, c0 > 0 a per-step cost floor; both are
    what the horizon-averaging bound consumes. theta may be a scalar, a
    single center of shape (n,), or a per-step array of shape (T, n).
    """

    m: float
    c0: float
    theta: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if not (self.m > 0.0 and np.isfinite(self.m)):
            raise ValueError("curvature m must be positive and finite")
        if not (self.c0 >= 0.0 and np.isfinite(self.c0)):
            raise ValueError("floor c0 must be nonnegative and finite")
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if th.ndim > 2:
            raise ValueError("theta must be scalar, (n,) or (T, n)")
        object.__setattr__(self, "theta", _frozen(th))

    def center(self, t: int, n: int) -> np.ndarray:
        """Center for step t (1-based)."""
        th = self.theta
        if th.ndim == 2:
            return th[t - 1]
        if th.size == 1 and n != 1:
            return np.full(n, th[0])
        return th

    def value(self, v: np.ndarray, t: int = 1) -> float:
        v = np.asarray(v, dtype=float).ravel()
        d = v - self.center(t, v.size)
        return 0.5 * self.m * float(d @ d) + self.c0


StageCost = Union[NormCost, QuadFloor]


@dataclass(frozen=True)
class CostSpec:
    cx: StageCost
    cf: StageCost
    cs: StageCost

    def all_norms(self) -> bool:
        return all(isinstance(c, NormCost) for c in (self.cx, self.cf, self.cs))


@dataclass(frozen=True)
class SystemSpec:
    """Dimensions, dynamics matrices, and the slow-timescale period k."""

    A: np.ndarray
    Bf: np.ndarray
    Bs: np.ndarray
    T: int
    k: int
    inv_tol: float = 1e-9

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Bf = np.atleast_2d(np.asarray(self.Bf, dtype=float))
        Bs = np.atleast_2d(np.asarray(self.Bs, dtype=float))
        n = A.shape[0]
        for name, M in (("A", A), ("Bf", Bf), ("Bs", Bs)):
            if M.shape != (n, n):
                raise ValueError(f"{name} must be square of shape ({n}, {n}), got {M.shape}")
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
        if not (isinstance(self.T, int) and self.T >= 1):
            raise ValueError("T must be a positive integer")
        if not (isinstance(self.k, int) and 1 <= self.k <= self.T):
            raise ValueError("k must be an integer in [1, T]")
        smin = float(np.linalg.svd(Bf, compute_uv=False)[-1])
        if smin <= self.inv_tol:
            raise ValueError(
                f"Bf is not safely invertible: smallest singular value {smin:.3e} <= {self.inv_tol:.1e}"
            )
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "Bf", _frozen(Bf))
        object.__setattr__(self, "Bs", _frozen(Bs))
        # cache the inverse once; every controller needs it
        object.__setattr__(self, "_Bf_inv", _frozen(np.linalg.inv(Bf)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def Bf_inv(self) -> np.ndarray:
        return self._Bf_inv

    def window_starts(self) -> np.ndarray:
        """1-based steps where the slow action may change: 1, k+1, 2k+1, ..."""
        return np.arange(1, self.T + 1, self.k)

    def window_lengths(self) -> np.ndarray:
        starts = self.window_starts()
        ends = np.minimum(starts + self.k - 1, self.T)
        return ends - starts + 1

    def window_index(self, t: int) -> int:
        """0-based index of the slow window containing step t (1-based)."""
        if not 1 <= t <= self.T:
            raise ValueError(f"step {t} outside horizon 1..{self.T}")
        return (t - 1) // self.k

    def num_windows(self) -> int:
        return len(self.window_starts())


@dataclass(frozen=True)
class Trajectory:
    """States x_0..x_T (shape (T+1, n)) and actions f, s (shape (T, n))."""

    x: np.ndarray
    f: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        f = np.atleast_2d(np.asarray(self.f, dtype=float))
        s = np.atleast_2d(np.asarray(self.s, dtype=float))
        T = f.shape[0]
        n = f.shape[1]
        if x.shape != (T + 1, n) or s.shape != (T, n):
            raise ValueError(
                f"inconsistent trajectory shapes x={x.shape} f={f.shape} s={s.shape}"
            )
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "f", _frozen(f))
        object.__setattr__(self, "s", _frozen(s))

    @property
    def T(self) -> int:
        return self.f.shape[0]

    @property
    def n(self) -> int:
        return self.f.shape[1]


def expand_slow_actions(spec: SystemSpec, s_windows: np.ndarray) -> np.ndarray:
    """Per-window slow actions (W, n) -> per-step array (T, n)."""
    s_windows = np.atleast_2d(np.asarray(s_windows, dtype=float))
    W = spec.num_windows()
    if s_windows.shape != (W, spec.n):
        raise ValueError(f"expected {(W, spec.n)} slow actions, got {s_windows.shape}")
    idx = (np.arange(1, spec.T + 1) - 1) // spec.k
    return s_windows[idx]


def check_slow_consistency(spec: SystemSpec, s: np.ndarray, tol: float = 0.0) -> None:
    """Raise unless s (T, n) is constant within each slow window."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    for r in spec.window_starts():
        r0 = int(r)
        end = min(r0 + spec.k - 1, spec.T)
        block = s[r0 - 1 : end]
        if np.abs(block - block[0]).max() > tol:
            raise ValueError(f"slow action changes inside window starting at t={r0}")


def roll_forward(
    spec: SystemSpec, f: np.ndarray, s: np.ndarray, w: np.ndarray
) -> Trajectory:
    """Integrate the dynamics from x_0 = 0 under actions (f, s) and noise w.

    s must already respect the slow-window structure; this is checked.
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    s = np.atleast_2d(np.asarray(s, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    shape = (spec.T, spec.n)
    for name, arr in (("f", f), ("s", s), ("w", w)):
        if arr.shape != shape:
            raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    check_slow_consistency(spec, s)
    x = np.zeros((spec.T + 1, spec.n))
    for t in range(1, spec.T + 1):
        x[t] = spec.A @ x[t - 1] + spec.Bf @ f[t - 1] + spec.Bs @ s[t - 1] + w[t - 1]
    return Trajectory(x=x, f=f, s=s)


def trajectory_cost(costs: CostSpec, traj: Trajectory) -> float:
    """sum_t cx(x_t) + cf(f_t) + cs(s_t), evaluated term by term."""
    total = 0.0
    for t in range(1, traj.T + 1):
        total += costs.cx.value(traj.x[t], t)
        total += costs.cf.value(traj.f[t - 1], t)
        total += costs.cs.value(traj.s[t - 1], t)
    return total


def dynamics_residual(spec: SystemSpec, traj: Trajectory, w: np.ndarray) -> float:
    """Max absolute violation of the one-step dynamics across the horizon."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    worst = 0.0
    for t in range(1, spec.T + 1):
        pred = spec.A @ traj.x[t - 1] + spec.Bf @ traj.f[t - 1] + spec.Bs @ traj.s[t - 1] + w[t - 1]
        worst = max(worst, float(np.abs(traj.x[t] - pred).max()))
    return worst
