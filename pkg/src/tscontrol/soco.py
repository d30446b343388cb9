"""Single-timescale reduction and lookahead-window controllers.

With the slow channel stripped out, the control problem becomes smoothed
online optimization in the transformed state y_t = x_t - v_t, where
v_t = A v_{t-1} + w_t is the noise accumulation: hit costs c_t(y) =
cx(y + v_t) plus a movement charge cf(Bf^{-1}(y_t - A y_{t-1})). The fast
actions are recovered by the lift f_t = Bf^{-1}(y_t - A y_{t-1}).

Controllers here commit fixed lookahead windows (with every start phase,
and the phase-average variant). Each window solve sees only that window's
slice of v: the information model is exact lookahead of the next
`lookahead + 1` steps and nothing beyond.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .program import AffineNormProgram, NormTerm
from .solver import DEFAULT_MAX_ITERS, DEFAULT_TOL, solve
from .system import NormCost, QuadFloor, StageCost, SystemSpec, CostSpec


@dataclass(frozen=True)
class SocoProblem:
    """Hit costs cx(y + v_t) plus movement cf(Bf^{-1}(y_t - A y_{t-1}))."""

    A: np.ndarray
    Bf: np.ndarray
    stage: StageCost
    move: NormCost
    v: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Bf = np.atleast_2d(np.asarray(self.Bf, dtype=float))
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n) or Bf.shape != (n, n) or v.shape[1] != n:
            raise ValueError("inconsistent shapes for A, Bf, v")
        if not isinstance(self.move, NormCost):
            raise ValueError("movement cost must be a norm")
        smin = float(np.linalg.svd(Bf, compute_uv=False)[-1])
        if smin <= 1e-9:
            raise ValueError(f"Bf not safely invertible (smallest singular value {smin:.3e})")
        for arr in (A, Bf, v):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Bf", Bf)
        object.__setattr__(self, "v", v)
        inv = np.linalg.inv(Bf)
        inv.setflags(write=False)
        object.__setattr__(self, "_Bf_inv", inv)

    @property
    def T(self) -> int:
        return self.v.shape[0]

    @property
    def n(self) -> int:
        return self.v.shape[1]

    @property
    def Bf_inv(self) -> np.ndarray:
        return self._Bf_inv


@dataclass(frozen=True)
class SocoRun:
    name: str
    y: np.ndarray
    total_cost: float
    solver_gap: float
    extras: dict = field(default_factory=dict)

    @property
    def per_step_cost(self) -> float:
        return self.total_cost / self.y.shape[0]


def soco_reduce(spec: SystemSpec, costs: CostSpec, w: np.ndarray, f: np.ndarray | None = None):
    """Reduce the fast-channel-only problem to its smoothed online form.

    Returns (problem, y) where y is the transformed trajectory of the given
    fast actions (None if f is None).
    """
    if not isinstance(costs.cf, NormCost):
        raise ValueError("reduction needs a norm fast-action cost")
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape != (spec.T, spec.n):
        raise ValueError(f"noise must have shape {(spec.T, spec.n)}")
    v = np.empty_like(w)
    acc = np.zeros(spec.n)
    for t in range(spec.T):
        acc = spec.A @ acc + w[t]
        v[t] = acc
    problem = SocoProblem(A=spec.A, Bf=spec.Bf, stage=costs.cx, move=costs.cf, v=v)
    y = None
    if f is not None:
        f = np.atleast_2d(np.asarray(f, dtype=float))
        y = np.empty_like(f)
        acc = np.zeros(spec.n)
        for t in range(spec.T):
            acc = spec.A @ acc + spec.Bf @ f[t]
            y[t] = acc
    return problem, y


def soco_lift(problem: SocoProblem, y: np.ndarray) -> np.ndarray:
    """Fast actions realizing the y trajectory: f_t = Bf^{-1}(y_t - A y_{t-1})."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    f = np.empty_like(y)
    prev = np.zeros(problem.n)
    for t in range(y.shape[0]):
        f[t] = problem.Bf_inv @ (y[t] - problem.A @ prev)
        prev = y[t]
    return f


def soco_cost(problem: SocoProblem, y: np.ndarray) -> float:
    """Hit plus movement cost of a y trajectory (y_0 = 0)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape != (problem.T, problem.n):
        raise ValueError(f"y must have shape {(problem.T, problem.n)}")
    total = 0.0
    prev = np.zeros(problem.n)
    for t in range(1, problem.T + 1):
        yt = y[t - 1]
        total += problem.stage.value(yt + problem.v[t - 1], t)
        total += problem.move.value(problem.Bf_inv @ (yt - problem.A @ prev))
        prev = yt
    return total


def _window_program(problem: SocoProblem, t0: int, t1: int, anchor: np.ndarray) -> AffineNormProgram:
    """Program over (y_t0 .. y_t1) given the committed previous point."""
    n = problem.n
    steps = t1 - t0 + 1
    d = n * steps
    Bfi = problem.Bf_inv
    BfiA = Bfi @ problem.A
    terms = []
    for i, t in enumerate(range(t0, t1 + 1)):
        G = np.zeros((n, d))
        G[:, i * n : (i + 1) * n] = np.eye(n)
        vt = problem.v[t - 1]
        if isinstance(problem.stage, NormCost):
            terms.append(NormTerm(problem.stage.weight, problem.stage.p, G, vt.copy()))
        else:
            from .program import QuadTerm

            terms.append(
                QuadTerm(problem.stage.m, G, vt - problem.stage.center(t, n), problem.stage.c0)
            )
    for i, t in enumerate(range(t0, t1 + 1)):
        G = np.zeros((n, d))
        G[:, i * n : (i + 1) * n] = Bfi
        if i == 0:
            h = -BfiA @ anchor
        else:
            G[:, (i - 1) * n : i * n] = -BfiA
            h = np.zeros(n)
        terms.append(NormTerm(problem.move.weight, problem.move.p, G, h))
    return AffineNormProgram(d, terms)


def fhc_window_solve(
    problem: SocoProblem,
    t0: int,
    t1: int,
    anchor: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: str | None = None,
):
    """Optimal y over steps [t0, t1] entering from the committed anchor."""
    if not (1 <= t0 <= t1 <= problem.T):
        raise ValueError(f"bad window [{t0}, {t1}] for horizon {problem.T}")
    anchor = np.asarray(anchor, dtype=float).ravel()
    prog = _window_program(problem, t0, t1, anchor)
    rep = solve(prog, tol=tol, max_iters=max_iters, backend=backend)
    return rep.z.reshape(t1 - t0 + 1, problem.n), rep


def soco_offline_opt(
    problem: SocoProblem,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: str | None = None,
) -> SocoRun:
    """Full-horizon optimum of the smoothed online problem."""
    y, rep = fhc_window_solve(problem, 1, problem.T, np.zeros(problem.n), tol, max_iters, backend)
    return SocoRun(
        name="soco_opt",
        y=y,
        total_cost=soco_cost(problem, y),
        solver_gap=rep.certified_gap,
        extras={"report": rep},
    )


def phase_window_starts(T: int, lookahead: int, phase: int) -> list[int]:
    """Window start steps for a commitment phase in 1..lookahead+1.

    Phase p >= 2 opens with a truncated head window [1, p-1]; after that,
    windows of lookahead+1 steps tile the horizon.
    """
    span = lookahead + 1
    if not 1 <= phase <= span:
        raise ValueError(f"phase must be in 1..{span}")
    if phase == 1:
        return list(range(1, T + 1, span))
    return [1] + list(range(phase, T + 1, span))


def run_fhc(
    problem: SocoProblem,
    lookahead: int,
    phase: int,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: str | None = None,
) -> SocoRun:
    """Fixed-horizon commitment: solve each window, commit it, move on."""
    if lookahead < 0:
        raise ValueError("lookahead must be >= 0")
    starts = phase_window_starts(problem.T, lookahead, phase)
    y = np.empty((problem.T, problem.n))
    anchor = np.zeros(problem.n)
    gap = 0.0
    for i, t0 in enumerate(starts):
        t1 = (starts[i + 1] - 1) if i + 1 < len(starts) else problem.T
        y_win, rep = fhc_window_solve(problem, t0, t1, anchor, tol, max_iters, backend)
        y[t0 - 1 : t1] = y_win
        anchor = y[t1 - 1]
        gap += rep.certified_gap
    return SocoRun(
        name=f"fhc_p{phase}",
        y=y,
        total_cost=soco_cost(problem, y),
        solver_gap=gap,
        extras={"starts": starts, "lookahead": lookahead},
    )


def run_afhc(
    problem: SocoProblem,
    lookahead: int,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: str | None = None,
) -> SocoRun:
    """Average over all commitment phases of the fixed-horizon controller."""
    runs = [
        run_fhc(problem, lookahead, phase, tol, max_iters, backend)
        for phase in range(1, lookahead + 2)
    ]
    ybar = np.mean([r.y for r in runs], axis=0)
    return SocoRun(
        name="afhc",
        y=ybar,
        total_cost=soco_cost(problem, ybar),
        solver_gap=sum(r.solver_gap for r in runs),
        extras={
            "lookahead": lookahead,
            "phase_costs": [r.total_cost for r in runs],
        },
    )
