"""Standing validation suite: every documented invariant, executable.

`run_validation` exercises the whole stack on deterministic corpora and
returns per-check results; the CLI turns failures into exit code 1. To
demonstrate the suite can actually fail, set TSCONTROL_BREAK_MRPC=1: the
reflexive controller's fast action is then corrupted by one percent and the
dynamics-consistency, zero-state, and bound checks all trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    hardness_ratio,
    lemma1_check,
    lemma2_lower_bound,
    thm1_report,
    thm2_report,
)
from .controllers import (
    build_offline_program,
    build_offline_program_fs,
    run_mrpc,
    run_offline_opt,
    run_zero_slow,
)
from .harness import run_point
from .instances import (
    NOISE_CYCLE,
    PREDICTION_CYCLE,
    corpus_instance,
    equality_regime_costs,
    random_quad_costs,
    random_system,
)
from .noise import generate_noise, generate_predictions, prediction_error
from .norms import extremal_vector, induced_norm, norm_equivalence_constant, vec_norm
from .oracle import kink_bracket, solve_1d_oracle
from .program import AffineNormProgram, NormTerm, QuadTerm
from .soco import phase_window_starts, run_afhc, soco_cost, soco_lift, soco_offline_opt, soco_reduce
from .solver import solve
from .system import (
    CostSpec,
    NormCost,
    SystemSpec,
    dynamics_residual,
    roll_forward,
    trajectory_cost,
)

SEED0 = 20260815


@dataclass
class CheckResult:
    name: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def case(self, condition: bool, detail: str):
        self.cases += 1
        if not condition:
            self.failures.append(detail)


def _norm_constants(quick: bool, backend) -> CheckResult:
    res = CheckResult("norm_constants")
    M = np.array([[1.0, -2.0], [3.0, 4.0]])
    res.case(induced_norm(M, 1) == 6.0, "induced l1 norm of [[1,-2],[3,4]]")
    res.case(induced_norm(M, np.inf) == 7.0, "induced linf norm of [[1,-2],[3,4]]")
    res.case(abs(induced_norm(np.array([[3.0, 0.0], [4.0, 0.0]]), 2) - 5.0) < 1e-12,
             "induced l2 norm of [[3,0],[4,0]]")
    rng = np.random.default_rng([SEED0, 1])
    ps = (1.0, 2.0, np.inf)
    for i in range(40 if quick else 150):
        pa, pb = rng.choice(ps, size=2)
        n = int(rng.integers(1, 7))
        c = norm_equivalence_constant(pa, pb, n)
        v = rng.normal(size=n)
        res.case(
            vec_norm(v, pa) >= c * vec_norm(v, pb) - 1e-12,
            f"equivalence inequality p=({pa},{pb}) n={n}",
        )
        ex = extremal_vector(pa, pb, n)
        res.case(
            abs(vec_norm(ex, pa) - c * vec_norm(ex, pb)) <= 1e-12 * max(1.0, c),
            f"equivalence tightness p=({pa},{pb}) n={n}",
        )
    return res


def _window_partition(quick: bool, backend) -> CheckResult:
    res = CheckResult("window_partition")
    for T in (1, 5, 17, 40):
        for look in (0, 1, 3, 6):
            for phase in range(1, look + 2):
                starts = phase_window_starts(T, look, phase)
                covered = []
                for i, t0 in enumerate(starts):
                    t1 = starts[i + 1] - 1 if i + 1 < len(starts) else T
                    covered.extend(range(t0, t1 + 1))
                res.case(covered == list(range(1, T + 1)),
                         f"phase windows partition T={T} look={look} phase={phase}")
                full = [t1 - t0 for t0, t1 in zip(starts[1:], starts[2:])]
                res.case(all(ln == look + 1 for ln in full),
                         f"interior window span T={T} look={look} phase={phase}")
    for T, k in ((1, 1), (7, 3), (40, 5), (40, 40), (13, 13)):
        spec = random_system([SEED0, 2, T, k], n=1, T=T, k=k)
        res.case(int(spec.window_lengths().sum()) == T, f"slow windows cover T={T} k={k}")
        res.case(all(int(s) % k == 1 or k == 1 for s in spec.window_starts()),
                 f"slow window starts T={T} k={k}")
    return res


def _solver_vs_oracle(quick: bool, backend) -> CheckResult:
    res = CheckResult("solver_vs_1d_oracle")
    rng = np.random.default_rng([SEED0, 3])
    for i in range(20 if quick else 60):
        terms = []
        for _ in range(int(rng.integers(2, 5))):
            g = float(rng.uniform(0.3, 2.0) * rng.choice([-1.0, 1.0]))
            terms.append(NormTerm(
                float(rng.uniform(0.3, 2.0)),
                float(rng.choice([1.0, 2.0, np.inf])),
                np.array([[g]]),
                np.array([float(rng.normal(scale=2.0))]),
            ))
        if rng.uniform() < 0.5:
            terms.append(QuadTerm(
                float(rng.uniform(0.4, 2.0)),
                np.array([[float(rng.uniform(0.3, 2.0))]]),
                np.array([float(rng.normal(scale=2.0))]),
                float(rng.uniform(0.0, 1.0)),
            ))
        prog = AffineNormProgram(1, terms)
        rep = solve(prog, tol=1e-9, backend=backend)
        lo, hi = kink_bracket(prog)
        _, val = solve_1d_oracle(prog, lo, hi)
        res.case(
            abs(rep.objective - val) <= 1e-7 * (1.0 + abs(val)),
            f"1-D case {i}: solver {rep.objective:.10f} vs oracle {val:.10f}",
        )
    return res


def _opt_param_agreement(quick: bool, backend) -> CheckResult:
    res = CheckResult("opt_parameterization_agreement")
    for i in range(4 if quick else 10):
        spec, costs, noise, _ = corpus_instance(i, seed0=SEED0 + 4, t_max=18)
        spec = random_system([SEED0, 4, i], n=min(spec.n, 3), T=spec.T, k=spec.k)
        w = generate_noise(noise, spec, [SEED0, 4, i])
        ra = solve(build_offline_program(spec, costs, w), backend=backend)
        rb = solve(build_offline_program_fs(spec, costs, w), backend=backend)
        tol = 10.0 * (ra.certified_gap + rb.certified_gap) + 1e-8 * (1.0 + abs(ra.objective))
        res.case(
            abs(ra.objective - rb.objective) <= tol,
            f"instance {i}: banded {ra.objective:.9f} vs raw {rb.objective:.9f}",
        )
    return res


def _controller_invariants(quick: bool, backend) -> CheckResult:
    res = CheckResult("controller_invariants")
    for i in range(6 if quick else 14):
        spec, costs, noise, pred = corpus_instance(i, seed0=SEED0 + 5)
        w = generate_noise(noise, spec, [SEED0, 5, i, 0])
        what = generate_predictions(pred, w, costs.cf, [SEED0, 5, i, 1])
        opt = run_offline_opt(spec, costs, w, backend=backend)
        alg = run_mrpc(spec, costs, w, what, backend=backend)
        base = run_zero_slow(spec, costs, w)
        for run in (opt, alg, base):
            res.case(
                dynamics_residual(spec, run.trajectory, w) <= 1e-9,
                f"instance {i}: {run.name} dynamics residual",
            )
        res.case(
            float(np.abs(alg.trajectory.x).max()) <= 1e-12,
            f"instance {i}: reflexive controller state not pinned at zero",
        )
        res.case(
            opt.total_cost <= alg.total_cost + 10.0 * (opt.solver_gap + alg.solver_gap) + 1e-9,
            f"instance {i}: clairvoyant above online controller",
        )
        res.case(
            opt.total_cost <= base.total_cost + 10.0 * opt.solver_gap + 1e-9,
            f"instance {i}: clairvoyant above baseline",
        )
        rep = thm2_report(spec, costs, alg, opt, w, what)
        res.case(rep.holds, f"instance {i}: prediction-sensitivity bound")
        lb, _ = lemma2_lower_bound(spec, costs, w, backend=backend)
        res.case(
            lb <= opt.total_cost + 10.0 * opt.solver_gap,
            f"instance {i}: clairvoyant lower bound {lb:.6f} vs opt {opt.total_cost:.6f}",
        )
    return res


def _equality_regime(quick: bool, backend) -> CheckResult:
    res = CheckResult("equality_regime")
    for i in range(4 if quick else 8):
        spec = random_system([SEED0, 6, i], rho_max=0.95)
        costs = equality_regime_costs(spec, [SEED0, 6, i, 1])
        noise = NOISE_CYCLE[i % len(NOISE_CYCLE)]
        w = generate_noise(noise, spec, [SEED0, 6, i, 2])
        alg = run_mrpc(spec, costs, w, w.copy(), backend=backend)
        opt = run_offline_opt(spec, costs, w, backend=backend)
        slack = 10.0 * (alg.solver_gap + opt.solver_gap)
        rel = abs(alg.total_cost - opt.total_cost) / max(opt.total_cost, 1e-9)
        res.case(
            rel <= 1e-5 + slack / max(opt.total_cost, 1e-9),
            f"instance {i}: dominant-state-cost regime rel diff {rel:.2e}",
        )
    return res


def _splitting_bound(quick: bool, backend) -> CheckResult:
    res = CheckResult("splitting_bound")
    rng = np.random.default_rng([SEED0, 7])
    for i in range(30 if quick else 100):
        n = int(rng.integers(1, 5))
        M = rng.normal(size=(n, n))
        u, s, vt = np.linalg.svd(M)
        M = (u * np.maximum(s, 0.3)) @ vt
        rep = lemma1_check(
            float(rng.uniform(0.2, 2.0)),
            float(rng.uniform(0.2, 2.0)),
            M,
            rng.normal(scale=2.0, size=n),
            float(rng.choice([1.0, 2.0, np.inf])),
            float(rng.choice([1.0, 2.0, np.inf])),
            backend=backend,
        )
        res.case(rep.holds, f"case {i}: lhs {rep.lhs:.8f} < rhs {rep.rhs:.8f}")
    return res


def _reduction_roundtrip(quick: bool, backend) -> CheckResult:
    res = CheckResult("reduction_roundtrip")
    rng = np.random.default_rng([SEED0, 8])
    for i in range(6 if quick else 12):
        spec, costs, noise, _ = corpus_instance(i, seed0=SEED0 + 8, t_max=40)
        w = generate_noise(noise, spec, [SEED0, 8, i])
        f = rng.normal(size=(spec.T, spec.n))
        problem, y = soco_reduce(spec, costs, w, f)
        f_back = soco_lift(problem, y)
        res.case(
            float(np.abs(f_back - f).max()) <= 1e-10 * max(1.0, float(np.abs(f).max())),
            f"instance {i}: lift(reduce(f)) != f",
        )
        traj = roll_forward(spec, f, np.zeros((spec.T, spec.n)), w)
        direct = trajectory_cost(costs, traj)
        reduced = soco_cost(problem, y)
        res.case(
            abs(direct - reduced) <= 1e-10 * (1.0 + abs(direct)),
            f"instance {i}: fast-only cost {direct:.10f} vs reduced {reduced:.10f}",
        )
    return res


def _horizon_averaging(quick: bool, backend) -> CheckResult:
    res = CheckResult("horizon_averaging_bound")
    for i in range(4 if quick else 8):
        rng = np.random.default_rng([SEED0, 9, i])
        spec = random_system([SEED0, 9, i], rho_max=0.95, T=int(rng.integers(20, 45)))
        costs = random_quad_costs([SEED0, 9, i, 1], spec)
        noise = NOISE_CYCLE[i % len(NOISE_CYCLE)]
        w = generate_noise(noise, spec, [SEED0, 9, i, 2])
        problem, _ = soco_reduce(spec, costs, w)
        opt = soco_offline_opt(problem, backend=backend)
        for look in (1, 3):
            alg = run_afhc(problem, look, backend=backend)
            rep = thm1_report(problem, look, alg, opt)
            res.case(rep.holds, f"instance {i} look={look}: averaging bound")
            mean_phase = float(np.mean(alg.extras["phase_costs"]))
            res.case(
                alg.total_cost <= mean_phase + 1e-9 * (1.0 + mean_phase),
                f"instance {i} look={look}: averaged cost above phase mean",
            )
            res.case(
                opt.total_cost <= alg.total_cost + 10.0 * (opt.solver_gap + alg.solver_gap) + 1e-9,
                f"instance {i} look={look}: optimum above averaged controller",
            )
    return res


def _noise_predictions(quick: bool, backend) -> CheckResult:
    res = CheckResult("noise_and_predictions")
    spec = random_system([SEED0, 10], n=3, T=25, k=5)
    cf = NormCost(2.0, 1.3)
    for noise in NOISE_CYCLE:
        w1 = generate_noise(noise, spec, [SEED0, 10, 1])
        w2 = generate_noise(noise, spec, [SEED0, 10, 1])
        res.case(np.array_equal(w1, w2), f"{noise.kind}: same seed, same trace")
        res.case(w1.shape == (spec.T, spec.n), f"{noise.kind}: trace shape")
    w = generate_noise(NOISE_CYCLE[0], spec, [SEED0, 10, 2])
    for pred in PREDICTION_CYCLE:
        p1 = generate_predictions(pred, w, cf, [SEED0, 10, 3])
        p2 = generate_predictions(pred, w, cf, [SEED0, 10, 3])
        res.case(np.array_equal(p1, p2), f"{pred.kind}: same seed, same trace")
    u = generate_noise(NOISE_CYCLE[1], spec, [SEED0, 10, 4])
    res.case(float(np.abs(u).max()) <= 1.5, "uniform noise within radius")
    bounded = generate_predictions(PREDICTION_CYCLE[2], w, cf, [SEED0, 10, 5])
    worst = max(cf.value(bounded[t] - w[t]) for t in range(spec.T))
    res.case(worst <= 0.5 + 1e-12, f"bounded prediction error {worst:.4f} exceeds eps")
    ws = generate_predictions(PREDICTION_CYCLE[3], w, cf, [SEED0, 10, 6])
    err = prediction_error(w, ws, cf)
    res.case(abs(err - 0.4) <= 1e-12, f"worst-sign mean error {err} != eps")
    alt = generate_noise(NOISE_CYCLE[4], spec, [SEED0, 10, 7])
    res.case(alt[0, 0] == 1.2 and alt[1, 0] == -1.2, "alternating noise sign pattern")
    return res


def _hardness(quick: bool, backend) -> CheckResult:
    res = CheckResult("hardness_monotonicity")
    r_small, s_small = hardness_ratio(1.0, backend=backend)
    r_big, s_big = hardness_ratio(10.0, backend=backend)
    res.case(
        r_big >= r_small + 0.5 - (s_small + s_big),
        f"ratio(10)={r_big:.4f} not well above ratio(1)={r_small:.4f}",
    )
    res.case(r_small >= 1.0 - s_small, "ratio below one")
    return res


def _record_determinism(quick: bool, backend) -> CheckResult:
    res = CheckResult("record_determinism")
    merged = {
        "system": {
            "A": [[0.6, 0.1], [0.0, 0.5]],
            "Bf": [[1.0, 0.2], [0.1, 0.9]],
            "Bs": [[0.7, 0.0], [0.3, 1.1]],
            "T": 18,
            "k": 3,
        },
        "costs": {
            "cx": {"kind": "norm", "p": 2, "weight": 1.0},
            "cf": {"kind": "norm", "p": 2, "weight": 0.8},
            "cs": {"kind": "norm", "p": 1, "weight": 0.4},
        },
        "noise": {"kind": "gaussian_iid", "sigma": 1.0},
        "predictions": {"kind": "additive_gaussian", "sigma": 0.2},
        "controllers": [
            {"type": "offline_opt"},
            {"type": "mrpc"},
            {"type": "zero_slow"},
        ],
    }
    recs1 = run_point("det", merged, 7, backend=backend)
    recs2 = run_point("det", merged, 7, backend=backend)
    res.case(recs1 == recs2, "identical reruns differ")
    res.case(all(r.error == "" for r in recs1), "controller errors in determinism scenario")
    return res


_CHECKS = (
    _norm_constants,
    _window_partition,
    _solver_vs_oracle,
    _opt_param_agreement,
    _controller_invariants,
    _equality_regime,
    _splitting_bound,
    _reduction_roundtrip,
    _horizon_averaging,
    _noise_predictions,
    _hardness,
    _record_determinism,
)


def run_validation(quick: bool = False, backend: str | None = None) -> list[CheckResult]:
    return [check(quick, backend) for check in _CHECKS]


def format_results(results: list[CheckResult]) -> str:
    lines = []
    width = max(len(r.name) for r in results)
    for r in results:
        status = "ok" if r.ok else f"FAIL ({len(r.failures)}/{r.cases})"
        lines.append(f"{r.name:<{width}}  {r.cases:>4} cases  {status}")
        for detail in r.failures[:5]:
            lines.append(f"    - {detail}")
        if len(r.failures) > 5:
            lines.append(f"    ... and {len(r.failures) - 5} more")
    total = sum(r.cases for r in results)
    bad = sum(len(r.failures) for r in results)
    lines.append(
        f"{'all checks passed' if bad == 0 else f'{bad} failures'} "
        f"({total} cases across {len(results)} checks)"
    )
    return "\n".join(lines)
