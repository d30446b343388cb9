"""End-to-end acceptance suite.

One test per shipped guarantee, run at full scale: the two performance
bounds, the equality and lower-bound corollaries, the splitting inequality,
the single-timescale reduction, oracle agreement, determinism, and the
degradation demo. The randomized corpora are built once per session and
shared between the tests that audit different properties of the same runs.
"""

import itertools
import time

import numpy as np
import pytest

from tscontrol.analysis import (
    hardness_ratio,
    lemma1_check,
    lemma2_lower_bound,
    thm1_report,
    thm2_report,
)
from tscontrol.config import parse_scenario
from tscontrol.controllers import mrpc_slow_program, run_mrpc, run_offline_opt
from tscontrol.harness import run_scenario
from tscontrol.instances import (
    NOISE_CYCLE,
    PREDICTION_CYCLE,
    equality_regime_costs,
    random_norm_costs,
    random_system,
)
from tscontrol.noise import generate_noise, generate_predictions
from tscontrol.oracle import kink_bracket, solve_1d_oracle
from tscontrol.soco import run_afhc, soco_lift, soco_offline_opt, soco_reduce
from tscontrol.solver import solve
from tscontrol.system import CostSpec, NormCost, QuadFloor, SystemSpec
from tscontrol.validate import run_validation

ACC_SEED = 31415926
CORPUS_SIZE = 100
CORPUS_BUDGET_S = 300.0


def _corpus_instance(i: int):
    rng = np.random.default_rng([ACC_SEED, i])
    n = int(rng.integers(1, 5))
    T = int(rng.integers(20, 121))
    k = int(rng.choice([2, 5, 10]))
    spec = random_system([ACC_SEED, i, 0], n=n, T=T, k=k)
    costs = random_norm_costs([ACC_SEED, i, 1], n)
    noise = NOISE_CYCLE[i % len(NOISE_CYCLE)]
    pred = PREDICTION_CYCLE[i % len(PREDICTION_CYCLE)]
    w = generate_noise(noise, spec, [ACC_SEED, i, 2])
    what = generate_predictions(pred, w, costs.cf, [ACC_SEED, i, 3])
    return spec, costs, w, what


@pytest.fixture(scope="session")
def corpus():
    """100 randomized instances with clairvoyant, decomposed-controller, and
    window-lower-bound solves; every noise and prediction kind appears."""
    t0 = time.monotonic()
    out = []
    for i in range(CORPUS_SIZE):
        spec, costs, w, what = _corpus_instance(i)
        opt = run_offline_opt(spec, costs, w, tol=1e-7)
        mrpc = run_mrpc(spec, costs, w, what, tol=1e-9)
        lb, _ = lemma2_lower_bound(spec, costs, w, tol=1e-9)
        out.append(
            dict(i=i, spec=spec, costs=costs, w=w, what=what, opt=opt, mrpc=mrpc, lb=lb)
        )
    return out, time.monotonic() - t0


def test_prediction_sensitivity_bound_on_randomized_corpus(corpus):
    instances, elapsed = corpus
    assert len(instances) == CORPUS_SIZE
    dims = {inst["spec"].n for inst in instances}
    assert dims == {1, 2, 3, 4}
    violations = []
    worst_margin = np.inf
    for inst in instances:
        rep = thm2_report(
            inst["spec"], inst["costs"], inst["mrpc"], inst["opt"], inst["w"], inst["what"]
        )
        if not rep.holds:
            violations.append((inst["i"], rep.lhs, rep.rhs, rep.slack))
        worst_margin = min(worst_margin, rep.rhs + rep.slack - rep.lhs)
    print(
        f"prediction-sensitivity bound: {CORPUS_SIZE - len(violations)}/{CORPUS_SIZE} hold, "
        f"tightest margin {worst_margin:.3e}, corpus built in {elapsed:.1f}s"
    )
    assert not violations, f"bound violated on instances {violations}"
    assert elapsed <= CORPUS_BUDGET_S, f"corpus took {elapsed:.1f}s > {CORPUS_BUDGET_S}s"


def test_decomposed_matches_clairvoyant_when_state_cost_dominates():
    worst = 0.0
    for i in range(25):
        rng = np.random.default_rng([ACC_SEED, 100, i])
        n = int(rng.integers(1, 5))
        T = int(rng.integers(20, 61))
        k = int(rng.choice([2, 5, 10]))
        spec = random_system([ACC_SEED, 101, i], n=n, T=T, k=k)
        costs = equality_regime_costs(spec, [ACC_SEED, 102, i])
        w = generate_noise(NOISE_CYCLE[i % len(NOISE_CYCLE)], spec, [ACC_SEED, 103, i])
        opt = run_offline_opt(spec, costs, w, tol=1e-8)
        mrpc = run_mrpc(spec, costs, w, w, tol=1e-9)
        denom = max(opt.total_cost, 1.0)
        rel = abs(mrpc.total_cost - opt.total_cost) / denom
        slack = 10.0 * (mrpc.solver_gap + opt.solver_gap) / denom
        worst = max(worst, rel - slack)
        assert rel <= 1e-5 + slack, f"instance {i}: relative gap {rel:.3e}"
    print(f"equality regime: 25/25 within 1e-5, worst slack-adjusted gap {worst:.3e}")


def test_horizon_averaging_bound_on_strongly_convex_instances():
    combos = list(itertools.product((0.5, 1.0, 2.0), (0.5, 1.0), (1, 2, 4)))
    worst_margin = np.inf
    for i in range(50):
        m, c0, look = combos[i % len(combos)]
        rng = np.random.default_rng([ACC_SEED, 200, i])
        n = int(rng.integers(1, 4))
        T = int(rng.integers(16, 33))
        spec = random_system([ACC_SEED, 201, i], n=n, T=T, k=2)
        costs = CostSpec(
            cx=QuadFloor(m=m, c0=c0, theta=rng.normal(scale=2.0, size=(T, n))),
            cf=NormCost(2.0, float(rng.uniform(0.5, 1.8))),
            cs=NormCost(1.0, 1.0),
        )
        w = generate_noise(NOISE_CYCLE[i % len(NOISE_CYCLE)], spec, [ACC_SEED, 202, i])
        problem, _ = soco_reduce(spec, costs, w)
        opt = soco_offline_opt(problem, tol=1e-8)
        afhc = run_afhc(problem, look, tol=1e-8)
        rep = thm1_report(problem, look, afhc, opt)
        assert rep.holds, (
            f"instance {i} (m={m}, c0={c0}, lookahead={look}): "
            f"{rep.lhs:.6f} > {rep.rhs:.6f} + {rep.slack:.2e}"
        )
        worst_margin = min(worst_margin, rep.rhs + rep.slack - rep.lhs)
        # averaging step: the mixed trajectory cannot cost more than the
        # average of the per-phase trajectories (convexity, measured exactly)
        phase_mean = float(np.mean(afhc.extras["phase_costs"]))
        assert afhc.total_cost <= phase_mean + 1e-9 * (1.0 + phase_mean)
    print(f"horizon-averaging bound: 50/50 hold, tightest margin {worst_margin:.3e}")


def test_window_lower_bound_never_exceeds_clairvoyant(corpus):
    instances, _ = corpus
    worst = -np.inf
    for inst in instances:
        opt = inst["opt"]
        excess = inst["lb"] - (opt.total_cost + 10.0 * opt.solver_gap)
        worst = max(worst, excess)
        assert excess <= 0.0, f"instance {inst['i']}: lower bound exceeds optimum by {excess:.3e}"
    print(f"window lower bound: {len(instances)}/{len(instances)} below optimum, max excess {worst:.3e}")


def test_splitting_inequality_on_sampled_instances():
    ps = (1.0, 2.0, np.inf)
    rng = np.random.default_rng([ACC_SEED, 400])
    failures = []
    for i in range(500):
        n = int(rng.integers(1, 4))
        M = np.eye(n) + 0.4 * rng.normal(size=(n, n))
        if abs(np.linalg.det(M)) < 1e-3:
            M += 0.6 * np.eye(n)
        v = 2.5 * rng.normal(size=n)
        alpha = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
        beta = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
        p_a, p_b = rng.choice(ps, size=2)
        rep = lemma1_check(alpha, beta, M, v, float(p_a), float(p_b), tol=1e-9)
        if not rep.holds:
            failures.append((i, rep.lhs, rep.rhs))
    print(f"splitting inequality: {500 - len(failures)}/500 hold")
    assert not failures, f"violations: {failures[:5]}"


def test_single_timescale_reduction_equals_clairvoyant():
    ps = (1.0, 2.0, np.inf)
    worst_rel = 0.0
    worst_round = 0.0
    for i in range(25):
        rng = np.random.default_rng([ACC_SEED, 300, i])
        n = int(rng.integers(1, 4))
        T = int(rng.integers(12, 25))
        base = random_system([ACC_SEED, 301, i], n=n, T=T, k=1)
        # shared actuation and identical action costs make the two channels
        # redundant: the split problem collapses to the fast-only one
        spec = SystemSpec(A=base.A, Bf=base.Bf, Bs=base.Bf, T=T, k=1)
        pf = float(rng.choice(ps))
        wf = float(np.exp(rng.uniform(np.log(0.5), np.log(1.8))))
        costs = CostSpec(
            cx=NormCost(float(rng.choice(ps)), float(rng.uniform(0.4, 1.6))),
            cf=NormCost(pf, wf),
            cs=NormCost(pf, wf),
        )
        w = generate_noise(NOISE_CYCLE[i % len(NOISE_CYCLE)], spec, [ACC_SEED, 302, i])
        opt = run_offline_opt(spec, costs, w, tol=1e-8)
        problem, _ = soco_reduce(spec, costs, w)
        sopt = soco_offline_opt(problem, tol=1e-8)
        denom = max(sopt.total_cost, 1.0)
        rel = abs(opt.total_cost - sopt.total_cost) / denom
        worst_rel = max(worst_rel, rel)
        assert rel <= 1e-6 + 10.0 * (opt.solver_gap + sopt.solver_gap) / denom, (
            f"instance {i}: reduced optimum off by {rel:.3e} relative"
        )
        for j in range(4):  # 100 transform round trips across the suite
            f = np.random.default_rng([ACC_SEED, 303, i, j]).normal(size=(T, n))
            _, y = soco_reduce(spec, costs, w, f)
            err = float(np.abs(soco_lift(problem, y) - f).max())
            worst_round = max(worst_round, err)
            assert err <= 1e-10
    print(
        f"single-timescale reduction: 25/25 equal (worst {worst_rel:.3e} rel), "
        f"100/100 round trips exact (worst {worst_round:.3e})"
    )


def test_window_subproblems_match_scalar_oracle(corpus):
    instances, _ = corpus
    checked = 0
    worst = 0.0
    for inst in instances:
        spec, costs, what = inst["spec"], inst["costs"], inst["what"]
        if spec.n != 1:
            continue
        for r, ln in zip(spec.window_starts(), spec.window_lengths()):
            prog = mrpc_slow_program(spec, costs, what[r - 1 : r - 1 + ln], int(ln))
            rep = solve(prog, tol=1e-9)
            lo, hi = kink_bracket(prog)
            _, val = solve_1d_oracle(prog, lo, hi)
            diff = abs(rep.objective - val)
            worst = max(worst, diff)
            checked += 1
            assert diff <= 1e-6, f"window at t={r} of instance {inst['i']}: off by {diff:.3e}"
    assert checked > 100  # the corpus must actually contain scalar instances
    print(f"scalar oracle agreement: {checked} window subproblems, worst gap {worst:.3e}")


def test_validation_and_scenario_runs_are_deterministic(tmp_path):
    a = run_validation(quick=True)
    b = run_validation(quick=True)
    assert [(r.name, r.cases, r.failures) for r in a] == [
        (r.name, r.cases, r.failures) for r in b
    ]
    assert all(r.ok for r in a)

    raw = {
        "scenario": "acceptance",
        "seeds": [0, 1, 2],
        "system": {"A": [[0.6, 0.2], [0.0, 0.5]], "Bf": [[1.0, 0.0], [0.1, 1.0]],
                   "Bs": [[1.0, 0.0], [0.0, 1.0]], "T": 24, "k": 5},
        "costs": {
            "cx": {"kind": "norm", "p": 2, "weight": 1.2},
            "cf": {"kind": "norm", "p": 2},
            "cs": {"kind": "norm", "p": 1, "weight": 0.5},
        },
        "noise": {"kind": "sinusoid_plus_noise", "amplitude": 1.5, "period": 8.0, "sigma": 0.4},
        "predictions": {"kind": "additive_bounded", "eps": 0.3},
        "controllers": [{"type": "offline_opt"}, {"type": "mrpc"}, {"type": "zero_slow"}],
    }
    cfg = parse_scenario(raw)
    p1, p2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    run_scenario(cfg, str(p1), tol=1e-8)
    run_scenario(cfg, str(p2), tol=1e-8)
    assert p1.read_bytes() == p2.read_bytes()
    print("determinism: validation results and scenario CSVs identical across reruns")


def test_blind_predictions_degrade_with_noise_magnitude():
    r1, s1 = hardness_ratio(1.0, tol=1e-9)
    r10, s10 = hardness_ratio(10.0, tol=1e-9)
    print(f"degradation demo: ratio {r1:.4f} at magnitude 1 -> {r10:.4f} at magnitude 10")
    assert r10 > r1 + s1 + s10
    assert r10 > r1  # strict growth, stated separately for the record
