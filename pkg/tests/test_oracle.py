import numpy as np
import pytest

from tscontrol.oracle import kink_bracket, solve_1d_oracle
from tscontrol.program import AffineNormProgram, NormTerm, QuadTerm
from tscontrol.solver import solve


def test_oracle_rejects_higher_dim():
    prog = AffineNormProgram(
        2, [NormTerm(weight=1.0, p=1, G=np.eye(2), h=np.zeros(2))]
    )
    with pytest.raises(ValueError):
        solve_1d_oracle(prog, -1.0, 1.0)


def test_oracle_rejects_bad_bracket():
    prog = AffineNormProgram(
        1, [NormTerm(weight=1.0, p=1, G=np.eye(1), h=np.zeros(1))]
    )
    with pytest.raises(ValueError):
        solve_1d_oracle(prog, 1.0, 1.0)


def test_oracle_weighted_median():
    # min 2|z-1| + |z-5| + |z+3|: slopes -4 | 0 | .. kink structure puts
    # the minimizer at z = 1 with value 0 + 4 + 4 = 8
    prog = AffineNormProgram(
        1,
        [
            NormTerm(weight=2.0, p=1, G=np.eye(1), h=np.array([-1.0])),
            NormTerm(weight=1.0, p=1, G=np.eye(1), h=np.array([-5.0])),
            NormTerm(weight=1.0, p=1, G=np.eye(1), h=np.array([3.0])),
        ],
    )
    z, val = solve_1d_oracle(prog, -10.0, 10.0)
    assert abs(z - 1.0) < 1e-8
    assert val == pytest.approx(8.0, abs=1e-9)


def test_oracle_quadratic_exact():
    prog = AffineNormProgram(
        1, [QuadTerm(m=3.0, G=np.eye(1), h=np.array([-2.0]), c0=0.7)]
    )
    z, val = solve_1d_oracle(prog, -5.0, 5.0)
    assert abs(z - 2.0) < 1e-8
    assert val == pytest.approx(0.7, abs=1e-12)


def test_kink_bracket_covers_minimizer():
    prog = AffineNormProgram(
        1,
        [
            NormTerm(weight=1.0, p=1, G=np.array([[2.0]]), h=np.array([-6.0])),
            NormTerm(weight=3.0, p=1, G=np.eye(1), h=np.array([4.0])),
        ],
    )
    lo, hi = kink_bracket(prog)
    assert lo < -4.0 < hi and lo < 3.0 < hi  # kinks at -h/g


def test_oracle_agrees_with_solver():
    rng = np.random.default_rng(5)
    for _ in range(8):
        terms = []
        for _ in range(int(rng.integers(2, 5))):
            g = float(rng.uniform(0.5, 2.0)) * (1.0 if rng.random() < 0.5 else -1.0)
            terms.append(
                NormTerm(
                    weight=float(rng.uniform(0.4, 2.5)),
                    p=float(rng.choice([1.0, 2.0, np.inf])),
                    G=np.array([[g]]),
                    h=rng.normal(size=1) * 3.0,
                )
            )
        if rng.random() < 0.5:
            terms.append(
                QuadTerm(
                    m=float(rng.uniform(0.5, 2.0)),
                    G=np.eye(1),
                    h=rng.normal(size=1),
                    c0=float(rng.uniform(0.0, 1.0)),
                )
            )
        prog = AffineNormProgram(1, terms)
        lo, hi = kink_bracket(prog)
        z_o, v_o = solve_1d_oracle(prog, lo, hi)
        rep = solve(prog, tol=1e-9)
        assert rep.objective == pytest.approx(v_o, abs=1e-7 * (1.0 + abs(v_o)))
        assert rep.lower_bound <= v_o + 1e-9 * (1.0 + abs(v_o))
