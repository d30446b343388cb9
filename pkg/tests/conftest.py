import numpy as np
import pytest

from tscontrol.system import CostSpec, NormCost, SystemSpec


@pytest.fixture
def scalar_spec():
    """n=1 plant with memory and unit actuation, handy for hand math."""
    return SystemSpec(
        A=np.array([[0.5]]),
        Bf=np.array([[1.0]]),
        Bs=np.array([[1.0]]),
        T=4,
        k=2,
    )


@pytest.fixture
def plain_costs():
    return CostSpec(cx=NormCost(1, 1.0), cf=NormCost(1, 1.0), cs=NormCost(1, 1.0))


def make_system(seed, n=None, T=None, k=None, rho=0.9, smin=0.4):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 4))
    T = T or int(rng.integers(8, 30))
    k = min(k or int(rng.choice([2, 3, 5])), T)
    A = rng.normal(size=(n, n))
    r = max(float(np.abs(np.linalg.eigvals(A)).max()), 1e-9)
    A *= rho / r
    Bf = rng.normal(size=(n, n))
    u, s, vt = np.linalg.svd(Bf)
    Bf = (u * np.maximum(s, smin)) @ vt
    Bs = rng.normal(size=(n, n))
    return SystemSpec(A=A, Bf=Bf, Bs=Bs, T=T, k=k)
