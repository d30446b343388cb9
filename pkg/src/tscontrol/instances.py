"""Deterministic random instances for validation and benchmarking.

Seeded generators keep matrices in a numerically sane regime: spectral
radius of A capped near one, Bf kept safely invertible, weights away from
zero. Noise and prediction models are cycled so a corpus of any size
exercises every kind.
"""

from __future__ import annotations

import numpy as np

from .noise import NoiseModel, PredictionModel
from .system import CostSpec, NormCost, QuadFloor, SystemSpec
from .norms import induced_norm

_PS = (1.0, 2.0, np.inf)

NOISE_CYCLE = (
    NoiseModel("gaussian_iid", {"sigma": 1.0}),
    NoiseModel("uniform_iid", {"radius": 1.5}),
    NoiseModel("sinusoid_plus_noise", {"amplitude": 2.0, "period": 9.0, "sigma": 0.3}),
    NoiseModel("spike_train", {"magnitude": 3.0, "spacing": 7}),
    NoiseModel("adversarial_alternating", {"magnitude": 1.2}),
)

PREDICTION_CYCLE = (
    PredictionModel("perfect"),
    PredictionModel("additive_gaussian", {"sigma": 0.3}),
    PredictionModel("additive_bounded", {"eps": 0.5}),
    PredictionModel("adversarial_worst_sign", {"eps": 0.4}),
)


def random_system(
    seed,
    n: int | None = None,
    T: int | None = None,
    k: int | None = None,
    rho_max: float = 1.05,
    bf_sigma_min: float = 0.35,
) -> SystemSpec:
    rng = np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(1, 5))
    if T is None:
        T = int(rng.integers(16, 61))
    if k is None:
        k = int(rng.choice([2, 3, 5, 10]))
    k = min(k, T)
    A = rng.normal(size=(n, n))
    radius = float(np.abs(np.linalg.eigvals(A)).max())
    if radius > 1e-9:
        A *= rng.uniform(0.3, rho_max) / radius
    Bf = rng.normal(size=(n, n))
    u, s, vt = np.linalg.svd(Bf)
    Bf = (u * np.maximum(s, bf_sigma_min)) @ vt
    Bs = rng.normal(size=(n, n))
    return SystemSpec(A=A, Bf=Bf, Bs=Bs, T=T, k=k)


def random_norm_costs(seed, n: int) -> CostSpec:
    rng = np.random.default_rng(seed)
    px, pf, ps = rng.choice(_PS, size=3)
    wx, wf, ws = np.exp(rng.uniform(np.log(0.3), np.log(2.2), size=3))
    return CostSpec(
        cx=NormCost(float(px), float(wx)),
        cf=NormCost(float(pf), float(wf)),
        cs=NormCost(float(ps), float(ws)),
    )


def random_quad_costs(seed, spec: SystemSpec) -> CostSpec:
    """Strongly convex state cost with per-step centers, norm action costs."""
    rng = np.random.default_rng(seed)
    theta = rng.normal(scale=2.0, size=(spec.T, spec.n))
    return CostSpec(
        cx=QuadFloor(
            m=float(rng.uniform(0.4, 2.0)),
            c0=float(rng.uniform(0.3, 1.2)),
            theta=theta,
        ),
        cf=NormCost(2.0, float(np.exp(rng.uniform(np.log(0.5), np.log(1.8))))),
        cs=NormCost(float(rng.choice(_PS)), 1.0),
    )


def equality_regime_costs(spec: SystemSpec, seed, margin: float = 1.05) -> CostSpec:
    """Norm costs in the regime where deviating from zero state never pays:
    cx dominates (1 + ||A||) * ||Bf^{-1}|| relative to cf."""
    rng = np.random.default_rng(seed)
    p = float(rng.choice(_PS))
    wf = float(np.exp(rng.uniform(np.log(0.4), np.log(1.6))))
    need = (1.0 + induced_norm(spec.A, p)) * induced_norm(spec.Bf_inv, p)
    return CostSpec(
        cx=NormCost(p, margin * need * wf),
        cf=NormCost(p, wf),
        cs=NormCost(float(rng.choice(_PS)), float(rng.uniform(0.3, 1.5))),
    )


def corpus_instance(i: int, seed0: int = 0, t_max: int = 60):
    """i-th instance of the standing validation corpus.

    Returns (spec, costs, noise_model, prediction_model) with norm costs;
    every noise/prediction kind appears every len(cycle) instances.
    """
    seed = [seed0, i]
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    T = int(rng.integers(16, t_max + 1))
    k = int(rng.choice([2, 3, 5, 10]))
    spec = random_system([seed0, i, 0], n=n, T=T, k=k)
    costs = random_norm_costs([seed0, i, 1], n)
    noise = NOISE_CYCLE[i % len(NOISE_CYCLE)]
    pred = PREDICTION_CYCLE[i % len(PREDICTION_CYCLE)]
    return spec, costs, noise, pred
