"""Noise traces and prediction traces.

All randomness flows through numpy's default_rng (PCG64) seeded explicitly,
so a (model, spec, seed) triple pins the trace bit-for-bit. Prediction
errors are measured in the fast-action cost norm, which is what the
prediction-sensitivity bound consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .system import NormCost, SystemSpec

RNG_ALGORITHM = "numpy.random.PCG64"

_NOISE_PARAMS = {
    "gaussian_iid": {"sigma"},
    "uniform_iid": {"radius"},
    "sinusoid_plus_noise": {"amplitude", "period", "sigma"},
    "spike_train": {"magnitude", "spacing"},
    "adversarial_alternating": {"magnitude"},
}

_PREDICTION_PARAMS = {
    "perfect": set(),
    "additive_gaussian": {"sigma"},
    "additive_bounded": {"eps"},
    "adversarial_worst_sign": {"eps"},
}


def _check_kind(kind, params, table, what):
    if kind not in table:
        raise ValueError(f"unknown {what} kind {kind!r}; expected one of {sorted(table)}")
    want = table[kind]
    got = set(params)
    if got != want:
        raise ValueError(f"{what} {kind!r} expects params {sorted(want)}, got {sorted(got)}")
    for k, v in params.items():
        if k == "spacing":
            if not (isinstance(v, int) and v >= 1):
                raise ValueError("spacing must be a positive integer")
        elif not (isinstance(v, (int, float)) and np.isfinite(v) and v >= 0):
            raise ValueError(f"param {k}={v!r} must be a nonnegative finite number")
    if kind == "sinusoid_plus_noise" and params["period"] <= 0:
        raise ValueError("period must be positive")


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_kind(self.kind, self.params, _NOISE_PARAMS, "noise model")


@dataclass(frozen=True)
class PredictionModel:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_kind(self.kind, self.params, _PREDICTION_PARAMS, "prediction model")


def generate_noise(model: NoiseModel, spec: SystemSpec, seed: int) -> np.ndarray:
    """Noise trace of shape (T, n) for the given seed."""
    T, n = spec.T, spec.n
    rng = np.random.default_rng(seed)
    p = model.params
    if model.kind == "gaussian_iid":
        return p["sigma"] * rng.standard_normal((T, n))
    if model.kind == "uniform_iid":
        return rng.uniform(-p["radius"], p["radius"], size=(T, n))
    if model.kind == "sinusoid_plus_noise":
        t = np.arange(1, T + 1)[:, None]
        phase = 2.0 * np.pi * np.arange(n)[None, :] / n
        drift = p["amplitude"] * np.sin(2.0 * np.pi * t / p["period"] + phase)
        return drift + p["sigma"] * rng.standard_normal((T, n))
    if model.kind == "spike_train":
        w = np.zeros((T, n))
        w[:: p["spacing"], 0] = p["magnitude"]
        return w
    if model.kind == "adversarial_alternating":
        w = np.zeros((T, n))
        w[:, 0] = p["magnitude"] * (-1.0) ** np.arange(T)
        return w
    raise AssertionError(f"unhandled kind {model.kind}")


def generate_predictions(
    model: PredictionModel,
    w: np.ndarray,
    cf: NormCost,
    seed: int,
) -> np.ndarray:
    """Prediction trace what of shape (T, n), perturbing w per the model.

    The additive_bounded and adversarial_worst_sign errors are sized in the
    cf norm so their per-step error is exactly controlled by eps.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if not isinstance(cf, NormCost):
        raise ValueError("predictions need a norm fast-action cost to size errors")
    rng = np.random.default_rng(seed)
    T, n = w.shape
    if model.kind == "perfect":
        return w.copy()
    if model.kind == "additive_gaussian":
        return w + model.params["sigma"] * rng.standard_normal((T, n))
    if model.kind == "additive_bounded":
        eps = model.params["eps"]
        g = rng.standard_normal((T, n))
        radii = eps * rng.uniform(0.0, 1.0, size=T)
        out = w.copy()
        for t in range(T):
            nrm = cf.value(g[t])
            if nrm > 0:
                out[t] += radii[t] * g[t] / nrm
        return out
    if model.kind == "adversarial_worst_sign":
        # push every coordinate further out along w's sign pattern; the mean
        # prediction error is then exactly eps
        eps = model.params["eps"]
        out = w.copy()
        for t in range(T):
            s = np.where(w[t] >= 0.0, 1.0, -1.0)
            out[t] += eps * s / cf.value(s)
        return out
    raise AssertionError(f"unhandled kind {model.kind}")


def prediction_error(w: np.ndarray, what: np.ndarray, cf: NormCost) -> float:
    """Mean per-step prediction error (1/T) sum_t cf(what_t - w_t)."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    what = np.atleast_2d(np.asarray(what, dtype=float))
    if w.shape != what.shape:
        raise ValueError(f"shape mismatch {w.shape} vs {what.shape}")
    if not isinstance(cf, NormCost):
        raise ValueError("prediction error is measured in a norm fast-action cost")
    return float(np.mean([cf.value(what[t] - w[t]) for t in range(w.shape[0])]))
