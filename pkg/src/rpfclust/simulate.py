"""Synthetic functional datasets with known cluster labels.

Scenario 1 (G=2, t in [1, 21]):
    x1 = U1 h1 + U2 h2,  x2 = U1 h1,  h1/h2 triangles centred at 7 and 15.
Scenario 2 (G=3, t in [1, 21]):
    convex mixtures U h_a + (1 - U) h_b of triangles centred at 11, 15, 7.
Scenario 3 (G=4, t in [-1, 1]):
    cos(20t), sin(20t), their sum and their difference.

Observations add i.i.d. N(0, sigma^2) noise at every grid point.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._seeding import rng_for
from .errors import InvalidSpecError
from .smoothing import CurveSet, TimeGrid

# (G, n, N, t_range, noise variance, K, lambda)
SCENARIO_DEFAULTS = {
    1: dict(G=2, n=1001, N=100, t_range=(1.0, 21.0), noise_variance=1 / 12, K=100, lam=1.0),
    2: dict(G=3, n=1001, N=150, t_range=(1.0, 21.0), noise_variance=1.0, K=200, lam=10.0),
    3: dict(G=4, n=101, N=101, t_range=(-1.0, 1.0), noise_variance=1 / 25, K=101, lam=1e-4),
}

U_LAWS = ("gaussian", "uniform")


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    N: int
    n: int
    t_range: tuple
    noise_variance: float
    seed: int = 0
    u_law: str = "gaussian"

    def __post_init__(self):
        if self.id not in SCENARIO_DEFAULTS:
            raise InvalidSpecError(f"unknown scenario id {self.id!r}; expected 1, 2 or 3")
        if self.N < 1 or self.n < 2:
            raise InvalidSpecError("need N >= 1 curves and n >= 2 grid points")
        if self.t_range[1] <= self.t_range[0]:
            raise InvalidSpecError("t_range must be increasing")
        if self.noise_variance < 0:
            raise InvalidSpecError("noise variance must be non-negative")
        if self.u_law not in U_LAWS:
            raise InvalidSpecError(f"u_law must be one of {U_LAWS}")

    @classmethod
    def default(cls, id, seed=0, **overrides):
        if id not in SCENARIO_DEFAULTS:
            raise InvalidSpecError(f"unknown scenario id {id!r}; expected 1, 2 or 3")
        p = SCENARIO_DEFAULTS[id]
        spec = cls(id, p["N"], p["n"], p["t_range"], p["noise_variance"], seed)
        return replace(spec, **overrides) if overrides else spec

    @property
    def G(self):
        return SCENARIO_DEFAULTS[self.id]["G"]

    @property
    def smoothing(self):
        """Basis size and penalty used with this scenario: (K, lambda)."""
        p = SCENARIO_DEFAULTS[self.id]
        return p["K"], p["lam"]


@dataclass(frozen=True)
class SimulatedDataset:
    curves: CurveSet
    labels: np.ndarray
    noiseless: np.ndarray
    spec: ScenarioSpec


def triangular_wave(t, center):
    return np.maximum(6.0 - np.abs(np.asarray(t, dtype=float) - center), 0.0)


def mean_curve(scenario, label, t, coeffs=()):
    """Noise-free curve of class ``label`` (1-based).

    ``coeffs`` are the per-curve random coefficients: (U1, U2) for scenario
    1, (U,) for scenario 2, nothing for scenario 3.
    """
    t = np.asarray(t, dtype=float)
    if scenario == 1:
        u1, u2 = coeffs
        out = u1 * triangular_wave(t, 7.0)
        return out + u2 * triangular_wave(t, 15.0) if label == 1 else out
    if scenario == 2:
        (u,) = coeffs
        h1 = triangular_wave(t, 11.0)
        h2 = triangular_wave(t - 4.0, 11.0)
        h3 = triangular_wave(t + 4.0, 11.0)
        a, b = {1: (h1, h2), 2: (h1, h3), 3: (h2, h3)}[label]
        return u * a + (1.0 - u) * b
    if scenario == 3:
        h1, h2 = np.cos(20.0 * t), np.sin(20.0 * t)
        return {1: h1, 2: h2, 3: h1 + h2, 4: h2 - h1}[label]
    raise InvalidSpecError(f"unknown scenario id {scenario!r}")


def _draw_coeffs(spec, rng):
    if spec.id == 1:
        if spec.u_law == "uniform":
            return rng.uniform(-0.5, 0.5, size=(spec.N, 2))
        return rng.normal(0.0, np.sqrt(1 / 12), size=(spec.N, 2))
    if spec.id == 2:
        return rng.uniform(0.0, 1.0, size=(spec.N, 1))
    return np.zeros((spec.N, 0))


def gen_scenario(spec: ScenarioSpec, replicate=None) -> SimulatedDataset:
    """Draw one dataset. With ``replicate`` set, use substream (seed, replicate)."""
    rng = rng_for(spec.seed) if replicate is None else rng_for(spec.seed, replicate)
    t = np.linspace(spec.t_range[0], spec.t_range[1], spec.n)
    labels = rng.integers(1, spec.G + 1, size=spec.N)
    coeffs = _draw_coeffs(spec, rng)
    clean = np.vstack([mean_curve(spec.id, int(lab), t, c) for lab, c in zip(labels, coeffs)])
    noise = rng.normal(0.0, np.sqrt(spec.noise_variance), size=clean.shape)
    return SimulatedDataset(CurveSet(clean + noise, TimeGrid(t)), labels, clean, spec)
