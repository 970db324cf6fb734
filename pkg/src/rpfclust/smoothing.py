"""Roughness-penalized B-spline smoothing of discretized curves.

Curves observed on a shared grid are represented by the coefficients of a
B-spline expansion fitted by penalized least squares, the penalty being the
integrated squared second derivative. The pair (number of basis functions,
penalty weight) is chosen by generalized cross-validation (GCV) with one pair
shared by every curve of a dataset.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.interpolate import BSpline

from .errors import (
    DegenerateDFError,
    DomainError,
    InvalidSpecError,
    RankDeficiencyError,
    SelectionError,
    ShapeError,
    UnsupportedPenaltyError,
)

log = logging.getLogger(__name__)

_FALLBACK_LAMBDA = 1e-10


class NonEquispacedGridWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise InvalidSpecError("a time grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise InvalidSpecError("time grid contains non-finite values")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise InvalidSpecError("time grid must be strictly increasing")
        if not np.allclose(steps, steps.mean(), rtol=1e-6, atol=0):
            warnings.warn("time grid is not equispaced", NonEquispacedGridWarning, stacklevel=3)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    @property
    def span(self):
        return float(self.points[0]), float(self.points[-1])

    @classmethod
    def linspace(cls, start, stop, n):
        return cls(np.linspace(start, stop, n))


@dataclass(frozen=True)
class CurveSet:
    """N curves (rows of ``Y``) observed on a shared ``grid``."""

    Y: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if Y.shape[1] != len(self.grid):
            raise ShapeError(f"curves have {Y.shape[1]} columns but the grid has {len(self.grid)} points")
        if not np.all(np.isfinite(Y)):
            raise InvalidSpecError("curves contain missing or non-finite values")
        object.__setattr__(self, "Y", Y)

    @property
    def N(self):
        return self.Y.shape[0]

    @property
    def n(self):
        return self.Y.shape[1]


@dataclass(frozen=True)
class BasisSpec:
    """B-spline basis: ``K`` functions of the given ``order`` and penalty ``lam``.

    ``knots`` are the interior knots. Leave them as ``None`` to place
    ``K - order`` equally spaced interior knots over the grid span.
    """

    K: int
    order: int = 4
    lam: float = 0.0
    knots: np.ndarray | None = None

    def __post_init__(self):
        if self.order < 1:
            raise InvalidSpecError("spline order must be positive")
        if self.K < self.order:
            raise InvalidSpecError(f"K={self.K} is smaller than the spline order {self.order}")
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise InvalidSpecError("penalty weight must be finite and non-negative")
        if self.knots is not None:
            kn = np.asarray(self.knots, dtype=float).ravel()
            if kn.size != self.K - self.order:
                raise InvalidSpecError(f"expected {self.K - self.order} interior knots, got {kn.size}")
            if np.any(np.diff(kn) < 0):
                raise InvalidSpecError("interior knots must be non-decreasing")
            object.__setattr__(self, "knots", kn)

    def with_lambda(self, lam):
        return BasisSpec(self.K, self.order, lam, self.knots)

    def knot_vector(self, grid: TimeGrid) -> np.ndarray:
        lo, hi = grid.span
        if self.knots is None:
            interior = np.linspace(lo, hi, self.K - self.order + 2)[1:-1]
        else:
            interior = self.knots
            if interior.size and (interior[0] < lo or interior[-1] > hi):
                raise InvalidSpecError("interior knots must lie inside the grid span")
        return np.concatenate([np.full(self.order, lo), interior, np.full(self.order, hi)])


@dataclass
class CoefficientMatrix:
    C: np.ndarray
    spec: BasisSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if not np.all(np.isfinite(self.C)):
            raise InvalidSpecError("coefficient matrix has non-finite entries")

    @property
    def shape(self):
        return self.C.shape


def _as_points(grid):
    return grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)


def bspline_design(grid: TimeGrid, spec: BasisSpec) -> np.ndarray:
    """Evaluate the ``K`` basis functions at the grid points (n x K)."""
    x = _as_points(grid)
    t = spec.knot_vector(grid if isinstance(grid, TimeGrid) else TimeGrid(x))
    if x.min() < t[0] or x.max() > t[-1]:
        raise DomainError("grid points lie outside the knot span")
    return BSpline.design_matrix(x, t, spec.order - 1).toarray()


def roughness_matrix(spec: BasisSpec, grid: TimeGrid) -> np.ndarray:
    """Gram matrix of basis second derivatives, integrated exactly.

    On each knot interval the integrand is a polynomial of degree
    ``2 * (order - 3)``, so ``order - 2`` Gauss-Legendre nodes are exact.
    """
    if spec.order < 3:
        raise UnsupportedPenaltyError("a second-derivative penalty needs spline order >= 3")
    t = spec.knot_vector(grid)
    breaks = np.unique(t)
    nodes, weights = np.polynomial.legendre.leggauss(max(spec.order - 2, 1))
    half = np.diff(breaks) / 2
    mid = (breaks[:-1] + breaks[1:]) / 2
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    d2 = BSpline(t, np.eye(spec.K), spec.order - 1).derivative(2)(x)
    R = (d2 * w[:, None]).T @ d2
    return (R + R.T) / 2


def _factor(Phi, R, lam):
    n, K = Phi.shape
    A = Phi.T @ Phi + lam * R
    if lam == 0 and K > n:
        raise RankDeficiencyError(f"K={K} exceeds n={n}: normal equations are singular at lambda=0; use lambda > 0")
    try:
        return linalg.cho_factor(A, lower=True), lam
    except linalg.LinAlgError:
        if lam != 0:
            raise RankDeficiencyError(f"normal equations are singular at lambda={lam}") from None
    warnings.warn(f"normal equations singular at lambda=0, retrying with lambda={_FALLBACK_LAMBDA}", RuntimeWarning, stacklevel=3)
    try:
        return linalg.cho_factor(Phi.T @ Phi + _FALLBACK_LAMBDA * R, lower=True), _FALLBACK_LAMBDA
    except linalg.LinAlgError:
        raise RankDeficiencyError("normal equations are singular; use lambda > 0") from None


def penalized_fit(y, Phi, R, lam):
    """Minimize ``||y - Phi c||^2 + lam * c' R c``.

    ``y`` may be a single curve (n,) or a stack of curves (n, m); the
    coefficients come back with the matching shape.
    """
    factor, _ = _factor(Phi, R, lam)
    return linalg.cho_solve(factor, Phi.T @ np.asarray(y, dtype=float))


def hat_trace(Phi, R, lam):
    """Effective degrees of freedom ``tr(Phi (Phi'Phi + lam R)^-1 Phi')``."""
    factor, _ = _factor(Phi, R, lam)
    return float(np.trace(linalg.cho_solve(factor, Phi.T @ Phi)))


def _gcv_parts(Y, Phi, R, lam):
    factor, _ = _factor(Phi, R, lam)
    G = Phi.T @ Phi
    df = float(np.trace(linalg.cho_solve(factor, G)))
    coef = linalg.cho_solve(factor, Phi.T @ Y.T)
    resid = Y - (Phi @ coef).T
    return df, np.einsum("ij,ij->i", resid, resid)


def gcv_score(Y, Phi, R, lam) -> float:
    """Mean over curves of ``n * SSE_i / (n - df)^2``.

    When the fit interpolates (df equal to n, every residual zero) the score
    is reported as 0; any other fit with df >= n is degenerate.
    """
    Yv = Y.Y if isinstance(Y, CurveSet) else np.atleast_2d(np.asarray(Y, dtype=float))
    n = Yv.shape[1]
    df, sse = _gcv_parts(Yv, Phi, R, lam)
    if n - df <= 1e-8 * n:
        scale = max(float(np.sum(Yv**2)), 1.0)
        if np.all(sse <= 1e-18 * scale):
            return 0.0
        raise DegenerateDFError(f"effective degrees of freedom {df:.6g} reach n={n}")
    return float(np.mean(n * sse / (n - df) ** 2))


def select_smoothing(curves: CurveSet, K_candidates, lam_candidates, order=4):
    """Grid search of (K, lambda) by GCV.

    Pairs whose fit is degenerate (df >= n, singular system) are skipped.
    Ties go to the smaller K, then the larger lambda.

    Returns
    -------
    (K, lam, score)
    """
    Ks = sorted(set(int(k) for k in K_candidates))
    lams = sorted(set(float(v) for v in lam_candidates), reverse=True)
    if not Ks or not lams:
        raise SelectionError("candidate grids must be non-empty")
    n = curves.n
    best = None
    for K in Ks:
        try:
            base = BasisSpec(K, order)
            Phi = bspline_design(curves.grid, base)
            R = roughness_matrix(base, curves.grid)
        except (InvalidSpecError, DomainError):
            continue
        for lam in lams:
            try:
                df, sse = _gcv_parts(curves.Y, Phi, R, lam)
            except RankDeficiencyError:
                continue
            if n - df <= 1e-8 * n:
                continue
            score = float(np.mean(n * sse / (n - df) ** 2))
            log.debug("GCV K=%d lambda=%g df=%.3f score=%.6g", K, lam, df, score)
            if np.isfinite(score) and (best is None or score < best[2]):
                best = (K, lam, score)
    if best is None:
        raise SelectionError("every (K, lambda) pair was degenerate")
    return best


def smooth_dataset(curves: CurveSet, spec: BasisSpec) -> CoefficientMatrix:
    """Fit every curve with the same basis, penalty matrix and lambda."""
    Phi = bspline_design(curves.grid, spec)
    R = roughness_matrix(spec, curves.grid) if spec.order >= 3 else np.zeros((spec.K, spec.K))
    coef = penalized_fit(curves.Y.T, Phi, R, spec.lam)
    return CoefficientMatrix(coef.T, spec)
