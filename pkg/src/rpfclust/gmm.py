"""Gaussian mixtures fitted by EM, with BIC selection of G and covariance model.

Six covariance parameterizations are supported, named by the
volume/shape/orientation convention (E = equal across components,
V = varying, I = identity):

======  =====================  ====================
model   covariance             free cov. parameters
======  =====================  ====================
EII     lambda I               1
VII     lambda_g I             G
EEI     diagonal, shared       d
VVI     diagonal, per group    G d
EEE     full, shared           d (d + 1) / 2
VVV     full, per group        G d (d + 1) / 2
======  =====================  ====================

All M-steps are closed form. The EM loop itself runs in a numba kernel since
the ensemble fits tens of thousands of small mixtures per dataset.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._seeding import derive
from .errors import FitDegenerateError, InfeasibleError, NumericError, ProjectionUnfitError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
DEFAULT_RESTARTS = 3
EIG_FLOOR = 1e-10
REG_EPS = 1e-8


class CovarianceModel(str, enum.Enum):
    EII = "EII"
    VII = "VII"
    EEI = "EEI"
    VVI = "VVI"
    EEE = "EEE"
    VVV = "VVV"

    @property
    def code(self):
        return _MODEL_ORDER.index(self)

    @classmethod
    def parse(cls, value):
        return value if isinstance(value, cls) else cls(str(value).upper())


_MODEL_ORDER = list(CovarianceModel)
ALL_MODELS = tuple(_MODEL_ORDER)


def n_cov_params(model, G, d):
    model = CovarianceModel.parse(model)
    return {
        CovarianceModel.EII: 1,
        CovarianceModel.VII: G,
        CovarianceModel.EEI: d,
        CovarianceModel.VVI: G * d,
        CovarianceModel.EEE: d * (d + 1) // 2,
        CovarianceModel.VVV: G * d * (d + 1) // 2,
    }[model]


def n_params(model, G, d):
    """Free parameters: mixing weights, means and covariances."""
    return (G - 1) + G * d + n_cov_params(model, G, d)


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray


@dataclass
class MixtureFit:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    Z: np.ndarray
    loglik: float
    model: CovarianceModel
    n_iter: int
    converged: bool
    trace: np.ndarray = field(repr=False, default=None)
    bic: float = float("nan")

    @property
    def G(self):
        return self.weights.size

    @property
    def d(self):
        return self.means.shape[1]

    @property
    def N(self):
        return self.Z.shape[0]

    @property
    def components(self):
        return [GaussianComponent(float(w), m, S) for w, m, S in zip(self.weights, self.means, self.covariances)]

    def labels(self):
        return np.argmax(self.Z, axis=1) + 1

    def summary(self):
        return {"G": self.G, "model": self.model.value, "bic": self.bic, "loglik": self.loglik,
                "n_iter": self.n_iter, "converged": self.converged}


def bic(fit: MixtureFit, N=None) -> float:
    """``2 loglik - nu ln N``; larger is better."""
    N = fit.N if N is None else N
    return 2.0 * fit.loglik - n_params(fit.model, fit.G, fit.d) * math.log(N)


# --------------------------------------------------------------------------
# numba kernel

_OK, _CONVERGED, _DEGENERATE, _NUMERIC = 0, 1, 2, 3
_LOG2PI = math.log(2.0 * math.pi)


@njit(cache=True, nogil=True)
def _cholesky(A, L):
    d = A.shape[0]
    for j in range(d):
        s = A[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return False
        ljj = math.sqrt(s)
        L[j, j] = ljj
        for i in range(j + 1, d):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / ljj
        for i in range(j):
            L[i, j] = 0.0
    return True


@njit(cache=True, nogil=True)
def _em_kernel(X, Z, model, tol, max_iter, min_count, trace, weights, means, covs):
    N, d = X.shape
    G = Z.shape[1]
    full = model >= 4
    chol = np.zeros((G, d, d))
    logdet = np.zeros(G)
    scat = np.zeros((G, d, d))
    logp = np.zeros(G)
    y = np.zeros(d)
    diff = np.zeros(d)
    nk = np.zeros(G)
    shifted = np.zeros((d, d))
    const = np.zeros(G)
    pooled = np.zeros((d, d))
    ll = -np.inf
    prev = -np.inf
    n_iter = 0
    status = _OK
    regularized = False
    for it in range(max_iter):
        # M-step
        for g in range(G):
            s = 0.0
            for i in range(N):
                s += Z[i, g]
            nk[g] = s
            if s < min_count:
                return _DEGENERATE, n_iter, ll, regularized
            weights[g] = s / N
            for j in range(d):
                acc = 0.0
                for i in range(N):
                    acc += Z[i, g] * X[i, j]
                means[g, j] = acc / s
        scat[:] = 0.0
        for g in range(G):
            for i in range(N):
                z = Z[i, g]
                for j in range(d):
                    diff[j] = X[i, j] - means[g, j]
                if full:
                    for j in range(d):
                        zj = z * diff[j]
                        for k in range(j + 1):
                            scat[g, j, k] += zj * diff[k]
                else:
                    for j in range(d):
                        scat[g, j, j] += z * diff[j] * diff[j]
            if full:
                for j in range(d):
                    for k in range(j):
                        scat[g, k, j] = scat[g, j, k]
        covs[:] = 0.0
        if model == 0 or model == 2 or model == 4:
            pooled[:] = 0.0
            for g in range(G):
                pooled += scat[g]
            if model == 0:
                tr = 0.0
                for j in range(d):
                    tr += pooled[j, j]
                for g in range(G):
                    for j in range(d):
                        covs[g, j, j] = tr / (N * d)
            elif model == 2:
                for g in range(G):
                    for j in range(d):
                        covs[g, j, j] = pooled[j, j] / N
            else:
                for g in range(G):
                    covs[g] = pooled / N
        else:
            for g in range(G):
                if model == 1:
                    tr = 0.0
                    for j in range(d):
                        tr += scat[g, j, j]
                    for j in range(d):
                        covs[g, j, j] = tr / (nk[g] * d)
                elif model == 3:
                    for j in range(d):
                        covs[g, j, j] = scat[g, j, j] / nk[g]
                else:
                    covs[g] = scat[g] / nk[g]
        regularized = False
        for g in range(G):
            if full:
                # Cholesky of S - floor*I exists iff the smallest eigenvalue exceeds the floor
                for j in range(d):
                    for k in range(d):
                        shifted[j, k] = covs[g, j, k]
                    shifted[j, j] -= EIG_FLOOR
                small = not _cholesky(shifted, chol[g])
            else:
                small = False
                for j in range(d):
                    if covs[g, j, j] < EIG_FLOOR:
                        small = True
            if small:
                regularized = True
                tr = 0.0
                for j in range(d):
                    tr += covs[g, j, j]
                if not tr > 0.0:
                    # all mass on a single point
                    return _DEGENERATE, n_iter, ll, regularized
                for j in range(d):
                    covs[g, j, j] += REG_EPS * tr / d
            if not _cholesky(covs[g], chol[g]):
                return _NUMERIC, n_iter, ll, regularized
            s = 0.0
            for j in range(d):
                s += math.log(chol[g, j, j])
            logdet[g] = 2.0 * s
        # E-step
        for g in range(G):
            const[g] = math.log(weights[g]) - 0.5 * (d * _LOG2PI + logdet[g])
        ll = 0.0
        for i in range(N):
            mx = -np.inf
            for g in range(G):
                L = chol[g]
                maha = 0.0
                for j in range(d):
                    s = X[i, j] - means[g, j]
                    for k in range(j):
                        s -= L[j, k] * y[k]
                    y[j] = s / L[j, j]
                    maha += y[j] * y[j]
                lp = const[g] - 0.5 * maha
                logp[g] = lp
                if lp > mx:
                    mx = lp
            tot = 0.0
            for g in range(G):
                e = math.exp(logp[g] - mx)
                logp[g] = e
                tot += e
            ll += mx + math.log(tot)
            for g in range(G):
                Z[i, g] = logp[g] / tot
        if not math.isfinite(ll):
            return _NUMERIC, n_iter, ll, regularized
        trace[it] = ll
        n_iter = it + 1
        if it > 0 and abs(ll - prev) < tol * abs(ll):
            status = _CONVERGED
            break
        prev = ll
    return status, n_iter, ll, regularized


# --------------------------------------------------------------------------


INIT_METHODS = ("kmeans++", "random")


def init_assignment(X, G, seed, method="kmeans++") -> np.ndarray:
    """One-hot initial responsibilities.

    ``kmeans++``: k-means++ seeding plus one nearest-centre pass.
    ``random``: uniform random labels. Clusters that share a centre and
    differ only in shape (a line inside a plane) are invisible to any
    centre-based start, so ``fit_best`` mixes both kinds.
    """
    X = np.asarray(getattr(X, "X", X), dtype=float)
    N = X.shape[0]
    if G > N:
        raise InfeasibleError(f"cannot initialise {G} components from {N} points")
    if method not in INIT_METHODS:
        raise ValueError(f"unknown init method {method!r}")
    Z = np.zeros((N, G))
    if G == 1:
        Z[:, 0] = 1.0
        return Z
    rng = np.random.default_rng(seed)
    if method == "random":
        Z[np.arange(N), rng.integers(G, size=N)] = 1.0
        return Z
    centers = [int(rng.integers(N))]
    d2 = np.sum((X - X[centers[0]]) ** 2, axis=1)
    for _ in range(1, G):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(N, p=d2 / total))
        else:
            idx = int(rng.integers(N))
        centers.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    C = X[centers]
    dist = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    Z[np.arange(N), np.argmin(dist, axis=1)] = 1.0
    return Z


def em_fit(X, G, model, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0) -> MixtureFit:
    """Run EM from the responsibilities ``init`` (k-means++ from ``seed`` if omitted).

    Raises
    ------
    FitDegenerateError
        A component weight fell below 1/(10N), or the final covariance
        estimate was singular and only survived through regularization.
    NumericError
        The log-likelihood became non-finite.
    """
    X = np.ascontiguousarray(getattr(X, "X", X), dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    N, d = X.shape
    model = CovarianceModel.parse(model)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if G >= N:
        raise InfeasibleError(f"need more points than components (N={N}, G={G})")
    Z = init_assignment(X, G, seed) if init is None else np.array(init, dtype=float)
    if Z.shape != (N, G):
        raise ValueError(f"initial responsibilities have shape {Z.shape}, expected {(N, G)}")
    Z = np.ascontiguousarray(Z)
    trace = np.full(max_iter, np.nan)
    weights = np.empty(G)
    means = np.empty((G, d))
    covs = np.empty((G, d, d))
    status, n_iter, ll, regularized = _em_kernel(
        X, Z, model.code, float(tol), int(max_iter), 1.0 / 10.0, trace, weights, means, covs
    )
    if status == _DEGENERATE:
        raise FitDegenerateError(f"component collapsed ({model.value}, G={G})")
    if status == _NUMERIC:
        raise NumericError(f"non-finite likelihood ({model.value}, G={G})")
    if regularized:
        raise FitDegenerateError(f"singular covariance at convergence ({model.value}, G={G})")
    fit = MixtureFit(weights, means, covs, Z, float(ll), model, int(n_iter), status == _CONVERGED, trace[:n_iter].copy())
    fit.bic = bic(fit, N)
    return fit


def fit_best(X, G_range, models=ALL_MODELS, seed=0, restarts=DEFAULT_RESTARTS, *, seed_path=(),
             tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> MixtureFit:
    """Best-BIC mixture over ``G_range`` x ``models``.

    Each (G, model) keeps the highest-likelihood run among ``restarts``
    starts seeded by ``derive(seed, *seed_path, G, model, restart)``: the
    first start is k-means++, the others are random partitions.
    Degenerate combinations are skipped; if all are, ProjectionUnfitError.
    Ties in BIC keep the earlier candidate (smaller G, then model order).
    """
    X = np.ascontiguousarray(getattr(X, "X", X), dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    G_range = list(G_range)
    models = [CovarianceModel.parse(m) for m in models]
    if not G_range or not models:
        raise ValueError("G_range and models must be non-empty")
    best = None
    failures = 0
    for G in G_range:
        for model in models:
            cand = None
            for r in range(restarts):
                s = derive(seed, *seed_path, G, model.code, r)
                try:
                    init = init_assignment(X, G, s, "kmeans++" if r == 0 else "random")
                    fit = em_fit(X, G, model, init, tol, max_iter)
                except (FitDegenerateError, NumericError, InfeasibleError):
                    continue
                if cand is None or fit.loglik > cand.loglik:
                    cand = fit
            if cand is None:
                failures += 1
                continue
            if best is None or cand.bic > best.bic:
                best = cand
    if best is None:
        raise ProjectionUnfitError(f"all {failures} (G, model) combinations were degenerate")
    return best
