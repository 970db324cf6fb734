"""Separation criteria for fitted mixtures and selection of the best projections."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CriterionUndefinedError, NumericError, PipelineError, SingularityError
from .gmm import MixtureFit

PSD_CLAMP = 1e-8


class RankCriterion(str, enum.Enum):
    KL = "kl"
    WASSERSTEIN = "wasserstein"
    ENTROPY = "entropy"

    @classmethod
    def parse(cls, value):
        return value if isinstance(value, cls) else cls(str(value).lower())

    @property
    def descending(self):
        """KL and Wasserstein prefer large values, entropy prefers small ones."""
        return self is not RankCriterion.ENTROPY


@dataclass(frozen=True)
class RankedFit:
    projection_index: int
    fit: MixtureFit
    score: float


def _as_matrix(S, d):
    S = np.asarray(S, dtype=float)
    return S.reshape(1, 1) if d == 1 and S.ndim < 2 else S


def kl_gaussian(mu0, S0, mu1, S1) -> float:
    """KL(N(mu0, S0) || N(mu1, S1))."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    d = mu0.size
    S0, S1 = _as_matrix(S0, d), _as_matrix(S1, d)
    try:
        L1 = np.linalg.cholesky(S1)
        L0 = np.linalg.cholesky(S0)
    except np.linalg.LinAlgError:
        raise SingularityError("covariance is not positive definite") from None
    M = np.linalg.solve(L1, L0)
    delta = np.linalg.solve(L1, mu1 - mu0)
    logdet = 2.0 * (np.log(np.diag(L1)).sum() - np.log(np.diag(L0)).sum())
    return float(max(0.5 * (np.sum(M * M) - d + delta @ delta + logdet), 0.0))


def spd_sqrt(S) -> np.ndarray:
    """Symmetric square root through an eigendecomposition.

    Eigenvalues down to -1e-8 are clamped to zero.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if not np.allclose(S, S.T, rtol=0, atol=1e-8):
        raise ValueError("matrix is not symmetric")
    w, V = np.linalg.eigh((S + S.T) / 2)
    if w.min() < -PSD_CLAMP:
        raise NumericError(f"matrix has a negative eigenvalue {w.min():.3g}")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def wasserstein_gaussian(mu0, S0, mu1, S1) -> float:
    """Squared 2-Wasserstein distance between two Gaussians."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    d = mu0.size
    S0, S1 = _as_matrix(S0, d), _as_matrix(S1, d)
    r1 = spd_sqrt(S1)
    cross = spd_sqrt(r1 @ S0 @ r1)
    dm = mu0 - mu1
    return float(max(dm @ dm + np.trace(S0) + np.trace(S1) - 2.0 * np.trace(cross), 0.0))


def _check_G(fit):
    if fit.G < 2:
        raise CriterionUndefinedError("criterion needs at least two components")


def kl_criterion(fit: MixtureFit) -> float:
    """Mean directed KL divergence over ordered component pairs."""
    _check_G(fit)
    G = fit.G
    tot = 0.0
    for g in range(G):
        for h in range(G):
            if g != h:
                tot += kl_gaussian(fit.means[g], fit.covariances[g], fit.means[h], fit.covariances[h])
    return tot / (G * (G - 1))


def wasserstein_criterion(fit: MixtureFit) -> float:
    _check_G(fit)
    G = fit.G
    tot = 0.0
    for g in range(G):
        for h in range(g):
            tot += wasserstein_gaussian(fit.means[g], fit.covariances[g], fit.means[h], fit.covariances[h])
    return 2.0 * tot / (G * (G - 1))


def entropy_criterion(fit) -> float:
    """Mean posterior entropy divided by ln G (0 = crisp, 1 = uniform)."""
    Z = np.asarray(getattr(fit, "Z", fit), dtype=float)
    N, G = Z.shape
    if G < 2:
        raise CriterionUndefinedError("criterion needs at least two components")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(Z > 0, Z * np.log(Z), 0.0)
    return float(-terms.sum() / (N * math.log(G)))


CRITERIA = {
    RankCriterion.KL: kl_criterion,
    RankCriterion.WASSERSTEIN: wasserstein_criterion,
    RankCriterion.ENTROPY: entropy_criterion,
}


def score_fit(fit, criterion) -> float:
    score = CRITERIA[RankCriterion.parse(criterion)](fit)
    if not math.isfinite(score):
        raise CriterionUndefinedError("criterion is not finite")
    return score


def rank_and_select(fits, criterion, B_star, indices=None, scores=None):
    """Order fits by ``criterion`` and keep the best ``B_star``.

    ``fits`` is a sequence of MixtureFit (indexed 1, 2, ... unless
    ``indices`` is given) or of ``(projection_index, fit)`` pairs. Fits whose
    criterion is undefined are dropped. Ties go to the lower projection
    index. Precomputed ``scores`` may be supplied alongside.
    """
    criterion = RankCriterion.parse(criterion)
    if B_star < 1:
        raise ValueError("B_star must be at least 1")
    fits = list(fits)
    if fits and isinstance(fits[0], tuple):
        indices = [b for b, _ in fits]
        fits = [f for _, f in fits]
    if indices is None:
        indices = list(range(1, len(fits) + 1))
    ranked = []
    for i, (b, fit) in enumerate(zip(indices, fits)):
        if scores is not None:
            s = scores[i]
        else:
            try:
                s = score_fit(fit, criterion)
            except (CriterionUndefinedError, SingularityError, NumericError):
                continue
        if s is None or not math.isfinite(s):
            continue
        ranked.append(RankedFit(int(b), fit, float(s)))
    if not ranked:
        raise PipelineError("no projection produced a rankable fit")
    sign = -1.0 if criterion.descending else 1.0
    ranked.sort(key=lambda r: (sign * r.score, r.projection_index))
    return ranked[:B_star]
