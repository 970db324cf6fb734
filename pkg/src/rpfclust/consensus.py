"""Soft least-squares Euclidean consensus of membership matrices.

The consensus ``M`` minimises ``sum_b w_b ||M_b P_b - M||_F^2`` over the
membership matrix ``M`` and the column permutations ``P_b``. The fixed point
alternates an exact assignment step (one linear-sum assignment per member)
with an exact averaging step, so the objective never increases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CriterionUndefinedError, PipelineError, ShapeError

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100


@dataclass
class ConsensusConfig:
    k_max: int | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    weights: np.ndarray | None = None
    power: int = 2

    def __post_init__(self):
        if self.power != 2:
            raise ValueError("only the squared Euclidean consensus (p=2) is implemented")


@dataclass(frozen=True)
class CrispPartition:
    labels: np.ndarray
    k_effective: int

    def __len__(self):
        return self.labels.size


@dataclass
class ConsensusResult:
    M: np.ndarray
    objective: float
    n_iter: int
    labels: CrispPartition
    trace: list = field(default_factory=list)
    permutations: list = field(default_factory=list)


def pad_columns(M, k_max) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    k = M.shape[1]
    if k > k_max:
        raise ShapeError(f"membership has {k} columns, more than k_max={k_max}")
    if k == k_max:
        return M
    return np.hstack([M, np.zeros((M.shape[0], k_max - k))])


def optimal_matching(Mb, M) -> np.ndarray:
    """Column permutation ``perm`` minimising ``||Mb[:, perm] - M||_F^2``.

    ``perm[l]`` is the column of ``Mb`` matched to column ``l`` of ``M``.
    """
    Mb = np.asarray(Mb, dtype=float)
    M = np.asarray(M, dtype=float)
    if Mb.shape != M.shape:
        raise ShapeError(f"shape mismatch {Mb.shape} vs {M.shape}")
    cost = (Mb**2).sum(0)[:, None] + (M**2).sum(0)[None, :] - 2.0 * Mb.T @ M
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(M.shape[1], dtype=int)
    perm[cols] = rows
    return perm


def _objective(members, perms, M, w):
    return float(sum(wb * np.sum((Mb[:, p] - M) ** 2) for wb, Mb, p in zip(w, members, perms)))


def crispify(M) -> CrispPartition:
    """Row-wise argmax (ties to the lowest column), relabelled 1..k_effective."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    raw = np.argmax(M, axis=1)
    _, labels = np.unique(raw, return_inverse=True)
    labels = labels.ravel() + 1
    return CrispPartition(labels, int(labels.max()) if labels.size else 0)


def se_consensus(members, cfg: ConsensusConfig | None = None) -> ConsensusResult:
    """Fixed-point soft Euclidean consensus, initialised at ``members[0]``.

    Pass members in rank order: the first one seeds the iteration.
    """
    cfg = cfg or ConsensusConfig()
    members = [np.atleast_2d(np.asarray(m, dtype=float)) for m in members]
    if not members:
        raise PipelineError("consensus needs at least one member")
    N = members[0].shape[0]
    if any(m.shape[0] != N for m in members):
        raise ShapeError("members have different numbers of rows")
    k_max = cfg.k_max or max(m.shape[1] for m in members)
    members = [pad_columns(m, k_max) for m in members]
    w = np.ones(len(members)) if cfg.weights is None else np.asarray(cfg.weights, dtype=float)
    if w.shape != (len(members),) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per member")
    wn = w / w.sum()

    M = members[0].copy()
    trace = []
    perms = []
    for it in range(cfg.max_iter):
        perms = [optimal_matching(Mb, M) for Mb in members]
        M = sum(wb * Mb[:, p] for wb, Mb, p in zip(wn, members, perms))
        trace.append(_objective(members, perms, M, w))
        if trace[-1] == 0.0 or (len(trace) > 1 and trace[-2] - trace[-1] < cfg.tol):
            break
    return ConsensusResult(M, trace[-1], len(trace), crispify(M), trace, perms)


def ensemble_entropy(M) -> float:
    """Mean row entropy over the non-empty columns, normalised by ln(#columns)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    M = M[:, M.sum(axis=0) > 0]
    k = M.shape[1]
    if k < 2:
        raise CriterionUndefinedError("entropy needs at least two non-empty columns")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(M > 0, M * np.log(M), 0.0)
    return float(-terms.sum() / (M.shape[0] * math.log(k)))
