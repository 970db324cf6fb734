"""Random-projection ensemble clustering of basis coefficients.

For b = 1..B: draw a K x d random matrix, project the coefficients, fit the
best-BIC Gaussian mixture and score it by a separation criterion. The B*
best-scoring posteriors are merged by soft Euclidean consensus and the
result is crisped by row-wise argmax.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive
from .consensus import ConsensusConfig, CrispPartition, ensemble_entropy, se_consensus
from .errors import (
    CriterionUndefinedError,
    InvalidSpecError,
    NumericError,
    PipelineError,
    ProjectionUnfitError,
    SingularityError,
)
from .gmm import ALL_MODELS, DEFAULT_MAX_ITER, DEFAULT_RESTARTS, DEFAULT_TOL, CovarianceModel, fit_best
from .projection import ProjectionKind, heuristic_dim, project, random_matrix
from .ranking import RankCriterion, rank_and_select, score_fit
from .smoothing import CoefficientMatrix

log = logging.getLogger(__name__)

RETAINED, DISCARDED, UNFIT = "retained", "discarded", "unfit"


@dataclass
class PipelineConfig:
    B: int = 1000
    B_star: int = 100
    d: int | None = None
    a: float | None = None
    G_heuristic: int | None = None
    d_candidates: list | None = None
    matrix: str = "haar"
    criterion: str = "kl"
    G_range: list = field(default_factory=lambda: list(range(2, 10)))
    models: list = field(default_factory=lambda: [m.value for m in ALL_MODELS])
    seed: int = 0
    threads: int = 1
    restarts: int = DEFAULT_RESTARTS
    em_tol: float = DEFAULT_TOL
    em_max_iter: int = DEFAULT_MAX_ITER
    consensus_tol: float = 1e-9
    consensus_max_iter: int = 100
    K: int | None = None
    lam: float | None = None
    order: int = 4

    # runtime-only settings, left out of the reproducible config echo
    RUNTIME_FIELDS = ("threads",)

    def __post_init__(self):
        self.matrix = ProjectionKind.parse(self.matrix).value
        self.criterion = RankCriterion.parse(self.criterion).value
        self.models = [CovarianceModel.parse(m).value for m in self.models]
        self.G_range = [int(g) for g in self.G_range]
        if self.d_candidates is not None:
            self.d_candidates = [int(x) for x in self.d_candidates]
        self.validate()

    def validate(self):
        if not 1 <= self.B_star <= self.B:
            raise InvalidSpecError(f"need 1 <= B_star <= B (got B={self.B}, B_star={self.B_star})")
        if not self.G_range or min(self.G_range) < 1:
            raise InvalidSpecError("G_range must hold positive integers")
        if not self.models:
            raise InvalidSpecError("at least one covariance model is required")
        if self.threads < 1 or self.restarts < 1:
            raise InvalidSpecError("threads and restarts must be positive")

    def with_fixed_G(self, G):
        """Known-number-of-clusters mode: restrict mixture fits to ``G``."""
        return dataclasses.replace(self, G_range=[int(G)])

    def resolve_d(self, K=None) -> int:
        if self.d is not None:
            d = int(self.d)
        elif self.a is not None and self.G_heuristic is not None:
            d = heuristic_dim(self.G_heuristic, self.a)
        else:
            raise InvalidSpecError("set d, or both a and G_heuristic")
        if K is not None and not 1 <= d < K:
            raise InvalidSpecError(f"projection dimension d={d} must satisfy 1 <= d < K={K}")
        return d

    def to_dict(self, include_runtime=False):
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        if not include_runtime:
            for key in self.RUNTIME_FIELDS:
                out.pop(key)
        return out

    @classmethod
    def from_dict(cls, data):
        """Build from a flat mapping, a report (uses its ``config``) or a file path."""
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidSpecError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ProjectionRecord:
    b: int
    status: str
    G: int | None = None
    model: str | None = None
    bic: float | None = None
    loglik: float | None = None
    score: float | None = None
    rank: int | None = None
    reason: str | None = None

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class PipelineResult:
    labels: CrispPartition
    membership: np.ndarray
    per_projection: list
    selected_d: int
    consensus_trace: list
    config: PipelineConfig
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)
    d_search: list = field(default_factory=list)

    @property
    def k_effective(self):
        return self.labels.k_effective

    def counts(self):
        out = {RETAINED: 0, DISCARDED: 0, UNFIT: 0}
        for rec in self.per_projection:
            out[rec.status] += 1
        return out

    def to_dict(self):
        """JSON-ready report body; timing data lives under ``runtime``."""
        return {
            "config": self.config.to_dict(),
            "selected_d": self.selected_d,
            "k_effective": self.labels.k_effective,
            "labels": self.labels.labels.tolist(),
            "counts": self.counts(),
            "per_projection": [r.to_dict() for r in self.per_projection],
            "consensus_trace": list(self.consensus_trace),
            "d_search": self.d_search,
            "runtime": {"wall_time": self.wall_time, "threads": self.config.threads, **self.timings},
        }


def _coefficients(C):
    Cm = C.C if isinstance(C, CoefficientMatrix) else np.asarray(C, dtype=float)
    if Cm.ndim != 2 or not np.all(np.isfinite(Cm)):
        raise InvalidSpecError("coefficients must be a finite 2-D matrix")
    if Cm.shape[0] < 2:
        raise InvalidSpecError("need at least two curves to cluster")
    return np.ascontiguousarray(Cm)


def _run_projection(C, cfg, d, b):
    """Fit and score projection ``b``. Returns (record, fit or None)."""
    K = C.shape[1]
    A = random_matrix(cfg.matrix, K, d, derive(cfg.seed, b))
    X = project(C, A, b).X
    try:
        fit = fit_best(X, cfg.G_range, cfg.models, cfg.seed, cfg.restarts, seed_path=(b,),
                       tol=cfg.em_tol, max_iter=cfg.em_max_iter)
    except ProjectionUnfitError as exc:
        return ProjectionRecord(b, UNFIT, reason=str(exc)), None
    rec = ProjectionRecord(b, DISCARDED, fit.G, fit.model.value, fit.bic, fit.loglik)
    try:
        rec.score = score_fit(fit, cfg.criterion)
    except (CriterionUndefinedError, SingularityError, NumericError) as exc:
        rec.reason = f"criterion undefined: {exc}"
        return rec, None
    return rec, fit


def projection_matrices(C, cfg, d=None):
    """The B projection matrices the pipeline would draw (for inspection)."""
    Cm = _coefficients(C)
    d = cfg.resolve_d(Cm.shape[1]) if d is None else d
    return [random_matrix(cfg.matrix, Cm.shape[1], d, derive(cfg.seed, b)) for b in range(1, cfg.B + 1)]


def run_pipeline(C, cfg: PipelineConfig, d=None) -> PipelineResult:
    Cm = _coefficients(C)
    K = Cm.shape[1]
    d = cfg.resolve_d(K) if d is None else int(d)
    if not 1 <= d < K:
        raise InvalidSpecError(f"projection dimension d={d} must satisfy 1 <= d < K={K}")
    t0 = time.perf_counter()
    indices = range(1, cfg.B + 1)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outputs = list(pool.map(lambda b: _run_projection(Cm, cfg, d, b), indices))
    else:
        outputs = [_run_projection(Cm, cfg, d, b) for b in indices]
    t1 = time.perf_counter()

    records = [rec for rec, _ in outputs]
    scored = [(rec.b, fit) for rec, fit in outputs if fit is not None]
    if not scored:
        raise PipelineError("no projection produced a rankable fit", [r.to_dict() for r in records])
    ranked = rank_and_select(scored, cfg.criterion, cfg.B_star,
                             scores=[records[b - 1].score for b, _ in scored])
    for pos, r in enumerate(ranked, start=1):
        records[r.projection_index - 1].status = RETAINED
        records[r.projection_index - 1].rank = pos
    n_unfit = sum(rec.status == UNFIT for rec in records)
    log.info("d=%d: %d retained, %d unfit of %d projections", d, len(ranked), n_unfit, cfg.B)

    members = [r.fit.Z for r in ranked]
    cons = se_consensus(members, ConsensusConfig(max(r.fit.G for r in ranked), cfg.consensus_tol, cfg.consensus_max_iter))
    t2 = time.perf_counter()
    return PipelineResult(
        labels=cons.labels,
        membership=cons.M,
        per_projection=records,
        selected_d=d,
        consensus_trace=cons.trace,
        config=cfg,
        wall_time=t2 - t0,
        timings={"projections": t1 - t0, "consensus": t2 - t1},
    )


def select_d(C, cfg: PipelineConfig, d_candidates=None):
    """Pick d by the lowest entropy of the consensus membership (ties: smaller d).

    Returns ``(d, result)``; ``result.d_search`` lists every candidate's entropy.
    """
    d_candidates = d_candidates if d_candidates is not None else cfg.d_candidates
    if not d_candidates:
        raise InvalidSpecError("d_candidates must be non-empty")
    Cm = _coefficients(C)
    best = None
    search = []
    for d in sorted(set(int(x) for x in d_candidates)):
        try:
            res = run_pipeline(Cm, cfg, d)
            ent = ensemble_entropy(res.membership)
        except (PipelineError, CriterionUndefinedError, InvalidSpecError) as exc:
            log.warning("d=%d failed: %s", d, exc)
            search.append({"d": d, "entropy": None, "k_effective": None, "error": str(exc)})
            continue
        search.append({"d": d, "entropy": ent, "k_effective": res.k_effective, "error": None})
        if best is None or ent < best[1]:
            best = (d, ent, res)
    if best is None:
        raise PipelineError("every candidate d failed", search)
    d, _, res = best
    res.d_search = search
    return d, res


def default_pipeline_config(scenario_G, **overrides):
    """Benchmark defaults: Haar matrices, KL ranking, d = ceil(5 ln G) + 1."""
    base = dict(d=heuristic_dim(scenario_G, 5), matrix="haar", criterion="kl")
    base.update(overrides)
    return PipelineConfig(**base)


