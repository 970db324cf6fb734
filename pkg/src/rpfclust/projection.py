"""Random projection matrices and the projection of coefficient vectors."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ShapeError


class ProjectionKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    HAAR = "haar"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        aliases = {"gaussiannormalized": "gaussian", "gaussian_normalized": "gaussian"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ProjectionMatrix:
    A: np.ndarray
    kind: ProjectionKind
    seed: int

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True)
class ProjectedData:
    X: np.ndarray
    projection_index: int = 0


def _check_dims(K, d):
    if d <= 0:
        raise DimensionError(f"projection dimension must be positive, got d={d}")
    if d >= K:
        raise DimensionError(f"projection dimension d={d} must be smaller than K={K}")


def _standard_normal(K, d, seed):
    return np.random.default_rng(seed).standard_normal((K, d))


def gaussian_matrix(K: int, d: int, seed: int) -> ProjectionMatrix:
    """i.i.d. N(0, 1) entries, each column scaled to unit length."""
    _check_dims(K, d)
    A = _standard_normal(K, d, seed)
    A /= np.linalg.norm(A, axis=0)
    A.flags.writeable = False
    return ProjectionMatrix(A, ProjectionKind.GAUSSIAN, int(seed))


def haar_matrix(K: int, d: int, seed: int) -> ProjectionMatrix:
    """Uniformly distributed orthonormal d-frame in R^K.

    Q factor of a Gaussian matrix with the signs fixed so that R has a
    positive diagonal, which makes the draw Haar distributed.
    """
    _check_dims(K, d)
    Q, R = np.linalg.qr(_standard_normal(K, d, seed))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    A = Q * signs
    A.flags.writeable = False
    return ProjectionMatrix(A, ProjectionKind.HAAR, int(seed))


def random_matrix(kind, K, d, seed) -> ProjectionMatrix:
    kind = ProjectionKind.parse(kind)
    return haar_matrix(K, d, seed) if kind is ProjectionKind.HAAR else gaussian_matrix(K, d, seed)


def project(C, A, projection_index=0) -> ProjectedData:
    Cm = getattr(C, "C", C)
    Am = getattr(A, "A", A)
    Cm = np.asarray(Cm, dtype=float)
    Am = np.asarray(Am, dtype=float)
    if Cm.ndim != 2 or Am.ndim != 2 or Cm.shape[1] != Am.shape[0]:
        raise ShapeError(f"cannot project {Cm.shape} coefficients with a {Am.shape} matrix")
    return ProjectedData(Cm @ Am, projection_index)


def heuristic_dim(G: int, a: float) -> int:
    """Projection dimension ``ceil(a * ln G) + 1``."""
    if G < 2:
        raise ValueError(f"G must be at least 2, got {G}")
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    return int(math.ceil(a * math.log(G))) + 1
