"""External validation: adjusted Rand index, contingency tables, G histograms."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class EvalReport:
    ari: float
    confusion: np.ndarray
    found_labels: list
    true_labels: list
    selected_G: int

    def to_dict(self):
        return {
            "ari": self.ari,
            "selected_G": self.selected_G,
            "confusion": {
                "rows_found": self.found_labels,
                "cols_true": self.true_labels,
                "counts": self.confusion.tolist(),
            },
        }


def _labels(x):
    return np.asarray(getattr(x, "labels", x)).ravel()


def contingency(found, truth):
    """Counts table plus the sorted found/true label values indexing it."""
    u, v = _labels(found), _labels(truth)
    if u.size != v.size:
        raise ShapeError(f"partitions have different lengths ({u.size} vs {v.size})")
    rows, ui = np.unique(u, return_inverse=True)
    cols, vi = np.unique(v, return_inverse=True)
    table = np.zeros((rows.size, cols.size), dtype=np.int64)
    np.add.at(table, (ui.ravel(), vi.ravel()), 1)
    return table, rows.tolist(), cols.tolist()


def confusion_matrix(found, truth) -> np.ndarray:
    """Rows are found clusters, columns true classes, both in sorted label order."""
    return contingency(found, truth)[0]


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def adjusted_rand_index(u, v) -> float:
    table, _, _ = contingency(u, v)
    N = int(table.sum())
    if N < 2:
        raise ValueError("the adjusted Rand index needs at least two observations")
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(N)
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        # both partitions trivial (one block or all singletons)
        same = table.shape[0] == table.shape[1] == np.count_nonzero(table)
        return 1.0 if same else 0.0
    return float((sum_ij - expected) / (max_index - expected))


def evaluate(found, truth) -> EvalReport:
    table, rows, cols = contingency(found, truth)
    return EvalReport(adjusted_rand_index(found, truth), table, rows, cols, len(rows))


def cluster_count_table(selected_G) -> dict:
    """Histogram {G: number of replicates}, keys in increasing order."""
    counts = Counter(int(g) for g in selected_G)
    if not counts:
        raise ValueError("no replicates to tabulate")
    return dict(sorted(counts.items()))
