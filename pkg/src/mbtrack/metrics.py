"""Multi-object miss-distance (OSPA) and the optimal assignment it needs.

OSPA of order p with cutoff c between point sets X (size m) and Y
(size n >= m) is ((1/n) * (min-assignment sum of cutoff distances^p +
c^p * (n - m)))^(1/p).  It decomposes into a localization part (the
assignment term) and a cardinality part (the unmatched term); both lie
in [0, c] and combine as total^p = loc^p + card^p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatchError, NonFiniteError, NonSquareError


@dataclass(frozen=True)
class OspaParams:
    cutoff: float = 100.0
    order: float = 1.0

    def __post_init__(self):
        if self.cutoff <= 0:
            raise ValueError(f"cutoff {self.cutoff} must be positive")
        if self.order < 1:
            raise ValueError(f"order {self.order} must be >= 1")


@dataclass(frozen=True)
class OspaResult:
    total: float
    localization: float
    cardinality: float


def assignment_min_cost(cost_matrix: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect assignment of a square matrix.

    Returns the permutation ``perm`` with row i assigned to column
    ``perm[i]``.  Exact (Hungarian-class solver).
    """
    cost = np.asarray(cost_matrix, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise NonSquareError(f"cost matrix shape {cost.shape} is not square")
    if not np.all(np.isfinite(cost)):
        raise NonFiniteError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=int)
    perm[rows] = cols
    return perm


def ospa(
    truth: np.ndarray, estimate: np.ndarray, params: OspaParams = OspaParams()
) -> OspaResult:
    """OSPA distance between two point sets (symmetric in its arguments).

    Inputs are (n, d) arrays (empty sets allowed as shape (0, d) or
    zero-length arrays).
    """
    a = np.asarray(truth, dtype=float)
    b = np.asarray(estimate, dtype=float)
    if a.size == 0 and b.size == 0:
        return OspaResult(0.0, 0.0, 0.0)
    c, p = params.cutoff, params.order
    if a.size == 0 or b.size == 0:
        return OspaResult(total=c, localization=0.0, cardinality=c)
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(
            f"point dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )
    if len(a) > len(b):
        a, b = b, a
    m, n = len(a), len(b)

    distances = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    clipped = np.minimum(distances, c) ** p
    rows, cols = linear_sum_assignment(clipped)
    match_cost = float(clipped[rows, cols].sum())

    localization = (match_cost / n) ** (1.0 / p)
    cardinality = (c**p * (n - m) / n) ** (1.0 / p)
    total = ((match_cost + c**p * (n - m)) / n) ** (1.0 / p)
    return OspaResult(total=total, localization=localization, cardinality=cardinality)
