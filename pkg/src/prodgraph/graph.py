"""Weighted adjacency matrices, Laplacians, and packed upper-triangular storage.

Packed storage scans the upper triangle (diagonal included) column by
column: slots (0,0), (0,1), (1,1), (0,2), (1,2), (2,2), ...  The slot for
``(i, j)`` with ``i <= j`` is ``j*(j+1)//2 + i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import prod
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, GraphError

# Off-diagonal entries in (-VALIDITY_TOL, 0) are clamped to zero on construction.
VALIDITY_TOL = 1e-8


def packed_length(n: int) -> int:
    return n * (n + 1) // 2


def slot_index(i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return j * (j + 1) // 2 + i


@lru_cache(maxsize=64)
def _slots(n: int) -> tuple[np.ndarray, np.ndarray]:
    cols = np.repeat(np.arange(n), np.arange(1, n + 1))
    starts = np.repeat(np.cumsum(np.r_[0, np.arange(1, n)]), np.arange(1, n + 1))
    rows = np.arange(packed_length(n)) - starts
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def slot_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column index of every packed slot, in packing order."""
    return _slots(n)


def diagonal_slots(n: int) -> np.ndarray:
    """Packed positions of the diagonal entries."""
    j = np.arange(n)
    return j * (j + 1) // 2 + j


def offdiagonal_slots(n: int) -> np.ndarray:
    """Packed positions of the strictly upper-triangular entries (the set F)."""
    rows, cols = _slots(n)
    return np.flatnonzero(rows != cols)


def pack(W: np.ndarray) -> np.ndarray:
    """Upper triangle of a square matrix as a packed vector."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"pack expects a square matrix, got shape {W.shape}")
    rows, cols = _slots(W.shape[0])
    return W[rows, cols].copy()


def unpack(w: np.ndarray, n: int) -> np.ndarray:
    """Symmetric ``n x n`` matrix from its packed upper triangle."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size != packed_length(n):
        raise DimensionError(
            f"packed vector of length {w.size} does not match n={n} "
            f"(expected {packed_length(n)})"
        )
    rows, cols = _slots(n)
    W = np.zeros((n, n))
    W[rows, cols] = w
    W[cols, rows] = w
    return W


@dataclass(frozen=True, eq=False)
class WeightedAdjacency:
    """Symmetric, zero-diagonal, nonnegative weighted adjacency matrix.

    Stored as the packed upper triangle ``w`` (length ``n(n+1)/2``).
    Construct from a dense matrix with :meth:`from_matrix`.
    """

    n: int
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 1 or w.size != packed_length(self.n):
            raise DimensionError(
                f"packed weights of length {w.size} do not match n={self.n}"
            )
        if not np.all(np.isfinite(w)):
            raise GraphError("adjacency contains non-finite weights")
        diag = diagonal_slots(self.n)
        if np.any(np.abs(w[diag]) > VALIDITY_TOL):
            raise GraphError("adjacency has nonzero diagonal (self loops)")
        w[diag] = 0.0
        if np.any(w < -VALIDITY_TOL):
            raise GraphError(f"adjacency has negative weight {w.min():.3g}")
        w[w < 0] = 0.0
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_matrix(cls, W: np.ndarray, tol: float = VALIDITY_TOL) -> "WeightedAdjacency":
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionError(f"adjacency must be square, got shape {W.shape}")
        scale = max(1.0, float(np.abs(W).max(initial=0.0)))
        if np.abs(W - W.T).max(initial=0.0) > tol * scale:
            raise GraphError("adjacency is not symmetric")
        return cls(W.shape[0], pack(0.5 * (W + W.T)))

    @classmethod
    def empty(cls, n: int) -> "WeightedAdjacency":
        return cls(n, np.zeros(packed_length(n)))

    @property
    def matrix(self) -> np.ndarray:
        return unpack(self.w, self.n)

    @property
    def degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return laplacian(self)

    def num_edges(self, threshold: float = 0.0) -> int:
        return int(np.count_nonzero(self.w[offdiagonal_slots(self.n)] > threshold))

    def edges(self, threshold: float = 0.0) -> list[tuple[int, int, float]]:
        """``(i, j, weight)`` with ``i < j`` for every weight above ``threshold``."""
        rows, cols = _slots(self.n)
        keep = (rows != cols) & (self.w > threshold)
        return [(int(i), int(j), float(v)) for i, j, v in zip(rows[keep], cols[keep], self.w[keep])]

    def __eq__(self, other):
        if not isinstance(other, WeightedAdjacency):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.w, other.w)

    __hash__ = None


GraphLike = Union[WeightedAdjacency, np.ndarray]


def as_matrix(W: GraphLike) -> np.ndarray:
    if isinstance(W, WeightedAdjacency):
        return W.matrix
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {W.shape}")
    return W


def laplacian(W: GraphLike) -> np.ndarray:
    """Combinatorial Laplacian ``diag(W 1) - W``."""
    W = as_matrix(W)
    return np.diag(W.sum(axis=1)) - W


def trace_normalize(W: GraphLike, target: float) -> WeightedAdjacency:
    """Rescale ``W`` so that ``tr(laplacian(W)) == target``."""
    if target <= 0:
        raise ValueError("target trace must be positive")
    adj = W if isinstance(W, WeightedAdjacency) else WeightedAdjacency.from_matrix(W)
    total = 2.0 * adj.w.sum()
    if total <= 0:
        raise GraphError("degenerate graph: all weights are zero")
    return WeightedAdjacency(adj.n, adj.w * (target / total))


def is_valid_laplacian(L: np.ndarray, tol: float = 1e-8) -> bool:
    """Row sums zero, off-diagonals nonpositive, PSD up to ``tol * ||L||_F``."""
    L = np.asarray(L, dtype=float)
    scale = max(1.0, np.linalg.norm(L))
    off = L - np.diag(np.diag(L))
    return bool(
        np.allclose(L, L.T, atol=tol * scale)
        and np.abs(L.sum(axis=1)).max() <= tol * scale
        and off.max(initial=0.0) <= tol * scale
        and np.linalg.eigvalsh(L)[0] >= -tol * scale
    )


def param_count(dims: Sequence[int], structured: bool) -> int:
    """Free parameters of an adjacency over ``prod(dims)`` nodes.

    Structured counts one packed upper triangle per factor.
    """
    dims = [int(d) for d in dims]
    if not dims:
        raise ValueError("dims must be nonempty")
    if structured:
        return sum(packed_length(d) for d in dims)
    return packed_length(prod(dims))
