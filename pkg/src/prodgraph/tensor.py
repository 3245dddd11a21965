"""Dense tensor operations and Kronecker/Cartesian/strong product graphs.

Conventions used throughout the package:

* A tensor is a numpy array whose axis ``k`` is mode ``k`` (0-based).
* ``vec`` is mode-0-fastest (Fortran order).
* Product operators are ordered ``W = W[K-1] (x) ... (x) W[0]`` so that
  ``(U[K-1] (x) ... (x) U[0]) vec(T) == vec(T x_0 U[0] ... x_{K-1} U[K-1])``.
* A batch of signal tensors has shape ``(M, n_0, ..., n_{K-1})``; its
  vectorized form is the ``M x n`` matrix whose rows are ``vec(X_m)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce
from math import prod
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError
from .graph import GraphLike, WeightedAdjacency, as_matrix

DENSE_CAP = 4096


class ProductKind(str, enum.Enum):
    KRONECKER = "kronecker"
    CARTESIAN = "cartesian"
    STRONG = "strong"

    @classmethod
    def parse(cls, value: Union[str, "ProductKind"]) -> "ProductKind":
        try:
            return cls(value.lower() if isinstance(value, str) else value)
        except ValueError:
            raise ValueError(
                f"unknown product kind {value!r}; expected one of "
                + ", ".join(k.value for k in cls)
            ) from None


@dataclass(frozen=True)
class FactorGraphSet:
    """Ordered factor adjacencies; factor ``k`` acts on tensor mode ``k``."""

    kind: ProductKind
    factors: tuple[WeightedAdjacency, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", ProductKind.parse(self.kind))
        factors = tuple(
            f if isinstance(f, WeightedAdjacency) else WeightedAdjacency.from_matrix(f)
            for f in self.factors
        )
        if not factors:
            raise DimensionError("a product needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_matrices(cls, kind, matrices: Sequence[np.ndarray]) -> "FactorGraphSet":
        return cls(ProductKind.parse(kind), tuple(WeightedAdjacency.from_matrix(m) for m in matrices))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.n for f in self.factors)

    @property
    def n(self) -> int:
        return prod(self.dims)

    @property
    def order(self) -> int:
        return len(self.factors)

    def matrices(self) -> list[np.ndarray]:
        return [f.matrix for f in self.factors]


# ---------------------------------------------------------------------------
# vec / matricization / mode products


def vectorize(T: np.ndarray) -> np.ndarray:
    return np.asarray(T).ravel(order="F")


def tensorize(x: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    x = np.asarray(x)
    if x.size != prod(dims):
        raise DimensionError(f"vector of length {x.size} cannot be shaped to {tuple(dims)}")
    return x.reshape(tuple(dims), order="F")


def _check_mode(T: np.ndarray, k: int) -> None:
    if not 0 <= k < T.ndim:
        raise DimensionError(f"mode {k} out of range for an order-{T.ndim} tensor")


def matricize(T: np.ndarray, k: int) -> np.ndarray:
    """Mode-``k`` unfolding: ``n_k x (n / n_k)``, remaining modes lower-fastest."""
    T = np.asarray(T)
    _check_mode(T, k)
    return np.moveaxis(T, k, 0).reshape(T.shape[k], -1, order="F")


def fold(M: np.ndarray, k: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`matricize`."""
    dims = tuple(dims)
    moved = (dims[k],) + dims[:k] + dims[k + 1:]
    return np.moveaxis(np.asarray(M).reshape(moved, order="F"), 0, k)


def mode_multiply(T: np.ndarray, k: int, U: np.ndarray) -> np.ndarray:
    """``T x_k U``: every mode-``k`` fiber is multiplied by ``U``."""
    T = np.asarray(T)
    U = np.asarray(U)
    _check_mode(T, k)
    if U.ndim != 2 or U.shape[1] != T.shape[k]:
        raise DimensionError(
            f"matrix with {U.shape[-1]} columns cannot act on mode {k} of size {T.shape[k]}"
        )
    return np.moveaxis(np.tensordot(U, T, axes=(1, k)), 0, k)


def _batch_mode_multiply(X: np.ndarray, k: int, U: np.ndarray) -> np.ndarray:
    # mode k of each tensor in a batch lives on array axis k + 1
    return np.moveaxis(np.tensordot(U, X, axes=(1, k + 1)), 0, k + 1)


# ---------------------------------------------------------------------------
# product operators


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    """``mats[-1] (x) ... (x) mats[0]``."""
    return reduce(np.kron, reversed([np.asarray(m, dtype=float) for m in mats]))


def product_matrix(kind, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Dense product of arbitrary square factor matrices (no validity checks)."""
    kind = ProductKind.parse(kind)
    mats = [np.asarray(m, dtype=float) for m in mats]
    if kind is ProductKind.KRONECKER:
        return kron_all(mats)
    eyes = [np.eye(m.shape[0]) for m in mats]
    if kind is ProductKind.CARTESIAN:
        return sum(kron_all(eyes[:k] + [m] + eyes[k + 1:]) for k, m in enumerate(mats))
    return kron_all([m + e for m, e in zip(mats, eyes)]) - np.eye(prod(m.shape[0] for m in mats))


def product_adjacency(F: FactorGraphSet, cap: int = DENSE_CAP) -> WeightedAdjacency:
    """Dense product adjacency; refuses products larger than ``cap`` nodes."""
    if F.n > cap:
        raise DimensionError(
            f"product has {F.n} nodes, above the dense cap of {cap}; "
            "use product_apply for implicit products"
        )
    W = product_matrix(F.kind, F.matrices())
    np.fill_diagonal(W, 0.0)
    return WeightedAdjacency.from_matrix(W)


def _factor_args(F) -> tuple[ProductKind, list[np.ndarray]]:
    if isinstance(F, FactorGraphSet):
        return F.kind, F.matrices()
    kind, mats = F
    return ProductKind.parse(kind), [as_matrix(m) for m in mats]


def product_apply(F, x: np.ndarray) -> np.ndarray:
    """Product adjacency times ``x`` without forming the product.

    ``F`` is a :class:`FactorGraphSet` or a ``(kind, matrices)`` pair.
    ``x`` may be a single length-``n`` vector or an ``M x n`` batch of rows.
    """
    kind, mats = _factor_args(F)
    dims = tuple(m.shape[0] for m in mats)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xb = x[None, :] if single else x
    if Xb.ndim != 2 or Xb.shape[1] != prod(dims):
        raise DimensionError(f"signal length {Xb.shape[-1]} does not match product size {prod(dims)}")
    T = Xb.reshape((Xb.shape[0],) + dims, order="F")
    if kind is ProductKind.KRONECKER:
        out = T
        for k, m in enumerate(mats):
            out = _batch_mode_multiply(out, k, m)
    elif kind is ProductKind.CARTESIAN:
        out = sum(_batch_mode_multiply(T, k, m) for k, m in enumerate(mats))
    else:
        out = T
        for k, m in enumerate(mats):
            out = _batch_mode_multiply(out, k, m + np.eye(m.shape[0]))
        out = out - T
    y = np.asarray(out).reshape(Xb.shape, order="F")
    return y[0] if single else y


def _combine(vectors: Sequence[np.ndarray], op) -> np.ndarray:
    # ordered like the Kronecker product vectors[-1] (x) ... (x) vectors[0]
    out = np.asarray(vectors[-1], dtype=float)
    for v in reversed(vectors[:-1]):
        out = op.outer(out, np.asarray(v, dtype=float)).ravel()
    return out


def product_eigvals(eigvals: Sequence[np.ndarray], kind) -> np.ndarray:
    """Eigenvalues of a product from the factor eigenvalues.

    The result is aligned with the columns of ``kron_all(eigenvectors)``.
    """
    kind = ProductKind.parse(kind)
    if kind is ProductKind.KRONECKER:
        return _combine(eigvals, np.multiply)
    if kind is ProductKind.CARTESIAN:
        return _combine(eigvals, np.add)
    return _combine([1.0 + np.asarray(v, dtype=float) for v in eigvals], np.multiply) - 1.0


def product_gft(X: np.ndarray, bases: Sequence[np.ndarray], tol: float = 1e-10) -> np.ndarray:
    """Graph Fourier transform on a product graph: ``vec(X x_0 U_0^T ... )``.

    ``bases[k]`` holds the orthonormal eigenvectors of factor ``k`` as columns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != len(bases):
        raise DimensionError(f"order-{X.ndim} tensor given {len(bases)} factor bases")
    out = X
    for k, U in enumerate(bases):
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise DimensionError(f"factor basis {k} is not square: shape {U.shape}")
        if np.abs(U.T @ U - np.eye(U.shape[0])).max() > tol:
            raise ValueError(f"factor basis {k} is not orthonormal")
        out = mode_multiply(out, k, U.T)
    return vectorize(out)


def dirichlet_energy(x: np.ndarray, graph: Union[GraphLike, FactorGraphSet]) -> float:
    """``x^T L x`` evaluated as ``(x*x)^T W 1 - x^T W x``."""
    x = np.asarray(x, dtype=float)
    if isinstance(graph, FactorGraphSet):
        if x.size != graph.n:
            raise DimensionError(f"signal length {x.size} does not match product size {graph.n}")
        deg = product_apply(graph, np.ones(graph.n))
        return float((x * x) @ deg - x @ product_apply(graph, x))
    W = as_matrix(graph)
    if x.size != W.shape[0]:
        raise DimensionError(f"signal length {x.size} does not match graph size {W.shape[0]}")
    return float((x * x) @ W.sum(axis=1) - x @ W @ x)


def edge_count(F: FactorGraphSet, threshold: float = 0.0) -> int:
    """Edges of the product graph, from the factor edge counts.

    The strong product count uses ``prod(n_k + 2|E_k|) - n`` nonzeros of
    ``kron(W_k + I) - I`` halved.
    """
    dims = F.dims
    edges = [f.num_edges(threshold) for f in F.factors]
    if F.kind is ProductKind.KRONECKER:
        return 2 ** (F.order - 1) * prod(edges)
    if F.kind is ProductKind.CARTESIAN:
        return sum(prod(dims[:k] + dims[k + 1:]) * e for k, e in enumerate(edges))
    return (prod(d + 2 * e for d, e in zip(dims, edges)) - F.n) // 2
