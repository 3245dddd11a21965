"""Synthetic graphs and Gaussian Markov random field signals."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .errors import GraphError
from .graph import GraphLike, WeightedAdjacency, laplacian, trace_normalize
from .tensor import DENSE_CAP, FactorGraphSet, ProductKind, product_adjacency

FAMILIES = ("erdos_renyi", "gaussian_sparse", "preferential_attachment", "random_regular", "grid")
WEIGHT_LAWS = ("unit", "uniform", "gaussian")

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class GeneratorSpec:
    """Random graph family with its parameters.

    ``p`` is the edge probability (erdos_renyi, gaussian_sparse), ``m`` the
    edges added per node (preferential_attachment), ``degree`` the common
    degree (random_regular) and ``shape`` the grid shape. ``gaussian_sparse``
    always uses ``|N(1, 0.5^2)|`` weights.
    """

    family: str = "erdos_renyi"
    n: int = 16
    p: float = 0.3
    m: int = 2
    degree: int = 3
    shape: Optional[tuple[int, int]] = None
    weights: str = "uniform"
    low: float = 0.5
    high: float = 1.5
    seed: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown graph family {self.family!r}; expected one of {FAMILIES}")
        if self.weights not in WEIGHT_LAWS:
            raise ValueError(f"unknown weight law {self.weights!r}; expected one of {WEIGHT_LAWS}")
        if self.family == "grid":
            if self.shape is None or len(self.shape) != 2 or min(self.shape) < 1:
                raise ValueError("grid needs a shape (rows, cols)")
            object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
            object.__setattr__(self, "n", self.shape[0] * self.shape[1])
        if self.n < 2:
            raise ValueError("a graph needs at least 2 nodes")
        if self.family in ("erdos_renyi", "gaussian_sparse") and not 0 <= self.p <= 1:
            raise ValueError(f"edge probability must lie in [0, 1], got {self.p}")
        if self.family == "preferential_attachment" and not 1 <= self.m < self.n:
            raise ValueError(f"preferential attachment needs 1 <= m < n, got m={self.m}, n={self.n}")
        if self.family == "random_regular":
            if not 0 < self.degree < self.n:
                raise ValueError(f"random regular degree must lie in (0, n), got {self.degree}")
            if (self.n * self.degree) % 2:
                raise GraphError(f"no {self.degree}-regular graph on {self.n} nodes (n*d is odd)")
        if self.weights == "uniform" and not 0 < self.low <= self.high:
            raise ValueError("uniform weights need 0 < low <= high")

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return replace(self, seed=seed)


def _structure(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.n
    if spec.family in ("erdos_renyi", "gaussian_sparse"):
        upper = np.triu(rng.random((n, n)) < spec.p, k=1)
        return (upper | upper.T).astype(float)
    nx_seed = int(rng.integers(2**31 - 1))
    if spec.family == "preferential_attachment":
        G = nx.barabasi_albert_graph(n, spec.m, seed=nx_seed)
    elif spec.family == "random_regular":
        G = nx.random_regular_graph(spec.degree, n, seed=nx_seed)
    else:
        G = nx.grid_2d_graph(*spec.shape)
    return nx.to_numpy_array(G, nodelist=sorted(G.nodes()), dtype=float)


def _weights(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.n
    law = "gaussian" if spec.family == "gaussian_sparse" else spec.weights
    if law == "unit":
        V = np.ones((n, n))
    elif law == "uniform":
        V = rng.uniform(spec.low, spec.high, size=(n, n))
    else:
        V = np.abs(rng.normal(1.0, 0.5, size=(n, n)))
    V = np.triu(V, k=1)
    return V + V.T


def generate(spec: GeneratorSpec) -> WeightedAdjacency:
    """Draw a weighted graph; deterministic for a fixed ``spec.seed``.

    Random families are redrawn (from the same stream) when a draw has no
    edges; a family that cannot produce edges raises ``GraphError``.
    """
    if spec.family in ("erdos_renyi", "gaussian_sparse") and spec.p == 0:
        raise GraphError("empty graph: edge probability 0 yields no edges")
    rng = np.random.default_rng(spec.seed)
    for _ in range(_MAX_REDRAWS):
        B = _structure(spec, rng)
        if B.any():
            return WeightedAdjacency.from_matrix(B * _weights(spec, rng))
    raise GraphError(f"empty graph: no edges after {_MAX_REDRAWS} draws")


def sample_gmrf(
    L: GraphLike,
    num_samples: int,
    seed: Optional[int] = None,
    noise_sd: float = 0.0,
    tol: float = 1e-9,
) -> np.ndarray:
    """Draw ``x ~ N(0, pinv(L))`` plus isotropic noise; returns ``M x n``.

    ``L`` is a Laplacian matrix, or a :class:`WeightedAdjacency` whose
    Laplacian is used. Eigenvalues at or below ``tol * max(1, lambda_max)``
    are treated as the null space and excluded.
    """
    L = laplacian(L) if isinstance(L, WeightedAdjacency) else np.asarray(L, dtype=float)
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    evals, evecs = np.linalg.eigh(0.5 * (L + L.T))
    cut = tol * max(1.0, evals[-1])
    if evals[0] < -cut:
        raise GraphError(f"not a valid Laplacian: eigenvalue {evals[0]:.3g} < 0")
    keep = evals > cut
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((num_samples, int(keep.sum())))
    X = (Z / np.sqrt(evals[keep])) @ evecs[:, keep].T
    if noise_sd > 0:
        X = X + noise_sd * rng.standard_normal(X.shape)
    return X


@dataclass
class ProductGroundTruth:
    factors: FactorGraphSet   # each factor trace-normalized to n_k
    adjacency: WeightedAdjacency  # product, trace-normalized to n
    signals: np.ndarray       # (M, n_0, ..., n_{K-1})


def product_ground_truth(
    kind,
    factor_specs: Sequence[GeneratorSpec],
    num_samples: int,
    seed: Optional[int] = None,
    noise_sd: float = 0.0,
    cap: int = DENSE_CAP,
) -> ProductGroundTruth:
    """Random factor graphs, their product, and GMRF signals on the product."""
    kind = ProductKind.parse(kind)
    factors = tuple(trace_normalize(generate(s), s.n) for s in factor_specs)
    F = FactorGraphSet(kind, factors)
    W = trace_normalize(product_adjacency(F, cap=cap), F.n)
    X = sample_gmrf(W, num_samples, seed=seed, noise_sd=noise_sd)
    return ProductGroundTruth(F, W, X.reshape((num_samples,) + F.dims, order="F"))


def er_factor_specs(
    dims: Sequence[int], p: float, seed: int, weights: str = "uniform"
) -> list[GeneratorSpec]:
    """Erdos-Renyi specs for each factor with seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).generate_state(len(dims))
    return [GeneratorSpec("erdos_renyi", n=int(d), p=p, weights=weights, seed=int(s))
            for d, s in zip(dims, seeds)]
