"""LMMSE prediction of missing values with covariance surrogates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError
from .glp import as_signal_matrix
from .graph import GraphLike, as_matrix

PROVENANCE = ("scm", "graph_w_plus_i", "true", "file")


@dataclass(frozen=True)
class CovarianceSurrogate:
    sigma: np.ndarray
    provenance: str

    def __post_init__(self):
        S = np.asarray(self.sigma, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {S.shape}")
        if not np.allclose(S, S.T, atol=1e-10 * max(1.0, np.abs(S).max())):
            raise ValueError("covariance surrogate must be symmetric")
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "sigma", S)


def scm(X: np.ndarray) -> CovarianceSurrogate:
    """Sample covariance ``(1/M) sum_m x_m x_m^T`` (zero mean assumed)."""
    X = as_signal_matrix(X)
    return CovarianceSurrogate(X.T @ X / X.shape[0], "scm")


def graph_surrogate(W: GraphLike) -> CovarianceSurrogate:
    """``W + I`` used in place of the data covariance."""
    W = as_matrix(W)
    return CovarianceSurrogate(W + np.eye(W.shape[0]), "graph_w_plus_i")


def default_ridge(sigma_oo: np.ndarray) -> float:
    return 1e-6 * np.trace(sigma_oo) / sigma_oo.shape[0]


def lmmse_gain(
    sigma: np.ndarray,
    obs_idx: Sequence[int],
    miss_idx: Sequence[int],
    ridge: Optional[float] = None,
) -> np.ndarray:
    """Matrix ``K`` with ``x_miss_hat = x_obs @ K`` (rows are samples)."""
    sigma = as_matrix(sigma.sigma if isinstance(sigma, CovarianceSurrogate) else sigma)
    obs = np.asarray(obs_idx, dtype=int)
    miss = np.asarray(miss_idx, dtype=int)
    if np.intersect1d(obs, miss).size:
        raise ValueError("observed and missing index sets overlap")
    if len(set(obs.tolist())) != obs.size or len(set(miss.tolist())) != miss.size:
        raise ValueError("index sets contain duplicates")
    n = sigma.shape[0]
    if obs.size and (obs.min() < 0 or obs.max() >= n) or miss.size and (miss.min() < 0 or miss.max() >= n):
        raise DimensionError(f"index out of range for a {n}-dimensional covariance")
    s_oo = sigma[np.ix_(obs, obs)]
    s_om = sigma[np.ix_(obs, miss)]
    if ridge is None:
        ridge = default_ridge(s_oo) if obs.size else 0.0
    try:
        return np.linalg.solve(s_oo + ridge * np.eye(obs.size), s_om)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "observed covariance block is singular; use a positive ridge"
        ) from None


def lmmse_predict(
    sigma,
    x_obs: np.ndarray,
    obs_idx: Sequence[int],
    miss_idx: Sequence[int],
    ridge: Optional[float] = None,
) -> np.ndarray:
    """``Sigma_mo (Sigma_oo + ridge I)^{-1} x_obs``; ``x_obs`` may hold one sample per row."""
    K = lmmse_gain(sigma, obs_idx, miss_idx, ridge)
    return np.asarray(x_obs, dtype=float) @ K


def rmse_db_reduction(rmse_method: float, rmse_baseline: float) -> float:
    """``20 log10(baseline / method)``; positive when the method beats the baseline."""
    if not (rmse_method > 0 and rmse_baseline > 0):
        raise ValueError("RMSE values must be positive")
    return 20.0 * math.log10(rmse_baseline / rmse_method)


def slab_indices(dims: Sequence[int], mode: int, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized positions (observed, missing) when slab ``index`` of ``mode`` is removed."""
    dims = tuple(int(d) for d in dims)
    if not 0 <= mode < len(dims):
        raise DimensionError(f"mode {mode} out of range for an order-{len(dims)} tensor")
    if not 0 <= index < dims[mode]:
        raise DimensionError(f"slab index {index} out of range for mode {mode} of size {dims[mode]}")
    mask = np.zeros(dims, dtype=bool)
    sl = [slice(None)] * len(dims)
    sl[mode] = index
    mask[tuple(sl)] = True
    flat = mask.ravel(order="F")
    return np.flatnonzero(~flat), np.flatnonzero(flat)


def holdout_protocol(
    X_test: np.ndarray,
    dims: Sequence[int],
    miss_mode: int,
    miss_index: int,
    surrogate,
    ridge: Optional[float] = None,
) -> float:
    """RMSE over all entries of the removed slab, predicted by LMMSE from the rest."""
    X = as_signal_matrix(X_test)
    obs, miss = slab_indices(dims, miss_mode, miss_index)
    sigma = surrogate.sigma if isinstance(surrogate, CovarianceSurrogate) else np.asarray(surrogate)
    if X.shape[1] != sigma.shape[0]:
        raise DimensionError(f"signals of dimension {X.shape[1]} for a {sigma.shape[0]}-dim covariance")
    pred = lmmse_predict(sigma, X[:, obs], obs, miss, ridge)
    return float(np.sqrt(np.mean((pred - X[:, miss]) ** 2)))
