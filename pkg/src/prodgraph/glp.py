"""Graph learning as a linear program, solved by ADMM.

The learner minimizes ``alpha * tr(W S)`` over packed weights ``w`` subject
to a zero diagonal, ``tr(L) = n`` and nonnegative off-diagonal weights.
The LP is split as ``A w = b, w = y, y_F >= 0`` and solved with the
four-step ADMM iteration (e-, w-, y-, z-updates).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import sparse

from .errors import DimensionError, GraphError, SolverDivergence
from .graph import (
    WeightedAdjacency,
    diagonal_slots,
    offdiagonal_slots,
    packed_length,
    slot_indices,
)

log = logging.getLogger(__name__)


def auto_alpha(n: int, num_samples: int) -> float:
    return math.sqrt(math.log(n) / num_samples)


def auto_rho(num_samples: int) -> float:
    if num_samples < 2:
        raise ValueError("automatic rho needs at least 2 samples (0.75 / log M)")
    return 0.75 / math.log(num_samples)


@dataclass(frozen=True)
class GLPConfig:
    """Solver settings. ``alpha``/``rho`` of ``None`` mean automatic."""

    alpha: Optional[float] = None
    rho: Optional[float] = None
    max_iter: int = 20000
    eps_feas: float = 1e-6
    eps_dual: float = 1e-6

    def __post_init__(self):
        for name in ("alpha", "rho"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not (self.eps_feas > 0 and self.eps_dual > 0):
            raise ValueError("tolerances must be positive")

    def resolve(self, n: int, num_samples: int) -> "GLPConfig":
        """Copy with automatic parameters filled in for ``n`` nodes and ``num_samples``."""
        return replace(
            self,
            alpha=self.alpha if self.alpha is not None else auto_alpha(n, num_samples),
            rho=self.rho if self.rho is not None else auto_rho(num_samples),
        )


# ---------------------------------------------------------------------------
# data term


def as_signal_matrix(X: np.ndarray) -> np.ndarray:
    """``M x n`` matrix of vectorized signals from a matrix or a tensor batch."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    elif X.ndim > 2:
        X = X.reshape(X.shape[0], -1, order="F")
    if X.shape[0] == 0:
        raise ValueError("empty signal set")
    return X


def score_matrix(X: np.ndarray) -> np.ndarray:
    """``S = (sum_m 1 xbar_m^T - sum_m x_m x_m^T) / M`` with ``xbar = x * x``.

    ``tr(W S)`` equals the mean Dirichlet energy of the signals on ``W``.
    """
    X = as_signal_matrix(X)
    m = X.shape[0]
    xbar = (X * X).sum(axis=0) / m
    return np.broadcast_to(xbar, (X.shape[1], X.shape[1])) - X.T @ X / m


def cost_vector(S: np.ndarray, alpha: float) -> np.ndarray:
    """Packed cost ``c`` with ``c @ pack(W) == alpha * tr(W S)`` for symmetric ``W``."""
    S = np.asarray(S, dtype=float)
    rows, cols = slot_indices(S.shape[0])
    c = S[rows, cols] + S[cols, rows]
    diag = rows == cols
    c[diag] = S[rows[diag], rows[diag]]
    return alpha * c


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class ConstraintSystem:
    """Equality constraints ``A w = b`` and the nonnegative index set ``F``.

    Row 0 of ``A`` is the trace row (2 on off-diagonal slots, 1 on diagonal
    slots); rows ``1..n`` select the diagonal slots. ``b = (n, 0, ..., 0)``.
    """

    n: int
    F: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    trace_coef: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return packed_length(self.n)

    @property
    def c_n(self) -> int:
        return 2 * self.n * self.n - self.n

    @property
    def A(self) -> sparse.csr_matrix:
        """Integer constraint matrix (``(n+1) x n(n+1)/2``)."""
        N = self.size
        rows = np.concatenate([np.zeros(N, dtype=int), 1 + np.arange(self.n)])
        cols = np.concatenate([np.arange(N), self.diag])
        vals = np.concatenate([self.trace_coef.astype(np.int64), np.ones(self.n, dtype=np.int64)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n + 1, N))

    def gram_closed_form(self) -> np.ndarray:
        """``A A^T = [[c_n, 1^T], [1, I]]`` as an integer array."""
        G = np.eye(self.n + 1, dtype=np.int64)
        G[0, 0] = self.c_n
        G[0, 1:] = 1
        G[1:, 0] = 1
        return G

    def apply(self, w: np.ndarray) -> np.ndarray:
        out = np.empty(self.n + 1)
        out[0] = self.trace_coef @ w
        out[1:] = w[self.diag]
        return out

    def apply_transpose(self, u: np.ndarray) -> np.ndarray:
        out = self.trace_coef * u[0]
        out[self.diag] += u[1:]
        return out

    def solve_gram_shifted(self, v: np.ndarray) -> np.ndarray:
        """``(I + A A^T)^{-1} v`` via the Schur complement of the leading entry."""
        schur = 1.0 + self.c_n - self.n / 2.0
        u0 = (v[0] - 0.5 * v[1:].sum()) / schur
        out = np.empty_like(v)
        out[0] = u0
        out[1:] = 0.5 * (v[1:] - u0)
        return out

    def solve_normal(self, e: np.ndarray) -> np.ndarray:
        """``(I + A^T A)^{-1} e = e - A^T (I + A A^T)^{-1} A e``."""
        return e - self.apply_transpose(self.solve_gram_shifted(self.apply(e)))


def build_constraints(n: int) -> ConstraintSystem:
    if n < 2:
        raise GraphError("graph learning needs at least 2 nodes")
    diag = diagonal_slots(n)
    coef = np.full(packed_length(n), 2.0)
    coef[diag] = 1.0
    b = np.zeros(n + 1)
    b[0] = n
    return ConstraintSystem(n=n, F=offdiagonal_slots(n), diag=diag, trace_coef=coef, b=b)


# ---------------------------------------------------------------------------
# ADMM


@dataclass
class ADMMResult:
    w: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iterations: int
    converged: bool
    history: np.ndarray = field(repr=False)  # columns: primal, dual (relative)
    degenerate: bool = False

    @property
    def reason(self) -> str:
        return "converged" if self.converged else "max-iter"


def admm_solve(c: np.ndarray, cs: ConstraintSystem, cfg: GLPConfig) -> ADMMResult:
    """Run the ADMM iteration on ``min c^T w  s.t.  A w = b, w_F >= 0``.

    Starts from ``y = 0, z = 1`` and stops once the relative primal residual
    ``||A_w w + A_y y - b~||`` and dual residual ``rho ||w - w_prev||`` are
    both below tolerance, or after ``cfg.max_iter`` iterations. Returns the
    last ``w`` iterate.
    """
    if cfg.rho is None:
        raise ValueError("admm_solve needs a resolved rho")
    c = np.asarray(c, dtype=float)
    N = cs.size
    if c.shape != (N,):
        raise DimensionError(f"cost vector of length {c.size} does not match {N} slots")
    rho = float(cfg.rho)
    F = cs.F
    b = cs.b
    norm_b = np.linalg.norm(b)
    norm_c = np.linalg.norm(c)

    y = np.zeros(N)
    z_a = np.ones(cs.n + 1)
    z_y = np.ones(N)
    w_prev = None
    history = np.empty((cfg.max_iter, 2))
    converged = False
    t = 0
    for t in range(1, cfg.max_iter + 1):
        e = -(cs.apply_transpose(z_a - rho * b) + z_y - rho * y) - c
        w = cs.solve_normal(e) / rho
        y = w + z_y / rho
        y[F] = np.maximum(y[F], 0.0)
        r_a = cs.apply(w) - b
        r_y = w - y
        z_a += rho * r_a
        z_y += rho * r_y

        primal = math.sqrt(r_a @ r_a + r_y @ r_y)
        if not math.isfinite(primal):
            raise SolverDivergence(f"ADMM produced non-finite iterates at iteration {t} (rho={rho})")
        Aw = cs.apply(w)
        primal /= max(math.sqrt(Aw @ Aw + w @ w), np.linalg.norm(y), norm_b)
        if w_prev is None:
            dual = math.inf
        else:
            dw = w - w_prev
            dual = rho * math.sqrt(dw @ dw) / max(
                np.linalg.norm(cs.apply_transpose(z_a) + z_y), norm_c, 1e-300
            )
        history[t - 1] = primal, dual
        w_prev = w
        if primal <= cfg.eps_feas and dual <= cfg.eps_dual:
            converged = True
            break

    return ADMMResult(
        w=w,
        y=y,
        z=np.concatenate([z_a, z_y]),
        iterations=t,
        converged=converged,
        history=history[:t].copy(),
        degenerate=norm_c == 0.0,
    )


def postprocess(w: np.ndarray, n: int) -> WeightedAdjacency:
    """Clamp negative weights to zero and zero the diagonal slots."""
    w = np.maximum(np.asarray(w, dtype=float), 0.0)
    w[diagonal_slots(n)] = 0.0
    return WeightedAdjacency(n, w)


@dataclass
class GLPResult:
    adjacency: WeightedAdjacency
    solve: ADMMResult
    config: GLPConfig

    @property
    def degenerate(self) -> bool:
        return self.solve.degenerate


def glp_learn(X: np.ndarray, cfg: GLPConfig = GLPConfig()) -> GLPResult:
    """Learn a graph from the rows of ``X`` (``M x n``, or a tensor batch)."""
    X = as_signal_matrix(X)
    m, n = X.shape
    cfg = cfg.resolve(n, m)
    S = score_matrix(X)
    cs = build_constraints(n)
    res = admm_solve(cost_vector(S, cfg.alpha), cs, cfg)
    if res.degenerate:
        log.warning("objective degenerate: score matrix is zero, returning a feasible point")
    if not res.converged:
        log.info("ADMM stopped at max_iter=%d without meeting tolerance", cfg.max_iter)
    return GLPResult(adjacency=postprocess(res.w, n), solve=res, config=cfg)
