"""Wall-clock comparison of unstructured and product-structured learning."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from math import prod
from typing import Optional, Sequence

import numpy as np

from .bpgl import PGLConfig, bpgl_learn
from .glp import GLPConfig, glp_learn
from .synth import er_factor_specs, product_ground_truth
from .tensor import ProductKind

BENCH_COLUMNS = ("method", "kind", "dims", "n", "num_samples", "seed",
                 "iterations", "sweeps", "seconds", "seconds_per_sweep")


@dataclass(frozen=True)
class BenchSpec:
    kind: ProductKind = ProductKind.CARTESIAN
    dims: tuple[int, ...] = (8, 8)
    num_samples: int = 500
    seed: int = 0
    p: float = 0.5
    repeats: int = 3
    warmup: int = 1
    methods: tuple[str, ...] = ("glp", "bpgl")
    inner: GLPConfig = GLPConfig()

    def __post_init__(self):
        object.__setattr__(self, "kind", ProductKind.parse(self.kind))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        bad = set(self.methods) - {"glp", "bpgl"}
        if bad:
            raise ValueError(f"unknown bench method(s): {sorted(bad)}")
        if self.repeats < 1 or self.warmup < 0:
            raise ValueError("repeats must be >= 1 and warmup >= 0")


def _timed(fn, repeats: int, warmup: int):
    for _ in range(warmup):
        fn()
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def bench(spec: BenchSpec) -> list[dict]:
    """One row per method; timings are medians over ``repeats`` after ``warmup`` runs.

    Both methods see the same signals. ``seconds_per_sweep`` for ``bpgl`` is
    the total divided by the number of sweeps; for ``glp`` it is the full solve.
    """
    gt = product_ground_truth(spec.kind, er_factor_specs(spec.dims, spec.p, spec.seed),
                              spec.num_samples, seed=spec.seed)
    n = prod(spec.dims)
    rows = []
    for method in spec.methods:
        if method == "glp":
            seconds, res = _timed(lambda: glp_learn(gt.signals, spec.inner), spec.repeats, spec.warmup)
            iters, sweeps, per = res.solve.iterations, 1, seconds
        else:
            cfg = PGLConfig(spec.kind, spec.dims, inner=spec.inner)
            seconds, est = _timed(lambda: bpgl_learn(gt.signals, cfg), spec.repeats, spec.warmup)
            iters = sum(s.iterations for s in est.solves)
            sweeps = max(est.sweeps, 1)
            per = seconds / sweeps
        rows.append({
            "method": method, "kind": spec.kind.value, "dims": "x".join(map(str, spec.dims)),
            "n": n, "num_samples": spec.num_samples, "seed": spec.seed,
            "iterations": iters, "sweeps": sweeps, "seconds": seconds, "seconds_per_sweep": per,
        })
    return rows


def bench_grid(dims_list: Sequence[Sequence[int]], base: Optional[BenchSpec] = None) -> list[dict]:
    base = base or BenchSpec()
    rows = []
    for dims in dims_list:
        rows += bench(replace(base, dims=tuple(dims)))
    return rows
