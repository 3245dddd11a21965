"""Command-line front end.

Every subcommand writes ``manifest.json`` into ``--out`` next to its
results. Exit status: 0 on success, 2 on usage errors, 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from importlib import metadata
from math import prod
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .bench import BENCH_COLUMNS, BenchSpec, bench
from .bpgl import PGLConfig, bpgl_learn, signal_batch
from .errors import ProdGraphError
from .evaluation import ScalingTable, recovery_metrics, scaling_study
from .glp import GLPConfig, as_signal_matrix, glp_learn
from .predict import CovarianceSurrogate, graph_surrogate, holdout_protocol, rmse_db_reduction, scm
from .synth import FAMILIES, WEIGHT_LAWS, GeneratorSpec, er_factor_specs, generate, product_ground_truth, sample_gmrf
from .tensor import ProductKind

log = logging.getLogger("prodgraph")

METRIC_COLUMNS = ("precision", "recall", "f_measure", "rel_fro_error", "threshold")
PREDICT_COLUMNS = ("surrogate", "rmse", "db_vs_scm")


class UsageError(Exception):
    """Bad command-line input; reported with exit status 2."""


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# argument types


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.replace("x", ",").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be comma-separated integers, got {text!r}")
    if not dims or min(dims) < 2:
        raise argparse.ArgumentTypeError(f"every dim must be at least 2, got {text!r}")
    return dims


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _auto_float(text: str) -> Optional[float]:
    if str(text).lower() == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def _kind(text: str) -> ProductKind:
    try:
        return ProductKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ---------------------------------------------------------------------------
# parser


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_auto_float, default=None, help="weight of the data term, or 'auto'")
    p.add_argument("--rho", type=_auto_float, default=None, help="ADMM penalty, or 'auto'")
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--eps", type=float, default=1e-6, help="relative primal/dual tolerance")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--config", type=Path, default=None, help="flat 'key = value' file; flags win")
    common.add_argument("--trace", action="store_true", help="debug logging on stderr")

    parser = argparse.ArgumentParser(prog="prodgraph", description="Graph and product-graph learning.")
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="random graph to adjacency CSV")
    p.add_argument("--family", choices=FAMILIES, default="erdos_renyi")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--p", type=float, default=0.3)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--shape", type=_dims, default=None)
    p.add_argument("--weights", choices=WEIGHT_LAWS, default="uniform")

    p = sub.add_parser("sample", parents=[common], help="GMRF signals to a PGTN tensor file")
    p.add_argument("--graph", type=Path, default=None, help="adjacency CSV to sample on")
    p.add_argument("--kind", type=_kind, default=None, help="product kind for random ER factors")
    p.add_argument("--dims", type=_dims, default=None)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--num-samples", type=int, default=1000)
    p.add_argument("--noise-sd", type=float, default=0.0)

    p = sub.add_parser("learn", parents=[common], help="unstructured graph learning")
    p.add_argument("--input", type=Path, required=True)
    _add_solver_flags(p)

    p = sub.add_parser("learn-product", parents=[common], help="product graph learning")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--kind", type=_kind, required=True)
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--max-sweeps", type=int, default=20)
    p.add_argument("--tol-outer", type=float, default=1e-6)
    _add_solver_flags(p)

    p = sub.add_parser("eval", parents=[common], help="edge-recovery metrics")
    p.add_argument("--estimate", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("scaling-study", parents=[common], help="error versus sample size")
    p.add_argument("--kind", type=_kind, required=True)
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--m-grid", type=_int_list, default=[10, 100, 1000, 10000])
    p.add_argument("--num-seeds", type=int, default=20)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--max-sweeps", type=int, default=20)
    p.add_argument("--baseline", action="store_true", help="also fit unstructured GLP")
    _add_solver_flags(p)

    p = sub.add_parser("predict", parents=[common], help="LMMSE hold-out prediction")
    p.add_argument("--input", type=Path, required=True, help="test signal tensor")
    p.add_argument("--train", type=Path, default=None, help="training signals for the scm surrogate")
    p.add_argument("--dims", type=_dims, default=None, help="needed for CSV input")
    p.add_argument("--miss-mode", type=int, required=True)
    p.add_argument("--miss-index", type=int, required=True)
    p.add_argument("--surrogate", action="append", default=None,
                   help="'scm', 'graph:W.csv' (uses W + I) or 'cov:S.csv'; repeatable")
    p.add_argument("--ridge", type=float, default=None)

    p = sub.add_parser("bench", parents=[common], help="timing of glp versus bpgl")
    p.add_argument("--kind", type=_kind, default=ProductKind.CARTESIAN)
    p.add_argument("--dims", type=_dims, action="append", default=None)
    p.add_argument("--num-samples", type=int, default=500)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--warmup", type=int, default=1)
    _add_solver_flags(p)
    return parser


def _reject_unknown_flags(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    # argparse reports missing required flags before unknown ones; name the unknown flag first
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if command is None:
        return
    sub = choices[command]
    known = {o for a in sub._actions for o in a.option_strings}
    for tok in argv[list(argv).index(command) + 1:]:
        if tok == "--":
            break
        if tok.startswith("--") and tok.split("=", 1)[0] not in known:
            sub.error(f"unrecognized arguments: {tok}")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` act as defaults under explicit flags."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _reject_unknown_flags(parser, argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    pre.add_argument("command", nargs="?")
    first, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    if first.config is None or first.command not in choices:
        return parser.parse_args(argv)
    try:
        values = io.read_config(first.config)
    except (OSError, io.FormatError) as exc:
        raise UsageError(f"cannot read config {first.config}: {exc}")
    command = first.command
    sub = choices[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for '{command}'")
        if action.const is True:  # store_true
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            conv = action.type or str
            try:
                value = conv(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}")
            defaults[key] = [value] if isinstance(action, argparse._AppendAction) else value
    for key in defaults:
        actions[key].required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# commands


class Run:
    """Collects inputs, outputs and termination reasons for the manifest."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.started = io.utc_now()
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.resolved: dict = {}
        self.reasons: list[str] = []
        self.seeds: list[int] = [args.seed]

    def input(self, path: Path) -> Path:
        if not Path(path).is_file():
            raise UsageError(f"input file not found: {path}")
        self.inputs[str(path)] = io.sha256_file(path)
        return path

    def output(self, name: str) -> Path:
        path = self.out / name
        self.outputs[name] = str(path)
        return path

    def manifest(self) -> dict:
        config = {k: v for k, v in vars(self.args).items() if k not in ("trace",)}
        config.update(self.resolved)
        return {
            "command": self.args.command,
            "argv": self.argv,
            "config": config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": {k: {"path": v, "sha256": io.sha256_file(v)} for k, v in self.outputs.items()},
            "termination": self.reasons,
            "version": _version(),
            "numpy": np.__version__,
            "started": self.started,
            "finished": io.utc_now(),
        }


def _inner_config(args) -> GLPConfig:
    return GLPConfig(alpha=args.alpha, rho=args.rho, max_iter=args.max_iter,
                     eps_feas=args.eps, eps_dual=args.eps)


def cmd_generate(args, run: Run) -> None:
    spec = GeneratorSpec(args.family, n=args.n, p=args.p, m=args.m, degree=args.degree,
                         shape=args.shape, weights=args.weights, seed=args.seed)
    W = generate(spec)
    io.write_adjacency_csv(run.output("W.csv"), W)
    io.write_edge_list(run.output("W.tsv"), W)
    run.resolved["generator"] = asdict(spec)


def cmd_sample(args, run: Run) -> None:
    if (args.graph is None) == (args.kind is None):
        raise UsageError("sample needs exactly one of --graph or --kind/--dims")
    if args.graph is not None:
        W = io.read_adjacency_csv(run.input(args.graph))
        X = sample_gmrf(W, args.num_samples, seed=args.seed, noise_sd=args.noise_sd)
    else:
        if args.dims is None:
            raise UsageError("--kind needs --dims")
        gt = product_ground_truth(args.kind, er_factor_specs(args.dims, args.p, args.seed),
                                  args.num_samples, seed=args.seed, noise_sd=args.noise_sd)
        for k, f in enumerate(gt.factors.factors):
            io.write_adjacency_csv(run.output(f"true_factor_{k}.csv"), f)
        io.write_adjacency_csv(run.output("true_W.csv"), gt.adjacency)
        X = gt.signals
    io.write_signals_pgtn(run.output("signals.pgtn"), X)


def cmd_learn(args, run: Run) -> None:
    X = as_signal_matrix(io.read_signals(run.input(args.input)))
    res = glp_learn(X, _inner_config(args))
    run.resolved.update(alpha=res.config.alpha, rho=res.config.rho)
    run.reasons.append(res.solve.reason)
    io.write_adjacency_csv(run.output("W.csv"), res.adjacency)
    io.write_edge_list(run.output("W.tsv"), res.adjacency)
    rows = [{"iteration": t + 1, "primal": p, "dual": d} for t, (p, d) in enumerate(res.solve.history)]
    io.write_rows_csv(run.output("residuals.csv"), rows, ("iteration", "primal", "dual"))


def _load_batch(path: Path, dims) -> np.ndarray:
    X = io.read_signals(path)
    n = int(prod(X.shape[1:]))
    if n != prod(dims):
        raise UsageError(
            f"dims product mismatch: --dims {','.join(map(str, dims))} multiplies to "
            f"{prod(dims)} but the input has {n} entries per observation"
        )
    return signal_batch(X, dims)


def cmd_learn_product(args, run: Run) -> None:
    X = _load_batch(run.input(args.input), args.dims)
    cfg = PGLConfig(args.kind, args.dims, max_sweeps=args.max_sweeps,
                    inner=_inner_config(args), tol_outer=args.tol_outer)
    m = X.shape[0]
    run.resolved["factor_configs"] = [asdict(cfg.factor_config(k, m)) for k in range(len(args.dims))]
    est = bpgl_learn(X, cfg)
    run.reasons.append(est.reason)
    for k, f in enumerate(est.factors):
        io.write_adjacency_csv(run.output(f"factor_{k}.csv"), f)
    io.write_rows_csv(run.output("objective_history.csv"),
                      [{"sweep": s, "objective": v} for s, v in enumerate(est.history)],
                      ("sweep", "objective"))
    io.write_rows_csv(run.output("solves.csv"), [asdict(s) for s in est.solves],
                      ("sweep", "factor", "iterations", "converged", "accepted", "objective"))


def cmd_eval(args, run: Run) -> None:
    est = io.read_adjacency_csv(run.input(args.estimate))
    truth = io.read_adjacency_csv(run.input(args.truth))
    met = recovery_metrics(est, truth, threshold=args.threshold)
    io.write_rows_csv(run.output("metrics.csv"), [asdict(met)], METRIC_COLUMNS)


def cmd_scaling_study(args, run: Run) -> None:
    seeds = list(range(args.seed, args.seed + args.num_seeds))
    run.seeds = seeds
    cfg = PGLConfig(args.kind, args.dims, max_sweeps=args.max_sweeps, inner=_inner_config(args))
    table = scaling_study(args.kind, args.dims, args.m_grid, seeds, config=cfg, p=args.p,
                          noise_sd=args.noise_sd, baseline=args.baseline,
                          glp_config=_inner_config(args))
    io.write_rows_csv(run.output("scaling.csv"), table.rows, ScalingTable.COLUMNS)
    io.write_rows_csv(run.output("scaling_summary.csv"), table.summary(),
                      ("kind", "method", "num_samples", "median_fro_error", "median_f_measure"))
    run.reasons.append(f"trend_nonincreasing={table.verdict()}")


def _surrogate(spec: str, run: Run, train: Optional[np.ndarray]) -> CovarianceSurrogate:
    if spec == "scm":
        if train is None:
            raise UsageError("the scm surrogate needs --train")
        return scm(train)
    source, _, path = spec.partition(":")
    if source == "graph" and path:
        return graph_surrogate(io.read_adjacency_csv(run.input(Path(path))))
    if source == "cov" and path:
        return CovarianceSurrogate(io.read_matrix_csv(run.input(Path(path))), "file")
    raise UsageError(f"bad --surrogate {spec!r}; expected scm, graph:PATH or cov:PATH")


def cmd_predict(args, run: Run) -> None:
    X = io.read_signals(run.input(args.input))
    dims = args.dims or tuple(X.shape[1:])
    if len(dims) < 2 and args.dims is None:
        raise UsageError("CSV input needs --dims")
    X = _load_batch(args.input, dims)
    train = _load_batch(run.input(args.train), dims) if args.train else None
    specs = args.surrogate or ["scm"]
    rmses = {}
    for spec in specs:
        S = _surrogate(spec, run, train)
        rmses[spec] = holdout_protocol(X, dims, args.miss_mode, args.miss_index, S, ridge=args.ridge)
    base = rmses.get("scm")
    rows = []
    for spec, r in rmses.items():
        db = rmse_db_reduction(r, base) if base and r > 0 else ""
        rows.append({"surrogate": spec, "rmse": r, "db_vs_scm": db})
    io.write_rows_csv(run.output("predict.csv"), rows, PREDICT_COLUMNS)


def cmd_bench(args, run: Run) -> None:
    rows = []
    for dims in args.dims or [(8, 8)]:
        spec = BenchSpec(kind=args.kind, dims=dims, num_samples=args.num_samples, seed=args.seed,
                         p=args.p, repeats=args.repeats, warmup=args.warmup, inner=_inner_config(args))
        rows += bench(spec)
    io.write_rows_csv(run.output("bench.csv"), rows, BENCH_COLUMNS)


COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "learn": cmd_learn,
    "learn-product": cmd_learn_product,
    "eval": cmd_eval,
    "scaling-study": cmd_scaling_study,
    "predict": cmd_predict,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"prodgraph: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.trace else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    run = Run(args, argv)
    try:
        COMMANDS[args.command](args, run)
        run.out.mkdir(parents=True, exist_ok=True)
        io.write_manifest(run.out / "manifest.json", run.manifest())
    except UsageError as exc:
        print(f"prodgraph: error: {exc}", file=sys.stderr)
        return 2
    except (ProdGraphError, ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"prodgraph: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
