"""Freeze F-measure thresholds for the desk-scale recovery check.

Runs the product-learning pipeline on calibration seeds that the test suite
never uses and stores, per product kind, the median per-factor F-measure and
the threshold (median minus a safety margin) in a JSON file together with a
run manifest.
"""

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from prodgraph import io
from prodgraph.bpgl import PGLConfig
from prodgraph.cli import _version
from prodgraph.evaluation import recovery_fmeasures
from prodgraph.tensor import ProductKind

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "tests" / "calibration" / "recovery_4x4.json"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="4,4")
    ap.add_argument("--num-samples", type=int, default=2000)
    ap.add_argument("--seed-start", type=int, default=1000)
    ap.add_argument("--num-seeds", type=int, default=20)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--margin", type=float, default=0.1,
                    help="subtracted from the calibration median to form the threshold")
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args(argv)

    dims = tuple(int(d) for d in args.dims.split(","))
    seeds = list(range(args.seed_start, args.seed_start + args.num_seeds))
    started = io.utc_now()
    kinds = {}
    for kind in ProductKind:
        t0 = time.perf_counter()
        f = recovery_fmeasures(kind, dims, args.num_samples, seeds, p=args.p)
        med = float(np.median(f))
        kinds[kind.value] = {
            "median_f_measure": med,
            "threshold": max(med - args.margin, 0.0),
            "f_measures": f,
            "seconds": time.perf_counter() - t0,
        }
        print(f"{kind.value:10s} median F = {med:.4f}  threshold = {kinds[kind.value]['threshold']:.4f}")
    record = {
        "thresholds": {k: v["threshold"] for k, v in kinds.items()},
        "kinds": kinds,
        "manifest": {
            "command": "calibrate_recovery",
            "dims": dims,
            "num_samples": args.num_samples,
            "seeds": seeds,
            "p": args.p,
            "margin": args.margin,
            "statistic": "median per-factor F-measure",
            "solver": asdict(PGLConfig(ProductKind.CARTESIAN, dims)) | {"kind": "per-kind"},
            "version": _version(),
            "numpy": np.__version__,
            "started": started,
            "finished": io.utc_now(),
        },
    }
    io.atomic_write(args.out, json.dumps(record, indent=2, default=io._jsonable) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
