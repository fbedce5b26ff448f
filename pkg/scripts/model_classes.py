"""Compare eigenvalue-model classes at the optimal measurement with exact outcome laws.

For each pair the grid holds only the fitted optimal measurement, so the
remaining error is the model's approximation and optimization error. Deep
networks are run at several depths because no depth prescription is fixed.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from mrelab.circuits import CircuitAnsatz, ParamGrid, fit_unitary
from mrelab.oracle import measured_rel_entropy
from mrelab.qne import QneConfig, estimate
from mrelab.rng import stream
from mrelab.states import sample_pair_in_class
from mrelab.tables import write_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--b", type=float, default=4.0)
    ap.add_argument("--pairs", type=int, default=5)
    ap.add_argument("--depths", default="2,4,8")
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="runs/models")
    args = ap.parse_args()

    ansatz = CircuitAnsatz.givens(args.d)
    logb = math.log(args.b)
    variants = [("shallow", "closed_form", {}), ("shallow", "gradient", {}), ("poly", "gradient", {"poly_degree": 6})]
    variants += [("deep", "gradient", {"deep_depth": int(L)}) for L in args.depths.split(",")]
    rows = []
    for i in range(args.pairs):
        pair = sample_pair_in_class(args.d, args.b, stream(args.seed, i))
        sol = measured_rel_entropy(pair.rho, pair.sigma)
        point, _ = fit_unitary(ansatz, sol.eigenvectors)
        grid = ParamGrid.singleton(point)
        for kind, inner, extra in variants:
            cfg = QneConfig(ansatz, grid, logb, model_kind=kind, inner=inner, steps=args.steps, sampling="exact", seed=args.seed + i, **extra)
            est = estimate(pair.rho, pair.sigma, cfg)
            label = kind if kind != "deep" else f"deep_L{extra['deep_depth']}"
            rows.append({"pair": i, "model": label, "inner": inner, "truth": sol.value, "estimate": est.value, "gap": sol.value - est.value})
    path = write_csv(Path(args.out_dir) / "model_classes.csv", ("pair", "model", "inner", "truth", "estimate", "gap"), rows)
    for label in dict.fromkeys(r["model"] + "/" + r["inner"] for r in rows):
        gaps = [r["gap"] for r in rows if r["model"] + "/" + r["inner"] == label]
        print(f"{label:24s} mean gap {np.mean(gaps):.2e}  max gap {np.max(gaps):.2e}")
    print(f"-> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
