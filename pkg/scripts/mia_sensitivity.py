"""Membership-inference advantage across discriminator depth, training length,
seed and scheme. Writes one CSV row per setting (plot-ready).

    python3 scripts/mia_sensitivity.py --out results/mia_sensitivity.csv
"""

import argparse
import csv
import itertools
import time
from pathlib import Path

import numpy as np

from prsguard import genmodel as gm
from prsguard import mia
from prsguard.prs import SchemeParams

SCHEMES = {
    "phase": lambda n: SchemeParams.phase(),
    "basis": lambda n: SchemeParams.basis(2 * n, 4),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/mia_sensitivity.csv"))
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--steps", type=int, nargs="+", default=[20, 60])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--schemes", nargs="+", default=["phase"], choices=sorted(SCHEMES))
    ap.add_argument("--plaintext", action="store_true", help="also run the unencrypted arm")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    arms = [True, False] if args.plaintext else [True]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "encrypted", "depth", "steps", "seed", "trials",
                    "advantage", "ci_low", "ci_high", "auc", "seconds"])
        for scheme, depth, steps, seed, enc in itertools.product(
            args.schemes, args.depths, args.steps, args.seeds, arms
        ):
            pool = mia.synthetic_pool(args.n, 24, np.random.default_rng(seed))
            tmpl = gm.TrainConfig(n=args.n, dataset=pool[:1], scheme=SCHEMES[scheme](args.n),
                                  depth=depth, steps=steps, learning_rate=0.2, batch_size=8)
            cfg = mia.MIAGameConfig(pool=pool, train_template=tmpl, train_size=4,
                                    trials=args.trials, seed=seed, encrypted=enc)
            t0 = time.perf_counter()
            _, res = mia.run_game(cfg, workers=args.workers)
            lo, hi = res.ci
            row = [scheme, enc, depth, steps, seed, res.trials, f"{res.advantage:.4f}",
                   f"{lo:.4f}", f"{hi:.4f}", f"{res.auc:.4f}", f"{time.perf_counter() - t0:.1f}"]
            w.writerow(row)
            fh.flush()
            print(*row, sep="\t", flush=True)


if __name__ == "__main__":
    main()
