"""Monte Carlo revenue-monotonicity check on random matroid markets with continuous values.

    python3 scripts/rmmb_matroid_sweep.py --scenarios 100 --trials 100000 --workers 1
"""
import argparse
import csv
import sys
import time

import numpy as np

from rmmb.distribution import ParetoLike, Uniform
from rmmb.scenario import BidderSpec, Scenario, rmmb_check
from rmmb.set_system import SetSystem


def random_dist(rng):
    if rng.random() < 0.5:
        lo = float(rng.uniform(0, 2))
        return Uniform(lo, lo + float(rng.uniform(0.5, 6)))
    return ParetoLike(float(rng.uniform(2.5, 8)))


def random_market(rng, max_n):
    n = int(rng.integers(2, max_n + 1))
    if rng.random() < 0.4:
        return "uniform", SetSystem.uniform(n, int(rng.integers(1, n + 1)))
    if rng.random() < 0.5:
        v = int(rng.integers(2, 6))
        edges = [tuple(int(x) for x in rng.integers(0, v, size=2)) for _ in range(n)]
        return "graphic", SetSystem.graphic(v, edges)
    adj = [sorted(set(rng.integers(0, 4, size=int(rng.integers(1, 3))).tolist())) for _ in range(n)]
    return "transversal", SetSystem.transversal(adj)


def random_scenario(rng, max_n):
    kind, market = random_market(rng, max_n)
    bidders = []
    for _ in range(market.n):
        d, r = random_dist(rng), rng.random()
        if r < 0.25:
            bidders.append(BidderSpec.red_fixed(d, float(d.sample(rng.random()))))
        elif r < 0.4:
            bidders.append(BidderSpec.red_true(d, random_dist(rng)))
        else:
            bidders.append(BidderSpec.green(d))
    return kind, Scenario(market, tuple(bidders))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", type=int, default=100)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-n", type=int, default=6)
    ap.add_argument("--mechanism", choices=("myeropt", "vcg"), default="myeropt")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["scenario", "kind", "n", "reds", "rev_all", "rev_green", "margin", "diff_se", "holds"])
    t0 = time.perf_counter()
    held = 0
    for k in range(args.scenarios):
        kind, s = random_scenario(rng, args.max_n)
        rep = rmmb_check(s, args.mechanism, trials=args.trials, seed=args.seed + k, workers=args.workers)
        held += rep.holds
        w.writerow([k, kind, s.market.n, len(s.red), f"{rep.rev_all.mean:.6f}", f"{rep.rev_green.mean:.6f}",
                    f"{rep.margin:.6f}", f"{rep.diff_std_error:.2e}", rep.holds])
    print(f"{held}/{args.scenarios} hold, {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
