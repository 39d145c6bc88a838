"""Green-only vs all-bidder revenue ratio as the tail parameter N grows.

    python3 scripts/ratio_experiment.py --n-param 3 5 12 102 1002
    python3 scripts/ratio_experiment.py --system my_system.json
"""
import argparse
import json
import sys
from pathlib import Path

from rmmb.cli import fixture_path
from rmmb.counterexample import drs_system, ratio_experiment
from rmmb.set_system import system_from_json


def load(path):
    obj = json.loads(Path(path).read_text())
    return system_from_json(obj.get("market", obj))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-param", type=float, nargs="+", default=[3, 4, 5, 12, 52, 102, 1002])
    ap.add_argument("--system", action="append", help="extra set-system JSON files")
    args = ap.parse_args(argv)

    systems = {"ab_or_c": load(fixture_path("example41.json")), "exchange_nonmatroid": drs_system()}
    for p in args.system or []:
        systems[Path(p).stem] = load(p)

    print("system,N,ratio")
    for name, s in systems.items():
        for n_param, ratio in ratio_experiment(s, args.n_param):
            print(f"{name},{n_param:g},{ratio:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
