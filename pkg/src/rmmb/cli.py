"""Command-line front door.

Exit codes: 0 evaluated (a violated inequality is still data), 2 schema
error, 3 contract violation (e.g. a bid outside its support), 4 failed
precondition (e.g. a matroid handed to the counterexample builder).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .counterexample import (MatroidInputError, build_rmmb_counterexample, drs_counterexample,
                             ratio_experiment, vcg_witness, verify_rmmb_counterexample)
from .distribution import DistributionError, OutsideSupport, distribution_from_json
from .mechanism import MechanismError
from .scenario import ScenarioError, report_csv, rmmb_check, scenario_from_json, scenario_to_json
from .set_system import (SetSystemError, is_matroid, nonmatroid_witness, system_from_json,
                         witness_properties)

EXIT_OK, EXIT_SCHEMA, EXIT_CONTRACT, EXIT_PRECONDITION = 0, 2, 3, 4
FIXTURES = ("example41.json", "drs_appendixB.json", "alice_bob_single_item.json")


class SchemaError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    input: Optional[str] = None
    trials: int = 10_000
    seed: int = 0
    mechanism: str = "myeropt"
    format: str = "json"
    out: Optional[str] = None
    n_param: Optional[list] = None
    vcg: bool = False
    scenario_out: Optional[str] = None
    workers: int = 1
    strict_support: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise SchemaError("--trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise SchemaError("--seed must be a 64-bit unsigned integer")


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("rmmb") / "data" / name))


def _load(path: str) -> tuple[dict, str]:
    p = Path(path)
    if not p.exists() and p.name in FIXTURES:
        p = fixture_path(p.name)
    try:
        return json.loads(p.read_text()), p.stem
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def _load_system(path: str):
    obj, stem = _load(path)
    return system_from_json(obj["market"] if "market" in obj else obj), stem


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _check_fixed_bids(obj: dict) -> None:
    """Reject (rather than clamp) red fixed bids outside the declared support."""
    for i, b in enumerate(obj.get("bidders", [])):
        bid = (b.get("red_behavior") or {}).get("fixed_bid")
        if bid is not None:
            try:
                distribution_from_json(b["dist"]).check_support(float(bid))
            except OutsideSupport as exc:
                raise OutsideSupport(f"bidder {i}: {exc}") from None


def cmd_run(cfg: RunConfig) -> int:
    obj, stem = _load(cfg.input)
    if cfg.strict_support:
        _check_fixed_bids(obj)
    scenario = scenario_from_json(obj, name=stem)
    report = rmmb_check(scenario, cfg.mechanism, trials=cfg.trials, seed=cfg.seed, workers=cfg.workers)
    if cfg.format == "csv":
        _emit(cfg, report_csv(report, scenario.name, cfg.mechanism))
    else:
        _emit(cfg, _dump({"scenario_id": scenario.name, "mech": cfg.mechanism, **report.to_json()}))
    return EXIT_OK


def cmd_check_matroid(cfg: RunConfig) -> int:
    system, stem = _load_system(cfg.input)
    out: dict = {"system": stem, "matroid": is_matroid(system)}
    if not out["matroid"]:
        i_set, j_set = nonmatroid_witness(system)
        p1, p2, p3 = witness_properties(system, i_set, j_set)
        out["witness"] = {"I": [system.label(e) for e in sorted(i_set)],
                          "J": [system.label(e) for e in sorted(j_set)]}
        out["properties"] = {"large_sets_contain_I_minus_J": p1, "J_minus_I_nonempty": p2,
                             "I_maximum_cardinality": p3}
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["system", "matroid", "I", "J"])
        wit = out.get("witness", {})
        w.writerow([stem, out["matroid"], " ".join(wit.get("I", [])), " ".join(wit.get("J", []))])
        _emit(cfg, buf.getvalue())
    else:
        _emit(cfg, _dump(out))
    return EXIT_OK


def cmd_counterexample(cfg: RunConfig) -> int:
    system, stem = _load_system(cfg.input)
    n_param = cfg.n_param[0] if cfg.n_param else None
    scenario, report = build_rmmb_counterexample(system, n_param=n_param)
    out = {"system": stem, "report": report.to_json(system),
           "verified": verify_rmmb_counterexample(report, scenario)}
    if cfg.vcg:
        out["vcg_witness"] = vcg_witness(system).to_json(system)
    target = Path(cfg.scenario_out or f"{stem}.counterexample.json")
    scenario_json = scenario_to_json(scenario)
    scenario_json["id"] = f"{stem}-counterexample"
    target.write_text(_dump(scenario_json))
    out["scenario_file"] = str(target)
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["system", "n_param", "rev_all", "rev_green", "violated"])
        w.writerow([stem, report.n_param, report.rev_all, report.rev_green, report.violated])
        _emit(cfg, buf.getvalue())
    else:
        _emit(cfg, _dump(out))
    return EXIT_OK


def cmd_ratio(cfg: RunConfig) -> int:
    system, stem = _load_system(cfg.input)
    if not cfg.n_param:
        raise SchemaError("ratio needs at least one --n-param")
    rows = ratio_experiment(system, cfg.n_param, trials=cfg.trials, seed=cfg.seed)
    if cfg.format == "csv":
        _emit(cfg, "N,ratio\n" + "".join(f"{n!r},{r!r}\n" for n, r in rows))
    else:
        _emit(cfg, _dump({"system": stem, "rows": [{"N": n, "ratio": r} for n, r in rows]}))
    return EXIT_OK


def cmd_drs(cfg: RunConfig) -> int:
    _, report = drs_counterexample()
    if cfg.format == "csv":
        _emit(cfg, "A,B,y,x\n" + "".join(",".join(r) + "\n" for r in report.rows))
    else:
        _emit(cfg, _dump({"is_matroid": report.is_matroid, "exchange_holds": report.exchange_holds,
                          "table_rows_ok": list(report.table_rows_ok),
                          "rows": [dict(zip("AByx", r)) for r in report.rows]}))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check-matroid": cmd_check_matroid, "counterexample": cmd_counterexample,
            "ratio": cmd_ratio, "drs": cmd_drs}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmmb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("input", help="JSON file (bundled fixture names also accepted)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", help="write output here instead of stdout")
        return p

    run = common(sub.add_parser("run", help="compare revenue with and without red bidders"))
    run.add_argument("--trials", type=int, default=10_000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--mechanism", choices=("myeropt", "vcg"), default="myeropt")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--strict-support", action="store_true",
                     help="exit 3 on red fixed bids outside their support instead of clamping")

    common(sub.add_parser("check-matroid", help="matroid verdict with a witness when it fails"))

    ce = common(sub.add_parser("counterexample", help="build an RMMB-violating scenario"))
    ce.add_argument("--n-param", type=float, nargs=1)
    ce.add_argument("--vcg", action="store_true", help="also report a VCG revenue-monotonicity witness")
    ce.add_argument("--scenario-out", help="where to write the generated scenario")

    ratio = common(sub.add_parser("ratio", help="green-only / all-bidder revenue ratio per N"))
    ratio.add_argument("--n-param", type=float, nargs="+", required=True)
    ratio.add_argument("--trials", type=int, default=1)
    ratio.add_argument("--seed", type=int, default=0)

    common(sub.add_parser("drs", help="check the maximal-set exchange counterexample"), needs_input=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
        return COMMANDS[cfg.subcommand](cfg)
    except MatroidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (OutsideSupport, MechanismError) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (SchemaError, SetSystemError, DistributionError, ScenarioError, KeyError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
