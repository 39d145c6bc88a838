"""Green/red bidder scenarios and revenue estimation.

Green bidders draw values from their specified distribution.  Red bidders
either submit a fixed bid or draw from an undisclosed distribution; in both
cases the mechanism still uses the specified one.  ``estimate_revenue`` and
``rmmb_check`` compare the revenue with everyone present against the revenue
of the same mechanism run on the green bidders alone.

Random draws are a deterministic function of ``(seed, stream, trial, bidder)``:
trials are cut into fixed blocks, and each block gets its own generator keyed
by ``SeedSequence([seed, stream, block])``.  Results therefore do not depend
on how blocks are distributed across workers.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .distribution import Discrete, ValueDistribution, distribution_from_json
from .mechanism import run_batch
from .set_system import SetSystem, restriction, system_from_json, system_to_json

log = logging.getLogger(__name__)

GREEN = "green"
RED = "red"
BLOCK = 4096
GREEN_STREAM = 0
RED_STREAM = 1
MAX_PROFILES = 10**6
EXACT_TOL = 1e-9


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class BidderSpec:
    dist: ValueDistribution
    color: str = GREEN
    fixed_bid: Optional[float] = None
    true_dist: Optional[ValueDistribution] = None

    def __post_init__(self):
        if self.color not in (GREEN, RED):
            raise ScenarioError(f"color must be green or red, got {self.color!r}")
        if self.color == GREEN and (self.fixed_bid is not None or self.true_dist is not None):
            raise ScenarioError("green bidders take no red behaviour")
        if self.color == RED and (self.fixed_bid is None) == (self.true_dist is None):
            raise ScenarioError("red bidders need exactly one of fixed_bid / true_dist")
        if self.fixed_bid is not None:
            clamped = float(self.dist.clamp(self.fixed_bid))
            if not self.dist.in_support(self.fixed_bid):
                log.warning("red fixed bid %s outside support of %s; clamped to %s",
                            self.fixed_bid, self.dist, clamped)
            object.__setattr__(self, "fixed_bid", clamped)

    @classmethod
    def green(cls, dist):
        return cls(dist)

    @classmethod
    def red_fixed(cls, dist, bid):
        return cls(dist, RED, fixed_bid=bid)

    @classmethod
    def red_true(cls, dist, true_dist):
        return cls(dist, RED, true_dist=true_dist)


@dataclass(frozen=True)
class Scenario:
    market: SetSystem
    bidders: tuple
    name: str = field(default="scenario", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bidders", tuple(self.bidders))
        if len(self.bidders) != self.market.n:
            raise ScenarioError(f"{len(self.bidders)} bidders for a market of size {self.market.n}")

    @property
    def dists(self) -> list:
        return [b.dist for b in self.bidders]

    @property
    def green(self) -> list:
        return [i for i, b in enumerate(self.bidders) if b.color == GREEN]

    @property
    def red(self) -> list:
        return [i for i, b in enumerate(self.bidders) if b.color == RED]

    @cached_property
    def green_market(self) -> SetSystem:
        return restriction(self.market, self.green)


@dataclass(frozen=True)
class RevenueEstimate:
    mean: float
    std_error: float
    trials: int
    exact: bool = False

    def to_json(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "trials": self.trials, "exact": self.exact}


@dataclass(frozen=True)
class RmmbReport:
    rev_all: RevenueEstimate
    rev_green: RevenueEstimate
    holds: bool
    margin: float
    diff_std_error: float

    def to_json(self) -> dict:
        return {"rev_all": self.rev_all.to_json(), "rev_green": self.rev_green.to_json(),
                "holds": self.holds, "margin": self.margin, "diff_std_error": self.diff_std_error}

    def csv_row(self, scenario_id: str, mech: str) -> list:
        return [scenario_id, mech, self.rev_all.mean, self.rev_all.std_error,
                self.rev_green.mean, self.rev_green.std_error, self.holds, self.margin]


CSV_HEADER = ["scenario_id", "mech", "rev_all", "se_all", "rev_green", "se_green", "holds", "margin"]


def report_csv(report: RmmbReport, scenario_id: str, mech: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerow(report.csv_row(scenario_id, mech))
    return buf.getvalue()


# -- sampling ----------------------------------------------------------------------

def uniform_draws(seed: int, stream: int, start: int, stop: int, n: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the ``(trials, n)`` uniform table for ``(seed, stream)``."""
    out = np.empty((stop - start, n))
    first, last = start // BLOCK, (stop - 1) // BLOCK
    for block in range(first, last + 1):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), stream, block]))
        rows = rng.random((BLOCK, n))
        lo = max(start, block * BLOCK)
        hi = min(stop, (block + 1) * BLOCK)
        out[lo - start:hi - start] = rows[lo - block * BLOCK:hi - block * BLOCK]
    return out


def profiles(s: Scenario, green_u: np.ndarray, red_u: np.ndarray) -> np.ndarray:
    """Bid profiles for a batch; column i of each draw table belongs to bidder i."""
    green_u = np.atleast_2d(green_u)
    red_u = np.atleast_2d(red_u)
    bids = np.zeros((green_u.shape[0], s.market.n))
    for i, b in enumerate(s.bidders):
        if b.color == GREEN:
            bids[:, i] = b.dist.sample(green_u[:, i])
        elif b.fixed_bid is not None:
            bids[:, i] = b.fixed_bid
        else:
            bids[:, i] = b.dist.clamp(b.true_dist.sample(red_u[:, i]))
    return bids


def sample_profile(s: Scenario, draws: Sequence[float], red_draws: Sequence[float] = ()) -> np.ndarray:
    """One profile from per-green and per-red uniform draws (each in ascending bidder id)."""
    green, red = s.green, s.red
    if len(draws) != len(green) or (red_draws and len(red_draws) != len(red)):
        raise ScenarioError("draw counts must match the green and red bidder counts")
    gu = np.zeros((1, s.market.n))
    ru = np.zeros((1, s.market.n))
    gu[0, green] = draws
    if red_draws:
        ru[0, red] = red_draws
    elif any(s.bidders[i].true_dist is not None for i in red):
        raise ScenarioError("red bidders with a true distribution need draws")
    return profiles(s, gu, ru)[0]


# -- evaluation ---------------------------------------------------------------------

def _arm_revenue(s: Scenario, mech: str, include: str, bids: np.ndarray) -> np.ndarray:
    if include == "all":
        return run_batch(mech, s.market, s.dists, bids).revenue
    if include != "green":
        raise ScenarioError(f"include must be 'all' or 'green', got {include!r}")
    green = s.green
    if not green:
        return np.zeros(bids.shape[0])
    return run_batch(mech, s.green_market, [s.dists[i] for i in green], bids[:, green]).revenue


def _block_revenues(args) -> tuple:
    s, mech, includes, seed, start, stop = args
    n = s.market.n
    bids = profiles(s, uniform_draws(seed, GREEN_STREAM, start, stop, n),
                    uniform_draws(seed, RED_STREAM, start, stop, n))
    return tuple(_arm_revenue(s, mech, inc, bids) for inc in includes)


def _simulate(s: Scenario, mech: str, includes: tuple, trials: int, seed: int, workers: int):
    if trials < 1:
        raise ScenarioError("trials must be >= 1")
    jobs = [(s, mech, includes, seed, lo, min(trials, lo + BLOCK)) for lo in range(0, trials, BLOCK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_revenues, jobs))
    else:
        parts = [_block_revenues(j) for j in jobs]
    # merge in trial order regardless of worker count
    return [np.concatenate([p[k] for p in parts]) for k in range(len(includes))]


def _estimate(values: np.ndarray) -> RevenueEstimate:
    t = len(values)
    se = float(values.std(ddof=1) / math.sqrt(t)) if t > 1 else 0.0
    return RevenueEstimate(mean=float(values.mean()), std_error=se, trials=t)


def estimate_revenue(s: Scenario, mech: str = "myeropt", include: str = "all", trials: int = 10_000,
                     seed: int = 0, workers: int = 1) -> RevenueEstimate:
    (rev,) = _simulate(s, mech, (include,), trials, seed, workers)
    return _estimate(rev)


def _enumerate(s: Scenario, include: str) -> tuple[np.ndarray, np.ndarray]:
    """All value profiles with their probabilities (red fixed bids held constant)."""
    random_ids = [i for i, b in enumerate(s.bidders)
                  if b.color == GREEN or (include == "all" and b.true_dist is not None)]
    supports = []
    for i in random_ids:
        b = s.bidders[i]
        d = b.dist if b.color == GREEN else b.true_dist
        if not isinstance(d, Discrete):
            raise ScenarioError(f"exact evaluation needs discrete distributions; bidder {i} has {d}")
        values = np.asarray(d.values) if b.color == GREEN else np.asarray(b.dist.clamp(np.asarray(d.values)))
        supports.append((values, np.asarray(d.probs)))
    count = math.prod(len(v) for v, _ in supports)
    if count > MAX_PROFILES:
        raise ScenarioError(f"{count} profiles exceed the enumeration limit {MAX_PROFILES}")
    bids = np.zeros((count, s.market.n))
    probs = np.ones(count)
    if supports:
        grid = np.array(list(itertools.product(*[range(len(v)) for v, _ in supports])))
        for col, (i, (values, p)) in enumerate(zip(random_ids, supports)):
            bids[:, i] = values[grid[:, col]]
            probs *= p[grid[:, col]]
    for i, b in enumerate(s.bidders):
        if b.fixed_bid is not None:
            bids[:, i] = b.fixed_bid
    return bids, probs


def exact_expected_revenue(s: Scenario, mech: str = "myeropt", include: str = "all") -> RevenueEstimate:
    bids, probs = _enumerate(s, include)
    rev = _arm_revenue(s, mech, include, bids)
    return RevenueEstimate(mean=float(probs @ rev), std_error=0.0, trials=len(probs), exact=True)


def exact_expected_virtual_welfare(s: Scenario, include: str = "all") -> float:
    """E[sum of winners' ironed virtual values] under MyerOPT, by enumeration."""
    from .mechanism import myeropt_batch
    bids, probs = _enumerate(s, include)
    if include == "green":
        green = s.green
        if not green:
            return 0.0
        out = myeropt_batch(s.green_market, [s.dists[i] for i in green], bids[:, green])
    else:
        out = myeropt_batch(s.market, s.dists, bids)
    return float(probs @ np.where(out.winners, out.virtuals, 0.0).sum(axis=1))


def supports_exact(s: Scenario) -> bool:
    return all(isinstance(b.dist if b.color == GREEN else (b.true_dist or b.dist), Discrete)
               for b in s.bidders if b.color == GREEN or b.true_dist is not None)


def rmmb_check(s: Scenario, mech: str = "myeropt", trials: int = 10_000, seed: int = 0,
               z: float = 3.0, exact: Optional[bool] = None, workers: int = 1) -> RmmbReport:
    """Compare E[Rev(all bidders)] with E[Rev(green only)].

    Monte Carlo arms share the green draws trial by trial, so the verdict uses
    the standard error of the paired difference.
    """
    if exact is None:
        exact = supports_exact(s)
    if exact:
        rev_all = exact_expected_revenue(s, mech, "all")
        rev_green = exact_expected_revenue(s, mech, "green")
        margin = rev_all.mean - rev_green.mean
        return RmmbReport(rev_all, rev_green, holds=margin >= -EXACT_TOL, margin=margin, diff_std_error=0.0)
    all_rev, green_rev = _simulate(s, mech, ("all", "green"), trials, seed, workers)
    diff = _estimate(all_rev - green_rev)
    margin = diff.mean
    return RmmbReport(_estimate(all_rev), _estimate(green_rev), holds=margin >= -z * diff.std_error,
                      margin=margin, diff_std_error=diff.std_error)


# -- JSON ----------------------------------------------------------------------------

def scenario_from_json(obj: dict, name: str = "scenario") -> Scenario:
    try:
        market = system_from_json(obj["market"])
        bidders = []
        for b in obj["bidders"]:
            dist = distribution_from_json(b["dist"])
            color = b.get("color", GREEN)
            if color == GREEN:
                bidders.append(BidderSpec(dist))
                continue
            rb = b["red_behavior"]
            if "fixed_bid" in rb:
                bidders.append(BidderSpec.red_fixed(dist, float(rb["fixed_bid"])))
            else:
                bidders.append(BidderSpec.red_true(dist, distribution_from_json(rb["true_dist"])))
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario JSON: {exc!r}") from exc
    return Scenario(market, tuple(bidders), name=obj.get("id", name))


def scenario_to_json(s: Scenario) -> dict:
    bidders = []
    for b in s.bidders:
        entry: dict = {"dist": b.dist.to_json(), "color": b.color}
        if b.fixed_bid is not None:
            entry["red_behavior"] = {"fixed_bid": b.fixed_bid}
        elif b.true_dist is not None:
            entry["red_behavior"] = {"true_dist": b.true_dist.to_json()}
        bidders.append(entry)
    return {"id": s.name, "market": system_to_json(s.market), "bidders": bidders}
