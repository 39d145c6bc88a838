"""Constructions that break revenue monotonicity on non-matroid markets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .distribution import ParetoLike, PointMass
from .mechanism import myeropt, vcg_batch
from .scenario import BidderSpec, Scenario, exact_expected_revenue
from .set_system import (SetSystem, SetSystemError, is_independent, is_matroid, maximal_sets,
                         nonmatroid_witness, witness_properties)


class MatroidInputError(SetSystemError):
    """The construction needs a non-matroid system."""


@dataclass(frozen=True)
class CounterexampleReport:
    witness: tuple
    green_set: frozenset
    red_set: frozenset
    n_param: float
    rev_all: float
    rev_green: float
    violated: bool

    @property
    def predicted_rev_all(self) -> float:
        i_set, j_set = self.witness
        return len(i_set & j_set) + len(i_set - j_set) / (self.n_param - 2.0)

    def to_json(self, system: Optional[SetSystem] = None) -> dict:
        name = (lambda s: [system.label(e) for e in sorted(s)]) if system else sorted
        return {"witness": {"I": name(self.witness[0]), "J": name(self.witness[1])},
                "green_set": name(self.green_set), "red_set": name(self.red_set),
                "n_param": self.n_param, "rev_all": self.rev_all, "rev_green": self.rev_green,
                "violated": self.violated}


@dataclass(frozen=True)
class VcgWitness:
    subset: frozenset
    removed: int
    rev_subset: float
    rev_without: float

    @property
    def gap(self) -> float:
        return self.rev_without - self.rev_subset

    def to_json(self, system: Optional[SetSystem] = None) -> dict:
        lab = system.label if system else str
        return {"V": [lab(e) for e in sorted(self.subset)], "x": lab(self.removed),
                "rev_V": self.rev_subset, "rev_V_minus_x": self.rev_without, "gap": self.gap}


def _require_nonmatroid(system: SetSystem):
    if is_matroid(system):
        raise MatroidInputError("system is a matroid; no counterexample exists")


def build_rmmb_counterexample(system: SetSystem, n_param: Optional[float] = None,
                              witness: Optional[tuple] = None) -> tuple[Scenario, CounterexampleReport]:
    """Green J with value 1, red I \\ J bidding phi^-1(1) under ParetoLike(N), everyone else at 0."""
    _require_nonmatroid(system)
    if witness is None:
        witness = nonmatroid_witness(system)
    i_set, j_set = frozenset(witness[0]), frozenset(witness[1])
    if not all(witness_properties(system, i_set, j_set)):
        raise SetSystemError("supplied (I, J) is not a valid non-matroid witness")
    red = i_set - j_set
    if n_param is None:
        n_param = len(red) + 3
    if n_param <= 2:
        raise ValueError("N must exceed 2")
    spec = ParetoLike(float(n_param))
    bid = n_param / (n_param - 2.0)
    bidders = []
    for e in range(system.n):
        if e in red:
            bidders.append(BidderSpec.red_fixed(spec, bid))
        elif e in j_set:
            bidders.append(BidderSpec.green(PointMass(1.0)))
        else:
            bidders.append(BidderSpec.green(PointMass(0.0)))
    scenario = Scenario(system, tuple(bidders), name=f"rmmb-counterexample-N{n_param:g}")
    rev_all = exact_expected_revenue(scenario, "myeropt", "all").mean
    rev_green = exact_expected_revenue(scenario, "myeropt", "green").mean
    report = CounterexampleReport(witness=(i_set, j_set), green_set=j_set, red_set=red,
                                  n_param=float(n_param), rev_all=rev_all, rev_green=rev_green,
                                  violated=rev_all < rev_green)
    return scenario, report


def verify_rmmb_counterexample(report: CounterexampleReport, scenario: Scenario, tol: float = 1e-9) -> bool:
    """Recompute the construction's revenues through the mechanism and check them."""
    i_set, j_set = report.witness
    bids = np.array([b.fixed_bid if b.fixed_bid is not None else b.dist.values[0]
                     for b in scenario.bidders])
    outcome = myeropt(scenario.market, scenario.dists, bids)
    green = scenario.green
    green_only = myeropt(scenario.green_market, [scenario.dists[i] for i in green], bids[green])
    if abs(green_only.revenue - len(j_set)) > tol or abs(green_only.revenue - report.rev_green) > tol:
        return False
    if abs(outcome.revenue - report.rev_all) > tol:
        return False
    if outcome.winners == i_set and abs(outcome.revenue - report.predicted_rev_all) > tol:
        return False
    # any maximum-cardinality winner set is allowed; the inequality must still hold
    return outcome.revenue < green_only.revenue


def vcg_witness(system: SetSystem) -> VcgWitness:
    """A subset V and x in V where dropping x's unit bid raises VCG revenue by at least 1."""
    _require_nonmatroid(system)
    i_set, j_set = nonmatroid_witness(system)
    v = i_set | j_set
    x = min(i_set - j_set)
    profiles = np.zeros((2, system.n))
    profiles[0, sorted(v)] = 1.0
    profiles[1, sorted(v - {x})] = 1.0
    rev = vcg_batch(system, profiles).revenue
    w = VcgWitness(subset=v, removed=x, rev_subset=float(rev[0]), rev_without=float(rev[1]))
    if not w.gap >= 1 - 1e-9:
        raise AssertionError(f"VCG gap {w.gap} < 1 on V={sorted(v)}, x={x}")
    return w


# -- a non-matroid where every maximal-set exchange still succeeds ------------------

DRS_LABELS = "abcde"
DRS_TABLE = (
    ("ace", "bde", "b", "e"),
    ("ace", "acd", "d", "e"),
    ("ace", "bcd", "b", "e"),
    ("acd", "ace", "e", "d"),
    ("bcd", "ace", "a", "b"),
    ("bcd", "ace", "e", "c"),
)


@dataclass(frozen=True)
class DrsReport:
    is_matroid: bool
    exchange_holds: bool
    rows: tuple  # (A, B, y, x) as label strings
    table_rows_ok: tuple

    @property
    def ok(self) -> bool:
        return (not self.is_matroid) and self.exchange_holds and all(self.table_rows_ok)


def _ids(labels: str) -> frozenset:
    return frozenset(DRS_LABELS.index(c) for c in labels)


def drs_system() -> SetSystem:
    base = list(itertools.combinations(range(4), 3))
    return SetSystem.explicit(5, base + [sorted(_ids("ace")), sorted(_ids("bde"))],
                              maximal_only=True, labels=DRS_LABELS)


def maximal_exchange_rows(system: SetSystem) -> list:
    """For every maximal A, B and y in B: the first x in A with A - x + y independent (None if absent)."""
    rows = []
    for a in maximal_sets(system):
        for b in maximal_sets(system):
            for y in sorted(b):
                x = next((x for x in sorted(a) if is_independent(system, (a - {x}) | {y})), None)
                rows.append((a, b, y, x))
    return rows


def drs_counterexample() -> tuple[SetSystem, DrsReport]:
    system = drs_system()
    rows = maximal_exchange_rows(system)
    table_ok = tuple(is_independent(system, (_ids(a) - _ids(x)) | _ids(y)) for a, _, y, x in DRS_TABLE)
    fmt = lambda s: "".join(DRS_LABELS[e] for e in sorted(s))
    shown = tuple((fmt(a), fmt(b), DRS_LABELS[y], DRS_LABELS[x] if x is not None else "-")
                  for a, b, y, x in rows if y not in a)
    report = DrsReport(is_matroid=is_matroid(system),
                       exchange_holds=all(x is not None for *_, x in rows),
                       rows=shown, table_rows_ok=table_ok)
    return system, report


# -- ratio experiment ----------------------------------------------------------------

def ratio_experiment(system: SetSystem, n_params: Sequence[float], trials: int = 1,
                     seed: int = 0) -> list[tuple[float, float]]:
    """``(N, rev_green / rev_all)`` for each N.  The construction is deterministic,
    so revenues are exact and ``trials``/``seed`` only matter for API symmetry."""
    out = []
    for n_param in n_params:
        if n_param <= 2:
            raise ValueError("N must exceed 2")
        _, rep = build_rmmb_counterexample(system, n_param=n_param)
        out.append((float(n_param), rep.rev_green / rep.rev_all if rep.rev_all > 0 else math.inf))
    return out


# -- random small systems --------------------------------------------------------------

def _permutations(n: int) -> np.ndarray:
    cache = _PERMS.get(n)
    if cache is None:
        cache = _PERMS[n] = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    return cache


_PERMS: dict = {}


def canonical_signature(system: SetSystem) -> tuple:
    """Family of independent sets up to relabelling of the ground set."""
    perms = _permutations(system.n)
    masks = np.flatnonzero(system.table)
    bits = (masks[None, :, None] >> np.arange(system.n)) & 1  # (1, S, n)
    mapped = (bits << perms[:, None, :]).sum(axis=2)  # (P, S)
    mapped.sort(axis=1)
    best = mapped[np.lexsort(mapped.T[::-1])[0]]
    return (system.n, tuple(best.tolist()))


def random_downward_closed(rng: np.random.Generator, n: int, max_sets: int = 8) -> SetSystem:
    """Downward closure of a few random subsets of sizes 2..n-1."""
    count = int(rng.integers(2, max_sets + 1))
    sets = []
    for _ in range(count):
        size = int(rng.integers(2, n))
        sets.append(rng.choice(n, size=size, replace=False).tolist())
    return SetSystem.explicit(n, sets, maximal_only=True)


def random_nonmatroids(count: int, seed: int = 0, n_range: Iterable[int] = (3, 4, 5, 6),
                       max_tries: int = 200_000) -> list:
    """Distinct (up to relabelling) random non-matroid downward-closed systems."""
    rng = np.random.default_rng(seed)
    sizes = list(n_range)
    weights = np.array([2.0 ** k for k in sizes])
    weights /= weights.sum()
    seen = set()
    out = []
    for _ in range(max_tries):
        if len(out) >= count:
            break
        # larger ground sets hold far more isomorphism classes
        n = int(rng.choice(sizes, p=weights))
        s = random_downward_closed(rng, n)
        if is_matroid(s):
            continue
        sig = canonical_signature(s)
        if sig in seen:
            continue
        seen.add(sig)
        out.append(s)
    return out
