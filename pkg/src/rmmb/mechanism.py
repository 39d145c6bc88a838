"""MyerOPT and VCG over a single-parameter market.

The engines work on a batch of bid profiles at once (shape ``(T, n)``) and
index the market's bitmask independence table, so the same code serves a
single auction, exact enumeration over value profiles, and Monte Carlo.

Welfare maximisation is greedy on matroids and exhaustive otherwise.  Only
bidders with strictly positive weight are candidates; ties go to the lower
element id (greedy) or to the lexicographically smallest optimal set
(exhaustive).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .distribution import Discrete, ValueDistribution
from .set_system import SetSystem, from_mask, is_matroid

_CHUNK_CELLS = 2_000_000


class MechanismError(ValueError):
    pass


@dataclass(frozen=True)
class AuctionOutcome:
    winners: frozenset
    payments: tuple
    virtuals: tuple
    revenue: float

    def to_json(self) -> dict:
        return {"winners": sorted(self.winners), "payments": list(self.payments),
                "virtuals": list(self.virtuals), "revenue": self.revenue}


@dataclass
class BatchOutcome:
    winners: np.ndarray  # (T, n) bool
    payments: np.ndarray  # (T, n)
    virtuals: np.ndarray  # (T, n)

    @property
    def revenue(self) -> np.ndarray:
        return self.payments.sum(axis=1)

    def outcome(self, t: int = 0) -> AuctionOutcome:
        pay = self.payments[t]
        return AuctionOutcome(winners=frozenset(np.flatnonzero(self.winners[t]).tolist()),
                              payments=tuple(float(p) for p in pay),
                              virtuals=tuple(float(v) for v in self.virtuals[t]),
                              revenue=float(pay.sum()))


# -- welfare maximisation over a batch ---------------------------------------

def _bits(masks: np.ndarray, n: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)


def _set_weight(masks: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.where(_bits(masks, w.shape[1]), w, 0.0).sum(axis=1)


def allocate(market: SetSystem, w: np.ndarray, *, forced: Optional[int] = None,
             excluded: Optional[int] = None) -> np.ndarray:
    """Max-weight feasible set per row of ``w``, as bitmasks.

    ``forced`` pins one element into every set (its own weight is ignored);
    ``excluded`` removes one element from the ground set.
    """
    w = np.asarray(w, dtype=float)
    active = w > 0
    if excluded is not None:
        active[:, excluded] = False
    if forced is not None:
        active[:, forced] = False
    if is_matroid(market):
        return _greedy_batch(market, w, active, forced)
    out = np.empty(w.shape[0], dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(1, len(market.independent_masks)))
    for lo in range(0, w.shape[0], step):
        out[lo:lo + step] = _exhaustive_batch(market, w[lo:lo + step], active[lo:lo + step], forced)
    return out


def _greedy_batch(market, w, active, forced):
    t, n = w.shape
    rows = np.arange(t)
    table = market.table
    cur = np.zeros(t, dtype=np.int64)
    if forced is not None:
        cur[:] = 1 << forced
    order = np.argsort(-w, axis=1, kind="stable")
    for k in range(n):
        e = order[:, k]
        cand = cur | (np.int64(1) << e)
        ok = active[rows, e] & table[cand]
        cur = np.where(ok, cand, cur)
    return cur


def _exhaustive_batch(market, w, active, forced):
    masks = market.independent_masks
    allowed = (active.astype(np.int64) << np.arange(w.shape[1])).sum(axis=1)
    if forced is not None:
        allowed |= 1 << forced
    sums = np.where(active, w, 0.0) @ market.membership.T
    bad = (masks[None, :] & ~allowed[:, None]) != 0
    if forced is not None:
        bad |= ((masks >> forced) & 1 == 0)[None, :]
    sums[bad] = -np.inf
    best = sums.max(axis=1, keepdims=True)
    tol = 1e-12 * np.maximum(1.0, np.abs(best))
    # independent_masks is in lexicographic order, so the first hit is the lex-min optimum
    first = np.argmax(sums >= best - tol, axis=1)
    return masks[first]


# -- MyerOPT ---------------------------------------------------------------------

def _check_profile(market: SetSystem, bids: np.ndarray) -> np.ndarray:
    bids = np.atleast_2d(np.asarray(bids, dtype=float))
    if bids.shape[1] != market.n:
        raise MechanismError(f"bid profile has {bids.shape[1]} entries, market has {market.n} bidders")
    return bids


def ironed_virtuals(dists: Sequence[ValueDistribution], bids: np.ndarray) -> np.ndarray:
    """Per-bidder ironed virtual values; raises OutsideSupport for out-of-support bids."""
    bids = np.atleast_2d(bids)
    phi = np.empty_like(bids)
    for i, d in enumerate(dists):
        phi[:, i] = d.ironed_virtual_value(bids[:, i])
    return phi


def _wins(market, phi, i):
    return (allocate(market, phi) >> i) & 1 == 1


def myeropt_batch(market: SetSystem, dists: Sequence[ValueDistribution], bids) -> BatchOutcome:
    bids = _check_profile(market, bids)
    if len(dists) != market.n:
        raise MechanismError("need one distribution per bidder")
    phi = ironed_virtuals(dists, bids)
    winners = _bits(allocate(market, phi), market.n)
    payments = np.zeros_like(bids)
    for i, d in enumerate(dists):
        rows = winners[:, i]
        if rows.any():
            payments[rows, i] = _critical_bids(market, d, phi[rows], bids[rows, i], i)
    return BatchOutcome(winners=winners, payments=payments, virtuals=phi)


def _critical_bids(market, d, phi, bid, i):
    """Critical bids of bidder i on rows where i currently wins."""
    if isinstance(d, Discrete):
        # smallest atom that still wins; atoms sharing an ironed value allocate identically
        pay = np.full(len(bid), np.nan)
        seen = set()
        for value, virtual in zip(d.values, d.atom_virtuals.tolist()):
            if virtual in seen:
                continue
            seen.add(virtual)
            todo = np.isnan(pay) & (bid >= value)
            if not todo.any():
                continue
            probe = phi[todo].copy()
            probe[:, i] = virtual
            won = _wins(market, probe, i)
            idx = np.flatnonzero(todo)[won]
            pay[idx] = value
        if np.isnan(pay).any():
            raise AssertionError("winner with no winning atom at or below its bid")
        return pay
    others = phi.copy()
    others[:, i] = 0.0
    without = _set_weight(allocate(market, phi, excluded=i), others)
    alongside = _set_weight(allocate(market, phi, forced=i), others)
    theta = np.clip(without - alongside, 0.0, phi[:, i])
    return np.clip(d.inverse_ironed_virtual(theta), d.support_lo, bid)


def myeropt_allocate(market: SetSystem, dists: Sequence[ValueDistribution], bids) -> frozenset:
    bids = _check_profile(market, bids)
    phi = ironed_virtuals(dists, bids)
    return from_mask(int(allocate(market, phi)[0]))


def critical_payment(market: SetSystem, dists: Sequence[ValueDistribution], bids, i: int,
                     method: str = "exact", tol: float = 1e-9) -> float:
    """Minimum bid with which ``i`` still wins.

    ``method="exact"`` inverts the ironed virtual value at the winning
    threshold; ``"bisect"`` searches the allocation rule directly over
    ``[support_lo, bid]`` (support atoms for discrete bidders).
    """
    bids = _check_profile(market, bids)[0]
    if i not in myeropt_allocate(market, dists, bids):
        raise MechanismError(f"bidder {i} is not a winner")
    d = dists[i]
    if method == "exact":
        phi = ironed_virtuals(dists, bids)
        return float(_critical_bids(market, d, phi, bids[i:i + 1], i)[0])
    if method != "bisect":
        raise ValueError(f"unknown method {method!r}")

    def wins(z):
        probe = bids.copy()
        probe[i] = z
        return i in myeropt_allocate(market, dists, probe)

    if isinstance(d, Discrete):
        return next(v for v in d.values if v <= bids[i] and wins(v))
    lo, hi = d.support_lo, float(bids[i])
    if wins(lo):
        return lo
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if wins(mid):
            hi = mid
        else:
            lo = mid
    return hi


def myeropt(market: SetSystem, dists: Sequence[ValueDistribution], bids) -> AuctionOutcome:
    return myeropt_batch(market, dists, bids).outcome(0)


# -- VCG ----------------------------------------------------------------------------

def vcg_batch(market: SetSystem, bids, dists=None) -> BatchOutcome:
    """Welfare maximisation with Clarke pivot payments (``dists`` is ignored)."""
    bids = _check_profile(market, bids)
    if np.any(bids < 0):
        raise MechanismError("VCG bids must be non-negative")
    win = allocate(market, bids)
    winners = _bits(win, market.n)
    total = _set_weight(win, bids)
    payments = np.zeros_like(bids)
    for i in range(market.n):
        rows = winners[:, i]
        if rows.any():
            sub = bids[rows]
            alt = _set_weight(allocate(market, sub, excluded=i), sub)
            payments[rows, i] = alt - (total[rows] - sub[:, i])
    return BatchOutcome(winners=winners, payments=payments, virtuals=bids.copy())


def vcg(market: SetSystem, bids) -> AuctionOutcome:
    return vcg_batch(market, bids).outcome(0)


MECHANISMS = {
    "myeropt": myeropt_batch,
    "vcg": lambda market, dists, bids: vcg_batch(market, bids),
}


def run_batch(mech: str, market: SetSystem, dists, bids) -> BatchOutcome:
    try:
        fn = MECHANISMS[mech.lower()]
    except KeyError:
        raise MechanismError(f"unknown mechanism {mech!r}; choose from {sorted(MECHANISMS)}") from None
    return fn(market, dists, bids)


# -- profiles --------------------------------------------------------------------

BidsOn = Union[Sequence[float], Mapping[int, float]]


def _as_map(ids: Iterable[int], bids: BidsOn) -> dict:
    ids = sorted(ids)
    if isinstance(bids, Mapping):
        if set(bids) != set(ids):
            raise MechanismError("bid mapping keys must match the bidder set")
        return {int(k): float(v) for k, v in bids.items()}
    bids = list(bids)
    if len(bids) != len(ids):
        raise MechanismError("bid vector length must match the bidder set")
    return dict(zip(ids, map(float, bids)))


def interleave(green: Iterable[int], red: Iterable[int], b_green: BidsOn, b_red: BidsOn,
               n: Optional[int] = None) -> np.ndarray:
    """Full profile from bids on G and R (sequences follow ascending id); others bid 0."""
    green, red = set(green), set(red)
    if green & red:
        raise MechanismError(f"G and R overlap on {sorted(green & red)}")
    merged = {**_as_map(green, b_green), **_as_map(red, b_red)}
    if n is None:
        n = max(merged, default=-1) + 1
    out = np.zeros(n)
    for i, b in merged.items():
        out[i] = b
    return out
