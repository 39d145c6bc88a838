"""Independent oracles and instance generators shared by the tests.

Everything here is deliberately naive: plain loops over subsets through the
``is_independent`` oracle, pool-adjacent-violators ironing, and bisection on
the allocation rule.  None of it touches the batch engines it checks.
"""
import itertools
import math

import numpy as np

from rmmb.distribution import Discrete, ParetoLike, Uniform
from rmmb.set_system import SetSystem, is_independent

# maximal sets {a,b} and {c}: the smallest non-matroid
AB_OR_C = SetSystem.explicit(3, [[0, 1], [2]], maximal_only=True, labels="abc")
TRIANGLE = SetSystem.graphic(3, [(0, 1), (1, 2), (2, 0)], labels=["01", "12", "20"])


def all_subsets(n):
    for r in range(n + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(n), r))


def independent_sets(system):
    return [s for s in all_subsets(system.n) if is_independent(system, s)]


def naive_max_weight(system, w, allowed=None):
    """Lex-smallest max-weight independent set among positive-weight (allowed) elements."""
    best, best_val = frozenset(), 0.0
    for s in independent_sets(system):
        if any(w[e] <= 0 for e in s) or (allowed is not None and not s <= allowed):
            continue
        val = math.fsum(w[e] for e in s)
        tol = 1e-12 * max(1.0, abs(best_val))
        if val > best_val + tol or (abs(val - best_val) <= tol and sorted(s) < sorted(best)):
            best, best_val = s, val
    return best


def pava_ironed(d: Discrete):
    """Ironed virtual values of a discrete distribution by pooling adjacent violators."""
    v = list(d.values)
    p = list(d.probs)
    tail = [math.fsum(p[k:]) for k in range(len(v))]
    raw = [v[k] - (v[k + 1] - v[k]) * tail[k + 1] / p[k] if k + 1 < len(v) else v[k]
           for k in range(len(v))]
    blocks = []  # [weighted sum, weight, count]
    for r, w in zip(raw, p):
        blocks.append([r * w, w, 1])
        while len(blocks) > 1 and blocks[-2][0] / blocks[-2][1] > blocks[-1][0] / blocks[-1][1]:
            s, w2, c = blocks.pop()
            blocks[-1][0] += s
            blocks[-1][1] += w2
            blocks[-1][2] += c
    out = []
    for s, w, c in blocks:
        out += [s / w] * c
    return out


def oracle_virtual(d, x):
    if isinstance(d, Uniform):
        return 2 * x - d.hi
    if isinstance(d, ParetoLike):
        n = d.n_param
        return x - (1 + x) / (n - 1)
    k = min(range(len(d.values)), key=lambda j: abs(d.values[j] - x))
    return pava_ironed(d)[k]


def oracle_allocation(market, dists, bids):
    phi = [oracle_virtual(d, b) for d, b in zip(dists, bids)]
    return naive_max_weight(market, phi)


def oracle_payment(market, dists, bids, i, tol=1e-11):
    """Critical bid by bisection on the naive allocation rule."""
    d = dists[i]

    def wins(z):
        probe = list(bids)
        probe[i] = z
        return i in oracle_allocation(market, dists, probe)

    if isinstance(d, Discrete):
        return next(v for v in d.values if v <= bids[i] + 1e-12 and wins(v))
    lo, hi = d.support_lo, bids[i]
    if wins(lo):
        return lo
    while hi - lo > tol:
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if wins(mid) else (mid, hi)
    return hi


def oracle_revenue(market, dists, bids):
    win = oracle_allocation(market, dists, bids)
    return sum(oracle_payment(market, dists, bids, i) for i in win)


def oracle_vcg(market, bids):
    win = naive_max_weight(market, bids)
    total = math.fsum(bids[e] for e in win)
    pays = {}
    for i in win:
        allowed = frozenset(range(market.n)) - {i}
        alt = naive_max_weight(market, bids, allowed)
        pays[i] = math.fsum(bids[e] for e in alt) - (total - bids[i])
    return win, pays


def naive_is_matroid(system):
    sets = independent_sets(system)
    fam = set(sets)
    return all(any(b | {x} in fam for x in a - b) for a in sets for b in sets if len(a) > len(b))


# -- instance generators -------------------------------------------------------------

def random_graphic(rng, max_edges=8):
    v = int(rng.integers(2, 6))
    m = int(rng.integers(1, max_edges + 1))
    edges = [tuple(int(x) for x in rng.integers(0, v, size=2)) for _ in range(m)]
    return SetSystem.graphic(v, edges)


def random_transversal(rng, n=None, right=4):
    n = n or int(rng.integers(1, 7))
    adj = [sorted(set(rng.integers(0, right, size=int(rng.integers(0, 3))).tolist())) for _ in range(n)]
    return SetSystem.transversal(adj)


def random_uniform(rng, n=None):
    n = n or int(rng.integers(1, 7))
    return SetSystem.uniform(n, int(rng.integers(1, n + 1)))


def random_linear(rng, n=None, dim=3):
    """Explicit matroid of random GF(2) vectors (column independence)."""
    n = n or int(rng.integers(1, 7))
    cols = rng.integers(0, 2, size=(n, dim))
    sets = []
    for s in all_subsets(n):
        rows = [int("".join(map(str, cols[e])), 2) for e in s]
        if _gf2_independent(rows):
            sets.append(sorted(s))
    return SetSystem.explicit(n, sets)


def _gf2_independent(vectors):
    basis = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v == 0:
            return False
        basis.append(v)
    return True


def random_matroid(rng, n=None):
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return random_uniform(rng, n)
    if kind == 1:
        while True:
            s = random_graphic(rng, max_edges=n or 8)
            if n is None or s.n == n:
                return s
            if s.n > 0:
                return s
    if kind == 2:
        return random_transversal(rng, n)
    return random_linear(rng, n)


def random_discrete(rng, max_atoms=3, scale=4.0):
    k = int(rng.integers(1, max_atoms + 1))
    values = np.sort(rng.choice(np.arange(0, 4 * scale + 1) / 4, size=k, replace=False))
    probs = rng.dirichlet(np.ones(k))
    probs = np.round(probs, 6)
    probs[-1] = 1.0 - probs[:-1].sum()
    if np.any(probs <= 0):
        return Discrete(tuple(values[:1]), (1.0,))
    return Discrete(tuple(values), tuple(probs))


def random_continuous(rng):
    if rng.random() < 0.5:
        lo = float(rng.uniform(0, 2))
        return Uniform(lo, lo + float(rng.uniform(0.5, 6)))
    return ParetoLike(float(rng.uniform(2.5, 8)))


def random_large_matroid(rng, max_n=12):
    """Structured or explicit matroids on up to ``max_n`` elements."""
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return random_uniform(rng, int(rng.integers(1, max_n + 1)))
    if kind == 1:
        v = int(rng.integers(2, 8))
        m = int(rng.integers(1, max_n + 1))
        edges = [tuple(int(x) for x in rng.integers(0, v, size=2)) for _ in range(m)]
        return SetSystem.graphic(v, edges)
    if kind == 2:
        n = int(rng.integers(1, max_n + 1))
        right = int(rng.integers(1, 7))
        adj = [sorted(set(rng.integers(0, right, size=int(rng.integers(0, 4))).tolist())) for _ in range(n)]
        return SetSystem.transversal(adj)
    return random_linear(rng, int(rng.integers(1, max_n + 1)), dim=int(rng.integers(2, 5)))
