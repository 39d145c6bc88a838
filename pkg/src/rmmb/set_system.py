"""Downward-closed set systems and matroids over a ground set ``{0, ..., n-1}``.

Element sets are passed in as any iterable of ints and returned as
``frozenset``.  Internally every set is a bitmask, and small systems
(``n <= MAX_ENUM``) carry a lazily built independence table of length
``2**n`` that the mechanism engines index directly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

MAX_ENUM = 20
MAX_CIRCUIT_ENUM = 16

KINDS = ("explicit", "uniform", "graphic", "transversal")


class SetSystemError(ValueError):
    """Invalid set system or a violated operation precondition."""


class TooLargeError(SetSystemError):
    pass


def to_mask(elements: Iterable[int]) -> int:
    m = 0
    for e in elements:
        m |= 1 << int(e)
    return m


def from_mask(mask: int) -> frozenset:
    out = []
    e = 0
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return frozenset(out)


def lex_key(s: Iterable[int]) -> tuple:
    """Sort key realising the ascending-id lexicographic order on element sets."""
    return tuple(sorted(s))


def _popcount(masks: np.ndarray) -> np.ndarray:
    masks = masks.astype(np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    while np.any(masks):
        out += masks & 1
        masks = masks >> 1
    return out


def _forest(vertices: int, edges: Sequence[tuple[int, int]]) -> bool:
    parent = list(range(vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def _matchable(adjacency: Sequence[Sequence[int]], left: Sequence[int]) -> bool:
    """True iff every vertex in ``left`` can be matched simultaneously (Kuhn's algorithm)."""
    match: dict[int, int] = {}

    def augment(a, seen):
        for b in adjacency[a]:
            if b in seen:
                continue
            seen.add(b)
            if b not in match or augment(match[b], seen):
                match[b] = a
                return True
        return False

    return all(augment(a, set()) for a in left)


@dataclass(frozen=True)
class SetSystem:
    """A downward-closed family of independent sets on ``n`` elements.

    Build instances with the ``explicit``/``uniform``/``graphic``/``transversal``
    constructors rather than directly.
    """

    n: int
    kind: str
    k: Optional[int] = None
    vertices: Optional[int] = None
    edges: tuple = ()
    adjacency: tuple = ()
    family: frozenset = frozenset()
    labels: Optional[tuple] = None
    # set when matroid status is known without enumeration (restrictions of matroids)
    known_matroid: Optional[bool] = field(default=None, compare=False, repr=False)

    # -- constructors -------------------------------------------------------
    @classmethod
    def explicit(cls, n: int, sets: Iterable[Iterable[int]], *, maximal_only: bool = False,
                 labels: Optional[Sequence[str]] = None, check: bool = True) -> "SetSystem":
        masks = {to_mask(s) for s in sets}
        for m in masks:
            if m >> n:
                raise SetSystemError(f"set {sorted(from_mask(m))} leaves ground set of size {n}")
        if maximal_only:
            masks = _down_closure(masks)
        masks.add(0)
        system = cls(n=n, kind="explicit", family=frozenset(masks),
                     labels=tuple(labels) if labels is not None else None)
        if check and not validate_downward_closed(system):
            raise SetSystemError("explicit family is not downward-closed")
        return system

    @classmethod
    def uniform(cls, n: int, k: int, labels=None) -> "SetSystem":
        if not 1 <= k <= n:
            raise SetSystemError(f"uniform matroid needs 1 <= k <= n, got k={k}, n={n}")
        return cls(n=n, kind="uniform", k=k, labels=tuple(labels) if labels else None)

    @classmethod
    def graphic(cls, vertices: int, edges: Sequence[Sequence[int]], labels=None) -> "SetSystem":
        edges = tuple((int(u), int(v)) for u, v in edges)
        for u, v in edges:
            if not (0 <= u < vertices and 0 <= v < vertices):
                raise SetSystemError(f"edge ({u},{v}) has an endpoint outside [0,{vertices})")
        return cls(n=len(edges), kind="graphic", vertices=vertices, edges=edges,
                   labels=tuple(labels) if labels else None)

    @classmethod
    def transversal(cls, adjacency: Sequence[Sequence[int]], labels=None) -> "SetSystem":
        adjacency = tuple(tuple(int(b) for b in row) for row in adjacency)
        return cls(n=len(adjacency), kind="transversal", adjacency=adjacency,
                   labels=tuple(labels) if labels else None)

    # -- basic queries ------------------------------------------------------
    def label(self, e: int) -> str:
        return self.labels[e] if self.labels else str(e)

    def fmt(self, s: Iterable[int]) -> str:
        return "{" + ",".join(self.label(e) for e in sorted(s)) + "}"

    def independent_mask(self, mask: int) -> bool:
        if mask >> self.n:
            raise SetSystemError(f"element index out of range for n={self.n}")
        if "table" in self.__dict__:
            return bool(self.table[mask])
        return self._oracle(mask)

    def _oracle(self, mask: int) -> bool:
        if self.kind == "explicit":
            return mask in self.family
        if self.kind == "uniform":
            return bin(mask).count("1") <= self.k
        elems = sorted(from_mask(mask))
        if self.kind == "graphic":
            return _forest(self.vertices, [self.edges[e] for e in elems])
        return _matchable(self.adjacency, elems)

    @cached_property
    def table(self) -> np.ndarray:
        """Boolean independence table indexed by bitmask."""
        if self.n > MAX_ENUM:
            raise TooLargeError(f"n={self.n} exceeds enumeration guard {MAX_ENUM}")
        size = 1 << self.n
        if self.kind == "uniform":
            return _popcount(np.arange(size)) <= self.k
        if self.kind == "explicit":
            t = np.zeros(size, dtype=bool)
            t[np.fromiter(self.family, dtype=np.int64)] = True
            return t
        t = np.zeros(size, dtype=bool)
        t[0] = True
        for m in range(1, size):
            low = m & -m
            # downward closure: a dependent subset makes m dependent
            if t[m ^ low] and self._oracle(m):
                t[m] = True
        return t

    @cached_property
    def independent_masks(self) -> np.ndarray:
        """All independent sets as bitmasks, in ascending-id lexicographic order."""
        masks = np.flatnonzero(self.table)
        keys = sorted(masks.tolist(), key=lambda m: lex_key(from_mask(m)))
        return np.asarray(keys, dtype=np.int64)

    @cached_property
    def membership(self) -> np.ndarray:
        """``(len(independent_masks), n)`` 0/1 matrix matching ``independent_masks``."""
        bits = (self.independent_masks[:, None] >> np.arange(self.n)[None, :]) & 1
        return bits.astype(float)

    @cached_property
    def rank_table(self) -> np.ndarray:
        """``rank_table[X]`` = size of a largest independent subset of X."""
        r = np.where(self.table, _popcount(np.arange(1 << self.n)), 0)
        idx = np.arange(1 << self.n)
        for e in range(self.n):
            has = (idx >> e) & 1 == 1
            r[has] = np.maximum(r[has], r[idx[has] ^ (1 << e)])
        return r

    @cached_property
    def _matroid(self) -> bool:
        if self.known_matroid is not None:
            return self.known_matroid
        if self.kind != "explicit":
            return True
        return _restriction_is_matroid(self, (1 << self.n) - 1)


# -- helpers ---------------------------------------------------------------

def _down_closure(masks: Iterable[int]) -> set:
    out = set()
    for m in masks:
        if m in out:
            continue
        sub = m
        while True:
            out.add(sub)
            if sub == 0:
                break
            sub = (sub - 1) & m
    return out


def _extension_masks(system: SetSystem) -> tuple[np.ndarray, np.ndarray]:
    """For every independent J, the mask of elements x not in J with J + x independent."""
    js = np.flatnonzero(system.table)
    ext = np.zeros(js.shape, dtype=np.int64)
    for e in range(system.n):
        bit = 1 << e
        ok = ((js & bit) == 0) & system.table[js | bit]
        ext |= np.where(ok, bit, 0)
    return js, ext


def _restriction_is_matroid(system: SetSystem, v: int) -> bool:
    """I|_V is a matroid iff no independent J inside V is maximal in some X ⊆ V with rank(X) > |J|.

    The largest X in which J is maximal is V minus the elements that extend J.
    """
    js, ext = _extension_masks_cached(system)
    inside = (js & ~v) == 0
    widest = (v & ~ext[inside])
    return bool(np.all(system.rank_table[widest] <= _popcount(js[inside])))


def _maximal_below_rank(system: SetSystem, v: int) -> Optional[int]:
    """Smallest (then lex-first) J maximal in V with |J| < rank(V), if any."""
    js, ext = _extension_masks_cached(system)
    maximal = ((js & ~v) == 0) & ((ext & v) == 0)
    hits = js[maximal & (_popcount(js) < system.rank_table[v])]
    if hits.size == 0:
        return None
    return min(hits.tolist(), key=lambda m: (bin(m).count("1"), lex_key(from_mask(m))))


def _extension_masks_cached(system: SetSystem):
    cache = system.__dict__.get("_ext_cache")
    if cache is None:
        cache = _extension_masks(system)
        system.__dict__["_ext_cache"] = cache
    return cache


def _check_subset(system: SetSystem, s: Iterable[int]) -> int:
    m = to_mask(s)
    if m >> system.n or any(int(e) < 0 for e in s):
        raise SetSystemError(f"element index out of range for n={system.n}")
    return m


def _weights(system: SetSystem, w: Sequence[float]) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (system.n,):
        raise SetSystemError(f"weight vector must have length {system.n}")
    if np.any(w < 0):
        raise SetSystemError("weights must be non-negative")
    return w


# -- operations ------------------------------------------------------------

def is_independent(system: SetSystem, s: Iterable[int]) -> bool:
    s = list(s)
    return system.independent_mask(_check_subset(system, s))


def validate_downward_closed(system: SetSystem) -> bool:
    if system.kind != "explicit":
        return True
    fam = system.family
    if 0 not in fam:
        return False
    # enough to check that removing any single element stays inside the family
    for m in fam:
        rest = m
        while rest:
            low = rest & -rest
            if m ^ low not in fam:
                return False
            rest ^= low
    return True


def is_matroid(system: SetSystem) -> bool:
    """Exchange-axiom check; structured kinds are matroids by construction."""
    if system.kind == "explicit" and system.n > MAX_ENUM:
        raise TooLargeError(f"n={system.n} exceeds enumeration guard {MAX_ENUM}")
    return system._matroid


def satisfies_exchange(system: SetSystem) -> bool:
    """Literal pairwise (I2) check over all independent A, B.  Quadratic; tests only."""
    sets = [from_mask(m) for m in np.flatnonzero(system.table).tolist()]
    for a in sets:
        for b in sets:
            if len(a) > len(b) and not any(
                    system.independent_mask(to_mask(b | {x})) for x in a - b):
                return False
    return True


def rank(system: SetSystem, s: Iterable[int]) -> int:
    m = _check_subset(system, list(s))
    if system.kind == "uniform":
        return min(bin(m).count("1"), system.k)
    if system.n <= MAX_ENUM:
        return int(system.rank_table[m])
    if is_matroid(system):
        return len(greedy_max_weight(system, [1.0 if (m >> e) & 1 else 0.0 for e in range(system.n)]))
    raise TooLargeError("rank of a large non-matroid needs enumeration")


def restriction(system: SetSystem, s: Iterable[int]) -> SetSystem:
    """Explicit system on ``sorted(s)``, relabelled to ``0..|s|-1`` in ascending order."""
    elems = sorted(set(int(e) for e in s))
    _check_subset(system, elems)
    k = len(elems)
    sub = np.arange(1 << k)
    parent = np.zeros(sub.shape, dtype=np.int64)
    for j, e in enumerate(elems):
        parent |= ((sub >> j) & 1) << e
    ok = system.table[parent]
    labels = tuple(system.label(e) for e in elems) if system.labels else None
    known = True if is_matroid(system) else None
    out = SetSystem(n=k, kind="explicit", family=frozenset(sub[ok].tolist()),
                    labels=labels, known_matroid=known)
    return out


def find_circuit(system: SetSystem, independent: Iterable[int], x: int) -> Optional[frozenset]:
    base = set(int(e) for e in independent)
    if x in base:
        raise SetSystemError("x must not belong to the independent set")
    if not is_independent(system, base):
        raise SetSystemError("given set is not independent")
    if is_independent(system, base | {x}):
        return None
    circuit = base | {x}
    for e in sorted(base):
        if not is_independent(system, circuit - {e}):
            circuit.discard(e)
    return frozenset(circuit)


def greedy_order(w: np.ndarray) -> list:
    """Non-increasing weight, ties by ascending id."""
    return sorted(range(len(w)), key=lambda e: (-w[e], e))


def greedy_max_weight(system: SetSystem, w: Sequence[float]) -> frozenset:
    w = _weights(system, w)
    chosen = 0
    for e in greedy_order(w):
        if w[e] <= 0:
            break
        if system.independent_mask(chosen | (1 << e)):
            chosen |= 1 << e
    return from_mask(chosen)


def brute_force_max_weight(system: SetSystem, w: Sequence[float]) -> frozenset:
    """Exhaustive optimum over positive-weight elements; ties go to the lexicographically smallest set."""
    if system.n > MAX_ENUM:
        raise TooLargeError(f"n={system.n} exceeds enumeration guard {MAX_ENUM}")
    w = _weights(system, w)
    masks = system.independent_masks
    pos = to_mask(np.flatnonzero(w > 0).tolist())
    valid = (masks & ~pos) == 0
    sums = np.where(valid, system.membership @ w, -np.inf)
    best = sums.max()
    tol = 1e-12 * max(1.0, abs(best))
    first = int(np.flatnonzero(sums >= best - tol)[0])
    return from_mask(int(masks[first]))


def incremental_update(system: SetSystem, independent: Iterable[int], x: int,
                       w: Sequence[float]) -> frozenset:
    """Max-weight independent set after adding ``x``, given the optimum without it."""
    w = _weights(system, w)
    base = frozenset(int(e) for e in independent)
    if w[x] <= 0:
        return base
    circuit = find_circuit(system, base, x)
    if circuit is None:
        return base | {x}
    # last element of the circuit in greedy order is the one greedy rejects
    order = {e: i for i, e in enumerate(greedy_order(w))}
    y = max(circuit, key=order.__getitem__)
    return (base | {x}) - {y}


def witness_properties(system: SetSystem, i_set: frozenset, j_set: frozenset) -> tuple[bool, bool, bool]:
    """Check the three witness properties by enumerating I|_{I u J}."""
    v = to_mask(i_set | j_set)
    inside = [from_mask(m) for m in np.flatnonzero(system.table).tolist() if (m & ~v) == 0]
    diff = i_set - j_set
    p1 = all(k >= diff for k in inside if len(k) >= len(i_set))
    p2 = len(j_set - i_set) >= 1
    p3 = max(len(k) for k in inside) == len(i_set)
    return p1, p2, p3


def nonmatroid_witness(system: SetSystem) -> Optional[tuple[frozenset, frozenset]]:
    """Independent sets (I, J) certifying that the system is not a matroid, or None.

    Scans subsets V by increasing size (lexicographic within a size) for the
    first one whose restriction breaks exchange.  In that V, J is the smallest
    (then lex-first) set that is maximal in V yet below rank(V), and I the
    lex-first maximum-cardinality set of V.
    """
    if system.n > MAX_ENUM:
        raise TooLargeError(f"n={system.n} exceeds enumeration guard {MAX_ENUM}")
    if system.kind != "explicit" or is_matroid(system):
        return None
    for size in range(2, system.n + 1):
        for combo in itertools.combinations(range(system.n), size):
            v = to_mask(combo)
            if _restriction_is_matroid(system, v):
                continue
            # V is a minimal non-matroid, so the violation sits at X = V itself
            j_mask = _maximal_below_rank(system, v)
            r = int(system.rank_table[v])
            candidates = [m for m in system.independent_masks.tolist()
                          if (m & ~v) == 0 and bin(m).count("1") == r]
            i_set, j_set = from_mask(candidates[0]), from_mask(j_mask)
            if to_mask(i_set | j_set) != v or not all(witness_properties(system, i_set, j_set)):
                raise AssertionError(f"witness extraction failed on V={sorted(combo)}")
            return i_set, j_set
    raise AssertionError("non-matroid without a violating subset")


def enumerate_circuits(system: SetSystem) -> list:
    if system.n > MAX_CIRCUIT_ENUM:
        raise TooLargeError(f"n={system.n} exceeds circuit enumeration guard {MAX_CIRCUIT_ENUM}")
    t = system.table
    idx = np.arange(1 << system.n)
    minimal = ~t
    for e in range(system.n):
        has = ((idx >> e) & 1) == 1
        # every one-smaller subset must be independent
        minimal &= ~has | t[idx ^ (1 << e)]
    out = [from_mask(m) for m in np.flatnonzero(minimal).tolist()]
    return sorted(out, key=lambda c: (len(c), lex_key(c)))


def maximal_sets(system: SetSystem) -> list:
    js, ext = _extension_masks_cached(system)
    return sorted((from_mask(m) for m in js[ext == 0].tolist()), key=lex_key)


# -- JSON ------------------------------------------------------------------

def system_from_json(obj: dict) -> SetSystem:
    try:
        kind = obj["kind"]
        labels = obj.get("labels")
        if kind == "explicit":
            return SetSystem.explicit(int(obj["n"]), obj["independent_sets"],
                                      maximal_only=bool(obj.get("maximal_only", False)),
                                      labels=labels)
        if kind == "uniform":
            return SetSystem.uniform(int(obj["n"]), int(obj["k"]), labels=labels)
        if kind == "graphic":
            s = SetSystem.graphic(int(obj["vertices"]), obj["edges"], labels=labels)
        elif kind == "transversal":
            s = SetSystem.transversal(obj["adjacency"], labels=labels)
        else:
            raise SetSystemError(f"unknown set-system kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise SetSystemError(f"malformed set-system JSON: {exc!r}") from exc
    if "n" in obj and int(obj["n"]) != s.n:
        raise SetSystemError(f"declared n={obj['n']} but structure has {s.n} elements")
    return s


def system_to_json(system: SetSystem) -> dict:
    out: dict = {"n": system.n, "kind": system.kind}
    if system.kind == "explicit":
        out["independent_sets"] = [sorted(s) for s in maximal_sets(system)]
        out["maximal_only"] = True
    elif system.kind == "uniform":
        out["k"] = system.k
    elif system.kind == "graphic":
        out["vertices"] = system.vertices
        out["edges"] = [list(e) for e in system.edges]
    else:
        out["adjacency"] = [list(r) for r in system.adjacency]
    if system.labels:
        out["labels"] = list(system.labels)
    return out
