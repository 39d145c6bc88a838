"""Value distributions, virtual values and ironing in quantile space.

Quantile convention: ``q = P[v >= x]`` and ``v(q) = min{v : F(v) >= 1 - q}``,
so ``q = 0`` is the top of the support.  Every evaluation method accepts
scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

DEFAULT_GRID = 4096
PARETO_TRUNCATION = 1e-8
_EPS = 1e-12


class DistributionError(ValueError):
    pass


class OutsideSupport(DistributionError):
    """A value or bid outside the distribution's support."""


@dataclass(frozen=True)
class IronedCurve:
    """Upper concave hull of the revenue curve ``R(q) = q * v(q)``."""

    q: np.ndarray
    revenue: np.ndarray
    hull_q: np.ndarray
    hull_revenue: np.ndarray

    @cached_property
    def slopes(self) -> np.ndarray:
        return np.diff(self.hull_revenue) / np.diff(self.hull_q)

    def ironed_revenue(self, q) -> np.ndarray:
        return np.interp(q, self.hull_q, self.hull_revenue)

    def slope_at(self, q):
        """Ironed virtual value at quantile q; at a hull vertex the left segment wins."""
        q = np.asarray(q, dtype=float)
        seg = np.searchsorted(self.hull_q, q, side="left") - 1
        seg = np.clip(seg, 0, len(self.slopes) - 1)
        out = self.slopes[seg]
        return out if out.ndim else float(out)


def upper_hull(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Monotone-chain upper hull of points already sorted by x."""
    d2 = np.diff(ys, 2) if len(ys) > 2 else np.zeros(0)
    dx = np.diff(xs)
    if len(ys) > 2 and np.allclose(dx, dx[0]) and np.all(d2 <= 0):
        # already concave on an even grid
        return xs.copy(), ys.copy()
    hx: list = []
    hy: list = []
    for x, y in zip(xs.tolist(), ys.tolist()):
        while len(hx) >= 2 and (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2]) >= 0:
            hx.pop()
            hy.pop()
        hx.append(x)
        hy.append(y)
    return np.asarray(hx), np.asarray(hy)


class ValueDistribution:
    """Common interface.  Subclasses are frozen dataclasses."""

    kind: str
    regular: bool = False

    @property
    def support_lo(self) -> float:
        raise NotImplementedError

    @property
    def support_hi(self) -> float:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sample(self, u):
        """Inverse-CDF transform of a uniform draw (q = u)."""
        raise NotImplementedError

    def virtual_value(self, x):
        raise DistributionError(f"{self.kind} has no density; use ironed_virtual_value")

    def ironed_virtual_value(self, x):
        raise NotImplementedError

    def inverse_ironed_virtual(self, y):
        raise NotImplementedError

    def iron(self, m: int = DEFAULT_GRID) -> IronedCurve:
        raise NotImplementedError

    def in_support(self, x) -> np.ndarray:
        raise NotImplementedError

    def clamp(self, x):
        raise NotImplementedError

    def check_support(self, x) -> None:
        ok = np.asarray(self.in_support(x))
        if not ok.all():
            bad = np.asarray(x, dtype=float)[~ok] if np.ndim(x) else x
            raise OutsideSupport(f"value(s) {np.ravel(bad)[:3].tolist()} outside support of {self}")

    def to_json(self) -> dict:
        raise NotImplementedError


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Uniform(ValueDistribution):
    lo: float
    hi: float
    kind = "uniform"
    regular = True

    def __post_init__(self):
        if not (0 <= self.lo < self.hi and math.isfinite(self.hi)):
            raise DistributionError(f"Uniform needs 0 <= lo < hi < inf, got ({self.lo}, {self.hi})")

    @property
    def support_lo(self):
        return self.lo

    @property
    def support_hi(self):
        return self.hi

    def cdf(self, x):
        return _scalar(np.clip((np.asarray(x, float) - self.lo) / (self.hi - self.lo), 0.0, 1.0))

    def sample(self, u):
        return _scalar(self.hi - np.asarray(u, float) * (self.hi - self.lo))

    def virtual_value(self, x):
        return _scalar(2.0 * np.asarray(x, float) - self.hi)

    def ironed_virtual_value(self, x):
        self.check_support(x)
        return self.virtual_value(x)

    def inverse_ironed_virtual(self, y):
        y = np.asarray(y, float)
        if np.any(y > self.hi + _EPS * max(1.0, self.hi)):
            raise DistributionError(f"{np.max(y)} exceeds the largest ironed virtual value {self.hi}")
        return _scalar(np.clip((y + self.hi) / 2.0, self.lo, self.hi))

    def iron(self, m=DEFAULT_GRID):
        return _grid_curve(self, m)

    def in_support(self, x):
        x = np.asarray(x, float)
        tol = _EPS * max(1.0, self.hi)
        return (x >= self.lo - tol) & (x <= self.hi + tol)

    def clamp(self, x):
        return _scalar(np.clip(np.asarray(x, float), self.lo, self.hi))

    def to_json(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ParetoLike(ValueDistribution):
    """``F(x) = 1 - (1 + x)**(1 - N)`` on ``[0, inf)``, regular for ``N > 2``."""

    n_param: float
    kind = "pareto_like"
    regular = True

    def __post_init__(self):
        if not self.n_param > 2:
            raise DistributionError(f"ParetoLike needs N > 2, got {self.n_param}")

    @property
    def support_lo(self):
        return 0.0

    @property
    def support_hi(self):
        return math.inf

    @property
    def truncated_hi(self) -> float:
        return self.sample(PARETO_TRUNCATION)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, float), 0.0)
        return _scalar(1.0 - (1.0 + x) ** (1.0 - self.n_param))

    def sample(self, u):
        q = np.maximum(np.asarray(u, float), 2.0 ** -60)
        return _scalar(q ** (-1.0 / (self.n_param - 1.0)) - 1.0)

    def virtual_value(self, x):
        n = self.n_param
        return _scalar(((n - 2.0) * np.asarray(x, float) - 1.0) / (n - 1.0))

    def ironed_virtual_value(self, x):
        self.check_support(x)
        return self.virtual_value(x)

    def inverse_ironed_virtual(self, y):
        n = self.n_param
        return _scalar(np.maximum(((n - 1.0) * np.asarray(y, float) + 1.0) / (n - 2.0), 0.0))

    def iron(self, m=DEFAULT_GRID):
        return _grid_curve(self, m)

    def in_support(self, x):
        x = np.asarray(x, float)
        return (x >= -_EPS) & np.isfinite(x)

    def clamp(self, x):
        return _scalar(np.maximum(np.asarray(x, float), 0.0))

    def to_json(self):
        return {"kind": "pareto_like", "n_param": self.n_param}


@dataclass(frozen=True)
class Discrete(ValueDistribution):
    """Finite support; ironing uses the exact breakpoints of F."""

    values: tuple
    probs: tuple
    kind = "discrete"

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if len(values) == 0 or len(values) != len(probs):
            raise DistributionError("support and probabilities must be non-empty and equal length")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DistributionError("support values must be strictly ascending")
        if values[0] < 0 or any(p <= 0 for p in probs):
            raise DistributionError("support values must be non-negative and probabilities positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise DistributionError(f"probabilities sum to {math.fsum(probs)}, not 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @property
    def support_lo(self):
        return self.values[0]

    @property
    def support_hi(self):
        return self.values[-1]

    @cached_property
    def _v(self) -> np.ndarray:
        return np.asarray(self.values)

    @cached_property
    def upper_tail(self) -> np.ndarray:
        """``P[v >= values[k]]`` for each atom."""
        return np.cumsum(np.asarray(self.probs)[::-1])[::-1]

    @cached_property
    def curve(self) -> IronedCurve:
        q = np.concatenate([[0.0], self.upper_tail[::-1]])
        r = np.concatenate([[0.0], (self.upper_tail * self._v)[::-1]])
        q[-1] = 1.0
        hq, hr = upper_hull(q, r)
        return IronedCurve(q=q, revenue=r, hull_q=hq, hull_revenue=hr)

    @cached_property
    def atom_virtuals(self) -> np.ndarray:
        """Ironed virtual value of each atom (left hull slope at its quantile)."""
        return np.asarray(self.curve.slope_at(self.upper_tail), dtype=float).reshape(-1)

    def atom_index(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        idx = np.clip(np.searchsorted(self._v, x), 0, len(self._v) - 1)
        lower = np.clip(idx - 1, 0, len(self._v) - 1)
        pick_lower = np.abs(self._v[lower] - x) < np.abs(self._v[idx] - x)
        return np.where(pick_lower, lower, idx)

    def cdf(self, x):
        x = np.asarray(x, float)
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        out = np.minimum(cum[np.searchsorted(self._v, x, side="right")], 1.0)
        return _scalar(out)

    def sample(self, u):
        # v(q) = min{v : F(v) >= 1 - q}
        cum = np.cumsum(self.probs)
        target = 1.0 - np.asarray(u, float)
        idx = np.searchsorted(cum, target - 1e-15, side="left")
        return _scalar(self._v[np.clip(idx, 0, len(self._v) - 1)])

    def ironed_virtual_value(self, x):
        self.check_support(x)
        return _scalar(self.atom_virtuals[self.atom_index(x)])

    def inverse_ironed_virtual(self, y):
        y = np.asarray(y, float)
        top = self.atom_virtuals[-1]
        if np.any(y > top + _EPS * max(1.0, abs(top))):
            raise DistributionError(f"{np.max(y)} exceeds the largest ironed virtual value {top}")
        # atom_virtuals is non-decreasing in value
        idx = np.searchsorted(self.atom_virtuals, y - _EPS * np.maximum(1.0, np.abs(y)), side="left")
        return _scalar(self._v[np.clip(idx, 0, len(self._v) - 1)])

    def iron(self, m=DEFAULT_GRID):
        return self.curve

    def in_support(self, x):
        x = np.asarray(x, float)
        near = self._v[self.atom_index(x)]
        return np.abs(near - x) <= _EPS * np.maximum(1.0, np.abs(near))

    def clamp(self, x):
        return _scalar(self._v[self.atom_index(x)])

    def to_json(self):
        return {"kind": "discrete", "support": list(self.values), "probs": list(self.probs)}


class PointMass(Discrete):
    """Deterministic value; its revenue curve is the line q * value."""

    kind = "point_mass"

    def __init__(self, value: float):
        if value < 0:
            raise DistributionError("point mass must be non-negative")
        super().__init__(values=(float(value),), probs=(1.0,))

    @property
    def value(self) -> float:
        return self.values[0]

    def __repr__(self):
        return f"PointMass({self.value})"

    def to_json(self):
        return {"kind": "point_mass", "value": self.value}


def _grid_curve(d: ValueDistribution, m: int) -> IronedCurve:
    return _grid_curve_cached(d, int(m))


@lru_cache(maxsize=64)
def _grid_curve_cached(d: ValueDistribution, m: int) -> IronedCurve:
    if m < 2:
        raise DistributionError("grid size must be at least 2")
    q = np.arange(m + 1) / m
    v = np.asarray(d.sample(np.maximum(q, PARETO_TRUNCATION)), float)
    r = q * v
    r[0] = 0.0
    hq, hr = upper_hull(q, r)
    return IronedCurve(q=q, revenue=r, hull_q=hq, hull_revenue=hr)


def grid_ironed_virtual_value(d: ValueDistribution, x, m: int = DEFAULT_GRID):
    """Ironed virtual value read off the grid hull, as a cross-check of the closed forms."""
    curve = d.iron(m)
    if isinstance(d, Discrete):
        return d.ironed_virtual_value(x)
    return curve.slope_at(1.0 - np.asarray(d.cdf(x), float))


# -- JSON ------------------------------------------------------------------

def distribution_from_json(obj: dict) -> ValueDistribution:
    try:
        kind = obj["kind"]
        if kind == "uniform":
            return Uniform(float(obj["lo"]), float(obj["hi"]))
        if kind == "pareto_like":
            return ParetoLike(float(obj["n_param"]))
        if kind == "point_mass":
            return PointMass(float(obj["value"]))
        if kind == "discrete":
            return Discrete(tuple(obj["support"]), tuple(obj["probs"]))
    except (KeyError, TypeError) as exc:
        raise DistributionError(f"malformed distribution JSON: {exc!r}") from exc
    raise DistributionError(f"unknown distribution kind {kind!r}")


def discrete(mapping: dict) -> Discrete:
    """``discrete({1: 0.5, 3: 0.5})`` convenience constructor."""
    items = sorted(mapping.items())
    return Discrete(tuple(k for k, _ in items), tuple(p for _, p in items))


def all_discrete(dists: Sequence[ValueDistribution]) -> bool:
    return all(isinstance(d, Discrete) for d in dists)
