"""Exact 1-Wasserstein distances between discrete distributions on the real line."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, UndefinedDistributionError, ValidationError
from .ingest import CapPanel

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise ValidationError(f"{v.size} values but {w.size} weights")
        if v.size == 0:
            raise UndefinedDistributionError("distribution has no support points")
        if not (np.isfinite(v).all() and np.isfinite(w).all()):
            raise ValidationError("values and weights must be finite")
        if (w < 0).any():
            raise ValidationError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, values: Sequence[float] | np.ndarray) -> "DiscreteDistribution":
        v = np.asarray(values, dtype=float).ravel()
        return cls(v, np.full(v.size, 1.0 / v.size) if v.size else v)

    def mean(self) -> float:
        return float(np.dot(self.values, self.weights))


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple
    entries: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.entries, dtype=float)
        n = len(self.labels)
        if d.shape != (n, n):
            raise ContractError(f"matrix shape {d.shape} does not match {n} labels")
        if not np.isfinite(d).all() or (d < 0).any():
            raise ContractError("distances must be finite and nonnegative")
        if np.abs(d - d.T).max(initial=0.0) > 1e-12:
            raise ContractError("distance matrix is not symmetric")
        if np.abs(np.diag(d)).max(initial=0.0) > 0:
            raise ContractError("distance matrix has a nonzero diagonal")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "entries", d)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def reorder(self, order: Sequence[int]) -> "DistanceMatrix":
        order = list(order)
        return DistanceMatrix(tuple(self.labels[i] for i in order), self.entries[np.ix_(order, order)])


def normalized_cap_distribution(caps: CapPanel, t: int) -> DiscreteDistribution:
    """Present caps of month ``t`` divided by their total, each with weight ``1/n_t``."""
    row = caps.values[t]
    x = row[~np.isnan(row)]
    if x.size == 0:
        raise UndefinedDistributionError(f"month {caps.dates[t]} has no present caps")
    return DiscreteDistribution.uniform(x / x.sum())


def _quantile_steps(d: DiscreteDistribution) -> tuple[np.ndarray, np.ndarray]:
    keep = d.weights > 0
    v, w = d.values[keep], d.weights[keep]
    order = np.argsort(v, kind="stable")
    cdf = np.cumsum(w[order])
    cdf[-1] = 1.0
    return v[order], cdf


def wasserstein(a: DiscreteDistribution, b: DiscreteDistribution) -> float:
    """Exact W1 as the integral of ``|F^-1(u) - G^-1(u)|`` over ``u`` in [0, 1].

    Both quantile functions are step functions; on the merged set of
    cumulative-weight breakpoints each is constant, so the integral is a
    finite sum of segment width times quantile gap.
    """
    va, ca = _quantile_steps(a)
    vb, cb = _quantile_steps(b)
    breaks = np.union1d(ca, cb)  # sorted, ends at 1.0
    widths = np.diff(breaks, prepend=0.0)
    # On (breaks[k-1], breaks[k]] the quantile is the first support point whose cdf >= breaks[k].
    ia = np.minimum(np.searchsorted(ca, breaks, side="left"), va.size - 1)
    ib = np.minimum(np.searchsorted(cb, breaks, side="left"), vb.size - 1)
    return float(np.sum(widths * np.abs(va[ia] - vb[ib])))


def wasserstein_equal_n(vals_a: Sequence[float], vals_b: Sequence[float]) -> float:
    """Closed form for two equal-size uniform samples: mean gap between sorted values."""
    a = np.sort(np.asarray(vals_a, dtype=float).ravel())
    b = np.sort(np.asarray(vals_b, dtype=float).ravel())
    if a.size != b.size:
        raise ContractError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ContractError("empty inputs")
    return float(np.mean(np.abs(a - b)))


def distance_matrix(dists: Sequence[DiscreteDistribution], labels: Sequence) -> DistanceMatrix:
    """All pairwise W1 distances; the upper triangle is mirrored so symmetry is exact."""
    n = len(dists)
    if n < 2:
        raise ContractError("need at least two distributions")
    if len(labels) != n:
        raise ContractError(f"{n} distributions but {len(labels)} labels")
    steps = []
    for d, label in zip(dists, labels):
        if not isinstance(d, DiscreteDistribution):
            raise ContractError(f"{label}: not a DiscreteDistribution")
        steps.append(d)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = wasserstein(steps[i], steps[j])
    return DistanceMatrix(tuple(labels), out)
