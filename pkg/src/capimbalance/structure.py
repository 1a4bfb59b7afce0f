"""Cross-sectional market-structure metrics: concentration ratios, Gini, Lorenz curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ContractError, UndefinedRatioError
from .ingest import CapPanel

MissingPolicy = Literal["drop_per_month", "full_history_only"]


@dataclass(frozen=True)
class SeriesOutput:
    index: np.ndarray
    names: tuple[str, ...]
    values: np.ndarray  # shape (len(index), len(names))

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.index), len(self.names)):
            raise ContractError(f"values shape {values.shape} inconsistent with index/names")
        if np.isnan(values).any():
            raise ContractError("series output contains missing values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


@dataclass(frozen=True)
class LorenzCurve:
    points: np.ndarray  # shape (n+1, 2)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def area(self) -> float:
        """Trapezoidal area under the curve."""
        x, y = self.x, self.y
        return float(np.sum(np.diff(x) * (y[1:] + y[:-1])) / 2.0)


def _clean(values: Sequence[float] | np.ndarray) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    x = np.where(np.isnan(x), 0.0, x)
    if (x < 0).any():
        raise ContractError("values must be nonnegative")
    if not (x > 0).any():
        raise UndefinedRatioError("at least one value must be positive")
    return x


def concentration_ratio(values: Sequence[float] | np.ndarray, k: int) -> float:
    """Share of the total held by the ``k`` largest values (missing counts as 0)."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    x = _clean(values)
    if k >= x.size:
        return 1.0
    # running sums keep CR_k nondecreasing in k to the last bit
    csum = np.cumsum(np.sort(x)[::-1])
    return float(csum[k - 1] / csum[-1])


def _concentration_ratios(x: np.ndarray, ks: Sequence[int]) -> np.ndarray:
    desc = np.sort(x)[::-1]
    csum = np.cumsum(desc)
    total = csum[-1]
    out = np.empty(len(ks))
    for j, k in enumerate(ks):
        out[j] = 1.0 if k >= x.size else csum[k - 1] / total
    return out


def concentration_series(caps: CapPanel, ks: Sequence[int]) -> SeriesOutput:
    if not ks:
        raise ContractError("ks must be nonempty")
    if any(k < 1 for k in ks):
        raise ContractError(f"every k must be >= 1, got {list(ks)}")
    rows = []
    for t, month in enumerate(caps.dates):
        try:
            rows.append(_concentration_ratios(_clean(caps.values[t]), ks))
        except UndefinedRatioError:
            raise UndefinedRatioError(f"month {month}: no positive caps") from None
    return SeriesOutput(caps.dates, tuple(f"CR_{k}" for k in ks), np.array(rows).reshape(-1, len(ks)))


def gini(values: Sequence[float] | np.ndarray) -> float:
    """Mean-absolute-difference Gini, ``sum_{i<j} |x_i - x_j| / (n * total)``.

    Uses the sorted-rank identity, O(n log n). Missing entries (NaN) are
    excluded from both ``n`` and the total.
    """
    x = np.asarray(values, dtype=float).ravel()
    x = x[~np.isnan(x)]
    if (x < 0).any():
        raise ContractError("values must be nonnegative")
    total = x.sum()
    if not total > 0:
        raise UndefinedRatioError("at least one value must be positive")
    n = x.size
    xs = np.sort(x)
    # x_(k) is the larger element in k pairs and the smaller in n-1-k pairs.
    coef = 2.0 * np.arange(n) - (n - 1)
    return float(np.dot(coef, xs) / (n * total))


def gini_series(caps: CapPanel, missing_policy: MissingPolicy = "drop_per_month") -> SeriesOutput:
    if missing_policy == "drop_per_month":
        values = caps.values
    elif missing_policy == "full_history_only":
        keep = ~caps.missing.any(axis=0)
        values = caps.values[:, keep]
    else:
        raise ValueError(f"unknown missing policy {missing_policy!r}")
    out = np.empty(len(caps.dates))
    for t, month in enumerate(caps.dates):
        try:
            out[t] = gini(values[t])
        except UndefinedRatioError:
            raise UndefinedRatioError(f"month {month}: no assets included under {missing_policy}") from None
    return SeriesOutput(caps.dates, ("gini",), out[:, None])


def lorenz_curve(values: Sequence[float] | np.ndarray) -> LorenzCurve:
    """Lorenz curve through ``(i/n, share held by the i smallest values)``, i = 0..n.

    The share of the ``i`` smallest equals ``1 - CR_{n-i}``.
    """
    x = np.asarray(values, dtype=float).ravel()
    x = x[~np.isnan(x)]
    if (x < 0).any():
        raise ContractError("values must be nonnegative")
    total = x.sum()
    if not total > 0:
        raise UndefinedRatioError("at least one value must be positive")
    n = x.size
    cum = np.concatenate([[0.0], np.cumsum(np.sort(x))]) / total
    cum[-1] = 1.0
    return LorenzCurve(np.column_stack([np.arange(n + 1) / n, cum]))
