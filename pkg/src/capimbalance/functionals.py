"""Linear and nonlinear functionals of time-varying portfolios against market caps.

Months are 0-based indices into the cap panel. A month ``t`` is eligible
once a full trailing window of ``tau`` months exists (``t >= tau - 1``) and
the trajectory has a weight row on the trading day the calendar assigns
to ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .distmetrics import DiscreteDistribution, DistanceMatrix, distance_matrix
from .errors import AlignmentError, ContractError, UndefinedRatioError, WindowError
from .ingest import CalendarMap, CapPanel
from .optimizer import WeightTrajectories

GiniMode = Literal["canonical", "literal"]

COLUMNS = ("nu", "nu_bar", "mu", "mu_bar", "f", "f_mu", "g")


@dataclass(frozen=True)
class FunctionalSeries:
    months: np.ndarray
    nu: np.ndarray
    nu_bar: np.ndarray
    mu: np.ndarray
    mu_bar: np.ndarray
    f: np.ndarray  # nu_bar / mu_bar
    f_mu: np.ndarray  # nu_bar / mu, the variant plotted against current average cap
    g: np.ndarray
    gini_mode: str = "canonical"

    def table(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in COLUMNS])


def exposure(w: Sequence[float] | np.ndarray, caps: Sequence[float] | np.ndarray) -> float:
    """Cap exposure ``sum_i w_i X_i``."""
    w = np.asarray(w, dtype=float).ravel()
    x = np.asarray(caps, dtype=float).ravel()
    if w.shape != x.shape:
        raise ContractError(f"{w.size} weights for {x.size} caps")
    if np.isnan(x).any():
        raise ContractError("caps must be present for every asset")
    return float(np.dot(w, x))


def trailing_mean_caps(caps: CapPanel, t: int, tau: int) -> np.ndarray:
    """Per-asset mean cap over months ``t - tau + 1 .. t`` inclusive."""
    if tau < 1:
        raise WindowError(f"tau must be >= 1, got {tau}")
    if t < tau - 1 or t >= len(caps.dates):
        raise WindowError(f"month index {t} has no full {tau}-month trailing window")
    return caps.values[t - tau + 1 : t + 1].mean(axis=0)


def portfolio_gini(values: Sequence[float] | np.ndarray, w: Sequence[float] | np.ndarray, mode: GiniMode = "canonical") -> float:
    """Gini coefficient of ``values`` viewed as a distribution with probabilities ``w``.

    canonical: ``sum_ij w_i w_j |x_i - x_j| / (2 * nu)`` with ``nu = sum_i w_i x_i``;
    under uniform weights this is the ordinary Gini of ``values``.
    literal: ``(2 / nu) * sum_ij ...``, exactly four times canonical.
    """
    x = np.asarray(values, dtype=float).ravel()
    p = np.asarray(w, dtype=float).ravel()
    if x.shape != p.shape:
        raise ContractError(f"{p.size} weights for {x.size} values")
    if (p < 0).any():
        raise ContractError("weights must be nonnegative")
    nu = float(np.dot(p, x))
    if not nu > 0:
        raise UndefinedRatioError("weighted mean is zero")
    order = np.argsort(x, kind="stable")
    xs, ps = x[order], p[order]
    cum = np.cumsum(ps)
    below = cum - ps
    above = cum[-1] - cum
    # sum over ordered pairs = 2 * sum_k p_k x_k (mass below k - mass above k)
    pair_sum = 2.0 * float(np.dot(ps * xs, below - above))
    q = pair_sum / nu
    if mode == "canonical":
        return q / 2.0
    if mode == "literal":
        return 2.0 * q
    raise ValueError(f"unknown gini mode {mode!r}")


def _aligned_caps(caps: CapPanel, traj: WeightTrajectories) -> CapPanel:
    if caps.assets != traj.assets:
        missing = [a for a in traj.assets if a not in caps.assets]
        if missing:
            raise ContractError(f"cap panel lacks assets {missing}")
        caps = caps.select(traj.assets)
    return caps


def weight_row(traj: WeightTrajectories, cal: CalendarMap, t: int) -> np.ndarray:
    day = cal.day_of(t)
    row = traj.row_for(day)
    if row is None:
        raise AlignmentError(f"no weight row for month {cal.months[t]} (trading day {day})")
    return traj.weights[row]


def eligible_months(cal: CalendarMap, traj: WeightTrajectories, tau: int) -> list[int]:
    """Months with a full trailing window whose mapped day is within the trajectory span."""
    first = traj.dates[0]
    return [t for t in range(tau - 1, len(cal.months)) if cal.day_of(t) >= first]


def functional_series(
    caps: CapPanel,
    traj: WeightTrajectories,
    cal: CalendarMap,
    tau: int = 6,
    *,
    gini_mode: GiniMode = "canonical",
    months: Sequence[int] | None = None,
) -> FunctionalSeries:
    """Exposure functionals per month (all months ``t >= tau - 1`` by default)."""
    caps = _aligned_caps(caps, traj)
    if months is None:
        months = range(tau - 1, len(caps.dates))
    months = list(months)
    m = len(traj.assets)
    uniform = np.full(m, 1.0 / m)
    out = {c: np.empty(len(months)) for c in COLUMNS}
    for j, t in enumerate(months):
        x_bar = trailing_mean_caps(caps, t, tau)
        x_now = caps.values[t]
        w = weight_row(traj, cal, t)
        out["nu"][j] = exposure(w, x_now)
        out["nu_bar"][j] = exposure(w, x_bar)
        # same code path as nu/nu_bar so uniform weights give f == 1 bit for bit
        out["mu"][j] = exposure(uniform, x_now)
        out["mu_bar"][j] = exposure(uniform, x_bar)
        out["f"][j] = out["nu_bar"][j] / out["mu_bar"][j]
        out["f_mu"][j] = out["nu_bar"][j] / out["mu"][j]
        out["g"][j] = portfolio_gini(x_bar, w, gini_mode)
    return FunctionalSeries(caps.dates[months], gini_mode=gini_mode, **out)


def portfolio_distribution(
    caps: CapPanel, traj: WeightTrajectories, cal: CalendarMap, t: int, tau: int = 6
) -> DiscreteDistribution:
    """Trailing-mean caps normalised by their total, weighted by the month's portfolio.

    Zero-weight assets are dropped; this leaves every W1 distance unchanged.
    """
    caps = _aligned_caps(caps, traj)
    x_bar = trailing_mean_caps(caps, t, tau)
    if np.isnan(x_bar).any():
        raise ContractError(f"month {caps.dates[t]}: caps missing inside the trailing window")
    w = weight_row(traj, cal, t)
    keep = w > 0
    return DiscreteDistribution(x_bar[keep] / x_bar.sum(), w[keep])


def portfolio_distance_matrix(
    caps: CapPanel,
    traj: WeightTrajectories,
    cal: CalendarMap,
    tau: int = 6,
    *,
    months: Sequence[int] | None = None,
) -> DistanceMatrix:
    if months is None:
        months = range(tau - 1, len(caps.dates))
    months = list(months)
    if len(months) < 2:
        raise ContractError("need at least two eligible months")
    dists = [portfolio_distribution(caps, traj, cal, t, tau) for t in months]
    return distance_matrix(dists, [str(caps.dates[t]) for t in months])


def uniform_trajectories(traj: WeightTrajectories) -> WeightTrajectories:
    """Same dates and assets, every row replaced by the equal-weight portfolio."""
    m = len(traj.assets)
    k = len(traj.dates)
    return WeightTrajectories(
        traj.dates, traj.assets, np.full((k, m), 1.0 / m), np.full(k, np.nan), np.ones(k, dtype=bool)
    )
