"""Synthetic price/cap panels with a planted regime break and a concentration ramp.

Cross-sectional cap shares follow a Zipf profile ``(rank)^-alpha(t)`` where

    alpha(t) = alpha0 + ramp * t / (T - 1) + break_size * [t >= break_month]

and each log cap is perturbed by Gaussian noise of s.d. ``noise``. Prices
are a one-factor lognormal model on a business-day calendar. The monthly
cap dates are the last trading day of ``n_months`` equal blocks of that
calendar, so any ``n_days >= n_months`` works.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import CapPanel, PricePanel, write_panel


@dataclass(frozen=True)
class SynthSpec:
    n_assets: int = 20
    n_months: int = 48
    n_days: int = 600
    break_month: int | None = None  # first month of the second regime; None = n_months // 2
    break_size: float = 0.5
    noise: float = 0.05
    ramp: float = 0.0
    alpha0: float = 1.0
    late_listings: int = 0
    start: str = "2004-01-02"
    seed: int = 0


def block_ends(n_days: int, n_months: int) -> np.ndarray:
    if n_months < 1 or n_days < n_months:
        raise ValueError(f"need n_days >= n_months >= 1, got {n_days} and {n_months}")
    return np.array([((t + 1) * n_days) // n_months - 1 for t in range(n_months)])


def exponents(spec: SynthSpec) -> np.ndarray:
    T = spec.n_months
    t = np.arange(T)
    brk = T // 2 if spec.break_month is None else spec.break_month
    ramp = spec.ramp * t / (T - 1) if T > 1 else np.zeros(T)
    return spec.alpha0 + ramp + spec.break_size * (t >= brk)


def generate(spec: SynthSpec) -> tuple[PricePanel, CapPanel]:
    rng = np.random.default_rng(spec.seed)
    n, T, D = spec.n_assets, spec.n_months, spec.n_days
    assets = tuple(f"A{i:03d}" for i in range(n))
    days = np.busday_offset(np.datetime64(spec.start, "D"), np.arange(D), roll="forward")
    ends = block_ends(D, T)

    # prices: drift + beta * market + idiosyncratic
    drift = rng.normal(3e-4, 3e-4, n)
    beta = rng.uniform(0.5, 1.5, n)
    vol = rng.uniform(0.008, 0.02, n)
    market = rng.normal(0.0, 0.008, D - 1)
    logret = drift + market[:, None] * beta + rng.normal(size=(D - 1, n)) * vol
    p0 = rng.uniform(10.0, 200.0, n)
    prices = p0 * np.exp(np.vstack([np.zeros(n), np.cumsum(logret, axis=0)]))

    # caps: Zipf shares over a random rank assignment, growing total
    rank = rng.permutation(n) + 1.0
    alpha = exponents(spec)
    shares = rank[None, :] ** -alpha[:, None]
    shares /= shares.sum(axis=1, keepdims=True)
    total = 5e11 * 1.01 ** np.arange(T)
    caps = total[:, None] * shares * np.exp(spec.noise * rng.normal(size=(T, n)))

    if spec.late_listings:
        for j in range(n - spec.late_listings, n):
            first_month = int(rng.integers(1, max(T // 2, 2)))
            caps[:first_month, j] = np.nan
            prices[: ends[first_month - 1] + 1, j] = np.nan

    return PricePanel(days, assets, prices), CapPanel(days[ends], assets, caps)


def write_synthetic(spec: SynthSpec, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prices, caps = generate(spec)
    p_path, c_path = out / "prices.csv", out / "caps.csv"
    write_panel(prices, p_path)
    write_panel(caps, c_path)
    return p_path, c_path
