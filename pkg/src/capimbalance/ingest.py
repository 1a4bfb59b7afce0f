"""Panel loading, validation and calendar alignment.

Prices are daily, caps are monthly (one row per month-end). Both live in
the same CSV layout::

    date,AAPL,MSFT
    2004-01-02,10.5,27.1
    2004-01-05,,27.4

An empty cell is a missing observation. In memory, missing entries are
NaN and :attr:`Panel.missing` gives the boolean mask.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import CalendarError, ConfigurationError, ParseError, ValidationError

PanelKind = Literal["price", "cap"]
ReturnMode = Literal["simple", "log"]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _check_increasing(dates: np.ndarray, what: str) -> None:
    if dates.size > 1:
        bad = np.nonzero(np.diff(dates) <= np.timedelta64(0, "D"))[0]
        if bad.size:
            i = int(bad[0]) + 1
            raise CalendarError(
                f"{what} not strictly increasing at position {i}: "
                f"{dates[i - 1]} followed by {dates[i]}",
                row=i + 2,
            )


@dataclass(frozen=True)
class Panel:
    """Date-indexed, asset-labelled matrix of strictly positive values."""

    dates: np.ndarray  # datetime64[D], shape (T,)
    assets: tuple[str, ...]
    values: np.ndarray  # float64, shape (T, n); NaN = missing

    def __post_init__(self) -> None:
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        assets = tuple(str(a) for a in self.assets)
        if values.ndim != 2 or values.shape != (dates.size, len(assets)):
            raise ValidationError(
                f"values shape {values.shape} does not match "
                f"{dates.size} dates x {len(assets)} assets"
            )
        if len(set(assets)) != len(assets):
            raise ValidationError("duplicate asset labels")
        _check_increasing(dates, "dates")
        present = ~np.isnan(values)
        bad = present & ~(np.isfinite(values) & (values > 0))
        if bad.any():
            r, c = (int(x) for x in np.argwhere(bad)[0])
            raise ValidationError(
                f"value {values[r, c]!r} at {dates[r]} / {assets[c]} must be a positive finite number",
                row=r + 2,
                column=assets[c],
            )
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "assets", assets)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def select(self, assets: list[str] | tuple[str, ...]) -> "Panel":
        """Return a copy restricted to ``assets`` (in the given order)."""
        idx = [self.assets.index(a) for a in assets]
        return type(self)(self.dates, tuple(assets), self.values[:, idx])


class PricePanel(Panel):
    """Daily prices."""


class CapPanel(Panel):
    """Month-end market capitalisations."""

    @property
    def months(self) -> np.ndarray:
        return self.dates

    def totals(self) -> np.ndarray:
        """Total market cap per month, missing entries counted as zero."""
        return np.nansum(self.values, axis=1)


@dataclass(frozen=True)
class ReturnsMatrix:
    dates: np.ndarray
    assets: tuple[str, ...]
    values: np.ndarray  # NaN where either adjacent price is missing

    def __post_init__(self) -> None:
        object.__setattr__(self, "dates", _frozen(np.asarray(self.dates, dtype="datetime64[D]")))
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "assets", tuple(self.assets))


@dataclass(frozen=True)
class CalendarMap:
    """For each month index ``t``, the index of its trading day in the price calendar."""

    month_to_day: np.ndarray
    days: np.ndarray
    months: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "month_to_day", _frozen(np.asarray(self.month_to_day, dtype=np.int64)))

    def day_of(self, t: int) -> np.datetime64:
        return self.days[self.month_to_day[t]]


def load_panel(path: str | Path, kind: PanelKind) -> PricePanel | CapPanel:
    """Read a price or cap panel from CSV.

    Raises :class:`ParseError` for ragged rows and unparseable cells,
    :class:`CalendarError` for non-increasing dates and
    :class:`ValidationError` (with ``row``/``column``) for non-positive values.
    """
    if kind not in ("price", "cap"):
        raise ValueError(f"kind must be 'price' or 'cap', got {kind!r}")
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        return _parse_panel(fh, kind, source=str(path))


def _parse_panel(fh: io.TextIOBase, kind: PanelKind, source: str) -> PricePanel | CapPanel:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{source}: empty file", row=1) from None
    if len(header) < 2 or header[0].strip().lower() != "date":
        raise ParseError(f"{source}: first header cell must be 'date' followed by asset names", row=1)
    assets = tuple(h.strip() for h in header[1:])
    if any(not a for a in assets):
        raise ParseError(f"{source}: blank asset name in header", row=1)

    dates: list[dt.date] = []
    rows: list[list[float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(
                f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}", row=lineno
            )
        try:
            dates.append(dt.date.fromisoformat(row[0].strip()))
        except ValueError:
            raise ParseError(f"{source}:{lineno}: bad ISO date {row[0]!r}", row=lineno) from None
        parsed = []
        for asset, cell in zip(assets, row[1:]):
            cell = cell.strip()
            if cell == "":
                parsed.append(math.nan)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(
                    f"{source}:{lineno}: non-numeric value {cell!r} for {asset}",
                    row=lineno,
                    column=asset,
                ) from None
            if not (math.isfinite(x) and x > 0):
                raise ValidationError(
                    f"{source}:{lineno}: value {cell} for {asset} must be positive and finite",
                    row=lineno,
                    column=asset,
                )
            parsed.append(x)
        rows.append(parsed)

    values = np.array(rows, dtype=float).reshape(len(rows), len(assets))
    cls = PricePanel if kind == "price" else CapPanel
    try:
        return cls(np.array(dates, dtype="datetime64[D]"), assets, values)
    except CalendarError as exc:
        raise CalendarError(f"{source}: {exc}", row=exc.row) from None


def format_float(x: float) -> str:
    """Canonical on-disk float format: shortest round-tripping repr, '' for NaN."""
    return "" if math.isnan(x) else repr(float(x))


def write_panel(panel: Panel, path: str | Path) -> None:
    write_table(path, "date", panel.assets, panel.dates, panel.values)


def write_table(
    path: str | Path,
    index_name: str,
    columns: tuple[str, ...] | list[str],
    index: np.ndarray | list,
    values: np.ndarray,
) -> None:
    """Write a labelled matrix in the canonical CSV layout used throughout the package."""
    lines = [",".join([index_name, *columns])]
    for label, row in zip(index, np.asarray(values, dtype=float)):
        lines.append(",".join([str(label), *(format_float(x) for x in row)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def compute_returns(panel: PricePanel, mode: ReturnMode = "simple") -> ReturnsMatrix:
    """Per-period returns ``p[s]/p[s-1] - 1`` (or the log ratio).

    A return is missing whenever either adjacent price is missing.
    """
    p = panel.values
    ratio = p[1:] / p[:-1]  # NaN propagates
    if mode == "simple":
        r = ratio - 1.0
    elif mode == "log":
        r = np.log(ratio)
    else:
        raise ValueError(f"mode must be 'simple' or 'log', got {mode!r}")
    return ReturnsMatrix(panel.dates[1:], panel.assets, r)


def restrict_full_history(prices: PricePanel, caps: CapPanel) -> tuple[PricePanel, CapPanel]:
    """Keep only assets with no missing entry in either panel.

    Asset order follows the price panel. Assets present in only one panel
    never qualify.
    """
    full_p = {a for a, miss in zip(prices.assets, prices.missing.any(axis=0)) if not miss}
    full_c = {a for a, miss in zip(caps.assets, caps.missing.any(axis=0)) if not miss}
    keep = [a for a in prices.assets if a in full_p and a in full_c]
    if not keep:
        raise ConfigurationError("no asset has full history in both the price and cap panels")
    return prices.select(keep), caps.select(keep)


def build_calendar_map(prices: PricePanel, caps: CapPanel) -> CalendarMap:
    """Map each cap month to the latest trading day on or before its recorded date."""
    days = prices.dates
    months = caps.dates
    if days.size == 0:
        raise CalendarError("price panel has no trading days")
    if months.size and months[-1] > days[-1]:
        raise CalendarError(f"cap date {months[-1]} is after the last trading day {days[-1]}")
    idx = np.searchsorted(days, months, side="right") - 1
    if (idx < 0).any():
        t = int(np.nonzero(idx < 0)[0][0])
        raise CalendarError(f"cap date {months[t]} precedes the first trading day {days[0]}")
    if idx.size > 1 and (np.diff(idx) <= 0).any():
        t = int(np.nonzero(np.diff(idx) <= 0)[0][0]) + 1
        raise CalendarError(
            f"cap dates {months[t - 1]} and {months[t]} map to the same trading day {days[idx[t]]}"
        )
    return CalendarMap(idx, days, months)
