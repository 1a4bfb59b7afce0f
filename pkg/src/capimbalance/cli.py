"""Command-line pipeline: structure metrics, rolling optimisation, functionals, figures.

Settings resolve as: command-line flags, then a TOML config file
(``--config``), then the defaults on :class:`RunConfig`.

Exit codes: 0 success, 1 validation error, 2 infeasible weight cap.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import svg
from .cluster import LINKAGES, agglomerate, l1_distance_matrix
from .distmetrics import DistanceMatrix, distance_matrix, normalized_cap_distribution
from .errors import ConfigurationError, ConvergenceWarning, ImbalanceError, InfeasibleError, ParseError
from .functionals import (
    COLUMNS,
    eligible_months,
    functional_series,
    portfolio_distance_matrix,
    uniform_trajectories,
)
from .ingest import (
    CapPanel,
    PricePanel,
    build_calendar_map,
    compute_returns,
    load_panel,
    restrict_full_history,
    write_table,
)
from .optimizer import WeightTrajectories, rolling_weights
from .structure import concentration_series, gini_series
from .synth import SynthSpec, write_synthetic

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("capimbalance")

# execution-only settings, left out of report.json so reports compare byte-for-byte
_NOT_REPORTED = ("out", "threads")


@dataclass
class RunConfig:
    prices: str | None = None
    caps: str | None = None
    out: str = "out"
    rho: int = 180
    tau: int = 6
    cap_b: float = 0.15
    risk_free: float = 0.0
    return_mode: str = "simple"
    linkage: str = "average"
    gini_mode: str = "canonical"
    missing_policy: str = "drop_per_month"
    ks: list[int] = field(default_factory=lambda: [1, 2, 3, 5, 10, 20])
    seed: int = 0
    threads: int = 1
    regularization: float = 1e-10
    uniform_weights: bool = False
    weights: str | None = None
    # synthetic generator
    n_assets: int = 20
    n_months: int = 48
    n_days: int = 600
    break_month: int | None = None
    break_size: float = 0.5
    noise: float = 0.05
    ramp: float = 0.0
    late_listings: int = 0

    def validate(self) -> None:
        if self.rho < 2:
            raise ConfigurationError(f"rho must be >= 2, got {self.rho}")
        if self.tau < 1:
            raise ConfigurationError(f"tau must be >= 1, got {self.tau}")
        if not 0 < self.cap_b <= 1:
            raise ConfigurationError(f"cap_b must lie in (0, 1], got {self.cap_b}")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigurationError(f"ks must be positive integers, got {self.ks}")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(
            n_assets=self.n_assets,
            n_months=self.n_months,
            n_days=self.n_days,
            break_month=self.break_month,
            break_size=self.break_size,
            noise=self.noise,
            ramp=self.ramp,
            late_listings=self.late_listings,
            seed=self.seed,
        )

    def reported(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for k in _NOT_REPORTED:
            d.pop(k)
        return d


@dataclass
class Report:
    config: RunConfig
    derived: dict[str, int | None] = field(default_factory=lambda: {"n": None, "m": None, "T": None, "S": None})
    warnings: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)

    def write(self, out: Path) -> Path:
        path = out / "report.json"
        payload = {
            "config": self.config.reported(),
            "derived": self.derived,
            "warnings": self.warnings,
            "outputs": sorted(set(self.outputs)),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _require(path: str | None, what: str) -> str:
    if not path:
        raise ConfigurationError(f"--{what} is required for this command")
    return path


def _iso(dates) -> list[str]:
    return [str(d) for d in dates]


def write_matrix(path: Path, d: DistanceMatrix) -> None:
    write_table(path, "date", [str(x) for x in d.labels], [str(x) for x in d.labels], d.entries)


def load_weights(path: str | Path) -> WeightTrajectories:
    """Read a weights CSV written by the ``optimize`` command."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "date":
        raise ParseError(f"{path}: missing 'date' header", row=1)
    assets = tuple(rows[0][1:])
    body = [r for r in rows[1:] if r]
    for i, r in enumerate(body, start=2):
        if len(r) != len(assets) + 1:
            raise ParseError(f"{path}:{i}: expected {len(assets) + 1} fields, got {len(r)}", row=i)
    try:
        dates = np.array([r[0] for r in body], dtype="datetime64[D]")
        w = np.array([[float(x) for x in r[1:]] for r in body]).reshape(len(body), len(assets))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    k = len(body)
    return WeightTrajectories(dates, assets, w, np.full(k, np.nan), np.ones(k, dtype=bool))


class Pipeline:
    """Shares loaded panels and trajectories between the subcommands of one run."""

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.out = Path(config.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.report = Report(config)
        self._caps: CapPanel | None = None
        self._prices: PricePanel | None = None
        self._traj: WeightTrajectories | None = None

    def _emit(self, name: str) -> Path:
        self.report.outputs.append(name)
        return self.out / name

    @property
    def caps(self) -> CapPanel:
        if self._caps is None:
            self._caps = load_panel(_require(self.config.caps, "caps"), "cap")
            self.report.derived["n"] = len(self._caps.assets)
            self.report.derived["T"] = len(self._caps.dates)
        return self._caps

    @property
    def prices(self) -> PricePanel:
        if self._prices is None:
            self._prices = load_panel(_require(self.config.prices, "prices"), "price")
            self.report.derived["S"] = len(self._prices.dates) - 1
        return self._prices

    def restricted(self) -> tuple[PricePanel, CapPanel]:
        p, c = restrict_full_history(self.prices, self.caps)
        m = len(p.assets)
        self.report.derived["m"] = m
        if m * self.config.cap_b < 1:
            raise InfeasibleError(f"m={m} assets with cap_b={self.config.cap_b} cannot be fully invested")
        return p, c

    # -- structure ---------------------------------------------------------
    def structure(self) -> None:
        cfg = self.config
        caps = self.caps
        months = _iso(caps.dates)

        conc = concentration_series(caps, cfg.ks)
        write_table(self._emit("concentration.csv"), "date", conc.names, months, conc.values)
        svg.line_chart(
            self._emit("concentration.svg"),
            months,
            {n: conc.column(n) for n in conc.names},
            title="Concentration ratios of market caps",
            ylabel="share of total cap",
        )

        gini = gini_series(caps, cfg.missing_policy)
        names, cols = ["gini"], [gini.values[:, 0]]
        other = "full_history_only" if cfg.missing_policy == "drop_per_month" else "drop_per_month"
        try:
            cols.append(gini_series(caps, other).values[:, 0])
            names.append(f"gini_{other}")
        except ImbalanceError as exc:
            self.report.warnings.append(f"gini under {other} unavailable: {exc}")
        write_table(self._emit("gini.csv"), "date", names, months, np.column_stack(cols))
        svg.line_chart(
            self._emit("gini.svg"), months, dict(zip(names, cols)), title="Gini coefficient of market caps", ylabel="G(t)"
        )

        dists = [normalized_cap_distribution(caps, t) for t in range(len(months))]
        dmat = distance_matrix(dists, months)
        write_matrix(self._emit("wasserstein_matrix.csv"), dmat)
        dend = agglomerate(dmat, cfg.linkage)
        dend.to_json(self._emit("wasserstein_dendrogram.json"))
        svg.clustered_heatmap(
            self._emit("wasserstein_matrix.svg"),
            dmat.entries,
            dend,
            title=f"W1 distance between normalized cap distributions ({cfg.linkage} linkage)",
        )

    # -- optimize ----------------------------------------------------------
    def trajectories(self) -> WeightTrajectories:
        if self._traj is None:
            cfg = self.config
            if cfg.weights:
                self._traj = load_weights(cfg.weights)
                self.restricted()
            else:
                prices, _ = self.restricted()
                returns = compute_returns(prices, cfg.return_mode)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    self._traj = rolling_weights(
                        returns,
                        cfg.rho,
                        cfg.cap_b,
                        risk_free=cfg.risk_free,
                        seed=cfg.seed,
                        threads=cfg.threads,
                        regularization=cfg.regularization,
                    )
                self.report.warnings.extend(self._traj.warnings)
        return self._traj

    def optimize(self) -> None:
        cfg = self.config
        traj = self.trajectories()
        dates = _iso(traj.dates)
        write_table(self._emit("weights.csv"), "date", traj.assets, dates, traj.weights)
        svg.weight_heatmap(
            self._emit("weights.svg"),
            dates,
            traj.assets,
            traj.weights,
            title=f"Optimal Sharpe weights, rolling {cfg.rho}-day window, cap {cfg.cap_b}",
        )
        if len(traj.assets) >= 2:
            dmat = l1_distance_matrix(traj.weights, traj.assets)
            dend = agglomerate(dmat, cfg.linkage)
            dend.to_json(self._emit("weight_dendrogram.json"))
            svg.dendrogram_chart(
                self._emit("weight_dendrogram.svg"), dend, title="Clustering of weight trajectories (L1 distance)"
            )

    # -- functionals -------------------------------------------------------
    def functionals(self) -> None:
        cfg = self.config
        prices, caps = self.restricted()
        traj = self.trajectories()
        if cfg.uniform_weights:
            traj = uniform_trajectories(traj)
        cal = build_calendar_map(prices, caps)
        months = eligible_months(cal, traj, cfg.tau)
        if len(months) < 2:
            raise ConfigurationError(
                f"only {len(months)} months have both a {cfg.tau}-month cap window and optimal weights"
            )
        if months[0] > cfg.tau - 1:
            self.report.warnings.append(
                f"functionals start at {caps.dates[months[0]]}: earlier months precede the first weight row"
            )
        fs = functional_series(caps, traj, cal, cfg.tau, gini_mode=cfg.gini_mode, months=months)
        market_gini = gini_series(self.caps, cfg.missing_policy).values[months, 0]
        labels = _iso(fs.months)
        table = np.column_stack([fs.table(), market_gini])
        write_table(self._emit("functionals.csv"), "date", [*COLUMNS, "market_gini"], labels, table)
        svg.line_chart(
            self._emit("exposure.svg"),
            labels,
            {"nu_bar": fs.nu_bar, "mu_bar": fs.mu_bar, "mu": fs.mu},
            title="Portfolio cap exposure vs equal-weight average",
            ylabel="market cap",
        )
        svg.line_chart(
            self._emit("normalized_exposure.svg"),
            labels,
            {"f": fs.f, "f_mu": fs.f_mu},
            title="Normalized market exposure",
            ylabel="f(t)",
        )
        svg.line_chart(
            self._emit("portfolio_gini.svg"),
            labels,
            {"g": fs.g, "market_gini": market_gini},
            title=f"Portfolio Gini ({cfg.gini_mode}) vs market Gini",
            ylabel="Gini",
        )
        pmat = portfolio_distance_matrix(caps, traj, cal, cfg.tau, months=months)
        write_matrix(self._emit("portfolio_matrix.csv"), pmat)
        dend = agglomerate(pmat, cfg.linkage)
        dend.to_json(self._emit("portfolio_dendrogram.json"))
        svg.clustered_heatmap(
            self._emit("portfolio_matrix.svg"),
            pmat.entries,
            dend,
            title=f"W1 distance between portfolio-weighted cap distributions ({cfg.linkage} linkage)",
        )

    def finish(self) -> Path:
        return self.report.write(self.out)


def cmd_synth(config: RunConfig) -> list[Path]:
    return list(write_synthetic(config.synth_spec(), config.out))


def cmd_structure(config: RunConfig) -> Pipeline:
    p = Pipeline(config)
    p.structure()
    p.finish()
    return p


def cmd_optimize(config: RunConfig) -> Pipeline:
    p = Pipeline(config)
    p.optimize()
    p.finish()
    return p


def cmd_functionals(config: RunConfig) -> Pipeline:
    p = Pipeline(config)
    p.functionals()
    p.finish()
    return p


def cmd_all(config: RunConfig) -> Pipeline:
    """Run every stage; synthesise inputs into the output directory when none are given."""
    if not config.prices and not config.caps:
        out = Path(config.out)
        p_path, c_path = write_synthetic(config.synth_spec(), out)
        config = dataclasses.replace(config, prices=p_path.name, caps=c_path.name)
        # resolve relative to out for loading; report keeps the bare names
        p = Pipeline(dataclasses.replace(config, prices=str(p_path), caps=str(c_path)))
        p.report.config = config
    else:
        p = Pipeline(config)
    p.structure()
    p.optimize()
    p.functionals()
    p.finish()
    return p


COMMANDS = {
    "synth": cmd_synth,
    "structure": cmd_structure,
    "optimize": cmd_optimize,
    "functionals": cmd_functionals,
    "all": cmd_all,
}


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="TOML file of RunConfig keys")
    common.add_argument("--prices", help="daily price panel CSV")
    common.add_argument("--caps", help="monthly market-cap panel CSV")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--rho", type=int, help="rolling window in trading days (default 180)")
    common.add_argument("--tau", type=int, help="trailing cap window in months (default 6)")
    common.add_argument("--cap-b", dest="cap_b", type=float, help="per-asset weight cap (default 0.15)")
    common.add_argument("--risk-free", dest="risk_free", type=float, help="per-period risk-free rate (default 0)")
    common.add_argument("--return-mode", dest="return_mode", choices=["simple", "log"])
    common.add_argument("--linkage", choices=list(LINKAGES))
    common.add_argument("--gini-mode", dest="gini_mode", choices=["canonical", "literal"])
    common.add_argument("--missing-policy", dest="missing_policy", choices=["drop_per_month", "full_history_only"])
    common.add_argument("--ks", type=_int_list, help="concentration ranks, e.g. 1,2,3,5,10,20")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--regularization", type=float, help="covariance ridge as a fraction of mean variance")
    common.add_argument("--uniform-weights", dest="uniform_weights", action="store_true")
    common.add_argument("--weights", help="reuse a weights.csv instead of re-optimising")
    common.add_argument("--n-assets", dest="n_assets", type=int)
    common.add_argument("--n-months", dest="n_months", type=int)
    common.add_argument("--n-days", dest="n_days", type=int)
    common.add_argument("--break-month", dest="break_month", type=int)
    common.add_argument("--break-size", dest="break_size", type=float)
    common.add_argument("--noise", type=float)
    common.add_argument("--ramp", type=float)
    common.add_argument("--late-listings", dest="late_listings", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="capimbalance", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {cfg_path}: {exc}") from None
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    values.update({k: v for k, v in vars(args).items() if k in known})
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        config = resolve_config(args)
        result = COMMANDS[args.command](config)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImbalanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, Pipeline):
        for w in result.report.warnings:
            log.warning(w)
        log.info("wrote %d files to %s", len(result.report.outputs) + 1, result.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
