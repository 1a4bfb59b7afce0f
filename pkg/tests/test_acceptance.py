"""Acceptance criteria, one test each, at their stated tolerances.

Every criterion records a PASS/FAIL line; pytest prints them in the
terminal summary, and ``python tests/test_acceptance.py`` runs them
directly without pytest.
"""

from __future__ import annotations

import json
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from capimbalance.cli import main  # noqa: E402
from capimbalance.cluster import Dendrogram, cut  # noqa: E402
from capimbalance.distmetrics import (  # noqa: E402
    DiscreteDistribution,
    distance_matrix,
    wasserstein,
    wasserstein_equal_n,
)
from capimbalance.functionals import (  # noqa: E402
    functional_series,
    portfolio_distance_matrix,
    trailing_mean_caps,
)
from capimbalance.ingest import build_calendar_map  # noqa: E402
from capimbalance.optimizer import (  # noqa: E402
    OptimizationInputs,
    WeightTrajectories,
    maximize_sharpe,
    project_capped_simplex,
)
from capimbalance.structure import concentration_ratio, gini, lorenz_curve  # noqa: E402
from capimbalance.synth import SynthSpec, generate  # noqa: E402
from oracles import grid_max_sharpe3, random_feasible  # noqa: E402

RESULTS: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> bool:
    RESULTS[n] = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    print(RESULTS[n])
    return ok


def random_vector(rng: np.random.Generator) -> np.ndarray:
    n = int(rng.integers(2, 201))
    kind = rng.integers(4)
    if kind == 0:
        x = rng.uniform(0, 1, n)
    elif kind == 1:
        x = rng.lognormal(0, 2, n)
    elif kind == 2:
        x = rng.pareto(1.2, n)
    else:
        x = rng.uniform(0, 1, n) * (rng.uniform(size=n) < 0.3)
    if not x.sum() > 0:
        x[0] = 1.0
    return x


def criterion_1() -> bool:
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        x = random_vector(rng)
        worst = max(worst, abs(gini(x) - (1 - 2 * lorenz_curve(x).area())))
    dt = time.perf_counter() - t0
    return record(1, "Gini equals 1 - 2 * Lorenz area", worst <= 1e-9 and dt < 5,
                  f"max gap {worst:.2e} <= 1e-9, {dt:.2f}s < 5s")


def criterion_2() -> bool:
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    bad_mono = bad_full = 0
    worst_scale = 0.0
    for _ in range(1000):
        x = random_vector(rng)
        n = x.size
        cr = np.array([concentration_ratio(x, k) for k in range(1, n + 1)])
        bad_mono += int((np.diff(cr) < 0).any())
        bad_full += int(cr[-1] != 1.0)
        lam = float(rng.lognormal(0, 3))
        k = int(rng.integers(1, n + 1))
        worst_scale = max(worst_scale, abs(concentration_ratio(lam * x, k) - cr[k - 1]))
    dt = time.perf_counter() - t0
    ok = bad_mono == 0 and bad_full == 0 and worst_scale <= 1e-12 and dt < 2
    return record(2, "concentration ratios monotone, CR_n = 1, scale invariant", ok,
                  f"{bad_mono} non-monotone, {bad_full} CR_n != 1, scale gap {worst_scale:.1e}, {dt:.2f}s < 2s")


def criterion_3() -> bool:
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    worst_closed = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        a, b = rng.lognormal(0, 1, n), rng.lognormal(0.3, 1.2, n)
        got = wasserstein(DiscreteDistribution.uniform(a), DiscreteDistribution.uniform(b))
        worst_closed = max(worst_closed, abs(got - wasserstein_equal_n(a, b)))

    def draw():
        k = int(rng.integers(1, 40))
        return DiscreteDistribution(rng.normal(size=k) * rng.uniform(0.1, 5), rng.dirichlet(np.ones(k)))

    worst_sym = worst_tri = 0.0
    for _ in range(500):
        p, q, r = draw(), draw(), draw()
        pq, qp, qr, pr = wasserstein(p, q), wasserstein(q, p), wasserstein(q, r), wasserstein(p, r)
        worst_sym = max(worst_sym, abs(pq - qp))
        worst_tri = max(worst_tri, pr - (pq + qr))
    dt = time.perf_counter() - t0
    ok = worst_closed <= 1e-12 and worst_sym <= 1e-12 and worst_tri <= 1e-9 and dt < 10
    return record(3, "weighted W1 matches the sorted closed form and is a metric", ok,
                  f"closed-form gap {worst_closed:.1e}, asymmetry {worst_sym:.1e}, "
                  f"triangle excess {max(worst_tri, 0):.1e}, {dt:.2f}s < 10s")


def criterion_4() -> bool:
    rng = np.random.default_rng(104)
    t0 = time.perf_counter()
    worst = -np.inf
    for i in range(50):
        mu = rng.uniform(-0.2, 0.2, 3)
        a = rng.normal(size=(3, 3))
        cov = a @ a.T
        cap = (0.5, 0.6, 1.0)[i % 3]
        res = maximize_sharpe(OptimizationInputs(mu, cov, cap=cap))
        S_grid, _ = grid_max_sharpe3(mu, cov, cap, res=0.005)
        worst = max(worst, S_grid - res.sharpe)
    dt = time.perf_counter() - t0
    return record(4, "Sharpe solver within 1e-3 of the 0.005 grid on 50 three-asset cases",
                  worst <= 1e-3 and dt < 60, f"largest shortfall {worst:.1e}, {dt:.2f}s < 60s")


def criterion_5() -> bool:
    rng = np.random.default_rng(105)
    losses = 0
    for _ in range(200):
        m = int(rng.integers(2, 16))
        cap = float(rng.uniform(1.0 / m, 1.0))
        v = rng.normal(size=m) * rng.uniform(0.1, 10)
        p = project_capped_simplex(v, cap)
        W = random_feasible(rng, m, cap, 1000)
        # boundary samples can coincide with the projection up to rounding
        losses += int((np.linalg.norm(W - v, axis=1) < np.linalg.norm(p - v) - 1e-12).any())
    hand = project_capped_simplex(np.array([10.0, 0.0, 0.0]), 0.5)
    hand_gap = float(np.abs(hand - [0.5, 0.25, 0.25]).max())
    return record(5, "projection closer than 1000 feasible points in 200 trials; hand case exact",
                  losses == 0 and hand_gap <= 1e-10, f"{losses} trials lost, hand-case gap {hand_gap:.1e}")


def criterion_6() -> bool:
    tau = 6
    prices, caps = generate(SynthSpec(n_assets=20, n_months=36, n_days=450, seed=6))
    cal = build_calendar_map(prices, caps)
    k, m = len(prices.dates), len(prices.assets)
    traj = WeightTrajectories(prices.dates, prices.assets, np.full((k, m), 1.0 / m), np.zeros(k), np.ones(k, bool))
    months = list(range(tau - 1, len(caps.dates)))
    fs = functional_series(caps, traj, cal, tau)
    f_exact = bool((fs.f == 1.0).all())
    g_gap = max(abs(fs.g[j] - gini(trailing_mean_caps(caps, t, tau))) for j, t in enumerate(months))
    P = portfolio_distance_matrix(caps, traj, cal, tau).entries
    ref = []
    for t in months:
        xb = trailing_mean_caps(caps, t, tau)
        ref.append(DiscreteDistribution.uniform(xb / xb.sum()))
    U = distance_matrix(ref, months).entries
    d_gap = float(np.abs(P - U).max())
    ok = f_exact and g_gap <= 1e-12 and d_gap <= 1e-12
    return record(6, "uniform weights reduce to market quantities on 20 assets x 36 months", ok,
                  f"f == 1 exactly: {f_exact}, Gini gap {g_gap:.1e}, matrix gap {d_gap:.1e}")


def _recovered(out: Path, brk: int) -> tuple[bool, int]:
    dend = Dendrogram.from_dict(json.loads((out / "wasserstein_dendrogram.json").read_text()))
    lab = cut(dend, 2)
    pre = np.bincount(lab[:brk], minlength=2).argmax()
    wrong = int((lab[:brk] != pre).sum() + (lab[brk:] == pre).sum())
    return wrong == 0, wrong


def criterion_7(tmp: Path) -> bool:
    noise = 0.05
    grid = ["--n-assets", "20", "--n-months", "48", "--n-days", "600", "--noise", str(noise),
            "--break-size", str(5 * noise)]
    t0 = time.perf_counter()
    codes = [main(["synth", "--out", str(tmp / "data"), *grid, "--break-month", "24"])]
    codes.append(main(["all", "--prices", str(tmp / "data" / "prices.csv"), "--caps", str(tmp / "data" / "caps.csv"),
                       "--out", str(tmp / "run")]))
    dt = time.perf_counter() - t0
    ok, wrong = _recovered(tmp / "run", 24)
    # other break points and seeds, structure stage only
    for brk, seed in ((12, 1), (36, 2), (20, 3), (30, 4)):
        d = tmp / f"data{brk}"
        codes.append(main(["synth", "--out", str(d), *grid, "--break-month", str(brk), "--seed", str(seed)]))
        codes.append(main(["structure", "--caps", str(d / "caps.csv"), "--out", str(tmp / f"run{brk}")]))
        ok_b, wrong_b = _recovered(tmp / f"run{brk}", brk)
        ok, wrong = ok and ok_b, wrong + wrong_b
    ok = ok and not any(codes) and dt < 30
    return record(7, "planted regime break recovered by the 2-cut at 5x noise", ok,
                  f"{wrong} misassigned months over 5 panels, full pipeline {dt:.2f}s < 30s")


def criterion_8(tmp: Path) -> bool:
    runs = [("a", "1"), ("b", "1"), ("c", "8")]
    codes = [main(["all", "--out", str(tmp / name), "--threads", th, "--seed", "8"]) for name, th in runs]
    files = sorted(p.name for p in (tmp / "a").iterdir() if p.suffix in (".csv", ".json"))
    differing = [
        f"{name}/{f}" for name, _ in runs[1:] for f in files
        if (tmp / name / f).read_bytes() != (tmp / "a" / f).read_bytes()
    ]
    ok = not any(codes) and not differing and len(files) > 0
    return record(8, "'all' byte-identical across repeat runs and 1 vs 8 threads", ok,
                  f"{len(files)} CSV/JSON files compared, differing: {differing or 'none'}")


def criterion_9(tmp: Path) -> bool:
    t0 = time.perf_counter()
    code = main(["all", "--out", str(tmp / "desk"), "--n-assets", "82", "--n-months", "246", "--n-days", "5158"])
    dt = time.perf_counter() - t0
    derived = json.loads((tmp / "desk" / "report.json").read_text())["derived"] if code == 0 else {}
    ok = code == 0 and dt < 600 and derived == {"n": 82, "m": 82, "T": 246, "S": 5157}
    return record(9, "desk-scale pipeline (82 assets, 246 months, 5157 returns) under 10 minutes", ok,
                  f"exit {code}, {dt:.1f}s < 600s, derived {derived}")


def test_criterion_1_gini_lorenz():
    assert criterion_1()


def test_criterion_2_concentration():
    assert criterion_2()


def test_criterion_3_wasserstein():
    assert criterion_3()


def test_criterion_4_optimizer_oracle():
    assert criterion_4()


def test_criterion_5_projection():
    assert criterion_5()


def test_criterion_6_uniform_reductions():
    assert criterion_6()


def test_criterion_7_regime_detection(tmp_path):
    assert criterion_7(tmp_path)


def test_criterion_8_determinism(tmp_path):
    assert criterion_8(tmp_path)


@pytest.mark.slow
def test_criterion_9_desk_scale(tmp_path):
    assert criterion_9(tmp_path)


if __name__ == "__main__":
    with tempfile.TemporaryDirectory() as d:
        root = Path(d)
        outcomes = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6()]
        for i, fn in ((7, criterion_7), (8, criterion_8), (9, criterion_9)):
            (root / str(i)).mkdir()
            outcomes.append(fn(root / str(i)))
    sys.exit(0 if all(outcomes) else 1)
