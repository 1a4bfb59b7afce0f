"""Long-only, capped, fully-invested Sharpe maximisation and its rolling driver.

The feasible set is the capped simplex ``{w : sum(w) = 1, 0 <= w_i <= b}``.
The solver is projected-gradient ascent on the Sharpe ratio itself with a
Barzilai-Borwein trial step, Armijo backtracking (so every accepted
iterate improves the objective) and a fixed set of deterministic starts
that are iterated together as one batch.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    ContractError,
    ConvergenceWarning,
    DegenerateVarianceError,
    InfeasibleError,
)
from .ingest import ReturnsMatrix

FEASIBILITY_TOL = 1e-12
ARMIJO_C = 1e-4
MAX_HALVINGS = 60
# improvements below this many ulps of the current value are treated as noise
ROUNDOFF_ULPS = 16


@dataclass(frozen=True)
class OptimizationInputs:
    mean_returns: np.ndarray
    covariance: np.ndarray
    risk_free: float = 0.0
    cap: float = 1.0

    def __post_init__(self) -> None:
        mu = np.asarray(self.mean_returns, dtype=float).ravel()
        cov = np.asarray(self.covariance, dtype=float)
        m = mu.size
        if m == 0:
            raise ContractError("need at least one asset")
        if cov.shape != (m, m):
            raise ContractError(f"covariance shape {cov.shape} does not match {m} assets")
        if not (np.isfinite(mu).all() and np.isfinite(cov).all()):
            raise ContractError("means and covariance must be finite")
        if np.abs(cov - cov.T).max() > 1e-10:
            raise ContractError("covariance is not symmetric")
        if (np.diag(cov) < 0).any():
            raise ContractError("covariance has a negative diagonal entry")
        if not 0 < self.cap <= 1:
            raise ContractError(f"cap must lie in (0, 1], got {self.cap}")
        if m * self.cap < 1 - FEASIBILITY_TOL:
            raise InfeasibleError(f"{m} assets with cap {self.cap} cannot sum to 1")
        object.__setattr__(self, "mean_returns", mu)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "risk_free", float(self.risk_free))
        object.__setattr__(self, "cap", float(self.cap))

    @property
    def n_assets(self) -> int:
        return self.mean_returns.size

    @classmethod
    def from_returns(cls, window: np.ndarray, risk_free: float = 0.0, cap: float = 1.0) -> "OptimizationInputs":
        """Sample mean and (ddof=1) covariance of a (time x asset) return window."""
        x = np.asarray(window, dtype=float)
        mu = x.mean(axis=0)
        xc = x - mu
        cov = xc.T @ xc / (x.shape[0] - 1)
        return cls(mu, (cov + cov.T) / 2.0, risk_free, cap)


@dataclass(frozen=True)
class SolverResult:
    weights: np.ndarray
    sharpe: float
    converged: bool
    iterations: int
    start: int
    history: np.ndarray | None = None  # Sharpe of the winning start after each accepted step


@dataclass(frozen=True)
class WeightTrajectories:
    dates: np.ndarray
    assets: tuple[str, ...]
    weights: np.ndarray  # (len(dates), m)
    sharpe: np.ndarray
    converged: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def row_for(self, date: np.datetime64) -> int | None:
        i = int(np.searchsorted(self.dates, date))
        if i < self.dates.size and self.dates[i] == date:
            return i
        return None


def sharpe(w: np.ndarray, inputs: OptimizationInputs) -> float:
    """``(w . mu - r_f) / sqrt(w' Sigma w)``."""
    w = np.asarray(w, dtype=float)
    var = float(w @ inputs.covariance @ w)
    if not var > 0:
        raise DegenerateVarianceError("portfolio variance is zero")
    return float((w @ inputs.mean_returns - inputs.risk_free) / np.sqrt(var))


def project_capped_simplex(v: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto ``{w : sum w = 1, 0 <= w <= cap}``.

    The solution is ``clip(v - theta, 0, cap)`` for the unique ``theta``
    making the sum one. ``sum(clip(v - theta, 0, cap))`` is piecewise linear
    and nonincreasing in ``theta`` with kinks at ``v - cap`` and ``v``, so
    ``theta`` is found exactly by walking the sorted kinks and interpolating
    inside the bracketing segment. Accepts a vector or a batch of rows.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = np.atleast_2d(v)
    m = V.shape[1]
    if not np.isfinite(V).all():
        raise ContractError("cannot project non-finite values")
    if m * cap < 1 - FEASIBILITY_TOL:
        raise InfeasibleError(f"{m} assets with cap {cap} cannot sum to 1")

    kinks = np.concatenate([V - cap, V], axis=1)
    slope_delta = np.concatenate([np.full((1, m), -1.0), np.full((1, m), 1.0)], axis=1)
    order = np.argsort(kinks, axis=1, kind="stable")
    kinks = np.take_along_axis(kinks, order, axis=1)
    slope = np.cumsum(slope_delta[0][order], axis=1)  # slope of the sum just right of each kink
    gaps = np.diff(kinks, axis=1)
    total = m * cap + np.concatenate(
        [np.zeros((V.shape[0], 1)), np.cumsum(slope[:, :-1] * gaps, axis=1)], axis=1
    )
    # first kink where the sum has dropped to <= 1; index 0 only when m * cap == 1
    k = np.argmax(total <= 1.0, axis=1)
    rows = np.arange(V.shape[0])
    prev = np.maximum(k - 1, 0)
    s_prev = slope[rows, prev]
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(
            k == 0, kinks[rows, 0], kinks[rows, prev] + (total[rows, prev] - 1.0) / -s_prev
        )
    # exact re-solve on the identified free set removes accumulated rounding
    shifted = V - theta[:, None]
    free = (shifted > 0) & (shifted < cap)
    at_cap = shifted >= cap
    n_free = free.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        polished = ((V * free).sum(axis=1) + cap * at_cap.sum(axis=1) - 1.0) / n_free
    theta = np.where(n_free > 0, polished, theta)
    W = np.clip(V - theta[:, None], 0.0, cap)
    return W[0] if single else W


def _sharpe_and_grad(W: np.ndarray, mu: np.ndarray, cov: np.ndarray, rf: float):
    SW = W @ cov
    var = np.einsum("ij,ij->i", W, SW)
    sd = np.sqrt(var)
    num = W @ mu - rf
    S = num / sd
    G = mu[None, :] / sd[:, None] - (num / (sd * var))[:, None] * SW
    return S, G


def _starts(m: int, cap: float, n_starts: int, rng: np.random.Generator) -> np.ndarray:
    starts = np.empty((n_starts, m))
    starts[0] = 1.0 / m
    if n_starts > 1:
        starts[1:] = project_capped_simplex(rng.dirichlet(np.ones(m), size=n_starts - 1), cap)
    return starts


def maximize_sharpe(
    inputs: OptimizationInputs,
    *,
    n_starts: int = 16,
    max_iter: int = 2000,
    tol: float = 1e-10,
    regularization: float = 1e-10,
    seed: int | np.random.SeedSequence | list[int] = 0,
    record_history: bool = False,
) -> SolverResult:
    """Maximise the Sharpe ratio over the capped simplex.

    Start 0 is the uniform portfolio; starts 1.. are random feasible points
    drawn from ``seed``. The covariance gets ``regularization * trace / m``
    added to its diagonal. A start stops when a step improves the ratio by
    less than ``tol`` relative to its current value, or when no step along
    the projected gradient is accepted. Among starts whose final values tie
    (to 1e-12 relative), the lowest index wins.
    """
    m = inputs.n_assets
    cap = inputs.cap
    mu = inputs.mean_returns
    trace = float(np.trace(inputs.covariance))
    if not trace > 0:
        raise DegenerateVarianceError("covariance is identically zero")
    cov = inputs.covariance + (regularization * trace / m) * np.eye(m)
    rf = inputs.risk_free
    if m == 1:
        w = np.ones(1)
        return SolverResult(w, sharpe(w, inputs), True, 0, 0, np.array([sharpe(w, inputs)]) if record_history else None)

    rng = np.random.default_rng(seed)
    W = _starts(m, cap, n_starts, rng)
    S, G = _sharpe_and_grad(W, mu, cov, rf)
    alpha = 0.1 / np.maximum(np.abs(G).max(axis=1), 1e-300)
    done = np.zeros(n_starts, dtype=bool)
    iters = np.zeros(n_starts, dtype=int)
    history = [[s] for s in S] if record_history else None

    for _ in range(max_iter):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        Wa, Sa, Ga, aa = W[act], S[act], G[act], alpha[act].copy()
        floor = ROUNDOFF_ULPS * np.finfo(float).eps * np.abs(Sa)
        Wt = project_capped_simplex(Wa + aa[:, None] * Ga, cap)
        St, Gt = _sharpe_and_grad(Wt, mu, cov, rf)
        ok = St - Sa > np.maximum(ARMIJO_C * np.einsum("ij,ij->i", Ga, Wt - Wa), floor)
        pending = np.nonzero(~ok)[0]
        for _h in range(MAX_HALVINGS):
            if pending.size == 0:
                break
            aa[pending] *= 0.5
            Wp = project_capped_simplex(Wa[pending] + aa[pending, None] * Ga[pending], cap)
            Sp, Gp = _sharpe_and_grad(Wp, mu, cov, rf)
            Wt[pending], St[pending], Gt[pending] = Wp, Sp, Gp
            gain = np.maximum(ARMIJO_C * np.einsum("ij,ij->i", Ga[pending], Wp - Wa[pending]), floor[pending])
            okp = Sp - Sa[pending] > gain
            pending = pending[~okp]

        stuck = np.zeros(act.size, dtype=bool)
        stuck[pending] = True
        moved = ~stuck
        step = Wt - Wa
        small = (St - Sa) <= tol * np.maximum(np.abs(Sa), 1e-300)

        upd = act[moved]
        W[upd], S[upd], G[upd] = Wt[moved], St[moved], Gt[moved]
        iters[upd] += 1
        if history is not None:
            for r in upd:
                history[r].append(S[r])

        # Barzilai-Borwein step for the next trial (ascent form)
        ss = np.einsum("ij,ij->i", step, step)
        sy = -np.einsum("ij,ij->i", step, Gt - Ga)
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = np.where(sy > 0, ss / sy, 2.0 * aa)
        alpha[act] = np.where(moved, np.clip(bb, 1e-30, 1e30), alpha[act])
        done[act[stuck | small]] = True

    best = S.max()
    ties = S >= best - 1e-12 * max(abs(best), 1e-300)
    r = int(np.argmax(ties))
    w = np.clip(W[r], 0.0, cap)
    res = SolverResult(
        weights=w,
        sharpe=float(S[r]),
        converged=bool(done[r]),
        iterations=int(iters[r]),
        start=r,
        history=np.array(history[r]) if history is not None else None,
    )
    if not res.converged:
        warnings.warn(f"Sharpe solver hit the {max_iter}-iteration budget", ConvergenceWarning, stacklevel=2)
    return res


def rolling_weights(
    returns: ReturnsMatrix,
    window: int = 180,
    cap: float = 0.15,
    *,
    risk_free: float = 0.0,
    seed: int = 0,
    threads: int = 1,
    **solver_kwargs,
) -> WeightTrajectories:
    """Optimal weights for every window ``[s - window + 1, s]``, s = window..S.

    Each solve seeds its random starts from ``(seed, s)``, so results do not
    depend on ``threads``.
    """
    R = returns.values
    S_len, m = R.shape
    if window < 2:
        raise ConfigurationError(f"window must be >= 2, got {window}")
    if S_len < window:
        raise ConfigurationError(f"window of {window} exceeds the {S_len} available returns")
    if np.isnan(R).any():
        r, c = np.argwhere(np.isnan(R))[0]
        raise ConfigurationError(f"missing return for {returns.assets[c]} on {returns.dates[r]}")
    if m * cap < 1 - FEASIBILITY_TOL:
        raise InfeasibleError(f"{m} assets with cap {cap} cannot sum to 1")

    ends = range(window - 1, S_len)

    def solve(end: int):
        inputs = OptimizationInputs.from_returns(R[end - window + 1 : end + 1], risk_free, cap)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            return maximize_sharpe(inputs, seed=[seed, end], **solver_kwargs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, ends))
    else:
        results = [solve(e) for e in ends]

    weights = np.array([r.weights for r in results])
    converged = np.array([r.converged for r in results])
    dates = returns.dates[window - 1 :]
    notes = tuple(
        f"solver did not converge for window ending {d}" for d, ok in zip(dates, converged) if not ok
    )
    if notes:
        warnings.warn(f"{len(notes)} rolling solves hit the iteration budget", ConvergenceWarning, stacklevel=2)
    return WeightTrajectories(
        dates=dates,
        assets=returns.assets,
        weights=weights,
        sharpe=np.array([r.sharpe for r in results]),
        converged=converged,
        warnings=notes,
    )
