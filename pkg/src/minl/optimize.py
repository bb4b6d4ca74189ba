"""Constrained multi-start maximization of two-mode squeezing.

For fixed phases (phi, xi), detection event and input amplitude, minimize
the joint-quadrature variance over the four beam-splitter angles subject to
P_det >= P_crit.  Each start runs SLSQP with finite-difference gradients;
starts come from a scrambled Sobol sequence over [0, pi/2]^4 so that a larger
``starts`` value always contains the smaller schedule.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .circuit import InterferometerConfig, LossChannel
from .detect import DetectionEvent, HeraldingError
from .fock import DEFAULT_CUTOFF
from .squeeze import SqueezingReport, evaluate, squeezing_db

FEAS_TOL = 1e-9
TIE_TOL = 1e-12
_SCALE = 100.0  # variance scaling for better SLSQP conditioning


@dataclass(frozen=True)
class OptimizationProblem:
    event: DetectionEvent = field(default_factory=DetectionEvent)
    alpha_in: complex = 1.0
    phi: float = np.pi / 2
    xi: float = np.pi / 2
    P_crit: float = 0.1
    objective: str = "C1"
    starts: int = 16
    budget: int = 2000
    seed: int = 0
    cutoff: int = DEFAULT_CUTOFF
    phase_placement: str = "output"
    losses: tuple[LossChannel, ...] = ()
    parameterization: str = "theta"
    warm_starts: tuple[tuple[float, float, float, float], ...] = ()
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.P_crit <= 1.0:
            raise ValueError("P_crit must lie in (0, 1]")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.objective not in ("C1", "C2"):
            raise ValueError("objective must be 'C1' or 'C2'")
        if self.parameterization not in ("theta", "T"):
            raise ValueError("parameterization must be 'theta' or 'T'")

    def config(self, theta: Sequence[float]) -> InterferometerConfig:
        return InterferometerConfig(
            tuple(theta), self.phi, self.alpha_in, self.event, self.losses, self.cutoff, self.phase_placement
        )


@dataclass
class OptimizationResult:
    best: SqueezingReport | None
    theta: tuple[float, ...] | None
    trace: list[tuple[int, float, float]]
    converged: bool
    starts_used: int
    evaluations: int
    best_infeasible: SqueezingReport | None = None
    settings: dict = field(default_factory=dict)

    @property
    def S_dB(self) -> float:
        if self.best is None:
            return float("nan")
        return self.best.S1_dB if self.settings.get("objective", "C1") == "C1" else self.best.S2_dB

    @property
    def P_det(self) -> float:
        return float("nan") if self.best is None else self.best.P_det


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Caches pipeline evaluations for one start and records the trace."""

    def __init__(self, problem: OptimizationProblem):
        self.problem = problem
        self.cache: dict[tuple, tuple[float, float, SqueezingReport | None]] = {}
        self.count = 0
        self.records: list[tuple[float, float, tuple, SqueezingReport | None]] = []

    def to_theta(self, x: np.ndarray) -> tuple[float, ...]:
        if self.problem.parameterization == "T":
            return tuple(float(np.arccos(np.sqrt(np.clip(v, 0.0, 1.0)))) for v in x)
        return tuple(float(v) for v in x)

    def __call__(self, x: np.ndarray) -> tuple[float, float]:
        key = tuple(np.asarray(x, dtype=float).round(15))
        hit = self.cache.get(key)
        if hit is not None:
            return hit[0], hit[1]
        if self.count >= self.problem.budget:
            raise _BudgetExhausted
        self.count += 1
        theta = self.to_theta(np.asarray(x, dtype=float))
        try:
            rep = evaluate(self.problem.config(theta), self.problem.xi)
            var = rep.var_C1 if self.problem.objective == "C1" else rep.var_C2
            p = rep.P_det
        except HeraldingError:
            rep, var, p = None, 0.5, 0.0
        self.cache[key] = (var, p, rep)
        self.records.append((var, p, theta, rep))
        return var, p


def _better(a, b) -> bool:
    """Is candidate ``a`` preferred over ``b``?  Items are (var, p, theta, report)."""
    if b is None:
        return True
    if a[0] < b[0] - TIE_TOL:
        return True
    if a[0] > b[0] + TIE_TOL:
        return False
    if a[1] != b[1]:
        return a[1] > b[1]
    return tuple(np.cos(a[2]) ** 2) < tuple(np.cos(b[2]) ** 2)


def start_points(n: int, seed: int) -> np.ndarray:
    """First ``n`` points of a scrambled Sobol sequence over [0, pi/2]^4."""
    sampler = qmc.Sobol(d=4, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = sampler.random(n)
    return pts * (np.pi / 2)


def _run_start(problem: OptimizationProblem, x0: np.ndarray) -> _Evaluator:
    ev = _Evaluator(problem)
    if problem.parameterization == "T":
        x0 = np.cos(x0) ** 2
        bounds = [(0.0, 1.0)] * 4
    else:
        bounds = None
    cons = [{"type": "ineq", "fun": lambda x: ev(x)[1] - problem.P_crit}]
    try:
        minimize(
            lambda x: ev(x)[0] * _SCALE,
            x0,
            method="SLSQP",
            bounds=bounds,
            constraints=cons,
            options={"maxiter": max(10, problem.budget // 5), "ftol": 1e-13},
        )
    except _BudgetExhausted:
        pass
    return ev


def maximize_squeezing(problem: OptimizationProblem) -> OptimizationResult:
    """Best feasible point over all starts, with tie-breaking on P_det and T."""
    x0s = [np.asarray(w, dtype=float) for w in problem.warm_starts]
    x0s += list(start_points(problem.starts, problem.seed))
    if problem.workers > 1:
        with ThreadPoolExecutor(max_workers=problem.workers) as pool:
            runs = list(pool.map(lambda x: _run_start(problem, x), x0s))
    else:
        runs = [_run_start(problem, x) for x in x0s]

    best = None
    best_bad = None
    trace = []
    n = 0
    for ev in runs:
        for rec in ev.records:
            n += 1
            trace.append((n, rec[0], rec[1]))
            if rec[3] is None:
                continue
            if rec[1] >= problem.P_crit - FEAS_TOL:
                if _better(rec, best):
                    best = rec
            elif best_bad is None or rec[1] > best_bad[1]:
                best_bad = rec
    settings = {
        "objective": problem.objective,
        "starts": problem.starts,
        "warm_starts": len(problem.warm_starts),
        "budget_per_start": problem.budget,
        "seed": problem.seed,
        "method": "SLSQP, finite-difference gradients",
        "start_design": "scrambled Sobol over [0, pi/2]^4",
        "parameterization": problem.parameterization,
    }
    return OptimizationResult(
        best=best[3] if best else None,
        theta=best[2] if best else None,
        trace=trace,
        converged=best is not None,
        starts_used=len(x0s),
        evaluations=n,
        best_infeasible=None if best else (best_bad[3] if best_bad else None),
        settings=settings,
    )


@dataclass
class Heatmap:
    phi_grid: np.ndarray
    xi_grid: np.ndarray
    S_dB: np.ndarray
    P_det: np.ndarray
    theta: np.ndarray

    def argmin(self) -> tuple[int, int]:
        i, j = np.unravel_index(np.nanargmin(self.S_dB), self.S_dB.shape)
        return int(i), int(j)


def phase_heatmap(problem: OptimizationProblem, phi_grid: Iterable[float], xi_grid: Iterable[float], warm: bool = True) -> Heatmap:
    """Optimized squeezing on a (phi, xi) grid.

    With ``warm`` the optima of already finished neighbouring cells seed the
    next cell in addition to the regular start schedule.
    """
    phis = np.asarray(list(phi_grid), dtype=float)
    xis = np.asarray(list(xi_grid), dtype=float)
    if phis.size == 0 or xis.size == 0:
        raise ValueError("grids must be non-empty")
    S = np.full((phis.size, xis.size), np.nan)
    P = np.full_like(S, np.nan)
    TH = np.full(S.shape + (4,), np.nan)
    for i, phi in enumerate(phis):
        for j, xi in enumerate(xis):
            seeds = []
            if warm:
                for ii, jj in ((i - 1, j), (i, j - 1)):
                    if ii >= 0 and jj >= 0 and not np.isnan(TH[ii, jj, 0]):
                        seeds.append(tuple(TH[ii, jj]))
            res = maximize_squeezing(replace(problem, phi=float(phi), xi=float(xi), warm_starts=tuple(seeds)))
            if res.converged:
                S[i, j] = res.S_dB
                P[i, j] = res.P_det
                TH[i, j] = res.theta
    return Heatmap(phis, xis, S, P, TH)


def probability_tradeoff_curve(problem: OptimizationProblem, alpha_list: Iterable[float], P_crit_grid: Iterable[float]) -> dict[float, np.ndarray]:
    """Maximized squeezing versus P_crit for several input amplitudes.

    Returns ``{alpha: array of S_dB}`` aligned with ``P_crit_grid``; infeasible
    points are NaN.  The optimum of the previous P_crit seeds the next one.
    """
    grid = [float(p) for p in P_crit_grid]
    if not grid:
        raise ValueError("P_crit grid must be non-empty")
    out = {}
    for alpha in alpha_list:
        row = []
        prev = ()
        for pc in grid:
            res = maximize_squeezing(replace(problem, alpha_in=alpha, P_crit=pc, warm_starts=prev))
            row.append(res.S_dB if res.converged else np.nan)
            prev = (res.theta,) if res.converged else ()
        out[float(alpha)] = np.array(row)
    return out
