"""
Large-K behaviour under the random packet distribution: the limiting demand
fractions Z_{M,V}, the monotone functions used in the feasibility argument,
and the convergence sweep of closed-form totals against the exact optimum.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, TypeVar

import numpy as np

from src import logging
from src.config import SWEEP_WORKERS
from src.errors import InputError
from src.instance import DemandTable, clients_to_mask, generate_random
from src.lp_core import build_full, check_feasible, solve_exact
from src.models import Provenance, SweepRow, format_fraction
from src.schedules import closed_form_general_values, closed_form_m1_values

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float | Fraction) -> None:
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}", field="alpha")


@dataclass(frozen=True)
class ZParams:
    M: int
    V: int
    N: int
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not 0 <= self.M < self.N:
            raise InputError(f"need 0 <= M < N (got M={self.M}, N={self.N})", field="M")
        if not 1 <= self.V <= self.N - self.M - 1:
            raise InputError(f"need 1 <= V <= N-M-1 (got V={self.V})", field="V")


def z_value(params: ZParams) -> float:
    """
    Limiting fraction of packets that a fixed group of N-M-V clients lacks
    while some of V other reliable clients hold it, given M free clients.
    """
    q = 1.0 - params.alpha
    N, M, V = params.N, params.M, params.V
    return (q ** (N - M - V) - q ** (N - M)) / (1.0 - q**N)


def z_value_inverse_form(params: ZParams) -> float:
    """Same quantity written with negative exponents."""
    q = 1.0 - params.alpha
    N, M, V = params.N, params.M, params.V
    return (q ** (-M - V) - q ** (-M)) / (q ** (-N) - 1.0)


T = TypeVar("T", float, Fraction)


def phi(alpha: T, P: int, V: int) -> T:
    """Z_{M,V} / Z_{M,P}; depends on N and M only through P. Exact for Fraction alpha."""
    _check_alpha(alpha)
    q = 1 - alpha
    return (q ** (P - V) - q**P) / (1 - q**P)


def gamma(alpha: T, n: int) -> T:
    _check_alpha(alpha)
    q = 1 - alpha
    return (1 - q**n) / (1 - q ** (n + 1))


@dataclass(frozen=True)
class GridViolation:
    alpha: float
    P: int
    V: int
    ratio: float


def vp_inequality_grid(
    alphas: Optional[Sequence[float]] = None, max_p: int = 16, max_n: int = 18
) -> list[GridViolation]:
    """
    Points where V/P > Z_{M,V}/Z_{M,P} fails, over 1 <= V < P.

    Every (N, M) with N <= max_n reduces to its P = N-M-1, so the grid is
    scanned once per reachable P. An empty list means the inequality holds.
    """
    alphas = np.round(np.arange(0.01, 1.0, 0.01), 2) if alphas is None else alphas
    violations = []
    for P in range(2, min(max_p, max_n - 1) + 1):
        for V in range(1, P):
            for alpha in alphas:
                ratio = phi(float(alpha), P, V)
                if not V / P > ratio:
                    violations.append(GridViolation(float(alpha), P, V, ratio))
    if violations:
        logger.warning(f"V/P inequality fails at {len(violations)} grid points")
    return violations


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationRow:
    K: int
    seed: int
    V: int
    empirical: float
    expected: float

    @property
    def deviation(self) -> float:
        return abs(self.empirical - self.expected)


def demand_deviation_table(
    N: int, M: int, alpha: float, K_list: Iterable[int], seeds: Iterable[int]
) -> list[DeviationRow]:
    """
    Empirical (1/K) * demand count against Z_{M,V} for every V.

    The lacking group is clients 1..N-M-V and the unreliable set is the last
    M clients, so V reliable clients can supply the packet.
    """
    seeds = list(seeds)
    rows = []
    unreliable = clients_to_mask(range(N - M + 1, N + 1))
    for K in K_list:
        for seed in seeds:
            table = DemandTable(generate_random(N, M, K, alpha, seed))
            for V in range(1, N - M):
                survivors = clients_to_mask(range(1, N - M - V + 1))
                empirical = table.count(survivors, unreliable) / K
                rows.append(DeviationRow(K, seed, V, empirical, z_value(ZParams(M, V, N, alpha))))
    return rows


def run_trial(N: int, M: int, alpha: float, K: int, seed: int) -> SweepRow:
    """One sweep point: closed-form total against the exact full-LP optimum."""
    inst = generate_random(N, M, K, alpha, seed)
    form = closed_form_m1_values(inst) if M == 1 else closed_form_general_values(inst)
    method = Provenance.CLOSED_M1 if M == 1 else Provenance.CLOSED_GENERAL

    lp = build_full(inst)
    optimum = solve_exact(lp).value
    closed_total = form.total
    return SweepRow(
        seed=seed,
        N=N,
        M=M,
        K=K,
        alpha=alpha,
        method=method.value,
        closed_total=format_fraction(closed_total),
        lp_opt=format_fraction(optimum),
        gap_per_packet=float((closed_total - optimum) / K),
        feasible_for_full=not check_feasible(lp, list(form.values)),
    )


def sweep(
    N: int, M: int, alpha: float, K_list: Iterable[int], seeds: Iterable[int], workers: Optional[int] = None
) -> list[SweepRow]:
    """
    run_trial over every (K, seed), fanned out over a local process pool.
    Rows come back sorted by (K, seed) whatever the completion order.
    """
    jobs = [(K, seed) for K in K_list for seed in seeds]
    workers = workers or SWEEP_WORKERS or os.cpu_count() or 1
    logger.info(f"Sweeping {len(jobs)} trials (N={N}, M={M}, alpha={alpha}) on {workers} worker(s)")

    if workers == 1:
        rows = [run_trial(N, M, alpha, K, seed) for K, seed in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(
                    run_trial,
                    [N] * len(jobs),
                    [M] * len(jobs),
                    [alpha] * len(jobs),
                    [K for K, _ in jobs],
                    [seed for _, seed in jobs],
                )
            )
    return sorted(rows, key=lambda r: (r.K, r.seed))


@dataclass(frozen=True)
class GapSummary:
    K: int
    trials: int
    median_gap: float
    zero_gap_fraction: float


@dataclass(frozen=True)
class ConvergenceResult:
    rows: list[SweepRow]
    deviations: list[DeviationRow]
    summaries: list[GapSummary]


def summarize_gaps(rows: Sequence[SweepRow]) -> list[GapSummary]:
    summaries = []
    for K in sorted({r.K for r in rows}):
        gaps = [Fraction(r.closed_total) - Fraction(r.lp_opt) for r in rows if r.K == K]
        summaries.append(
            GapSummary(
                K=K,
                trials=len(gaps),
                median_gap=float(np.median([float(g) / K for g in gaps])),
                zero_gap_fraction=sum(1 for g in gaps if g == 0) / len(gaps),
            )
        )
    return summaries


def convergence_experiment(
    N: int,
    M: int,
    alpha: float,
    K_list: Sequence[int],
    seeds: Sequence[int],
    workers: Optional[int] = None,
) -> ConvergenceResult:
    rows = sweep(N, M, alpha, K_list, seeds, workers=workers)
    result = ConvergenceResult(
        rows=rows,
        deviations=demand_deviation_table(N, M, alpha, K_list, seeds),
        summaries=summarize_gaps(rows),
    )
    for s in result.summaries:
        logger.info(f"K={s.K}: median gap/K {s.median_gap:.5f}, exact in {s.zero_gap_fraction:.0%} of {s.trials}")
    return result
