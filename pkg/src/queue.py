"""
Redis pool management and enqueue helpers for distributing sweep trials over ARQ workers.
"""

import asyncio
from typing import Iterable

from arq import create_pool
from arq.connections import ArqRedis, RedisSettings

from src import logging
from src.config import REDIS_URL
from src.models import SweepRow

logger = logging.getLogger(__name__)

_pool: ArqRedis | None = None


async def init_pool() -> ArqRedis:
    """Initialize the ARQ Redis connection pool."""
    global _pool
    _pool = await create_pool(RedisSettings.from_dsn(REDIS_URL))
    logger.info("ARQ Redis pool initialized")
    return _pool


async def close_pool() -> None:
    """Close the ARQ Redis connection pool."""
    global _pool
    if _pool is not None:
        await _pool.aclose()
        _pool = None
        logger.info("ARQ Redis pool closed")


def get_pool() -> ArqRedis:
    """Return the module-level ARQ Redis pool singleton."""
    if _pool is None:
        raise RuntimeError("Redis pool not initialized. Call init_pool() first.")
    return _pool


async def enqueue_sweep_trials(
    n_clients: int,
    n_unreliable: int,
    alpha: float,
    K_list: Iterable[int],
    seeds: Iterable[int],
    timeout: float | None = None,
) -> list[SweepRow]:
    """
    Enqueue one run_sweep_trial job per (K, seed) and wait for all of them.

    Args:
        n_clients: N
        n_unreliable: M
        alpha: availability probability of the random instances
        K_list: packet counts to sweep
        seeds: instance seeds, reused for every K
        timeout: per-job wait in seconds, None waits indefinitely

    Returns:
        Rows sorted by (K, seed), identical to the local sweep
    """
    pool = get_pool()
    seeds = list(seeds)
    jobs = []
    for K in K_list:
        for seed in seeds:
            job = await pool.enqueue_job("run_sweep_trial", n_clients, n_unreliable, alpha, K, seed)
            jobs.append(job)
    logger.info(f"Enqueued {len(jobs)} run_sweep_trial jobs for N={n_clients} M={n_unreliable}")

    results = await asyncio.gather(*(job.result(timeout=timeout) for job in jobs))
    rows = [SweepRow.model_validate(r) for r in results]
    logger.info(f"Collected {len(rows)} sweep rows from workers")
    return sorted(rows, key=lambda r: (r.K, r.seed))
