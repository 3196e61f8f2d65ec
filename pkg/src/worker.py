"""
ARQ worker tasks and settings for distributed sweep trials.

Run with:  uv run python run_worker.py
"""

import asyncio

from arq.connections import RedisSettings

from src import logging
from src.asymptotics import run_trial
from src.coding import field_self_check
from src.config import FIELD_BITS, REDIS_URL

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Main task
# ---------------------------------------------------------------------------

async def run_sweep_trial(
    ctx: dict,
    n_clients: int,
    n_unreliable: int,
    alpha: float,
    n_packets: int,
    seed: int,
) -> dict:
    """Run one sweep trial off the event loop and return its row as a plain dict."""
    logger.info(f"Running trial N={n_clients} M={n_unreliable} K={n_packets} seed={seed}")
    try:
        row = await asyncio.to_thread(run_trial, n_clients, n_unreliable, alpha, n_packets, seed)
    except Exception as e:
        logger.error(f"Trial N={n_clients} M={n_unreliable} K={n_packets} seed={seed} failed: {e}")
        raise
    logger.info(f"Trial K={n_packets} seed={seed} done: gap/K={row.gap_per_packet:.5f}")
    return row.model_dump()


# ---------------------------------------------------------------------------
# Worker lifecycle hooks
# ---------------------------------------------------------------------------

async def startup(ctx: dict) -> None:
    """Build the default field once so its lookup tables are ready before the first job."""
    logger.info("ARQ worker starting up")
    if not field_self_check(FIELD_BITS, samples=256):
        logger.warning(f"GF(2^{FIELD_BITS}) self check failed")
    logger.info("ARQ worker startup complete")


async def shutdown(ctx: dict) -> None:
    """Cleanup on worker shutdown."""
    logger.info("ARQ worker shutting down")


# ---------------------------------------------------------------------------
# ARQ WorkerSettings
# ---------------------------------------------------------------------------

class WorkerSettings:
    functions = [run_sweep_trial]
    redis_settings = RedisSettings.from_dsn(REDIS_URL)
    max_jobs = 4
    job_timeout = 3600
    max_tries = 1
    on_startup = startup
    on_shutdown = shutdown
