import asyncio

import pytest

from src import queue
from src.asymptotics import run_trial
from src.models import SweepRow
from src.worker import WorkerSettings, run_sweep_trial, shutdown, startup


def test_run_sweep_trial_matches_local_trial():
    result = asyncio.run(run_sweep_trial({}, 4, 1, 0.5, 20, 3))
    assert SweepRow.model_validate(result) == run_trial(4, 1, 0.5, 20, 3)


def test_lifecycle_hooks_run():
    asyncio.run(startup({}))
    asyncio.run(shutdown({}))


def test_worker_settings():
    assert run_sweep_trial in WorkerSettings.functions
    assert WorkerSettings.on_startup is startup


def test_get_pool_requires_init(monkeypatch):
    monkeypatch.setattr(queue, "_pool", None)
    with pytest.raises(RuntimeError):
        queue.get_pool()


class _FakeJob:
    def __init__(self, args):
        self.args = args

    async def result(self, timeout=None):
        return await run_sweep_trial({}, *self.args)


class _FakePool:
    """Runs each enqueued job in-process."""

    def __init__(self):
        self.enqueued = []

    async def enqueue_job(self, name, *args):
        self.enqueued.append((name, args))
        return _FakeJob(args)


def test_enqueue_sweep_trials_collects_sorted_rows(monkeypatch):
    pool = _FakePool()
    monkeypatch.setattr(queue, "_pool", pool)
    rows = asyncio.run(queue.enqueue_sweep_trials(4, 1, 0.5, [20, 10], seeds=[1, 0]))
    assert [name for name, _ in pool.enqueued] == ["run_sweep_trial"] * 4
    assert [(r.K, r.seed) for r in rows] == [(10, 0), (10, 1), (20, 0), (20, 1)]
    assert rows[0] == run_trial(4, 1, 0.5, 10, 0)
