"""Master/worker dispatch of independent tasks and reproducible random streams.

Each task is handed to the first idle worker (dynamic, one task at a time)
and its result is written back into the slot of its index, so the assembled
output never depends on the schedule.  Randomness is never shared between
tasks: every task draws from its own stream derived from
``(master_seed, key)``.
"""
from __future__ import annotations

import logging
import multiprocessing
import os
import sys
import time
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ParameterError, TaskFailure

log = logging.getLogger(__name__)

WORKERS_ENV = "PICARD_BSDE_WORKERS"


def derive_stream(master_seed: int, key) -> np.random.Generator:
    """Independent generator for ``key`` (an int or tuple of non-negative ints).

    A counter-based Philox generator keyed through `numpy.random.SeedSequence`
    hashing of ``(master_seed, key)``; the same pair always yields the same
    sequence and distinct keys give distinct Philox keys.
    """
    key = (key,) if np.isscalar(key) else tuple(key)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class TaskResult:
    key: Any
    value: Any
    worker: int
    elapsed: float


_shared: Any = None


def _init_worker(shared):
    global _shared
    _shared = shared
    threadpool_limits(1)


def _call(work_fn, key, payload):
    start = time.perf_counter()
    value = work_fn(_shared, payload)
    return value, os.getpid(), time.perf_counter() - start


def _mp_context():
    if sys.platform.startswith("linux"):
        return multiprocessing.get_context("fork")
    return multiprocessing.get_context("spawn")


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def run_farm(payloads: Sequence, workers: int, work_fn: Callable[[Any, Any], Any],
             shared: Any = None, keys: Sequence | None = None) -> list[TaskResult]:
    """Run ``work_fn(shared, payload)`` for every payload on ``workers`` processes.

    ``shared`` is shipped once per worker, payloads once per task.  The
    result list is ordered like ``payloads``.  If any task raises, pending
    tasks are cancelled and `TaskFailure` reports the first failing key;
    no partial results are returned.  ``workers=1`` runs in-process.
    """
    if workers < 1:
        raise ParameterError(f"need at least one worker, got {workers}")
    keys = list(range(len(payloads))) if keys is None else list(keys)
    if len(keys) != len(payloads):
        raise ParameterError("keys and payloads differ in length")
    results: list[TaskResult | None] = [None] * len(payloads)

    if workers == 1:
        global _shared
        prev, _shared = _shared, shared
        try:
            with threadpool_limits(1):
                for i, payload in enumerate(payloads):
                    try:
                        value, pid, elapsed = _call(work_fn, keys[i], payload)
                    except Exception as exc:
                        raise TaskFailure(keys[i], exc) from exc
                    results[i] = TaskResult(keys[i], value, pid, elapsed)
        finally:
            _shared = prev
        return results

    with ProcessPoolExecutor(max_workers=workers, mp_context=_mp_context(),
                             initializer=_init_worker, initargs=(shared,)) as pool:
        futures = {pool.submit(_call, work_fn, keys[i], payload): i
                   for i, payload in enumerate(payloads)}
        done, pending = wait(futures, return_when=FIRST_EXCEPTION)
        failed = [f for f in done if f.exception() is not None]
        if failed:
            for f in pending:
                f.cancel()
            first = min(failed, key=futures.get)
            i = futures[first]
            raise TaskFailure(keys[i], first.exception()) from first.exception()
        for f, i in futures.items():
            value, pid, elapsed = f.result()
            results[i] = TaskResult(keys[i], value, pid, elapsed)
    return results


def speedup(reference: tuple[int, float], measured: tuple[int, float]) -> float:
    """Scaling ratio relative to a reference run.

    ``(time_ref * P_ref) / (time * P)``: 1 means perfectly linear scaling
    from the reference processor count.
    """
    p_ref, t_ref = reference
    p, t = measured
    if t_ref <= 0 or t <= 0:
        raise ParameterError("timings must be positive")
    if p_ref < 1 or p < 1:
        raise ParameterError("processor counts must be positive")
    return (t_ref * p_ref) / (t * p)
