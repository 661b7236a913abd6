"""Run deeply recursive interpreters on threads with a large C stack."""

from __future__ import annotations

import queue
import sys
import threading
from concurrent.futures import Future

STACK_BYTES = 1 << 30
WORKERS = 4
RECURSION_LIMIT = 2_000_000

_local = threading.local()
_lock = threading.Lock()
_queue: queue.SimpleQueue | None = None

# The recursion limit is interpreter-wide and test runners lower it while a
# test executes, so raise it only while deep jobs are running and put the old
# value back afterwards.
_limit_lock = threading.Lock()
_active = 0
_saved_limit = 0


def _raise_limit() -> None:
    global _active, _saved_limit
    with _limit_lock:
        if _active == 0:
            _saved_limit = sys.getrecursionlimit()
            if _saved_limit < RECURSION_LIMIT:
                sys.setrecursionlimit(RECURSION_LIMIT)
        _active += 1


def _restore_limit() -> None:
    global _active
    with _limit_lock:
        _active -= 1
        if _active == 0 and sys.getrecursionlimit() != _saved_limit:
            sys.setrecursionlimit(_saved_limit)


def _worker(q: queue.SimpleQueue) -> None:
    _local.deep = True
    while True:
        fut, fn, args, kwargs = q.get()
        if not fut.set_running_or_notify_cancel():
            continue
        _raise_limit()
        try:
            result = fn(*args, **kwargs)
        except BaseException as exc:  # noqa: BLE001 - re-raised in the caller
            _restore_limit()
            fut.set_exception(exc)
        else:
            _restore_limit()
            fut.set_result(result)


def _start() -> queue.SimpleQueue:
    global _queue
    with _lock:
        if _queue is None:
            q = queue.SimpleQueue()
            old = threading.stack_size(STACK_BYTES)
            try:
                for i in range(WORKERS):
                    threading.Thread(target=_worker, args=(q,), daemon=True, name=f"paplang-deep-{i}").start()
            finally:
                threading.stack_size(old)
            _queue = q
    return _queue


def run_deep(fn, *args, **kwargs):
    """Call ``fn`` on a big-stack worker (or inline if already on one)."""
    if getattr(_local, "deep", False):
        return fn(*args, **kwargs)
    q = _queue or _start()
    fut: Future = Future()
    q.put((fut, fn, args, kwargs))
    return fut.result()
