"""Time-out list manager: request queue, per-cycle drain, alarm dispatch.

One TomManager is one logical execution context (the list manager loop).
It can host several handles, each owning an independent time-out list.
Clients never touch a list directly: every operation becomes a request
that the manager applies at its next cycle, and every request is
acknowledged exactly once through its Reply.

Each cycle, in order: serve pending client requests, drain expired
time-outs, emit the action of every enabled expired time-out (through
the alarm pool, or inline in simple mode), then re-insert expired
cyclic time-outs at the current tick.

In simulation the manager is stepped cooperatively by the harness; the
LiveRunner at the bottom is a thin wall-clock adapter for demos and
carries no determinism guarantee.
"""

from __future__ import annotations

import itertools
import threading
import time
from collections import deque
from dataclasses import dataclass, replace
from typing import Any, Callable

from .core import ActionDescriptor, Message, Ticks, Timeout, TimeoutId, TimeoutList, set_action
from .errors import ClockRegression, Closed, DuplicateId, NotFound, TomError, ZeroDeadline

__all__ = [
    "OK",
    "Reply",
    "ClientRequest",
    "AlarmPool",
    "TomHandle",
    "TomManager",
    "tom_init",
    "tom_insert",
    "tom_delete",
    "tom_renew",
    "tom_enable",
    "tom_disable",
    "tom_set_action",
    "tom_close",
    "WallClock",
    "LiveRunner",
]

OK = "ok"

_ERROR_CODES = {
    DuplicateId: "duplicate_id",
    NotFound: "not_found",
    ZeroDeadline: "zero_deadline",
    ClockRegression: "clock_regression",
    Closed: "closed",
}

_manager_ids = itertools.count()


@dataclass
class Reply:
    """Single acknowledgment for one client request."""

    status: str | None = None   # None while pending
    error: str | None = None

    @property
    def pending(self) -> bool:
        return self.status is None

    @property
    def ok(self) -> bool:
        return self.status == OK

    def _resolve(self, status: str, error: str | None = None) -> None:
        if self.status is not None:
            raise RuntimeError("reply resolved twice")
        self.status = status
        self.error = error


@dataclass
class ClientRequest:
    kind: str                       # insert | delete | renew | enable | disable | close
    reply: Reply
    timeout: Timeout | None = None
    tid: TimeoutId | None = None


class AlarmPool:
    """Circular ring of executor slots with FIFO handoff.

    Execution is instantaneous in virtual time (emitting one message),
    so the pool never blocks here; it models the dispatch structure and
    keeps per-slot counts observable.
    """

    def __init__(self, size: int):
        if size < 0:
            raise ValueError("pool size must be >= 0")
        self.size = size
        self.executed = [0] * size
        self._cursor = 0

    def dispatch(self) -> int:
        slot = self._cursor
        self._cursor = (slot + 1) % self.size
        self.executed[slot] += 1
        return slot


class TomHandle:
    """Client-side handle on one time-out list hosted by a manager."""

    def __init__(self, manager: "TomManager", handle_id: int,
                 default_action: ActionDescriptor | None, pool_size: int):
        self.manager = manager
        self.manager_id = manager.manager_id
        self.handle_id = handle_id
        self.default_action = default_action
        self.pool = AlarmPool(pool_size) if pool_size > 0 else None
        self.list = TimeoutList()
        self.open = True
        self._queue: deque[ClientRequest] = deque()

    # -- client request surface (each call yields exactly one Reply) --

    def insert(self, t: Timeout) -> Reply:
        # The request carries a copy: the manager owns its entries and
        # the same Timeout value may be submitted to several managers.
        return self._submit("insert", timeout=replace(t))

    def delete(self, tid: TimeoutId) -> Reply:
        return self._submit("delete", tid=tid)

    def renew(self, t: Timeout) -> Reply:
        return self._submit("renew", timeout=replace(t))

    def enable(self, tid: TimeoutId) -> Reply:
        return self._submit("enable", tid=tid)

    def disable(self, tid: TimeoutId) -> Reply:
        return self._submit("disable", tid=tid)

    def close(self) -> Reply:
        if not self.open:
            reply = Reply()
            reply._resolve(OK)       # closing twice is a no-op
            return reply
        return self._submit("close")

    def residuals(self) -> list[Ticks]:
        """Diagnostic view of the list at the manager's current tick."""
        return self.list.residuals(self.manager.clock.now)

    def _submit(self, kind: str, timeout: Timeout | None = None,
                tid: TimeoutId | None = None) -> Reply:
        reply = Reply()
        if not self.open:
            reply._resolve("error", _ERROR_CODES[Closed])
            return reply
        self._queue.append(ClientRequest(kind, reply, timeout, tid))
        return reply


class TomManager:
    """The list-manager execution context, stepped once per TM_CYCLE ticks.

    ``emit(target, message)`` publishes fired alarms; by default they
    accumulate in ``outbox`` for standalone use.
    """

    def __init__(self, clock, tm_cycle: int = 1,
                 emit: Callable[[Any, Message], None] | None = None,
                 trace=None, name: str = "tom"):
        if tm_cycle < 1:
            raise ValueError("tm_cycle must be >= 1")
        self.clock = clock
        self.tm_cycle = tm_cycle
        self.trace = trace
        self.name = name
        self.manager_id = next(_manager_ids)
        self.handles: list[TomHandle] = []
        self.halted = False
        self.outbox: list[tuple[Any, Message]] = []
        self._emit = emit if emit is not None else self._collect

    def _collect(self, target: Any, message: Message) -> None:
        self.outbox.append((target, message))

    def tom_init(self, default_action: ActionDescriptor | None = None,
                 pool_size: int = 0) -> TomHandle:
        """Open a handle with its own (empty) list; restarts a halted loop."""
        handle = TomHandle(self, len(self.handles), default_action, pool_size)
        self.handles.append(handle)
        self.halted = False
        return handle

    def due(self, tick: Ticks) -> bool:
        return not self.halted and tick % self.tm_cycle == 0

    def halt(self) -> None:
        self.halted = True

    def cycle(self) -> None:
        """Run one manager cycle at the clock's current tick."""
        if self.halted:
            return
        now = self.clock.now
        for handle in self.handles:
            self._cycle_handle(handle, now)
        if self.handles and all(not h.open for h in self.handles):
            self.halted = True

    # -- internals ---------------------------------------------------

    def _cycle_handle(self, h: TomHandle, now: Ticks) -> None:
        served = 0
        while h._queue:
            self._apply(h, h._queue.popleft(), now)
            served += 1

        fired_ids: list[list[int]] = []
        reinserted: list[list[int]] = []
        if h.open:
            expired, expired_disabled = h.list.advance(now)
            for t in expired:
                self._fire(h, t)
                fired_ids.append(t.id.as_pair())
            for t in expired + expired_disabled:
                # Disabled cyclic time-outs are re-armed too; they just
                # never fire while disabled.
                if t.cyclic:
                    try:
                        h.list.insert(t, now)
                        reinserted.append(t.id.as_pair())
                    except TomError as exc:
                        self._trace_error(h, now, exc)

        if self.trace is not None and (served or fired_ids or reinserted):
            self.trace.emit(
                "tom",
                manager=self.name,
                handle=h.handle_id,
                requests_served=served,
                fired=fired_ids,
                reinserted=reinserted,
            )

    def _apply(self, h: TomHandle, req: ClientRequest, now: Ticks) -> None:
        if not h.open and req.kind != "close":
            req.reply._resolve("error", _ERROR_CODES[Closed])
            return
        try:
            if req.kind == "insert":
                h.list.insert(req.timeout, now)
            elif req.kind == "delete":
                h.list.delete(req.tid, now)
            elif req.kind == "renew":
                h.list.renew(req.timeout, now)
            elif req.kind == "enable":
                h.list.enable(req.tid)
            elif req.kind == "disable":
                h.list.disable(req.tid)
            elif req.kind == "close":
                h.open = False
            else:
                raise ValueError(f"unknown request kind {req.kind!r}")
        except TomError as exc:
            req.reply._resolve("error", _ERROR_CODES.get(type(exc), "error"))
            return
        req.reply._resolve(OK)

    def _fire(self, h: TomHandle, t: Timeout) -> None:
        action = t.action if t.action is not None else h.default_action
        if action is None:
            self._trace_error(h, self.clock.now, TomError(f"{t.id} has no action"))
            return
        if h.pool is not None:
            h.pool.dispatch()
        self._emit(action.target, action.fire(t))

    def _trace_error(self, h: TomHandle, now: Ticks, exc: Exception) -> None:
        # Alarm-path failures are logged, never raised out of the loop.
        if self.trace is not None:
            self.trace.emit("tom_error", manager=self.name, handle=h.handle_id,
                            error=str(exc))


def tom_init(default_action: ActionDescriptor | None = None, clock=None,
             pool_size: int = 0, *, manager: TomManager | None = None,
             tm_cycle: int = 1, emit=None, trace=None, name: str = "tom") -> TomHandle:
    """Open a time-out manager handle.

    With ``manager=None`` a fresh manager context is created for the
    given clock, mirroring "first call spawns the loop"; pass an
    existing manager to host several handles on one loop.
    ``pool_size`` = 0 selects simple mode (the manager emits alarms
    itself); > 0 routes them through an alarm pool of that many slots.
    """
    if manager is None:
        if clock is None:
            raise ValueError("tom_init needs a clock when no manager is given")
        manager = TomManager(clock, tm_cycle=tm_cycle, emit=emit, trace=trace, name=name)
    return manager.tom_init(default_action, pool_size)


# Thin functional aliases matching the classic client protocol.

def tom_insert(h: TomHandle, t: Timeout) -> Reply:
    return h.insert(t)


def tom_delete(h: TomHandle, tid: TimeoutId) -> Reply:
    return h.delete(tid)


def tom_renew(h: TomHandle, t: Timeout) -> Reply:
    return h.renew(t)


def tom_enable(h: TomHandle, tid: TimeoutId) -> Reply:
    return h.enable(tid)


def tom_disable(h: TomHandle, tid: TimeoutId) -> Reply:
    return h.disable(tid)


tom_set_action = set_action


def tom_close(h: TomHandle) -> Reply:
    return h.close()


class WallClock:
    """Monotonic wall-clock ticks (1 tick = 1 ms) for live mode."""

    def __init__(self):
        self._t0 = time.monotonic()

    @property
    def now(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)


class LiveRunner:
    """Free-running cycle driver for a manager bound to a WallClock."""

    def __init__(self, manager: TomManager, tick_seconds: float = 0.001):
        self.manager = manager
        self.tick_seconds = tick_seconds
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> "LiveRunner":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self._thread.join()

    def _run(self) -> None:
        while not self._stop.is_set() and not self.manager.halted:
            self.manager.cycle()
            time.sleep(self.manager.tm_cycle * self.tick_seconds)
