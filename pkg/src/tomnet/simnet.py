"""Deterministic virtual-time message network.

A single scheduler owns the clock and steps everything cooperatively:
at each tick it first runs scheduled harness actions, then cycles every
due time-out manager (which may emit alarm messages), then delivers
every event due at the tick in (deliver_at, seq) order.  Deliveries may
enqueue further same-tick events; the loop drains them before the clock
advances, so a run is a pure function of its inputs.

Self-addressed messages (src == dst) model local IPC: they are
delivered in the same tick and bypass link delay, jitter, drops and
spikes.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from .core import Message, Ticks
from .errors import ClockRegression, UnknownNode
from .trace import Trace

BROADCAST = "*"


class VirtualClock:
    """Monotone tick counter advanced only by the scheduler."""

    def __init__(self, start: Ticks = 0):
        self.now: Ticks = start

    def advance(self, ticks: Ticks = 1) -> Ticks:
        if ticks < 0:
            raise ClockRegression("cannot advance by a negative span")
        self.now += ticks
        return self.now

    def advance_to(self, tick: Ticks) -> Ticks:
        if tick < self.now:
            raise ClockRegression(f"cannot rewind {self.now} -> {tick}")
        self.now = tick
        return self.now


@dataclass(frozen=True)
class SimEvent:
    deliver_at: Ticks
    seq: int
    target: Any
    message: Message


@dataclass(frozen=True)
class DropWindow:
    """Messages matching (src, dst) sent inside [start, end] are dropped."""
    src: Any
    dst: Any
    start: Ticks
    end: Ticks


@dataclass(frozen=True)
class DelaySpike:
    """Extra delay added to matching messages sent inside [start, end]."""
    src: Any
    dst: Any
    start: Ticks
    end: Ticks
    extra: Ticks


def _spec_matches(spec: Any, pid: Any) -> bool:
    if spec == BROADCAST:
        return True
    if spec == pid:
        return True
    # "node:<id>" matches any process id of the form "<role>:<id>".
    if isinstance(spec, str) and spec.startswith("node:") and isinstance(pid, str):
        return pid.rsplit(":", 1)[-1] == spec.split(":", 1)[1]
    return False


@dataclass
class LinkModel:
    """Per-message delay policy plus scripted drops and delay spikes.

    Identical seed and scripts give identical delays; the jitter source
    is consumed once per non-local send, in schedule order.
    """

    base_delay: Ticks = 1
    jitter: Ticks = 0
    seed: int = 0
    drops: list[DropWindow] = field(default_factory=list)
    spikes: list[DelaySpike] = field(default_factory=list)

    def __post_init__(self):
        self._rng = random.Random(self.seed)

    def delay_for(self, src: Any, dst: Any, now: Ticks) -> Ticks | None:
        """Delivery delay in ticks, or None if the message is dropped."""
        for w in self.drops:
            if w.start <= now <= w.end and _spec_matches(w.src, src) and _spec_matches(w.dst, dst):
                return None
        delay = self.base_delay
        if self.jitter:
            delay += self._rng.randint(0, self.jitter)
        for s in self.spikes:
            if s.start <= now <= s.end and _spec_matches(s.src, src) and _spec_matches(s.dst, dst):
                delay += s.extra
        return delay


class Network:
    """Process registry, event heap, and the cooperative run loop.

    Processes are any objects with ``step(message) -> iterable of
    (dst, message)`` (or None).  Time-out managers are registered with
    their owning process so that crashing the owner halts them.
    """

    def __init__(self, clock: VirtualClock, link: LinkModel | None = None,
                 trace: Trace | None = None):
        self.clock = clock
        self.link = link if link is not None else LinkModel()
        self.trace = trace if trace is not None else Trace(clock)
        self.processes: dict[Any, Any] = {}
        self.process_order: list[Any] = []
        self.crashed: set[Any] = set()
        self.hung: set[Any] = set()
        self.backlog: dict[Any, list[Message]] = {}
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self._events: list[tuple[Ticks, int, Any, Message]] = []
        self._actions: list[tuple[Ticks, int, Callable[[], None]]] = []
        self._seq = itertools.count()
        self._managers: list[tuple[Any, Any]] = []      # (manager, owner pid)
        self._node_pids: dict[Any, list[Any]] = {}

    # -- registration -------------------------------------------------

    def add_process(self, pid: Any, proc: Any, node: Any = None) -> None:
        if pid in self.processes:
            raise ValueError(f"process {pid!r} already registered")
        self.processes[pid] = proc
        self.process_order.append(pid)
        if node is not None:
            self._node_pids.setdefault(node, []).append(pid)

    def add_manager(self, manager, owner: Any) -> None:
        self._managers.append((manager, owner))

    def sender_for(self, pid: Any) -> Callable[[Any, Message], None]:
        """emit() callback for a manager owned by ``pid``."""
        return lambda target, message: self.send(pid, target, message)

    def alive(self, pid: Any) -> bool:
        return pid in self.processes and pid not in self.crashed and pid not in self.hung

    # -- messaging ----------------------------------------------------

    def send(self, src: Any, dst: Any, message: Message) -> None:
        if dst == BROADCAST:
            self.broadcast(src, message)
            return
        if dst not in self.processes:
            raise UnknownNode(f"no process {dst!r}")
        now = self.clock.now
        message = replace(message, sender=src)
        if src == dst:
            delay = 0
        else:
            maybe = self.link.delay_for(src, dst, now)
            if maybe is None:
                self.sent += 1
                self.dropped += 1
                self.trace.emit("drop", src=src, dst=dst, type=message.type, reason="window")
                return
            delay = maybe
        self.sent += 1
        heapq.heappush(self._events, (now + delay, next(self._seq), dst, message))

    def broadcast(self, src: Any, message: Message) -> None:
        """One delivery per registered process, the sender included."""
        for dst in self.process_order:
            self.send(src, dst, message)

    # -- fault controls -------------------------------------------------

    def crash_process(self, pid: Any) -> None:
        self.crashed.add(pid)
        self.hung.discard(pid)
        for manager, owner in self._managers:
            if owner == pid:
                manager.halt()

    def crash_node(self, node: Any) -> None:
        for pid in self._node_pids.get(node, []):
            self.crash_process(pid)

    def hang_process(self, pid: Any) -> None:
        # Hung: its managers keep running, its mailbox fills unprocessed.
        self.hung.add(pid)

    def revive(self, pid: Any, proc: Any) -> None:
        """Replace the process behind ``pid`` (crash/hang state cleared)."""
        if pid not in self.processes:
            raise UnknownNode(f"no process {pid!r}")
        self.processes[pid] = proc
        self.crashed.discard(pid)
        self.hung.discard(pid)
        self.backlog.pop(pid, None)

    def schedule_action(self, tick: Ticks, fn: Callable[[], None]) -> None:
        if tick < self.clock.now:
            raise ClockRegression(f"action scheduled in the past ({tick})")
        heapq.heappush(self._actions, (tick, next(self._seq), fn))

    # -- run loop -------------------------------------------------------

    def run_until(self, duration: Ticks) -> None:
        while True:
            tick = self.clock.now
            while self._actions and self._actions[0][0] <= tick:
                _, _, fn = heapq.heappop(self._actions)
                fn()
            for manager, owner in self._managers:
                if owner not in self.crashed and manager.due(tick):
                    manager.cycle()
            while self._events and self._events[0][0] <= tick:
                _, _, dst, message = heapq.heappop(self._events)
                self._deliver(dst, message)
            if tick >= duration:
                break
            self.clock.advance(1)

    def _deliver(self, dst: Any, message: Message) -> None:
        if dst in self.crashed:
            self.dropped += 1
            self.trace.emit("drop", src=message.sender, dst=dst, type=message.type,
                            reason="target_down")
            return
        self.delivered += 1
        if dst in self.hung:
            self.backlog.setdefault(dst, []).append(message)
            return
        out = self.processes[dst].step(message)
        for target, m in out or ():
            self.send(dst, target, m)

    def conservation_violation(self) -> str | None:
        """Every sent message must be delivered or recorded as dropped."""
        in_flight = len(self._events)
        if self.sent != self.delivered + self.dropped + in_flight:
            return (f"sent={self.sent} != delivered={self.delivered} "
                    f"+ dropped={self.dropped} + in_flight={in_flight}")
        return None


def send(src: Any, dst: Any, message: Message, net: Network) -> None:
    net.send(src, dst, message)


def broadcast(src: Any, message: Message, net: Network) -> None:
    net.broadcast(src, message)
