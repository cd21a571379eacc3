"""Heartbeat failure detector with per-peer adaptive watch windows.

Every periodic duty is carried by a cyclic time-out whose alarm is a
self-addressed message, so the whole detector is one switch over
message types inside a single event loop; no coroutines or threads.

Process p keeps, for every peer q, a trust/suspect verdict and a watch
window delta[q].  One cyclic time-out triggers heartbeat broadcasts
(the multiplicity-1 periodic duty); one cyclic watch per peer fires
when q has been silent for delta[q] ticks (the multiplicity-q duty,
realized by renewing q's watch on each heartbeat, so a firing itself
witnesses a full silent window).  A heartbeat from a suspected peer
restores trust and widens that peer's window by one tick, so a correct
peer can only be falsely suspected finitely often once delays settle.
"""

from __future__ import annotations

from .core import ActionDescriptor, Message, Ticks, TimeoutId, declare, set_deadline
from .errors import UnknownSender, ZeroDeadline
from .simnet import BROADCAST

TRUST = "trust"
SUSPECT = "suspect"

I_AM_ALIVE = "i_am_alive"
REPEAT_TASK1 = "repeat_task1"
REPEAT_TASK2 = "repeat_task2"


class Detector:
    """One detector process; register it on a Network under pid ``p``.

    The watch for peer q is declared with class_id q, so a fired watch
    message carries q in its class_id slot.  Self is always trusted and
    never watched.
    """

    def __init__(self, p: int, nprocs: int, default_timeout: Ticks, tom,
                 heartbeat_period: Ticks | None = None, trace=None):
        if nprocs < 2:
            raise ValueError("a detector needs at least one peer (nprocs >= 2)")
        if default_timeout < 1:
            raise ZeroDeadline("default_timeout must be >= 1")
        self.p = p
        self.nprocs = nprocs
        self.tom = tom
        self.trace = trace
        self.output = [TRUST] * nprocs
        self.delta = [default_timeout] * nprocs
        # The reformulated heartbeat period is a free parameter; half the
        # watch window keeps at least two heartbeats per window.
        self.heartbeat_period = (
            heartbeat_period if heartbeat_period is not None
            else max(1, default_timeout // 2)
        )

        self.t_task1 = declare(
            TimeoutId(p, 0), cyclic=True, enabled=True,
            deadline=self.heartbeat_period,
            action=ActionDescriptor(REPEAT_TASK1, target=p),
        )
        tom.insert(self.t_task1)
        self.t_task2: dict[int, object] = {}
        for q in range(nprocs):
            if q == p:
                continue
            watch = declare(
                TimeoutId(q, 0), cyclic=True, enabled=True,
                deadline=default_timeout,
                action=ActionDescriptor(REPEAT_TASK2, target=p),
            )
            self.t_task2[q] = watch
            tom.insert(watch)

    def step(self, m: Message) -> list[tuple[object, Message]]:
        if m.type == REPEAT_TASK1:
            return [(BROADCAST, Message(I_AM_ALIVE))]

        if m.type == REPEAT_TASK2:
            q = m.class_id
            if not self._is_peer(q):
                raise UnknownSender(f"watch fired for unknown peer {q}")
            if self.output[q] == TRUST:
                self.output[q] = SUSPECT
                self._transition(q, "trust_to_suspect")
            return []

        if m.type == I_AM_ALIVE:
            q = m.sender
            if not isinstance(q, int) or not 0 <= q < self.nprocs:
                raise UnknownSender(f"heartbeat from unknown sender {q!r}")
            if q == self.p:
                return []             # own broadcast echo
            if self.output[q] == SUSPECT:
                self.output[q] = TRUST
                self.delta[q] += 1
                set_deadline(self.t_task2[q], self.delta[q])
                self._transition(q, "suspect_to_trust")
            # Heartbeat resets q's watch window either way.
            self.tom.renew(self.t_task2[q])
            return []

        return []

    def suspects(self) -> set[int]:
        return {q for q in range(self.nprocs) if self.output[q] == SUSPECT}

    def _is_peer(self, q: int) -> bool:
        return isinstance(q, int) and 0 <= q < self.nprocs and q != self.p

    def _transition(self, q: int, transition: str) -> None:
        if self.trace is not None:
            self.trace.emit("detector", process=self.p, transition=transition,
                            q=q, delta=self.delta[q])
