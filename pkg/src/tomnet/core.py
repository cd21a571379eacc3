"""Relative-residual time-out list (a delta-list timer queue).

Entries are kept in expiry order, but each entry stores only ``running``,
the tick distance from its predecessor's expiry; the head stores the
distance from the list's ``start_time`` origin.  Expiry checks therefore
touch only the head, and an insertion or deletion adjusts at most one
neighbour.

With ``elapsed = now - start_time``::

    r_1 = head.running - elapsed
    r_n = r_1 + running_2 + ... + running_n        (n > 1)

``r_n`` is the n-th residual: ticks left until entry n expires.  The
residual sequence is non-decreasing, entry n expires exactly at
``start_time + running_1 + ... + running_n``, and the head is due once
``r_1 <= 0``.

Ticks are plain ints (1 tick = 1 virtual millisecond by convention) and
the caller supplies the current clock value with every operation.  Clock
values must never decrease; going backwards raises ClockRegression.
Equal-deadline newcomers land after existing entries with a ``running``
of zero, so drains are FIFO among simultaneous expiries.

A Timeout object belongs to at most one list at a time; anything that
fans a time-out value out to several lists must copy it first (the
manager layer does).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .errors import ClockRegression, DuplicateId, NotFound, ZeroDeadline

Ticks = int


@dataclass(frozen=True)
class TimeoutId:
    """Identity of one logical time-out.

    ``class_id`` groups time-outs of one kind; ``instance_id`` tells
    instances of the same class apart (e.g. one watch per peer node).
    """

    class_id: int
    instance_id: int = 0

    def __post_init__(self):
        if self.class_id < 0 or self.instance_id < 0:
            raise ValueError("timeout id components must be non-negative")

    def as_pair(self) -> list[int]:
        return [self.class_id, self.instance_id]


@dataclass(frozen=True)
class Message:
    """Typed envelope; the only currency processes exchange.

    Alarm-fired messages carry the id pair of the time-out that fired.
    ``sender`` is stamped by whatever transport delivers the message.
    """

    type: str
    sender: Any = None
    class_id: int = 0
    instance_id: int = 0
    payload: Any = None


@dataclass(frozen=True)
class ActionDescriptor:
    """What expiry does: emit exactly one message, never run code.

    ``carries_instance_id`` records which half of the fired id pair is
    the discriminating subject for consumers (False: class_id).
    """

    message_type: str
    target: Any
    carries_instance_id: bool = False

    def fire(self, t: Timeout) -> Message:
        return Message(
            type=self.message_type,
            class_id=t.id.class_id,
            instance_id=t.id.instance_id,
        )


@dataclass
class Timeout:
    """A scheduled alarm.

    ``deadline`` is the tick span between (re-)insertion and expiry and
    is written only by declare() and set_deadline().  ``running`` is
    meaningless outside a list; inside one it holds the relative
    residual described in the module docstring.
    """

    id: TimeoutId
    deadline: Ticks
    cyclic: bool
    enabled: bool
    action: ActionDescriptor | None = None
    running: Ticks = 0


def declare(
    tid: TimeoutId,
    cyclic: bool,
    enabled: bool,
    deadline: Ticks,
    action: ActionDescriptor | None = None,
) -> Timeout:
    """Build a fresh, unlisted time-out. Raises ZeroDeadline if deadline < 1."""
    if deadline < 1:
        raise ZeroDeadline(f"deadline must be >= 1, got {deadline}")
    return Timeout(id=tid, deadline=deadline, cyclic=cyclic, enabled=enabled, action=action)


def set_deadline(t: Timeout, deadline: Ticks) -> Timeout:
    """Change the declared deadline; takes effect at the next insert/renew."""
    if deadline < 1:
        raise ZeroDeadline(f"deadline must be >= 1, got {deadline}")
    t.deadline = deadline
    return t


def set_action(t: Timeout, action: ActionDescriptor) -> Timeout:
    """Replace the action fired on expiry."""
    t.action = action
    return t


class TimeoutList:
    """Ordered relative-residual list; the manager's core state.

    ``on_event`` (optional) receives one dict per state transition:
    {"op", "id", "now", "residuals"}.
    """

    def __init__(self, on_event: Callable[[dict], None] | None = None):
        self.entries: list[Timeout] = []
        self.start_time: Ticks = 0
        self.on_event = on_event
        self._ids: set[TimeoutId] = set()
        self._last_now: Ticks = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, tid: TimeoutId) -> bool:
        return tid in self._ids

    def ids(self) -> list[TimeoutId]:
        return [e.id for e in self.entries]

    def find(self, tid: TimeoutId) -> Timeout | None:
        for e in self.entries:
            if e.id == tid:
                return e
        return None

    def residuals(self, now: Ticks) -> list[Ticks]:
        """[r_1 .. r_m] at ``now``; empty list for an empty list."""
        self._touch(now)
        return self._residuals(now)

    def insert(self, t: Timeout, now: Ticks) -> None:
        """Place ``t`` so that it expires at ``now + t.deadline``.

        Pre-existing entries keep their absolute expiry: insertions on
        top or in the middle only subdivide the covered interval, and
        only an insertion at the end extends it.
        """
        self._touch(now)
        if t.deadline < 1:
            raise ZeroDeadline(f"deadline must be >= 1, got {t.deadline}")
        if t.id in self._ids:
            raise DuplicateId(f"{t.id} already listed")

        if not self.entries:
            # Only here is start_time ever (re)written.
            self.start_time = now
            t.running = t.deadline
            self.entries.append(t)
        else:
            elapsed = now - self.start_time
            d = t.deadline
            acc = 0          # r_k while scanning
            prev_r = None    # r_{k-1}
            pos = None       # first index whose residual exceeds d
            for idx, e in enumerate(self.entries):
                acc = (e.running - elapsed) if idx == 0 else acc + e.running
                if d < acc:
                    pos = idx
                    break
                prev_r = acc
            if pos is None:
                # End: d >= r_m.
                t.running = d - acc
                self.entries.append(t)
            elif pos == 0:
                # Top: running holds an absolute offset from start_time,
                # the old head becomes relative to the new one.
                t.running = d + elapsed
                self.entries[0].running = acc - d
                self.entries.insert(0, t)
            else:
                # Middle: r_j <= d < r_{j+1}; the successor absorbs the
                # difference so its expiry is unchanged.
                t.running = d - prev_r
                self.entries[pos].running -= t.running
                self.entries.insert(pos, t)
        self._ids.add(t.id)
        self._emit("insert", t.id, now)

    def delete(self, tid: TimeoutId, now: Ticks) -> Timeout:
        """Remove the entry with ``tid``; survivors keep their expiry."""
        self._touch(now)
        if tid not in self._ids:
            raise NotFound(f"{tid} not listed")
        idx = next(i for i, e in enumerate(self.entries) if e.id == tid)
        t = self.entries.pop(idx)
        if idx < len(self.entries):
            # Top or middle: the successor inherits the removed span.
            self.entries[idx].running += t.running
        self._ids.discard(tid)
        self._emit("delete", tid, now)
        return t

    def advance(self, now: Ticks) -> tuple[list[Timeout], list[Timeout]]:
        """Drain every entry due at ``now`` (head residual <= 0).

        Returns (expired, expired_disabled), each in expiry order with
        FIFO among ties.  Disabled entries are drained but must not
        fire; cyclic re-insertion is the caller's job.
        """
        self._touch(now)
        expired: list[Timeout] = []
        disabled: list[Timeout] = []
        while self.entries:
            head = self.entries[0]
            if head.running - (now - self.start_time) > 0:
                break
            self.entries.pop(0)
            if self.entries:
                self.entries[0].running += head.running
            self._ids.discard(head.id)
            (expired if head.enabled else disabled).append(head)
        if expired or disabled:
            self._emit("advance", None, now, drained=[t.id.as_pair() for t in expired + disabled])
        return expired, disabled

    def renew(self, t: Timeout, now: Ticks) -> None:
        """Remove (if present) and re-insert ``t`` with its current deadline.

        Renewing an absent time-out is a plain insert, which makes
        "(re-)insert or renew" a single call.
        """
        if t.deadline < 1:
            raise ZeroDeadline(f"deadline must be >= 1, got {t.deadline}")
        if t.id in self._ids:
            self.delete(t.id, now)
        self.insert(t, now)

    def enable(self, tid: TimeoutId) -> None:
        self._flip(tid, True)

    def disable(self, tid: TimeoutId) -> None:
        self._flip(tid, False)

    # -- internals ---------------------------------------------------

    def _flip(self, tid: TimeoutId, enabled: bool) -> None:
        t = self.find(tid)
        if t is None:
            raise NotFound(f"{tid} not listed")
        t.enabled = enabled
        self._emit("enable" if enabled else "disable", tid, self._last_now)

    def _residuals(self, now: Ticks) -> list[Ticks]:
        if not self.entries:
            return []
        out = [self.entries[0].running - (now - self.start_time)]
        for e in self.entries[1:]:
            out.append(out[-1] + e.running)
        return out

    def _touch(self, now: Ticks) -> None:
        if now < self._last_now:
            raise ClockRegression(f"clock went from {self._last_now} back to {now}")
        self._last_now = now

    def _emit(self, op: str, tid: TimeoutId | None, now: Ticks, **extra) -> None:
        if self.on_event is None:
            return
        event = {
            "op": op,
            "id": tid.as_pair() if tid is not None else None,
            "now": now,
            "residuals": self._residuals(now),
        }
        event.update(extra)
        self.on_event(event)
