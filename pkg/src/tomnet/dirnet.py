"""DIR-net failure detection: node watchdogs, suspicion periods, election.

Each node hosts two event-driven processes over the simulated network:

* IAT, the I'm-Alive task.  The local DIR-x must keep setting a shared
  boolean flag (the IAF port); the IAT clears and checks it on a cyclic
  time-out.  A check that finds the flag still cleared broadcasts
  m_TEIF ("this entity is faulty") and stops checking until a WAKEUP
  asks it to respawn the local DIR-B.

* DIR-x, one of manager / backup / agent.  The manager heartbeats all
  backups (m_MIA) and keeps one watch per backup on their m_TAIA
  heartbeats; backups mirror this for the manager.  A lapsed watch
  opens a suspicion period, bounded by a one-shot t_TEIF_* time-out,
  which ends in one of three ways: a late heartbeat (back to normal),
  an m_TEIF from the peer's IAT (process crashed, node alive: declare
  it and send WAKEUP), or expiry (declare the whole node crashed; a
  backup then elects a replacement manager).

No alarm ever mutates protocol state directly: alarms only emit
messages, and all state changes happen when a process steps a message.
The IAF port is the single sanctioned piece of shared state, confined
to one node.  "Declaring" a crash appends a verdict to the trace;
recovery strategies beyond WAKEUP and election are out of scope.
Agents only feed the IAF on their own node (their data path is
stubbed).
"""

from __future__ import annotations

from dataclasses import dataclass, replace as _dc_replace
from enum import Enum
from typing import Iterable

from .core import ActionDescriptor, Message, Ticks, TimeoutId, declare
from .errors import EmptyCandidateSet
from .simnet import BROADCAST

# Network-travelling message types.
M_TEIF = "m_teif"
M_MIA = "m_mia"
M_TAIA = "m_taia"
WAKEUP = "wakeup"

# Local alarm message types (time-out action to the owning process).
M_IA_SET_ALARM = "m_ia_set_alarm"
M_IA_CLR_ALARM = "m_ia_clr_alarm"
M_MIA_A_ALARM = "m_mia_a_alarm"
M_TAIA_A_ALARM = "m_taia_a_alarm"
M_TEIF_A_ALARM = "m_teif_a_alarm"
M_TAIA_B_ALARM = "m_taia_b_alarm"
M_MIA_B_ALARM = "m_mia_b_alarm"
M_TEIF_B_ALARM = "m_teif_b_alarm"
INJECT_FAULT_TIMEOUT = "inject_fault_timeout"

# Time-out class ids; instance_id carries the watched node where relevant.
TID_IA_SET = 1
TID_IA_CLR = 2
TID_MIA_A = 3
TID_TAIA_A = 4
TID_TEIF_A = 5
TID_TAIA_B = 6
TID_MIA_B = 7
TID_TEIF_B = 8
TID_INJECT = 9

CRASH_PROCESS = "crash_process"
CRASH_NODE = "crash_node"
HANG_DIRX = "hang_dirx"
DROP_MESSAGES = "drop_messages"
FAULT_KINDS = frozenset({CRASH_PROCESS, CRASH_NODE, HANG_DIRX, DROP_MESSAGES})


class NodeRole(str, Enum):
    MANAGER = "manager"
    BACKUP = "backup"
    AGENT = "agent"


@dataclass(frozen=True)
class Deadlines:
    """Tick spans for every protocol time-out (config-overridable).

    Watch windows sit well above twice their heartbeat periods to trade
    a little detection latency against false suspicions.
    """

    ia_set: Ticks = 50
    ia_clr: Ticks = 120
    mia_a: Ticks = 100
    taia_a: Ticks = 250
    teif_a: Ticks = 300
    taia_b: Ticks = 100
    mia_b: Ticks = 250
    teif_b: Ticks = 300

    def replace(self, **overrides: Ticks) -> "Deadlines":
        return _dc_replace(self, **overrides)


@dataclass(frozen=True)
class FaultSpec:
    node: int
    kind: str
    at: Ticks


@dataclass
class IafPort:
    """The I'm-Alive flag shared by one node's DIR-x and IAT."""
    value: bool = False


def dirx_pid(node: int) -> str:
    return f"dirx:{node}"


def iat_pid(node: int) -> str:
    return f"iat:{node}"


def elect(candidates: Iterable[int]) -> int:
    """Deterministic election: the minimum live node id wins."""
    pool = sorted(candidates)
    if not pool:
        raise EmptyCandidateSet("no live backup to elect")
    return pool[0]


class IatProcess:
    """Per-node I'm-Alive task."""

    def __init__(self, node: int, port: IafPort, tom, deadlines: Deadlines,
                 respawn, trace=None):
        self.node = node
        self.port = port
        self.tom = tom
        self.trace = trace
        self.respawn = respawn
        self.t_ia_clr = declare(
            TimeoutId(TID_IA_CLR, node), cyclic=True, enabled=True,
            deadline=deadlines.ia_clr,
            action=ActionDescriptor(M_IA_CLR_ALARM, target=iat_pid(node),
                                    carries_instance_id=True),
        )
        tom.insert(self.t_ia_clr)

    def step(self, m: Message):
        if m.type == M_IA_CLR_ALARM:
            if self.port.value:
                self.port.value = False
                return []
            # The local DIR-x stopped giving signs of life: report it
            # once and stop checking until told to respawn.
            self.tom.delete(self.t_ia_clr.id)
            self._emit("teif", self.node)
            return [(BROADCAST, Message(M_TEIF, instance_id=self.node))]
        if m.type == WAKEUP:
            self.respawn(m.payload)
            self.tom.renew(self.t_ia_clr)
            return []
        return []

    def _emit(self, event: str, subject: int) -> None:
        if self.trace is not None:
            self.trace.emit("dirnet", node=self.node, event=event, subject=subject)


class DirxProcess:
    """Manager, backup, or agent automaton on one node."""

    def __init__(self, node: int, role: NodeRole, port: IafPort, tom,
                 deadlines: Deadlines, backups: Iterable[int], mid: int,
                 trace=None, on_fault=None):
        self.node = node
        self.role = role
        self.port = port
        self.tom = tom
        self.d = deadlines
        self.backups = sorted(backups)
        self.mid = mid
        self.trace = trace
        self.on_fault = on_fault
        self.crashed_nodes: set[int] = set()

        self.t_ia_set = declare(
            TimeoutId(TID_IA_SET, node), cyclic=True, enabled=True,
            deadline=deadlines.ia_set,
            action=ActionDescriptor(M_IA_SET_ALARM, target=dirx_pid(node),
                                    carries_instance_id=True),
        )
        tom.insert(self.t_ia_set)
        if role is NodeRole.MANAGER:
            self._init_manager()
        elif role is NodeRole.BACKUP:
            self._init_backup()

    # -- wiring ----------------------------------------------------------

    def _self_alarm(self, message_type: str) -> ActionDescriptor:
        return ActionDescriptor(message_type, target=dirx_pid(self.node),
                                carries_instance_id=True)

    def _init_manager(self) -> None:
        self.suspicion: dict[int, bool] = {}
        self.t_mia_a = declare(TimeoutId(TID_MIA_A, self.node), True, True,
                               self.d.mia_a, self._self_alarm(M_MIA_A_ALARM))
        self.tom.insert(self.t_mia_a)
        peers = [b for b in self.backups
                 if b != self.node and b not in self.crashed_nodes]
        self.t_taia_a = {}
        self.t_teif_a = {}
        for i in peers:
            self.t_taia_a[i] = declare(TimeoutId(TID_TAIA_A, i), True, True,
                                       self.d.taia_a, self._self_alarm(M_TAIA_A_ALARM))
            self.t_teif_a[i] = declare(TimeoutId(TID_TEIF_A, i), False, True,
                                       self.d.teif_a, self._self_alarm(M_TEIF_A_ALARM))
            # Watches are armed up front; a heartbeat renews, a lapse
            # swaps the watch for the suspicion-period time-out.
            self.tom.insert(self.t_taia_a[i])

    def _init_backup(self) -> None:
        self.suspects_manager = False
        self.t_taia_b = declare(TimeoutId(TID_TAIA_B, self.node), True, True,
                                self.d.taia_b, self._self_alarm(M_TAIA_B_ALARM))
        self.t_mia_b = declare(TimeoutId(TID_MIA_B, self.node), True, True,
                               self.d.mia_b, self._self_alarm(M_MIA_B_ALARM))
        self.t_teif_b = declare(TimeoutId(TID_TEIF_B, self.node), False, True,
                                self.d.teif_b, self._self_alarm(M_TEIF_B_ALARM))
        self.tom.insert(self.t_taia_b)
        self.tom.insert(self.t_mia_b)

    # -- event loop --------------------------------------------------------

    def step(self, m: Message):
        if m.type == M_IA_SET_ALARM:
            # The only place the flag is ever set; alarms themselves
            # must not touch it, or a hung DIR-x would go undetected.
            self.port.value = True
            return []
        if m.type == INJECT_FAULT_TIMEOUT:
            if self.on_fault is not None:
                self.on_fault(m.instance_id)
            return []
        if self.role is NodeRole.MANAGER:
            return self._manager_step(m)
        if self.role is NodeRole.BACKUP:
            return self._backup_step(m)
        return []          # agents: error-forwarding data path stubbed

    def _manager_step(self, m: Message):
        if m.type == M_MIA_A_ALARM:
            mia = Message(M_MIA, instance_id=self.node)
            return [(dirx_pid(i), mia) for i in self._live_backups()]

        if m.type == M_TAIA:
            i = m.instance_id
            if i not in self.t_taia_a:
                self._emit("stale_heartbeat", i)
                return []
            if self.suspicion.get(i):
                # Case 1: the backup was simply late.
                self.suspicion[i] = False
                self.tom.delete(self.t_teif_a[i].id)
                self._emit("clear", i)
            self.tom.renew(self.t_taia_a[i])
            return []

        if m.type == M_TAIA_A_ALARM:
            i = m.instance_id
            if self.suspicion.get(i) or i in self.crashed_nodes:
                return []
            self.suspicion[i] = True
            self.tom.delete(self.t_taia_a[i].id)   # drops the auto re-arm
            self.tom.renew(self.t_teif_a[i])
            self._emit("suspect", i)
            return []

        if m.type == M_TEIF:
            i = m.instance_id
            if self.suspicion.get(i):
                # Case 2: process crashed, node alive; respawn it there.
                self.suspicion[i] = False
                self.tom.delete(self.t_teif_a[i].id)
                self.tom.renew(self.t_taia_a[i])
                self._emit("declare_crashed", i, scope="process")
                self._emit("wakeup", i)
                return [(iat_pid(i), Message(WAKEUP, payload=self.mid))]
            self._emit("stale_teif", i)
            return []

        if m.type == M_TEIF_A_ALARM:
            i = m.instance_id
            if not self.suspicion.get(i):
                return []
            # Case 3: nothing arrived inside the suspicion period.
            self.suspicion[i] = False
            self.crashed_nodes.add(i)
            self._emit("declare_crashed", i, scope="node")
            return []

        return []

    def _backup_step(self, m: Message):
        if m.type == M_TAIA_B_ALARM:
            return [(dirx_pid(self.mid), Message(M_TAIA, instance_id=self.node))]

        if m.type == M_MIA:
            if m.instance_id != self.mid:
                self._emit("stale_heartbeat", m.instance_id)
                return []
            if self.suspects_manager:
                self.suspects_manager = False
                self.tom.delete(self.t_teif_b.id)
                self._emit("clear", self.mid)
            self.tom.renew(self.t_mia_b)
            return []

        if m.type == M_MIA_B_ALARM:
            if self.suspects_manager or self.mid in self.crashed_nodes:
                return []
            self.suspects_manager = True
            self.tom.delete(self.t_mia_b.id)
            self.tom.renew(self.t_teif_b)
            self._emit("suspect", self.mid)
            return []

        if m.type == M_TEIF:
            i = m.instance_id
            if self.suspects_manager and i == self.mid:
                self.suspects_manager = False
                self.tom.delete(self.t_teif_b.id)
                self.tom.renew(self.t_mia_b)
                self._emit("declare_crashed", i, scope="process")
                self._emit("wakeup", i)
                return [(iat_pid(i), Message(WAKEUP, payload=self.mid))]
            self._emit("stale_teif", i)
            return []

        if m.type == M_TEIF_B_ALARM:
            if not self.suspects_manager:
                return []
            self.suspects_manager = False
            self.crashed_nodes.add(self.mid)
            self._emit("declare_crashed", self.mid, scope="node")
            winner = elect(self._live_backups())
            self._emit("elected", winner)
            if winner == self.node:
                self._become_manager()
            else:
                self.mid = winner
                self.tom.renew(self.t_mia_b)
            return []

        return []

    def _become_manager(self) -> None:
        self.role = NodeRole.MANAGER
        self.mid = self.node
        self.tom.delete(self.t_taia_b.id)
        # Watches for the surviving peers are rebuilt immediately rather
        # than waiting for their first heartbeat.
        self._init_manager()

    def _live_backups(self) -> list[int]:
        return [b for b in self.backups if b not in self.crashed_nodes and b != self.node] \
            if self.role is NodeRole.MANAGER else \
            [b for b in self.backups if b not in self.crashed_nodes]

    def _emit(self, event: str, subject: int, **extra) -> None:
        if self.trace is not None:
            self.trace.emit("dirnet", node=self.node, event=event, subject=subject, **extra)
