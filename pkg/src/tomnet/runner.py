"""Scenario runners: wire protocol processes onto the simulated network.

DirnetSim builds one IAT and one DIR-x per configured node, each with
its own time-out manager, plus the scripted fault injections.
DetectorSim builds a flat group of heartbeat detector processes.  Both
produce a Trace; identical scenarios produce byte-identical traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

from .config import Scenario
from .core import ActionDescriptor, Message, Ticks, TimeoutId, declare
from .detector import Detector
from .dirnet import (
    CRASH_NODE,
    CRASH_PROCESS,
    DROP_MESSAGES,
    FAULT_KINDS,
    HANG_DIRX,
    INJECT_FAULT_TIMEOUT,
    TID_INJECT,
    Deadlines,
    DirxProcess,
    FaultSpec,
    IafPort,
    IatProcess,
    NodeRole,
    dirx_pid,
    iat_pid,
)
from .errors import UnknownNode
from .manager import TomHandle, TomManager
from .simnet import BROADCAST, DelaySpike, DropWindow, LinkModel, Network, VirtualClock
from .trace import Trace


class DirnetSim:
    """One DIR-net deployment over a virtual-clock network."""

    def __init__(self, scenario: Scenario, trace: Trace | None = None):
        self.scenario = scenario
        self.clock = VirtualClock()
        self.trace = trace if trace is not None else Trace(self.clock)
        link = LinkModel(
            base_delay=scenario.link.delay,
            jitter=scenario.link.jitter,
            seed=scenario.link.seed,
            drops=list(scenario.drops),
            spikes=list(scenario.spikes),
        )
        self.net = Network(self.clock, link, self.trace)
        self.deadlines = scenario.deadlines
        self.ports: dict[int, IafPort] = {}
        self.iat: dict[int, IatProcess] = {}
        self.dirx: dict[int, DirxProcess] = {}
        self.dirx_tom: dict[int, TomHandle] = {}
        self._faults: list[FaultSpec] = []

        mid = scenario.manager_node
        for node in sorted(scenario.roles):
            port = IafPort()
            self.ports[node] = port
            self._spawn_iat(node, port)
            self._spawn_dirx(node, scenario.roles[node], mid)
        for f in scenario.faults:
            self.inject_fault(f.node, f.kind, f.at)

    def run(self) -> Trace:
        self.net.run_until(self.scenario.duration)
        return self.trace

    def inject_fault(self, node: int, kind: str, at: Ticks) -> None:
        """Arm a one-shot fault time-out on the target node's DIR-x.

        The alarm delivers an injection message to the DIR-x, and the
        fault is applied when that message is processed.  An ``at``
        equal to the current tick fires at the next cycle.
        """
        if node not in self.scenario.roles:
            raise UnknownNode(f"no node {node}")
        if kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {kind!r}")
        index = len(self._faults)
        self._faults.append(FaultSpec(node, kind, at))
        t = declare(
            TimeoutId(TID_INJECT, index), cyclic=False, enabled=True,
            deadline=max(1, at - self.clock.now),
            action=ActionDescriptor(INJECT_FAULT_TIMEOUT, target=dirx_pid(node),
                                    carries_instance_id=True),
        )
        self.dirx_tom[node].insert(t)

    # -- construction ----------------------------------------------------

    def _new_handle(self, owner_pid: str) -> TomHandle:
        manager = TomManager(self.clock, tm_cycle=1, emit=self.net.sender_for(owner_pid),
                             trace=self.trace, name=f"tom:{owner_pid}")
        self.net.add_manager(manager, owner=owner_pid)
        return manager.tom_init()

    def _spawn_iat(self, node: int, port: IafPort) -> None:
        pid = iat_pid(node)
        proc = IatProcess(node, port, self._new_handle(pid), self.deadlines,
                          respawn=partial(self._respawn_dirx, node), trace=self.trace)
        self.iat[node] = proc
        self.net.add_process(pid, proc, node=node)

    def _spawn_dirx(self, node: int, role: NodeRole, mid: int) -> None:
        pid = dirx_pid(node)
        handle = self._new_handle(pid)
        proc = DirxProcess(node, role, self.ports[node], handle, self.deadlines,
                           backups=self.scenario.backup_nodes, mid=mid,
                           trace=self.trace, on_fault=self._apply_fault)
        self.dirx[node] = proc
        self.dirx_tom[node] = handle
        self.net.add_process(pid, proc, node=node)

    def _respawn_dirx(self, node: int, mid_hint: int | None) -> None:
        pid = dirx_pid(node)
        if self.net.alive(pid):
            self.trace.emit("dirnet", node=node, event="respawn_skipped", subject=node)
            return
        mid = mid_hint if mid_hint is not None else self.scenario.manager_node
        handle = self._new_handle(pid)
        proc = DirxProcess(node, NodeRole.BACKUP, self.ports[node], handle,
                           self.deadlines, backups=self.scenario.backup_nodes,
                           mid=mid, trace=self.trace, on_fault=self._apply_fault)
        self.dirx[node] = proc
        self.dirx_tom[node] = handle
        self.net.revive(pid, proc)
        self.trace.emit("dirnet", node=node, event="respawn", subject=node)

    def _apply_fault(self, index: int) -> None:
        f = self._faults[index]
        self.trace.emit("dirnet", node=f.node, event="fault", subject=f.node, fault=f.kind)
        if f.kind == CRASH_PROCESS:
            self.net.crash_process(dirx_pid(f.node))
        elif f.kind == CRASH_NODE:
            self.net.crash_node(f.node)
        elif f.kind == HANG_DIRX:
            self.net.hang_process(dirx_pid(f.node))
        elif f.kind == DROP_MESSAGES:
            now = self.clock.now
            spec = f"node:{f.node}"
            self.net.link.drops.append(DropWindow(spec, BROADCAST, now, 2**62))
            self.net.link.drops.append(DropWindow(BROADCAST, spec, now, 2**62))


class DetectorSim:
    """A flat group of heartbeat detectors, optionally crashing some."""

    def __init__(self, nprocs: int, default_timeout: Ticks, duration: Ticks,
                 heartbeat_period: Ticks | None = None, base_delay: Ticks = 1,
                 jitter: Ticks = 0, seed: int = 0,
                 crash_at: dict[int, Ticks] | None = None,
                 spikes: list[DelaySpike] | None = None,
                 drops: list[DropWindow] | None = None,
                 trace: Trace | None = None):
        self.duration = duration
        self.clock = VirtualClock()
        self.trace = trace if trace is not None else Trace(self.clock)
        link = LinkModel(base_delay=base_delay, jitter=jitter, seed=seed,
                         drops=list(drops or []), spikes=list(spikes or []))
        self.net = Network(self.clock, link, self.trace)
        self.detectors: dict[int, Detector] = {}
        for p in range(nprocs):
            manager = TomManager(self.clock, tm_cycle=1, emit=self.net.sender_for(p),
                                 trace=self.trace, name=f"tom:{p}")
            self.net.add_manager(manager, owner=p)
            det = Detector(p, nprocs, default_timeout, manager.tom_init(),
                           heartbeat_period=heartbeat_period, trace=self.trace)
            self.detectors[p] = det
            self.net.add_process(p, det, node=p)
        for q, tick in sorted((crash_at or {}).items()):
            self.net.schedule_action(tick, partial(self.net.crash_process, q))

    def run(self) -> Trace:
        self.net.run_until(self.duration)
        return self.trace


# -- reference replay of the four-time-out operating scenario -------------

FIGURE_INSERTS = [
    # (tick, name, deadline)
    (0, "A", 330),
    (100, "B", 400),
    (170, "C", 510),
    (350, "D", 230),
]
FIGURE_EXPECTED_RUNNING = {"A": 330, "B": 170, "C": 180, "D": 80}
FIGURE_EXPECTED_C_AFTER_D = 100
FIGURE_EXPECTED_FIRINGS = [("A", 330), ("B", 500), ("D", 580), ("C", 680)]


@dataclass
class ReplayResult:
    steps: list[str] = field(default_factory=list)
    running: dict[str, int] = field(default_factory=dict)
    c_after_d: int | None = None
    firings: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.running == FIGURE_EXPECTED_RUNNING
                and self.c_after_d == FIGURE_EXPECTED_C_AFTER_D
                and self.firings == FIGURE_EXPECTED_FIRINGS)


def replay_figure() -> ReplayResult:
    """Drive the A/B/C/D insertion schedule through a managed list."""
    clock = VirtualClock()
    manager = TomManager(clock, tm_cycle=1, name="tom:replay")
    names = {name: TimeoutId(k + 1, 0) for k, (_, name, _) in enumerate(FIGURE_INSERTS)}
    by_id = {tid: name for name, tid in names.items()}
    handle = manager.tom_init()
    schedule = {tick: (name, deadline) for tick, name, deadline in FIGURE_INSERTS}
    result = ReplayResult()

    last_tick = FIGURE_EXPECTED_FIRINGS[-1][1]
    for tick in range(last_tick + 1):
        clock.advance_to(tick)
        if tick in schedule:
            name, deadline = schedule[tick]
            handle.insert(declare(names[name], cyclic=False, enabled=True,
                                  deadline=deadline,
                                  action=ActionDescriptor("fired", target="observer")))
        fired_before = len(manager.outbox)
        manager.cycle()
        for _, message in manager.outbox[fired_before:]:
            name = by_id[TimeoutId(message.class_id, message.instance_id)]
            result.firings.append((name, tick))
            result.steps.append(f"{tick:>4}  fire {name}")
        if tick in schedule:
            name, _ = schedule[tick]
            entry = handle.list.find(names[name])
            result.running[name] = entry.running
            result.steps.append(f"{tick:>4}  insert {name} running={entry.running}")
            if name == "D":
                result.c_after_d = handle.list.find(names["C"]).running
                result.steps.append(f"{tick:>4}  adjust C running={result.c_after_d}")
    return result
