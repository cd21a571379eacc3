"""Line-oriented scenario configuration.

Directives (one per line, ``#`` starts a comment)::

    node <id> role <manager|backup|agent>
    deadline <NAME> <ticks>          # NAME: IA_SET, IA_CLR, MIA_A, TAIA_A,
                                     #       TEIF_A, TAIA_B, MIA_B, TEIF_B
    link delay <ticks> jitter <ticks> seed <int>
    inject <node> <kind> at <tick>   # kind: crash_process, crash_node,
                                     #       hang_dirx, drop_messages
    drop <src-node> <dst-node> <from> <to>
    spike <src-node> <dst-node> <from> <to> <extra-ticks>
    duration <ticks>

A scenario needs a duration, exactly one manager, and at least one
backup.  Unknown directives and unknown deadline names are rejected
with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .dirnet import Deadlines, FAULT_KINDS, FaultSpec, NodeRole
from .errors import ConfigError
from .simnet import BROADCAST, DelaySpike, DropWindow

KNOWN_DEADLINE_NAMES = frozenset(
    {"ia_set", "ia_clr", "mia_a", "taia_a", "teif_a", "taia_b", "mia_b", "teif_b"}
)


@dataclass(frozen=True)
class LinkSpec:
    delay: int = 1
    jitter: int = 0
    seed: int = 0


@dataclass
class Scenario:
    roles: dict[int, NodeRole] = field(default_factory=dict)
    deadlines: Deadlines = field(default_factory=Deadlines)
    link: LinkSpec = field(default_factory=LinkSpec)
    faults: list[FaultSpec] = field(default_factory=list)
    drops: list[DropWindow] = field(default_factory=list)
    spikes: list[DelaySpike] = field(default_factory=list)
    duration: int | None = None

    @property
    def seed(self) -> int:
        return self.link.seed

    @property
    def manager_node(self) -> int:
        return next(n for n, r in self.roles.items() if r is NodeRole.MANAGER)

    @property
    def backup_nodes(self) -> list[int]:
        return sorted(n for n, r in self.roles.items() if r is NodeRole.BACKUP)

    @property
    def agent_nodes(self) -> list[int]:
        return sorted(n for n, r in self.roles.items() if r is NodeRole.AGENT)

    def with_overrides(self, seed: int | None = None,
                       duration: int | None = None) -> "Scenario":
        out = self
        if seed is not None:
            out = replace(out, link=replace(out.link, seed=seed))
        if duration is not None:
            out = replace(out, duration=duration)
        return out


def _node_spec(token: str):
    return BROADCAST if token == "*" else f"node:{int(token)}"


def parse_config(text: str) -> Scenario:
    roles: dict[int, NodeRole] = {}
    deadline_overrides: dict[str, int] = {}
    link = LinkSpec()
    faults: list[FaultSpec] = []
    drops: list[DropWindow] = []
    spikes: list[DelaySpike] = []
    duration: int | None = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        try:
            if head == "node":
                if len(parts) != 4 or parts[2] != "role":
                    raise ConfigError(lineno, "expected: node <id> role <role>")
                node = int(parts[1])
                if node in roles:
                    raise ConfigError(lineno, f"node {node} declared twice")
                try:
                    roles[node] = NodeRole(parts[3])
                except ValueError:
                    raise ConfigError(lineno, f"unknown role {parts[3]!r}") from None
            elif head == "deadline":
                if len(parts) != 3:
                    raise ConfigError(lineno, "expected: deadline <NAME> <ticks>")
                name = parts[1].lower()
                if name not in KNOWN_DEADLINE_NAMES:
                    raise ConfigError(lineno, f"unknown deadline name {parts[1]!r}")
                value = int(parts[2])
                if value < 1:
                    raise ConfigError(lineno, "deadline must be >= 1 tick")
                deadline_overrides[name] = value
            elif head == "link":
                if len(parts) != 7 or parts[1] != "delay" or parts[3] != "jitter" or parts[5] != "seed":
                    raise ConfigError(lineno, "expected: link delay <t> jitter <t> seed <n>")
                link = LinkSpec(delay=int(parts[2]), jitter=int(parts[4]), seed=int(parts[6]))
                if link.delay < 0 or link.jitter < 0:
                    raise ConfigError(lineno, "delay and jitter must be >= 0")
            elif head == "inject":
                if len(parts) != 5 or parts[3] != "at":
                    raise ConfigError(lineno, "expected: inject <node> <kind> at <tick>")
                kind = parts[2]
                if kind not in FAULT_KINDS:
                    raise ConfigError(lineno, f"unknown fault kind {kind!r}")
                faults.append(FaultSpec(node=int(parts[1]), kind=kind, at=int(parts[4])))
            elif head == "drop":
                if len(parts) != 5:
                    raise ConfigError(lineno, "expected: drop <src> <dst> <from> <to>")
                drops.append(DropWindow(_node_spec(parts[1]), _node_spec(parts[2]),
                                        int(parts[3]), int(parts[4])))
            elif head == "spike":
                if len(parts) != 6:
                    raise ConfigError(lineno, "expected: spike <src> <dst> <from> <to> <extra>")
                spikes.append(DelaySpike(_node_spec(parts[1]), _node_spec(parts[2]),
                                         int(parts[3]), int(parts[4]), int(parts[5])))
            elif head == "duration":
                if len(parts) != 2:
                    raise ConfigError(lineno, "expected: duration <ticks>")
                duration = int(parts[1])
                if duration < 0:
                    raise ConfigError(lineno, "duration must be >= 0")
            else:
                raise ConfigError(lineno, f"unknown directive {head!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(lineno, f"bad integer: {exc}") from None

    if duration is None:
        raise ConfigError(0, "missing duration")
    managers = [n for n, r in roles.items() if r is NodeRole.MANAGER]
    if len(managers) != 1:
        raise ConfigError(0, f"exactly one manager required, found {len(managers)}")
    if not any(r is NodeRole.BACKUP for r in roles.values()):
        raise ConfigError(0, "at least one backup required")
    for f in faults:
        if f.node not in roles:
            raise ConfigError(0, f"inject targets unknown node {f.node}")

    return Scenario(
        roles=dict(sorted(roles.items())),
        deadlines=Deadlines().replace(**deadline_overrides),
        link=link,
        faults=faults,
        drops=drops,
        spikes=spikes,
        duration=duration,
    )


def load_config(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
