"""Time-out list management, failure detectors, and the DIR net on a
deterministic simulated network."""

from .core import (
    ActionDescriptor,
    Message,
    Timeout,
    TimeoutId,
    TimeoutList,
    declare,
    set_action,
    set_deadline,
)
from .detector import Detector, I_AM_ALIVE, REPEAT_TASK1, REPEAT_TASK2, SUSPECT, TRUST
from .dirnet import Deadlines, DirxProcess, FaultSpec, IafPort, IatProcess, NodeRole, elect
from .errors import (
    ClockRegression,
    Closed,
    ConfigError,
    DuplicateId,
    EmptyCandidateSet,
    NotFound,
    TomError,
    UnknownNode,
    UnknownSender,
    ZeroDeadline,
)
from .config import LinkSpec, Scenario, load_config, parse_config
from .manager import (
    OK,
    AlarmPool,
    LiveRunner,
    Reply,
    TomHandle,
    TomManager,
    WallClock,
    tom_close,
    tom_delete,
    tom_disable,
    tom_enable,
    tom_init,
    tom_insert,
    tom_renew,
    tom_set_action,
)
from .runner import DetectorSim, DirnetSim, ReplayResult, replay_figure
from .simnet import (
    BROADCAST,
    DelaySpike,
    DropWindow,
    LinkModel,
    Network,
    SimEvent,
    VirtualClock,
    broadcast,
    send,
)
from .trace import Trace, read_jsonl

__all__ = [name for name in dir() if not name.startswith("_")]
