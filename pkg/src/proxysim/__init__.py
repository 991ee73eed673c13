"""proxysim: a table-scale remote-presence simulator.

Virtual objects moved at one site are re-enacted by simulated robot proxies
at the others, behind a store-and-forward relay and a fixed artificial
latency that hides robot travel time.  Everything runs on a deterministic
10 ms tick; two runs of the same scenario produce byte-identical digests.
"""

from proxysim.core import (
    TICK_MS,
    KinematicProfile,
    Pose2D,
    RobotProxy,
    TrackedFrame,
    VirtualObject,
    Workspace,
    distance,
)
from proxysim.gesture import GestureEvent, GestureStream, resolve_target
from proxysim.kernel import BACKEND as KERNEL_BACKEND
from proxysim.mapping import MappingBinding, MappingEngine
from proxysim.metrics import MoveRecord, RunMetrics, load_metrics_json
from proxysim.motion import (
    DeadlineInfeasible,
    MotionPlan,
    RouteBlocked,
    plan_path,
    plan_timings,
)
from proxysim.relay import (
    ClientRegistration,
    InProcRelay,
    RelayCore,
    RelayMessage,
)
from proxysim.retarget import DelayBuffer, RetargetScheduler, VelocityEstimator
from proxysim.runner import RunResult, ScenarioRunner, run_scenario, sweep
from proxysim.scripts import (
    BUILTIN_SCRIPTS,
    ScenarioScript,
    ScriptError,
    builtin_script,
    load_script,
    save_script,
)
from proxysim.world import World

__version__ = "0.1.0"

__all__ = [
    "TICK_MS",
    "KERNEL_BACKEND",
    "Pose2D",
    "TrackedFrame",
    "KinematicProfile",
    "Workspace",
    "VirtualObject",
    "RobotProxy",
    "distance",
    "RelayMessage",
    "ClientRegistration",
    "RelayCore",
    "InProcRelay",
    "MappingBinding",
    "MappingEngine",
    "MotionPlan",
    "DeadlineInfeasible",
    "RouteBlocked",
    "plan_path",
    "plan_timings",
    "DelayBuffer",
    "VelocityEstimator",
    "RetargetScheduler",
    "GestureStream",
    "GestureEvent",
    "resolve_target",
    "World",
    "ScenarioScript",
    "ScriptError",
    "BUILTIN_SCRIPTS",
    "builtin_script",
    "load_script",
    "save_script",
    "ScenarioRunner",
    "RunResult",
    "run_scenario",
    "sweep",
    "MoveRecord",
    "RunMetrics",
    "load_metrics_json",
    "__version__",
]
