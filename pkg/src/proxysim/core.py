"""Shared domain types: poses, tracked frames, workspaces, objects, proxies.

Spatial units are meters and radians; time is integer milliseconds on a
session-relative clock. Headings are always normalized to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from proxysim.kernel import planar_distance, wrap_angle

# Simulation defaults. The tick is fine enough that per-tick motion stays
# well below the arrival tolerance at tabletop speeds.
TICK_MS = 10
ARRIVAL_EPS_M = 0.01
HEADING_EPS_RAD = 0.1
DEFAULT_HAND_SPEED = 0.3  # m/s, synthesized user motion
DEFAULT_ARTIFICIAL_LATENCY_MS = 1500

PROXY_STATES = ("idle", "repositioning", "engaged")


class CorruptStreamError(ValueError):
    """A tracked-frame stream regressed in time for one subject."""


@dataclass(frozen=True)
class Pose2D:
    """Planar position plus heading; heading is normalized on construction."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.x)
            and math.isfinite(self.y)
            and math.isfinite(self.heading)
        ):
            raise ValueError(
                f"non-finite pose ({self.x}, {self.y}, {self.heading})"
            )
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    def distance_to(self, other: "Pose2D") -> float:
        return planar_distance(self.x, self.y, other.x, other.y)

    def direction_to(self, other: "Pose2D") -> float:
        """Bearing from this pose to the other, in radians."""
        return math.atan2(other.y - self.y, other.x - self.x)

    def with_heading(self, heading: float) -> "Pose2D":
        return Pose2D(self.x, self.y, heading)

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "heading": self.heading}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose2D":
        return cls(d["x"], d["y"], d.get("heading", 0.0))


def distance(a: Pose2D, b: Pose2D) -> float:
    """Euclidean distance over (x, y); headings are ignored."""
    return planar_distance(a.x, a.y, b.x, b.y)


@dataclass(frozen=True)
class TrackedFrame:
    """One tracking sample for a rigid body (wrist, object, proxy)."""

    subject_id: str
    pose: Pose2D
    timestamp: int  # ms since session start

    def as_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "pose": self.pose.as_dict(),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrackedFrame":
        return cls(d["subject_id"], Pose2D.from_dict(d["pose"]), d["timestamp"])


@dataclass(frozen=True)
class KinematicProfile:
    name: str
    max_linear_speed: float  # m/s
    max_angular_speed: float  # rad/s
    footprint_radius: float  # m

    def __post_init__(self) -> None:
        if min(self.max_linear_speed, self.max_angular_speed, self.footprint_radius) <= 0:
            raise ValueError(f"profile {self.name}: all limits must be positive")


# Default speed/size profiles for the two robot classes. Chosen so the
# 1.5 s latency budget is satisfiable on the default 0.9 m table.
PROFILES = {
    "tabletop": KinematicProfile("tabletop", 0.25, math.pi, 0.05),
    "floor": KinematicProfile("floor", 0.3, math.pi / 2, 0.2),
}


@dataclass(frozen=True)
class Workspace:
    """A bounded planar surface with optional named snap anchors."""

    kind: str  # "tabletop" | "floor"
    width: float
    depth: float
    anchors: tuple = ()  # ((name, Pose2D), ...)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.depth <= 0:
            raise ValueError("workspace dimensions must be positive")
        for name, pose in self.anchors:
            if not self.contains(pose):
                raise ValueError(f"anchor {name} lies outside the workspace")

    def contains(self, pose: Pose2D, margin: float = 0.0) -> bool:
        return (
            margin <= pose.x <= self.width - margin
            and margin <= pose.y <= self.depth - margin
        )

    def clamp(self, pose: Pose2D, margin: float = 0.0) -> Pose2D:
        x = min(max(pose.x, margin), self.width - margin)
        y = min(max(pose.y, margin), self.depth - margin)
        return Pose2D(x, y, pose.heading)

    def anchor(self, name: str) -> Pose2D:
        for n, pose in self.anchors:
            if n == name:
                return pose
        raise KeyError(name)

    def anchor_poses(self) -> list:
        return [pose for _, pose in self.anchors]

    def nearest_anchor(self, pose: Pose2D) -> Optional[tuple]:
        """(name, pose) of the closest anchor; ties break on name."""
        if not self.anchors:
            return None
        return min(self.anchors, key=lambda item: (distance(item[1], pose), item[0]))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "width": self.width,
            "depth": self.depth,
            "anchors": {name: pose.as_dict() for name, pose in self.anchors},
        }

    @classmethod
    def tabletop(cls, width: float = 0.9, depth: float = 0.9) -> "Workspace":
        """Default table: a 3x3 tile grid, tiles numbered row-major with
        tile-1..3 on the far row (small y) and tile-7..9 nearest the user."""
        return cls("tabletop", width, depth, anchors=tile_grid(width, depth))

    @classmethod
    def floor(cls, width: float = 4.0, depth: float = 4.0) -> "Workspace":
        return cls("floor", width, depth, anchors=())


def tile_grid(width: float, depth: float, n: int = 3) -> tuple:
    """Anchor grid of n*n tile centers, named tile-1..tile-(n*n) row-major."""
    anchors = []
    for row in range(n):
        for col in range(n):
            k = 1 + row * n + col
            pose = Pose2D((col + 0.5) * width / n, (row + 0.5) * depth / n)
            anchors.append((f"tile-{k}", pose))
    return tuple(anchors)


@dataclass
class VirtualObject:
    """An object in the shared virtual scene."""

    id: str
    pose: Pose2D
    visual_kind: str = "tile-marker"  # mug | building | controller | wall | tile-marker
    held_by: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "pose": self.pose.as_dict(),
            "visual_kind": self.visual_kind,
            "held_by": self.held_by,
        }


@dataclass
class RobotProxy:
    """A wheeled robot at one site; the physical layer the user never sees."""

    id: str
    site: str
    profile: str
    pose: Pose2D
    max_linear_speed: float
    max_angular_speed: float
    footprint_radius: float
    state: str = "idle"
    carried: bool = False  # pose follows the user's hand; not self-propelled

    def __post_init__(self) -> None:
        if self.max_linear_speed <= 0 or self.max_angular_speed <= 0:
            raise ValueError(f"proxy {self.id}: speed limits must be positive")
        if self.state not in PROXY_STATES:
            raise ValueError(f"proxy {self.id}: unknown state {self.state!r}")

    @classmethod
    def from_profile(
        cls, id: str, site: str, profile: str, pose: Pose2D, **overrides
    ) -> "RobotProxy":
        p = PROFILES[profile]
        kwargs = dict(
            max_linear_speed=p.max_linear_speed,
            max_angular_speed=p.max_angular_speed,
            footprint_radius=p.footprint_radius,
        )
        kwargs.update(overrides)
        return cls(id=id, site=site, profile=profile, pose=pose, **kwargs)

    def as_dict(self) -> dict:
        return {
            "site": self.site,
            "profile": self.profile,
            "pose": self.pose.as_dict(),
            "max_linear_speed": self.max_linear_speed,
            "max_angular_speed": self.max_angular_speed,
            "footprint_radius": self.footprint_radius,
            "state": self.state,
            "carried": self.carried,
        }


def check_frames_monotonic(
    frames: Iterable[TrackedFrame], last_seen: dict, lo: int, hi: int
) -> None:
    """Validate a frame batch: timestamps in (lo, hi] and strictly increasing
    per subject. Raises CorruptStreamError and leaves ``last_seen`` updated
    only for accepted frames."""
    for f in frames:
        if not (lo < f.timestamp <= hi):
            raise CorruptStreamError(
                f"frame for {f.subject_id} at {f.timestamp} outside ({lo}, {hi}]"
            )
        prev = last_seen.get(f.subject_id)
        if prev is not None and f.timestamp <= prev:
            raise CorruptStreamError(
                f"non-monotonic timestamp for {f.subject_id}: {f.timestamp} <= {prev}"
            )
        last_seen[f.subject_id] = f.timestamp
