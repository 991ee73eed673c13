"""Core geometry and entity types."""

import math

import pytest

from proxysim.core import (
    CorruptStreamError,
    Pose2D,
    RobotProxy,
    TrackedFrame,
    Workspace,
    check_frames_monotonic,
    distance,
    tile_grid,
)


def test_pose_distance_and_direction():
    a = Pose2D(0.0, 0.0)
    b = Pose2D(3.0, 4.0)
    assert distance(a, b) == pytest.approx(5.0)
    assert a.direction_to(b) == pytest.approx(math.atan2(4.0, 3.0))


def test_pose_roundtrip():
    p = Pose2D(0.1, 0.2, 0.3)
    assert Pose2D.from_dict(p.as_dict()) == p


def test_pose_rejects_non_finite():
    with pytest.raises(ValueError):
        Pose2D(math.nan, 0.0)
    with pytest.raises(ValueError):
        Pose2D(0.0, math.inf)


def test_workspace_contains_and_clamp():
    ws = Workspace.tabletop(0.9, 0.9)
    assert ws.contains(Pose2D(0.45, 0.45))
    assert not ws.contains(Pose2D(1.0, 0.45))
    clamped = ws.clamp(Pose2D(2.0, -1.0))
    assert (clamped.x, clamped.y) == (0.9, 0.0)
    assert not ws.contains(Pose2D(0.02, 0.45), margin=0.05)


def test_tile_grid_geometry():
    anchors = tile_grid(0.9, 0.9)
    assert len(anchors) == 9
    names = [name for name, _ in anchors]
    assert len(set(names)) == 9
    xs = sorted({round(p.x, 6) for _, p in anchors})
    assert xs == [0.15, 0.45, 0.75]


def test_anchor_outside_workspace_rejected():
    with pytest.raises(ValueError):
        Workspace("tabletop", 0.5, 0.5, anchors=(("far", Pose2D(0.9, 0.9)),))


def test_nearest_anchor():
    ws = Workspace.tabletop(0.9, 0.9)
    name, pose = ws.nearest_anchor(Pose2D(0.16, 0.14))
    assert pose == ws.anchor(name)
    assert (pose.x, pose.y) == (0.15, 0.15)


def test_proxy_from_profile():
    p = RobotProxy.from_profile("p1", "A", "tabletop", Pose2D(0.1, 0.1))
    assert p.max_linear_speed == 0.25
    assert p.footprint_radius == 0.05
    with pytest.raises(KeyError):
        RobotProxy.from_profile("p2", "A", "hovercraft", Pose2D(0.1, 0.1))


def test_frames_monotonic_guard():
    seen = {}
    ok = [TrackedFrame("h", Pose2D(0, 0), 10), TrackedFrame("g", Pose2D(0, 0), 10)]
    check_frames_monotonic(ok, seen, 0, 10)
    assert seen == {"h": 10, "g": 10}
    with pytest.raises(CorruptStreamError):
        check_frames_monotonic([TrackedFrame("h", Pose2D(0, 0), 10)], seen, 10, 20)
    with pytest.raises(CorruptStreamError):
        check_frames_monotonic([TrackedFrame("h", Pose2D(0, 0), 25)], seen, 10, 20)
