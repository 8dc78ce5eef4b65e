"""Closed tick loop: master commands through scaling and delay into the
world, world snapshots through the observation delay back out.

Both directions use the same one-way sample count, so a master motion first
becomes visible in the observed snapshot a full round trip after it was
issued. Delay lines are seeded with the rest pose / initial world state so
the very first commands already experience the full latency instead of a
warm-up shortcut.

The session is deterministic and RNG-free; randomness belongs to operators.
"""

from __future__ import annotations

from .core import DelayLine, Pose, master_to_target
from .plane import PlaneContext
from .scaling import (
    ConstantScaling,
    PositionalScaling,
    VelocityFilter,
    VelocityScaling,
    apply_positional,
    positional_scale,
    velocity_scale,
)
from .scenario import Scenario
from .world import World, WorldState

_CONSTANT, _POSITIONAL, _VELOCITY = 0, 1, 2


class ArmChannel:
    """Per-arm scaling state and command delay line."""

    __slots__ = ("mode", "cfg", "fs_hz", "plane", "m_prev", "target", "line",
                 "delayed_prev", "slave", "vel")

    def __init__(self, scaling, clock, plane: PlaneContext | None, home: Pose):
        if isinstance(scaling, ConstantScaling):
            self.mode = _CONSTANT
        elif isinstance(scaling, PositionalScaling):
            self.mode = _POSITIONAL
            if plane is None:
                raise ValueError("positional scaling needs a fitted plane")
        elif isinstance(scaling, VelocityScaling):
            self.mode = _VELOCITY
        else:
            raise ValueError(f"unknown scaling config {scaling!r}")
        self.cfg = scaling
        self.fs_hz = clock.fs_hz
        self.plane = plane
        self.m_prev = home
        self.target = home
        self.line = DelayLine(clock.one_way_samples)
        self.line.push(home)
        self.delayed_prev = home
        self.slave = home
        self.vel = VelocityFilter()

    def advance(self, m_now: Pose) -> Pose:
        """One tick: master pose in, slave command out (delayed + scaled)."""
        mode = self.mode
        if mode == _CONSTANT:
            scale_m = self.cfg.scale
        elif mode == _VELOCITY:
            self.vel.push(m_now.position)
            scale_m = velocity_scale(self.vel.history(), self.cfg, self.fs_hz)
        else:
            scale_m = self.cfg.scale_m
        target = master_to_target(m_now, self.m_prev, scale_m, self.target)
        self.m_prev = m_now
        self.target = target
        delayed = self.line.push(target)
        if mode == _POSITIONAL:
            scale_s = positional_scale(self.plane.distance(self.slave.position), self.cfg)
            slave = apply_positional(delayed, self.delayed_prev, self.slave, scale_s)
        else:
            slave = delayed
        self.delayed_prev = delayed
        self.slave = slave
        return slave


class TeleopSession:
    """World plus both arm channels plus the observation return path."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.clock = scenario.clock()
        self.world = World(scenario.world_config())
        plane = None
        if isinstance(scenario.scaling, PositionalScaling):
            plane = PlaneContext(scenario.peg_centers, scenario.scaling)
        self.plane = plane
        left_home = Pose(scenario.left_home)
        right_home = Pose(scenario.right_home)
        self.left = ArmChannel(scenario.scaling, self.clock, plane, left_home)
        self.right = ArmChannel(scenario.scaling, self.clock, plane, right_home)
        self.obs_line = DelayLine(self.clock.one_way_samples)
        self.observed: WorldState = self.obs_line.push(self.world.state)

    def step(self, left_master: Pose, right_master: Pose):
        """Advance one tick; returns (observed snapshot, true events this tick)."""
        left_cmd = self.left.advance(left_master)
        right_cmd = self.right.advance(right_master)
        events = self.world.step(left_cmd, right_cmd)
        self.observed = self.obs_line.push(self.world.state)
        return self.observed, events

    @property
    def tick(self) -> int:
        return self.world.state.tick

    @property
    def sim_time(self) -> float:
        return self.world.state.tick * self.clock.dt

    @property
    def complete(self) -> bool:
        return self.world.complete

    @property
    def weighted_error(self) -> int:
        return self.world.weighted_error
