"""Quasi-static peg transfer world with scored error events.

Grippers are kinematic points that go where the delayed slave command puts
them (clamped to the workspace box, silently). Rings are rubber o-rings that
rest on pegs or the ground, follow a holding gripper rigidly through a grip
offset captured at grasp time, and stretch when constrained at two points,
either by two grippers during a handoff or by a gripper pulling against a peg
the ring is still threaded on. Pull beyond the ring's free play is the lateral
force proxy that displaces and eventually topples pegs.

Simplifications, chosen to keep the dynamics deterministic and cheap: pegs
never move position (toppling is a state, not a trajectory), a held ring
passes through peg bodies without contact, and only grippers generate peg
touch events. Gravity appears solely as the falling -> on-ground transition
for released rings.

The state is an immutable value; step_world is a pure function from state and
commands to the next state, so a state can double as the observation sample
that rides through the observation delay line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import NamedTuple, Sequence

from .core import ConfigError, Jaw, Pose, Vec3


class ErrorKind(IntEnum):
    TOUCH_PEG = 0
    TOUCH_GROUND = 1
    STRETCH_HANDOFF_SHORT = 2
    DROP_RING = 3
    STRETCH_ON_PEG_SHORT = 4
    STRETCH_ADDITIONAL_SECOND = 5
    STRETCH_OR_MOVE_PEG = 6
    KNOCK_DOWN_PEG = 7


ERROR_WEIGHTS: dict[ErrorKind, int] = {
    ErrorKind.TOUCH_PEG: 1,
    ErrorKind.TOUCH_GROUND: 2,
    ErrorKind.STRETCH_HANDOFF_SHORT: 2,
    ErrorKind.DROP_RING: 3,
    ErrorKind.STRETCH_ON_PEG_SHORT: 4,
    ErrorKind.STRETCH_ADDITIONAL_SECOND: 4,
    ErrorKind.STRETCH_OR_MOVE_PEG: 10,
    ErrorKind.KNOCK_DOWN_PEG: 20,
}


class ErrorEvent(NamedTuple):
    tick: int
    kind: ErrorKind
    source: str

    @property
    def weight(self) -> int:
        return ERROR_WEIGHTS[self.kind]


def weighted_error(events: Sequence[ErrorEvent]) -> int:
    """Sum of penalty weights over a trial's events."""
    return sum(ERROR_WEIGHTS[e.kind] for e in events)


class RingKind(IntEnum):
    ON_PEG = 0
    HELD_LEFT = 1
    HELD_RIGHT = 2
    HELD_BOTH = 3
    FALLING = 4
    ON_GROUND = 5


HELD_SINGLE = (RingKind.HELD_LEFT, RingKind.HELD_RIGHT)

# (previous, next) ring transitions the mechanics may produce in one sub-step
LEGAL_RING_EDGES = frozenset({
    (RingKind.ON_PEG, RingKind.HELD_LEFT),
    (RingKind.ON_PEG, RingKind.HELD_RIGHT),
    (RingKind.ON_GROUND, RingKind.HELD_LEFT),
    (RingKind.ON_GROUND, RingKind.HELD_RIGHT),
    (RingKind.HELD_LEFT, RingKind.HELD_BOTH),
    (RingKind.HELD_RIGHT, RingKind.HELD_BOTH),
    (RingKind.HELD_BOTH, RingKind.HELD_LEFT),
    (RingKind.HELD_BOTH, RingKind.HELD_RIGHT),
    (RingKind.HELD_LEFT, RingKind.FALLING),
    (RingKind.HELD_RIGHT, RingKind.FALLING),
    (RingKind.HELD_LEFT, RingKind.ON_PEG),
    (RingKind.HELD_RIGHT, RingKind.ON_PEG),
    (RingKind.FALLING, RingKind.ON_GROUND),
})


class PegCondition(IntEnum):
    UPRIGHT = 0
    DISPLACED = 1
    KNOCKED_DOWN = 2


class GripperState(NamedTuple):
    pos: Vec3
    jaw: int
    held: int        # ring index, -1 when empty
    offset: Vec3     # ring center minus gripper position, captured at grasp


class RingSnap(NamedTuple):
    kind: int
    center: Vec3
    threaded: int            # peg index the ring is threaded on, -1 if free
    stretch: float
    stretch_ticks: int


class PegSnap(NamedTuple):
    condition: int
    pull: float              # current lateral force proxy in meters


class WorldState(NamedTuple):
    tick: int
    left: GripperState
    right: GripperState
    rings: tuple
    pegs: tuple
    touch_mask: int          # contact bits, see _touch_mask


@dataclass(frozen=True)
class RingSpec:
    name: str
    start_peg: int
    dest_peg: int


@dataclass(frozen=True)
class TaskGeometry:
    """Board and o-ring dimensions, all meters. Defaults match a desk-scale
    training board with a deliberately tight ring-to-peg fit."""

    peg_radius: float = 0.002
    peg_height: float = 0.010
    ring_inner_radius: float = 0.003
    grasp_radius: float = 0.004
    stretch_threshold: float = 0.002
    peg_move_threshold: float = 0.004
    peg_topple_threshold: float = 0.008
    ground_tolerance: float = 0.0005
    ring_rest_height: float = 0.002
    place_height_tolerance: float = 0.006
    unthread_margin: float = 0.001
    workspace_min: Vec3 = (0.0, 0.0, 0.0)
    workspace_max: Vec3 = (0.100, 0.100, 0.050)

    def __post_init__(self):
        for name in ("peg_radius", "peg_height", "ring_inner_radius", "grasp_radius",
                     "stretch_threshold", "peg_move_threshold", "peg_topple_threshold",
                     "ground_tolerance", "ring_rest_height", "place_height_tolerance",
                     "unthread_margin"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ConfigError(f"{name} must be finite and >= 0, got {v!r}")
        if self.ring_inner_radius <= self.peg_radius:
            raise ConfigError("ring inner radius must exceed peg radius")
        if self.peg_move_threshold > self.peg_topple_threshold:
            raise ConfigError("peg_move_threshold must not exceed peg_topple_threshold")
        if any(lo >= hi for lo, hi in zip(self.workspace_min, self.workspace_max)):
            raise ConfigError("workspace box is empty")

    @property
    def free_play(self) -> float:
        """Lateral slack of a threaded ring before the rubber engages."""
        return self.ring_inner_radius - self.peg_radius

    @property
    def handoff_span(self) -> float:
        """Gripper separation at which a doubly held ring starts to stretch."""
        return 2.0 * self.ring_inner_radius


@dataclass(frozen=True)
class WorldConfig:
    peg_centers: tuple          # peg top centers, Vec3 each
    rings: tuple                # RingSpec each
    geometry: TaskGeometry = field(default_factory=TaskGeometry)
    ticks_per_second: int = 1000
    left_home: Vec3 = (0.020, 0.050, 0.025)
    right_home: Vec3 = (0.080, 0.050, 0.025)

    def __post_init__(self):
        if len(self.peg_centers) < 1:
            raise ConfigError("need at least one peg")
        if self.ticks_per_second < 1:
            raise ConfigError("ticks_per_second must be >= 1")
        for spec in self.rings:
            if not (0 <= spec.start_peg < len(self.peg_centers)
                    and 0 <= spec.dest_peg < len(self.peg_centers)):
                raise ConfigError(f"ring {spec.name!r} references a missing peg")

    def peg_top_z(self, idx: int) -> float:
        return self.peg_centers[idx][2]

    def peg_base_z(self, idx: int) -> float:
        return self.peg_centers[idx][2] - self.geometry.peg_height

    @cached_property
    def _max_peg_top(self) -> float:
        return max(c[2] for c in self.peg_centers)


def initial_state(cfg: WorldConfig) -> WorldState:
    rings = tuple(
        RingSnap(
            RingKind.ON_PEG,
            (cfg.peg_centers[s.start_peg][0], cfg.peg_centers[s.start_peg][1],
             cfg.peg_base_z(s.start_peg) + cfg.geometry.ring_rest_height),
            s.start_peg, 0.0, 0,
        )
        for s in cfg.rings
    )
    pegs = tuple(PegSnap(PegCondition.UPRIGHT, 0.0) for _ in cfg.peg_centers)
    none = (0.0, 0.0, 0.0)
    state = WorldState(
        0,
        GripperState(cfg.left_home, Jaw.OPEN, -1, none),
        GripperState(cfg.right_home, Jaw.OPEN, -1, none),
        rings, pegs, 0,
    )
    return state._replace(touch_mask=_touch_mask(cfg, state))


def _clamp_box(p: Vec3, lo: Vec3, hi: Vec3) -> Vec3:
    x = lo[0] if p[0] < lo[0] else (hi[0] if p[0] > hi[0] else p[0])
    y = lo[1] if p[1] < lo[1] else (hi[1] if p[1] > hi[1] else p[1])
    z = lo[2] if p[2] < lo[2] else (hi[2] if p[2] > hi[2] else p[2])
    return (x, y, z)


def _touch_mask(cfg: WorldConfig, state: WorldState) -> int:
    """Contact bits: per gripper-peg pair, gripper-ground, held-ring-ground.

    Bit layout: [gripper(2) x peg(n)] then gripper-ground(2), then
    ring-ground per ring. Knocked-down pegs drop out of contact entirely.
    """
    geo = cfg.geometry
    pr2 = geo.peg_radius * geo.peg_radius
    npegs = len(cfg.peg_centers)
    mask = 0
    bit = 1
    for g in (state.left, state.right):
        gx, gy, gz = g.pos
        if gz >= cfg._max_peg_top:
            bit <<= npegs
            continue
        for idx, (px, py, pz) in enumerate(cfg.peg_centers):
            if state.pegs[idx].condition != PegCondition.KNOCKED_DOWN and gz < pz:
                dx = gx - px
                dy = gy - py
                if dx * dx + dy * dy < pr2:
                    mask |= bit
            bit <<= 1
    for g in (state.left, state.right):
        if g.pos[2] < geo.ground_tolerance:
            mask |= bit
        bit <<= 1
    for ring in state.rings:
        if ring.kind in (RingKind.HELD_LEFT, RingKind.HELD_RIGHT, RingKind.HELD_BOTH) \
                and ring.center[2] < geo.ground_tolerance:
            mask |= bit
        bit <<= 1
    return mask


def step_world(state: WorldState, cfg: WorldConfig, left_cmd: Pose, right_cmd: Pose,
               transitions: list | None = None):
    """Advance one tick under the given slave commands.

    Returns (next_state, events). transitions, when provided, collects every
    individual (ring_index, prev_kind, next_kind) edge for invariant checks.
    """
    geo = cfg.geometry
    tick = state.tick + 1

    lp = _clamp_box(left_cmd.position, geo.workspace_min, geo.workspace_max)
    rp = _clamp_box(right_cmd.position, geo.workspace_min, geo.workspace_max)

    # quiescent fast path: identical commands over a settled world change
    # nothing but the tick counter
    if (lp == state.left.pos and rp == state.right.pos
            and left_cmd.jaw == state.left.jaw and right_cmd.jaw == state.right.jaw):
        settled = True
        for r in state.rings:
            if (r.kind == RingKind.FALLING or r.stretch_ticks
                    or r.stretch > geo.stretch_threshold):
                settled = False
                break
        if settled:
            return state._replace(tick=tick), []

    left = GripperState(lp, left_cmd.jaw, state.left.held, state.left.offset)
    right = GripperState(rp, right_cmd.jaw, state.right.held, state.right.offset)

    rings = list(state.rings)
    pegs = list(state.pegs)

    def note(idx, before, after):
        if transitions is not None and before != after:
            transitions.append((idx, RingKind(before), RingKind(after)))

    # grasping, left arm first for determinism
    grippers = [left, right]
    for gi, arm_kind in ((0, RingKind.HELD_LEFT), (1, RingKind.HELD_RIGHT)):
        g = grippers[gi]
        if g.jaw != Jaw.CLOSED or g.held >= 0:
            continue
        gr2 = geo.grasp_radius * geo.grasp_radius
        best, best_d2 = -1, gr2
        for ri, ring in enumerate(rings):
            if ring.kind == RingKind.FALLING or ring.kind == RingKind.HELD_BOTH:
                continue
            if ring.kind in HELD_SINGLE and ring.kind == arm_kind:
                continue
            dx = ring.center[0] - g.pos[0]
            dy = ring.center[1] - g.pos[1]
            dz = ring.center[2] - g.pos[2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 <= best_d2:
                best, best_d2 = ri, d2
        if best >= 0:
            ring = rings[best]
            prev_kind = ring.kind
            new_kind = RingKind.HELD_BOTH if ring.kind in HELD_SINGLE else arm_kind
            rings[best] = ring._replace(kind=new_kind)
            offset = (ring.center[0] - g.pos[0], ring.center[1] - g.pos[1],
                      ring.center[2] - g.pos[2])
            grippers[gi] = g._replace(held=best, offset=offset)
            note(best, prev_kind, new_kind)

    # releasing
    for gi, arm_kind in ((0, RingKind.HELD_LEFT), (1, RingKind.HELD_RIGHT)):
        g = grippers[gi]
        if g.jaw != Jaw.OPEN or g.held < 0:
            continue
        ri = g.held
        ring = rings[ri]
        prev_kind = ring.kind
        grippers[gi] = g._replace(held=-1, offset=(0.0, 0.0, 0.0))
        if ring.kind == RingKind.HELD_BOTH:
            other = RingKind.HELD_RIGHT if arm_kind == RingKind.HELD_LEFT else RingKind.HELD_LEFT
            rings[ri] = ring._replace(kind=other)
            note(ri, prev_kind, other)
            continue
        # single holder let go: settle onto a peg if the ring is over one
        target_peg = -1
        cx, cy, cz = ring.center
        for pi, (px, py, pz) in enumerate(cfg.peg_centers):
            if pegs[pi].condition == PegCondition.KNOCKED_DOWN:
                continue
            dx = cx - px
            dy = cy - py
            if (dx * dx + dy * dy <= geo.free_play * geo.free_play
                    and cz <= pz + geo.place_height_tolerance):
                target_peg = pi
                break
        if target_peg >= 0:
            px, py, pz = cfg.peg_centers[target_peg]
            rings[ri] = RingSnap(
                RingKind.ON_PEG,
                (px, py, cfg.peg_base_z(target_peg) + geo.ring_rest_height),
                target_peg, 0.0, 0,
            )
            note(ri, prev_kind, RingKind.ON_PEG)
        else:
            rings[ri] = ring._replace(kind=RingKind.FALLING, threaded=-1,
                                      stretch=0.0, stretch_ticks=0)
            note(ri, prev_kind, RingKind.FALLING)

    left, right = grippers

    # held-ring kinematics, stretch, and peg force proxy
    for ri, ring in enumerate(rings):
        kind = ring.kind
        if kind == RingKind.FALLING:
            # rings dropped this very tick stay visibly falling for one tick
            if state.rings[ri].kind == RingKind.FALLING:
                rings[ri] = RingSnap(RingKind.ON_GROUND,
                                     (ring.center[0], ring.center[1], geo.ring_rest_height),
                                     -1, 0.0, 0)
                note(ri, RingKind.FALLING, RingKind.ON_GROUND)
            continue
        if kind not in (RingKind.HELD_LEFT, RingKind.HELD_RIGHT, RingKind.HELD_BOTH):
            if ring.stretch_ticks or ring.stretch:
                rings[ri] = ring._replace(stretch=0.0, stretch_ticks=0)
            continue

        if kind == RingKind.HELD_BOTH:
            lx = left.pos[0] + left.offset[0]
            ly = left.pos[1] + left.offset[1]
            lz = left.pos[2] + left.offset[2]
            rx = right.pos[0] + right.offset[0]
            ry = right.pos[1] + right.offset[1]
            rz = right.pos[2] + right.offset[2]
            desired = ((lx + rx) / 2.0, (ly + ry) / 2.0, (lz + rz) / 2.0)
            gdx = left.pos[0] - right.pos[0]
            gdy = left.pos[1] - right.pos[1]
            gdz = left.pos[2] - right.pos[2]
            span = math.sqrt(gdx * gdx + gdy * gdy + gdz * gdz)
            stretch = span - geo.handoff_span
            if stretch < 0.0:
                stretch = 0.0
        else:
            g = left if kind == RingKind.HELD_LEFT else right
            desired = (g.pos[0] + g.offset[0], g.pos[1] + g.offset[1], g.pos[2] + g.offset[2])
            stretch = 0.0

        threaded = ring.threaded
        center = desired
        if threaded >= 0:
            px, py, pz = cfg.peg_centers[threaded]
            if desired[2] > pz + geo.unthread_margin:
                threaded = -1
            else:
                dx = desired[0] - px
                dy = desired[1] - py
                dist = math.sqrt(dx * dx + dy * dy)
                pull = dist - geo.free_play
                if pull > 0.0:
                    peg = pegs[threaded]
                    if pull > geo.peg_topple_threshold:
                        # peg gives way, rubber lets go instantly
                        pegs[threaded] = PegSnap(PegCondition.KNOCKED_DOWN, pull)
                        threaded = -1
                    else:
                        scale = geo.free_play / dist
                        center = (px + dx * scale, py + dy * scale, desired[2])
                        if pull > stretch:
                            stretch = pull
                        cond = (PegCondition.DISPLACED if pull > geo.peg_move_threshold
                                else peg.condition)
                        if cond != peg.condition or pull != peg.pull:
                            pegs[threaded] = PegSnap(cond, pull)
                else:
                    if pegs[threaded].pull != 0.0:
                        pegs[threaded] = pegs[threaded]._replace(pull=0.0)
                floor = cfg.peg_base_z(threaded) + geo.ring_rest_height if threaded >= 0 else 0.0
                if threaded >= 0 and center[2] < floor:
                    center = (center[0], center[1], floor)
        if center[2] < 0.0:
            center = (center[0], center[1], 0.0)

        ticks = ring.stretch_ticks + 1 if stretch > geo.stretch_threshold else 0
        rings[ri] = RingSnap(kind, center, threaded, stretch, ticks)

    # pegs relax once their ring is no longer pulling
    for pi, peg in enumerate(pegs):
        if peg.pull != 0.0 and peg.condition != PegCondition.KNOCKED_DOWN:
            still_pulled = any(
                r.threaded == pi and r.stretch > 0.0
                and r.kind in (RingKind.HELD_LEFT, RingKind.HELD_RIGHT, RingKind.HELD_BOTH)
                for r in rings
            )
            if not still_pulled:
                pegs[pi] = peg._replace(pull=0.0)

    new_pegs = state.pegs
    for pi, peg in enumerate(pegs):
        if peg is not state.pegs[pi]:
            new_pegs = tuple(pegs)
            break
    next_state = WorldState(tick, left, right, tuple(rings), new_pegs, 0)
    next_state = next_state._replace(touch_mask=_touch_mask(cfg, next_state))
    return next_state, detect_errors(state, next_state, cfg)


def detect_errors(prev: WorldState, new: WorldState, cfg: WorldConfig) -> list[ErrorEvent]:
    """Score the transition between two adjacent states.

    All contact events are onset-edge triggered; stretch events follow the
    bucket rule: one short event when an episode ends at or before one second
    (emitted at the one second mark if it lasts that long), plus one
    additional-second event each time the running episode crosses a whole
    second boundary.
    """
    events: list[ErrorEvent] = []
    tick = new.tick
    tps = cfg.ticks_per_second

    rising = new.touch_mask & ~prev.touch_mask
    if rising:
        npegs = len(cfg.peg_centers)
        bit = 1
        for arm in ("left", "right"):
            for pi in range(npegs):
                if rising & bit:
                    events.append(ErrorEvent(tick, ErrorKind.TOUCH_PEG, f"{arm}/peg{pi}"))
                bit <<= 1
        for arm in ("left", "right"):
            if rising & bit:
                events.append(ErrorEvent(tick, ErrorKind.TOUCH_GROUND, arm))
            bit <<= 1
        for spec in cfg.rings:
            if rising & bit:
                events.append(ErrorEvent(tick, ErrorKind.TOUCH_GROUND, f"ring/{spec.name}"))
            bit <<= 1

    for ri, (rp, rn) in enumerate(zip(prev.rings, new.rings)):
        name = cfg.rings[ri].name
        if rn.kind == RingKind.FALLING and rp.kind != RingKind.FALLING:
            events.append(ErrorEvent(tick, ErrorKind.DROP_RING, f"ring/{name}"))
        ticks_now = rn.stretch_ticks
        ticks_prev = rp.stretch_ticks
        if ticks_now == tps:
            kind = (ErrorKind.STRETCH_HANDOFF_SHORT if rn.kind == RingKind.HELD_BOTH
                    else ErrorKind.STRETCH_ON_PEG_SHORT)
            events.append(ErrorEvent(tick, kind, f"ring/{name}"))
        elif ticks_now == 0 and 0 < ticks_prev < tps:
            kind = (ErrorKind.STRETCH_HANDOFF_SHORT if rp.kind == RingKind.HELD_BOTH
                    else ErrorKind.STRETCH_ON_PEG_SHORT)
            events.append(ErrorEvent(tick, kind, f"ring/{name}"))
        elif ticks_now > tps and (ticks_now - 1) % tps == 0:
            events.append(ErrorEvent(tick, ErrorKind.STRETCH_ADDITIONAL_SECOND, f"ring/{name}"))

    for pi, (pp, pn) in enumerate(zip(prev.pegs, new.pegs)):
        if pn.condition == PegCondition.KNOCKED_DOWN and pp.condition != PegCondition.KNOCKED_DOWN:
            events.append(ErrorEvent(tick, ErrorKind.KNOCK_DOWN_PEG, f"peg{pi}"))
        elif (pn.pull > cfg.geometry.peg_move_threshold
              >= pp.pull and pn.condition != PegCondition.KNOCKED_DOWN):
            events.append(ErrorEvent(tick, ErrorKind.STRETCH_OR_MOVE_PEG, f"peg{pi}"))

    return events


def task_complete(state: WorldState, cfg: WorldConfig) -> bool:
    """Every ring rests on its destination peg."""
    for spec, ring in zip(cfg.rings, state.rings):
        if ring.kind != RingKind.ON_PEG or ring.threaded != spec.dest_peg:
            return False
    return True


def ring_progress(state: WorldState, cfg: WorldConfig) -> tuple:
    """Per-ring completion flags, in ring declaration order."""
    return tuple(
        ring.kind == RingKind.ON_PEG and ring.threaded == spec.dest_peg
        for spec, ring in zip(cfg.rings, state.rings)
    )


class World:
    """Stateful convenience wrapper over the pure step function."""

    __slots__ = ("cfg", "state", "events")

    def __init__(self, cfg: WorldConfig):
        self.cfg = cfg
        self.state = initial_state(cfg)
        self.events: list[ErrorEvent] = []

    def step(self, left_cmd: Pose, right_cmd: Pose) -> list[ErrorEvent]:
        self.state, events = step_world(self.state, self.cfg, left_cmd, right_cmd)
        if events:
            self.events.extend(events)
        return events

    @property
    def complete(self) -> bool:
        return task_complete(self.state, self.cfg)

    @property
    def weighted_error(self) -> int:
        return weighted_error(self.events)
