"""Synthetic operators that close the loop on delayed observations.

Both operators share the same task plan: per ring, the carrier arm picks the
ring off its start peg, lifts clear, carries it to a meeting point where the
receiver arm grips it from the opposite side, the carrier lets go, and the
receiver places it on the destination peg. Stage switching keys off the
OBSERVED (delayed) snapshot, never ground truth, and grip/release commits
are issued the moment the observed pose crosses tolerance, so every decision
acts on stale information. The slave-side consequence of that staleness is
whatever the active scaling strategy makes of it; that is the mechanism the
study measures.

The pursuit operator is a continuous tracker with human-like master-space
habits. Hand speed per decision is the smallest of three terms: a comfort
cap for the phase, a perceived-tool-speed budget divided by the largest
responsiveness felt recently (nobody keeps flicking a twitchy tool), and a
time-to-go term that closes the seen error over a fixed horizon. The budget
and horizon adapt to what the tool has been doing, but the comfort caps and
the noise floor never divide by the active scale, so a smaller scale yields
a slower, steadier slave. The move-and-wait operator issues bounded
open-loop bursts and holds exactly still for a full round trip before
looking again, the classic stable-under-delay strategy; it is modeled
noise-free because holding still is the whole point of it.

The pursuit hand is not steady. Its noise is a seeded sum of three slow
sinusoids per axis (postural drift), sampled as per-tick Gaussian
increments with the configured positional deviation. White per-tick increments would alias through the
four-sample velocity filter into enormous speed estimates at kilohertz
rates; real hand instability is band-limited, so the noise model is too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from random import Random

from .core import ConfigError, DelayLine, Jaw, Pose, Vec3
from .scenario import Scenario
from .world import RingKind, WorldState


@dataclass(frozen=True)
class OperatorParams:
    """Shared behavioral tuning; lengths meters, speeds m/s, times seconds."""

    noise_std: float = 0.0003
    tremor_low_hz: float = 0.03
    tremor_high_hz: float = 0.10
    reaction_delay_s: float = 0.15

    horizon_min_s: float = 0.8       # time-to-go: close seen error over this span,
    horizon_blind_mult: float = 2.8  # stretched under delay to stay convergent
    precise_patience_s: float = 0.55  # fine-work closing pace, felt in hand space
    transit_cap: float = 0.045       # master-space comfort limits by movement class
    approach_cap: float = 0.012
    approach_floor: float = 0.004    # guided descents never dawdle below this
    precise_cap: float = 0.0006
    transit_budget: float = 0.050    # perceived slave-speed comfort by class
    approach_budget: float = 0.008
    precise_budget: float = 0.0022
    arrive_transit: float = 0.012    # seen speed must drop below this to arrive
    arrive_precise: float = 0.0035
    decision_stride: int = 8         # ticks between replans; ~125 Hz

    coarse_tol: float = 0.004        # arrival tolerances on the seen tool tip
    fine_tol: float = 0.00028
    place_tol: float = 0.0009        # seen ring-to-axis misalignment allowed at release

    hover_z: float = 0.013
    lift_z: float = 0.022
    predrop: float = 0.0010          # fast descent ends this far above the grasp point
    grasp_depth: float = 0.0016     # grasp this far below the ring center
    approach_offset: float = 0.0035  # lateral grasp offset, toward the board center
    receive_offset: float = 0.0028   # receiver approaches from the opposite side
    place_height: float = 0.001      # ring bottom clearance over the peg top at release
    refine_radius: float = 0.002     # precise moves start this far from the point

    confirm_patience_s: float = 2.5  # wait for a grip/release to show up on screen
    burst_len: float = 0.012         # move-and-wait: master-space burst bound
    wait_margin_s: float = 0.25      # move-and-wait: settle beyond round trip + reaction


def params_from_config(config: dict) -> OperatorParams:
    cfg = dict(config)
    kind = cfg.pop("kind")
    known = {f.name for f in fields(OperatorParams)}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"operator ({kind}): unknown keys {sorted(unknown)}")
    try:
        params = OperatorParams(**cfg)
    except TypeError as exc:
        raise ConfigError(f"operator ({kind}): {exc}") from None
    if params.noise_std < 0 or params.reaction_delay_s < 0:
        raise ConfigError("operator noise and reaction delay must be >= 0")
    if not (0 < params.tremor_low_hz <= params.tremor_high_hz):
        raise ConfigError("tremor band must satisfy 0 < low <= high")
    if params.horizon_min_s <= 0 or params.horizon_blind_mult <= 0:
        raise ConfigError("horizon parameters must be > 0")
    if params.decision_stride < 1:
        raise ConfigError("decision stride must be >= 1")
    return params


class TremorNoise:
    """Band-limited positional wander, one instance per arm.

    Three sinusoids per axis with seeded Gaussian amplitudes summing to the
    requested standard deviation; delta(tick) returns the per-tick increment.
    Increments are evaluated lazily in blocks to keep the hot loop cheap.
    """

    _BLOCK = 4096

    __slots__ = ("_parts", "_dt", "_zero", "_block_start", "_deltas")

    def __init__(self, rng: Random, params: OperatorParams, dt: float):
        self._parts = []
        sigma = params.noise_std * math.sqrt(2.0 / 3.0)
        for _axis in range(3):
            comps = []
            for _ in range(3):
                amp = rng.gauss(0.0, sigma)
                freq = rng.uniform(params.tremor_low_hz, params.tremor_high_hz)
                phase = rng.uniform(0.0, 2.0 * math.pi)
                comps.append((amp, 2.0 * math.pi * freq, phase))
            self._parts.append(comps)
        self._dt = dt
        self._zero = params.noise_std == 0.0
        self._block_start = -(self._BLOCK + 1)
        self._deltas: list[Vec3] = []

    def _value(self, t: float) -> tuple[float, float, float]:
        out = []
        for comps in self._parts:
            v = 0.0
            for amp, w, phase in comps:
                v += amp * math.sin(w * t + phase)
            out.append(v)
        return out[0], out[1], out[2]

    def _fill(self, start: int):
        dt = self._dt
        prev = self._value((start - 1) * dt)
        deltas = []
        for i in range(self._BLOCK):
            now = self._value((start + i) * dt)
            deltas.append((now[0] - prev[0], now[1] - prev[1], now[2] - prev[2]))
            prev = now
        self._block_start = start
        self._deltas = deltas

    def delta(self, tick: int) -> Vec3:
        if self._zero:
            return (0.0, 0.0, 0.0)
        off = tick - self._block_start
        if not 0 <= off < self._BLOCK:
            self._fill(tick)
            off = 0
        return self._deltas[off]


# per-ring job stages, in order
_S_HOVER, _S_DESCEND, _S_GRIP, _S_LIFT, _S_CARRY, _S_ALIGN, _S_RECV_GRIP, \
    _S_HANDOFF, _S_CARRY_DEST, _S_PLACE, _S_RELEASE = range(11)

# movement classes; the first three each keep their own felt-responsiveness
# slot because a nonlinear mapping behaves differently at every pace
_PHASE_TRANSIT = 0
_PHASE_PRECISE = 1
_PHASE_APPROACH = 2
_PHASE_HOLD = 3


class _ArmGoal:
    __slots__ = ("target", "jaw", "phase")

    def __init__(self, target: Vec3, jaw: int, phase: int):
        self.target = target
        self.jaw = jaw
        self.phase = phase


class PlanExecutor:
    """Reactive stage machine producing per-arm goals from observed state.

    Rings are transferred one at a time in declaration order. The carrier is
    the arm whose home is nearer the ring's start peg. Recovery from a drop
    re-enters the grasp stages with the arm that should have been holding on
    and resumes the carry; a ring seen resting on a wrong peg is handled the
    same way.

    Arrivals are gated on the seen tool being both inside tolerance and
    slow, on two consecutive looks. Without the speed gate a delayed replay
    of a fast flight sweeping through the target region would fire the
    switch while the true tool is somewhere else entirely.
    """

    def __init__(self, scenario: Scenario, params: OperatorParams):
        self.scenario = scenario
        self.params = params
        self.fs = scenario.fs_hz
        self.board_center = (
            sum(p[0] for p in scenario.peg_centers) / len(scenario.peg_centers),
            sum(p[1] for p in scenario.peg_centers) / len(scenario.peg_centers),
        )
        self.job = 0
        self.stage = _S_HOVER
        self.carrier = self._carrier_for(0)
        self.stage_ticks = 0
        self.grip_offset: Vec3 = (0.0, 0.0, 0.0)
        self._committed_jaw = [Jaw.OPEN, Jaw.OPEN]
        self._prev_pos: list[Vec3 | None] = [None, None]
        self.seen_speed = [0.0, 0.0]
        self._hits = 0

    def _carrier_for(self, job: int) -> int:
        if job >= len(self.scenario.rings):
            return 0
        start = self.scenario.peg_centers[self.scenario.rings[job].start_peg]
        dl = math.dist(self.scenario.left_home[:2], start[:2])
        dr = math.dist(self.scenario.right_home[:2], start[:2])
        return 0 if dl <= dr else 1

    def _approach_vec(self, near: Vec3, magnitude: float) -> Vec3:
        """Horizontal offset pointing from near toward the board center."""
        dx = self.board_center[0] - near[0]
        dy = self.board_center[1] - near[1]
        d = math.hypot(dx, dy)
        if d < 1e-9:
            return (magnitude, 0.0, 0.0)
        return (dx / d * magnitude, dy / d * magnitude, 0.0)

    def _grasp_point(self, ring_center: Vec3) -> Vec3:
        off = self._approach_vec(ring_center, self.params.approach_offset)
        return (ring_center[0] + off[0], ring_center[1] + off[1],
                max(ring_center[2] - self.params.grasp_depth, 0.0))

    def _stage_point(self, arm: int) -> Vec3:
        """Receiver's waiting spot beside the handoff point."""
        home = self.scenario.left_home if arm == 0 else self.scenario.right_home
        off = self._approach_vec(home, -self.params.receive_offset * 3)
        return (self.board_center[0] + off[0], self.board_center[1] + off[1],
                self.params.lift_z)

    def done(self) -> bool:
        return self.job >= len(self.scenario.rings)

    def _advance(self, stage: int):
        self.stage = stage
        self.stage_ticks = 0
        self._hits = 0

    def _arrived(self, arm: int, pos: Vec3, target: Vec3, tol: float,
                 speed_limit: float) -> bool:
        dx = pos[0] - target[0]
        dy = pos[1] - target[1]
        dz = pos[2] - target[2]
        ok = (dx * dx + dy * dy + dz * dz <= tol * tol
              and self.seen_speed[arm] <= speed_limit)
        self._hits = self._hits + 1 if ok else 0
        return self._hits >= 2

    def goals(self, observed: WorldState):
        """Observed snapshot -> [left goal, right goal]."""
        sc = self.scenario
        p = self.params
        self.stage_ticks += p.decision_stride

        grippers = (observed.left, observed.right)
        for arm in (0, 1):
            prev = self._prev_pos[arm]
            if prev is not None:
                self.seen_speed[arm] = (math.dist(grippers[arm].pos, prev)
                                        * self.fs / p.decision_stride)
            self._prev_pos[arm] = grippers[arm].pos

        homes = (sc.left_home, sc.right_home)
        goals = [
            _ArmGoal(homes[0], self._committed_jaw[0], _PHASE_TRANSIT),
            _ArmGoal(homes[1], self._committed_jaw[1], _PHASE_TRANSIT),
        ]
        if self.job >= len(sc.rings):
            self._committed_jaw = [Jaw.OPEN, Jaw.OPEN]
            goals[0].jaw = goals[1].jaw = Jaw.OPEN
            return goals

        spec = sc.rings[self.job]
        ring = observed.rings[self.job]
        dest = sc.peg_centers[spec.dest_peg]
        carrier = self.carrier
        receiver = 1 - carrier
        car = goals[carrier]
        rec = goals[receiver]
        stage = self.stage

        # ring resting on the destination peg: job complete regardless of stage
        if ring.kind == RingKind.ON_PEG and ring.threaded == spec.dest_peg:
            self._committed_jaw = [Jaw.OPEN, Jaw.OPEN]
            self.job += 1
            self.carrier = self._carrier_for(self.job)
            self._advance(_S_HOVER)
            return self.goals(observed)

        # drop recovery: whoever should have been holding goes back to fetch
        if stage not in (_S_HOVER, _S_DESCEND, _S_GRIP) and ring.kind in (
                RingKind.ON_GROUND, RingKind.ON_PEG):
            owner = carrier if stage <= _S_HANDOFF else receiver
            self.carrier = owner
            self._committed_jaw = [Jaw.OPEN, Jaw.OPEN]
            self._advance(_S_HOVER)
            return self.goals(observed)

        if stage == _S_HOVER:
            gp = self._grasp_point(ring.center)
            car.target = (gp[0], gp[1], p.hover_z)
            self._set_jaw(carrier, Jaw.OPEN)
            if self._arrived(carrier, grippers[carrier].pos, car.target,
                             p.coarse_tol, p.arrive_transit):
                self._advance(_S_DESCEND)
        elif stage == _S_DESCEND:
            gp = self._grasp_point(ring.center)
            seen_z = grippers[carrier].pos[2]
            if seen_z > gp[2] + p.predrop + p.fine_tol:
                car.target = (gp[0], gp[1], gp[2] + p.predrop)
                car.phase = _PHASE_APPROACH
            else:
                car.target = gp
                car.phase = _PHASE_PRECISE
                if self._arrived(carrier, grippers[carrier].pos, gp,
                                 p.fine_tol, p.arrive_precise):
                    self._set_jaw(carrier, Jaw.CLOSED)
                    self._advance(_S_GRIP)
        elif stage == _S_GRIP:
            car.target = self._grasp_point(ring.center)
            car.phase = _PHASE_HOLD
            if self._held_by(ring.kind, carrier):
                self.grip_offset = self._offset(grippers[carrier].pos, ring.center)
                self._advance(_S_LIFT)
            elif self._patience_expired():
                self._set_jaw(carrier, Jaw.OPEN)
                self._advance(_S_HOVER)
        elif stage == _S_LIFT:
            # climb straight off the peg axis, correcting toward it laterally
            start = sc.peg_centers[spec.start_peg]
            off = self.grip_offset
            car.target = (start[0] + off[0], start[1] + off[1], p.lift_z)
            rec.target = self._stage_point(receiver)
            if ring.center[2] > sc.geometry.peg_height + sc.geometry.ring_inner_radius:
                self._advance(_S_CARRY)
        elif stage == _S_CARRY:
            off = self.grip_offset
            car.target = (self.board_center[0] + off[0],
                          self.board_center[1] + off[1], p.lift_z + off[2])
            rec.target = self._stage_point(receiver)
            if self._arrived(carrier, grippers[carrier].pos, car.target,
                             p.coarse_tol, p.arrive_transit):
                self._advance(_S_ALIGN)
        elif stage == _S_ALIGN:
            off = self.grip_offset
            car.target = (self.board_center[0] + off[0],
                          self.board_center[1] + off[1], p.lift_z + off[2])
            car.phase = _PHASE_HOLD
            rev = self._approach_vec(ring.center, -p.receive_offset)
            rec.target = (ring.center[0] + rev[0], ring.center[1] + rev[1],
                          ring.center[2])
            gap = math.dist(grippers[receiver].pos, rec.target)
            rec.phase = _PHASE_APPROACH if gap > p.refine_radius else _PHASE_PRECISE
            if self._arrived(receiver, grippers[receiver].pos, rec.target,
                             p.fine_tol, p.arrive_precise):
                self._set_jaw(receiver, Jaw.CLOSED)
                self._advance(_S_RECV_GRIP)
        elif stage == _S_RECV_GRIP:
            car.phase = _PHASE_HOLD
            rec.phase = _PHASE_HOLD
            if ring.kind == RingKind.HELD_BOTH:
                self._set_jaw(carrier, Jaw.OPEN)
                self._advance(_S_HANDOFF)
            elif self._patience_expired():
                self._set_jaw(receiver, Jaw.OPEN)
                self._advance(_S_ALIGN)
        elif stage == _S_HANDOFF:
            car.phase = _PHASE_HOLD
            rec.phase = _PHASE_HOLD
            if self._held_by(ring.kind, receiver):
                self.grip_offset = self._offset(grippers[receiver].pos, ring.center)
                self._advance(_S_CARRY_DEST)
            elif self._patience_expired():
                self._set_jaw(carrier, Jaw.CLOSED)
                self._advance(_S_RECV_GRIP)
        else:
            off = self.grip_offset
            ring_goal_z = dest[2] + p.place_height + sc.geometry.ring_rest_height
            car.target = homes[carrier]
            if stage == _S_CARRY_DEST:
                rec.target = (dest[0] + off[0], dest[1] + off[1], p.lift_z + off[2])
                if self._arrived(receiver, grippers[receiver].pos, rec.target,
                                 p.coarse_tol, p.arrive_transit):
                    self._advance(_S_PLACE)
            elif stage == _S_PLACE:
                gz = ring_goal_z + off[2]
                seen_z = grippers[receiver].pos[2]
                if seen_z > gz + p.predrop + p.fine_tol:
                    rec.target = (dest[0] + off[0], dest[1] + off[1], gz + p.predrop)
                    rec.phase = _PHASE_APPROACH
                else:
                    rec.target = (dest[0] + off[0], dest[1] + off[1], gz)
                    rec.phase = _PHASE_PRECISE
                    err = math.hypot(ring.center[0] - dest[0],
                                     ring.center[1] - dest[1])
                    ok = (err <= p.place_tol
                          and ring.center[2] <= ring_goal_z + p.fine_tol
                          and self.seen_speed[receiver] <= p.arrive_precise)
                    self._hits = self._hits + 1 if ok else 0
                    if self._hits >= 2:
                        self._set_jaw(receiver, Jaw.OPEN)
                        self._advance(_S_RELEASE)
            else:  # _S_RELEASE
                rec.target = (dest[0] + off[0], dest[1] + off[1], ring_goal_z + off[2])
                rec.phase = _PHASE_HOLD
                if self._patience_expired():
                    # placement didn't take; climb back and retry the descent
                    self._set_jaw(receiver, Jaw.CLOSED)
                    self._advance(_S_CARRY_DEST)

        car.jaw = self._committed_jaw[carrier]
        rec.jaw = self._committed_jaw[receiver]
        return goals

    def _set_jaw(self, arm: int, jaw: int):
        self._committed_jaw[arm] = jaw

    def _patience_expired(self) -> bool:
        return self.stage_ticks > self.params.confirm_patience_s * self.fs

    @staticmethod
    def _offset(gripper: Vec3, ring_center: Vec3) -> Vec3:
        return (gripper[0] - ring_center[0], gripper[1] - ring_center[1],
                gripper[2] - ring_center[2])

    @staticmethod
    def _held_by(kind: int, arm: int) -> bool:
        if kind == RingKind.HELD_BOTH:
            return True
        return kind == (RingKind.HELD_LEFT if arm == 0 else RingKind.HELD_RIGHT)


class _Responsiveness:
    """What the tool has felt like: slave displacement per master displacement.

    Pairs the seen tool step now with the hand step one blind interval ago
    and books the ratio against the movement class the hand was in when it
    made that step. Nonlinear mappings feel very different at speed than in
    fine work, so one scalar would always be stale right after a pace
    change. Each class keeps a smoothed estimate for planning and a
    pessimistic recent maximum for throttling.

    Two asymmetries matter. Gain habits for the fast classes are learned
    from deliberate strokes only; the crawling tail of a leg reads the
    near-rest gain and would talk the planner into launching the next leg
    far too hard. And the maxima ride a margin above the running average
    and are revised downward only while fresh strokes keep confirming the
    tool is tame; between strokes they forget very slowly, because a tool
    that leapt half a minute ago is still treated as capable of it.

    A deliberate stroke that produces no visible tool motion at all is not
    evidence of low gain, it is a jam. Those readings are never booked;
    they raise a stall count the operator answers by letting go for a
    moment instead of shoving harder.
    """

    __slots__ = ("_hist", "_depth", "smooth", "peak", "_decay", "stall_run")

    # hand step per decision below which a stroke does not count as
    # deliberate for the fast classes (tremor-scale motion reads near-rest)
    _DELIBERATE = 2.5e-5
    _FINE_GATE = 2e-5
    _STALL_RATIO = 0.03

    def __init__(self, lag_decisions: int, decay_slow: float, decay_fast: float):
        self._hist: list[tuple[Vec3, int]] = []
        self._depth = lag_decisions + 2
        self.smooth = [1.0, 1.0, 1.0]
        self.peak = [3.0, 3.0, 3.0]
        self._decay = (decay_slow, decay_fast, decay_slow)
        self.stall_run = 0

    def update(self, master_pos: Vec3, phase: int, seen_step: float,
               frozen: bool = False):
        hist = self._hist
        hist.append((master_pos, phase))
        if len(hist) > self._depth:
            del hist[0]
        for ph in (0, 1, 2):
            self.peak[ph] = max(self.peak[ph] * self._decay[ph],
                                1.3 * self.smooth[ph])
        if len(hist) < self._depth or frozen:
            return
        old_step = math.dist(hist[1][0], hist[0][0])
        ph = hist[0][1]
        gate = self._FINE_GATE if ph == _PHASE_PRECISE else self._DELIBERATE
        if old_step > gate:
            ratio = min(12.0, seen_step / old_step)
            if ratio < self._STALL_RATIO:
                self.stall_run += 1
                return
            self.stall_run = 0
            # adapt well below the dead-time bandwidth or the estimate chases
            # its own 0.9s-old consequences and oscillates
            self.smooth[ph] += 0.012 * (ratio - self.smooth[ph])
            if ratio > self.peak[ph]:
                # one freak reading may at most double the caution
                self.peak[ph] = min(ratio, self.peak[ph] * 2.0)
            else:
                self.peak[ph] += 0.02 * (ratio - self.peak[ph])


class PursuitOperator:
    """Continuous tracker with fixed master-space habits.

    Per decision: aim at the seen error; command the smallest of the phase
    comfort cap, the perceived-speed budget over the felt peak
    responsiveness, and the time-to-go rate. Comfort caps and noise live in
    master space and never divide by the active scale; that asymmetry is
    what the scaling strategies act on.
    """

    def __init__(self, scenario: Scenario, seed: int):
        self.params = params_from_config(scenario.operator)
        clock = scenario.clock()
        self.dt = clock.dt
        self.fs = clock.fs_hz
        rng = Random(seed)
        self.tremor = (TremorNoise(rng, self.params, self.dt),
                       TremorNoise(rng, self.params, self.dt))
        self.executor = PlanExecutor(scenario, self.params)
        react = int(round(self.params.reaction_delay_s * self.fs))
        self.react_line = DelayLine(react)
        stride = self.params.decision_stride
        lag_dec = (react + 2 * clock.one_way_samples) // stride
        decay_slow = math.exp(-stride / (self.fs * 45.0))
        decay_fast = math.exp(-stride / (self.fs * 4.0))
        self.resp = (_Responsiveness(lag_dec, decay_slow, decay_fast),
                     _Responsiveness(lag_dec, decay_slow, decay_fast))
        blind_s = scenario.round_trip_s + self.params.reaction_delay_s
        self.horizon = max(self.params.horizon_min_s,
                           self.params.horizon_blind_mult * blind_s)
        self._blind_s = max(blind_s, 0.05)
        self.masters = [Pose(scenario.left_home), Pose(scenario.right_home)]
        self.tick = 0
        self._stride = stride
        self._vel = [(0.0, 0.0, 0.0), (0.0, 0.0, 0.0)]
        self._jaws = [Jaw.OPEN, Jaw.OPEN]
        self._phase = [_PHASE_TRANSIT, _PHASE_TRANSIT]
        self._hold_until = [0, 0]
        self._prev_seen: tuple | None = None

    def _decide(self, seen: WorldState):
        p = self.params
        goals = self.executor.goals(seen)
        grippers = (seen.left, seen.right)
        for arm in (0, 1):
            goal = goals[arm]
            gpos = grippers[arm].pos
            resting = self.tick < self._hold_until[arm]
            if self._prev_seen is not None:
                seen_step = math.dist(gpos, self._prev_seen[arm].pos)
                self.resp[arm].update(self.masters[arm].position,
                                      self._phase[arm], seen_step,
                                      frozen=resting)
            self._jaws[arm] = goal.jaw
            if self.resp[arm].stall_run >= 3:
                # the tool is not answering; let go until the picture settles
                self.resp[arm].stall_run = 0
                self._hold_until[arm] = self.tick + int(1.2 * self._blind_s
                                                        * self.fs)
                resting = True
            if resting:
                self._vel[arm] = (0.0, 0.0, 0.0)
                continue
            if goal.phase == _PHASE_HOLD:
                self._phase[arm] = _PHASE_PRECISE
                self._vel[arm] = (0.0, 0.0, 0.0)
                continue
            self._phase[arm] = goal.phase
            ex = goal.target[0] - gpos[0]
            ey = goal.target[1] - gpos[1]
            ez = goal.target[2] - gpos[2]
            err = math.sqrt(ex * ex + ey * ey + ez * ez)
            if err < 1e-9:
                self._vel[arm] = (0.0, 0.0, 0.0)
                continue
            resp = self.resp[arm]
            ph = goal.phase
            if ph == _PHASE_TRANSIT:
                cap, budget = p.transit_cap, p.transit_budget
                # planned closing rate, corrected by how the tool has felt
                closing = err / (self.horizon * resp.smooth[ph])
            elif ph == _PHASE_APPROACH:
                cap, budget = p.approach_cap, p.approach_budget
                # floored so an overestimated gain cannot stall the descent;
                # the blind-interval bound below still outranks the floor
                closing = max(err / (self.horizon * resp.smooth[ph]),
                              p.approach_floor)
            else:
                cap, budget = p.precise_cap, p.precise_budget
                # fine work paces the hand off the seen error directly; the
                # hand does not re-scale its habits per tool setting, which
                # is exactly what makes aggressive settings overshoot
                closing = err / p.precise_patience_s
            # last term: even at the worst gain felt lately, the tool cannot
            # travel further than the remaining error in one blind interval
            speed = min(cap, budget / resp.peak[ph], closing,
                        err / (self._blind_s * resp.peak[ph]))
            f = speed * self.dt / err
            self._vel[arm] = (ex * f, ey * f, ez * f)
        self._prev_seen = grippers

    def step(self, observed: WorldState):
        """Observed snapshot in, (left master, right master) out."""
        seen = self.react_line.push(observed)
        if self.tick % self._stride == 0:
            self._decide(seen)
        self.tick += 1
        out = []
        for arm in (0, 1):
            vx, vy, vz = self._vel[arm]
            tx, ty, tz = self.tremor[arm].delta(self.tick)
            mpos = self.masters[arm].position
            pose = Pose((mpos[0] + vx + tx, mpos[1] + vy + ty, mpos[2] + vz + tz),
                        jaw=self._jaws[arm])
            self.masters[arm] = pose
            out.append(pose)
        return out[0], out[1]

    @property
    def plan_done(self) -> bool:
        return self.executor.done()


class MoveAndWaitOperator:
    """Step, then hold still until the result is on screen.

    Bursts are bounded master-space segments executed open loop at the
    movement-class speed cap; between bursts the hand freezes for a full
    round trip plus reaction, then steps again only once the seen tool has
    settled. Each burst is sized from the displacement ratio measured over
    the previous one, so the second step onto any leg lands nearly on
    target despite nothing being tracked mid-flight. The hand is steady by
    construction: increments are exactly zero between bursts. That, not
    speed, is what makes the strategy stable at any delay.
    """

    def __init__(self, scenario: Scenario, seed: int):
        self.params = params_from_config(scenario.operator)
        clock = scenario.clock()
        self.dt = clock.dt
        self.fs = clock.fs_hz
        self.executor = PlanExecutor(scenario, self.params)
        react = int(round(self.params.reaction_delay_s * self.fs))
        self.react_line = DelayLine(react)
        self.masters = [Pose(scenario.left_home), Pose(scenario.right_home)]
        self.tick = 0
        self._stride = self.params.decision_stride
        wait_s = scenario.round_trip_s + self.params.reaction_delay_s \
            + self.params.wait_margin_s
        self.wait_ticks = max(1, int(round(wait_s * self.fs)))
        # until a burst has been measured, assume the tool is hot: a short
        # first step is cheaper than discovering a high gain at full stroke
        self.scale_est = [5.0, 5.0]
        self._goals = None
        # per arm: remaining burst vector, wait countdown, burst bookkeeping
        self._burst = [(0.0, 0.0, 0.0), (0.0, 0.0, 0.0)]
        self._waiting = [0, 0]
        self._burst_start_master = [self.masters[0].position,
                                    self.masters[1].position]
        self._burst_start_seen: list[Vec3 | None] = [None, None]

    def _begin_burst(self, arm: int, err_vec: Vec3, err: float, seen_pos: Vec3,
                     margin: float):
        p = self.params
        # stop short of the commanded point by the re-step margin; grasp and
        # place targets sit at contact depth and exact landings would graze
        want_slave = max(err - margin, 0.0)
        want_master = min(want_slave / max(self.scale_est[arm], 1e-3),
                          p.burst_len)
        f = want_master / err
        self._burst[arm] = (err_vec[0] * f, err_vec[1] * f, err_vec[2] * f)
        self._burst_start_master[arm] = self.masters[arm].position
        self._burst_start_seen[arm] = seen_pos

    def step(self, observed: WorldState):
        p = self.params
        seen = self.react_line.push(observed)
        if self.tick % self._stride == 0 or self._goals is None:
            self._goals = self.executor.goals(seen)
        self.tick += 1
        goals = self._goals
        grippers = (seen.left, seen.right)
        out = []
        for arm in (0, 1):
            goal = goals[arm]
            gpos = grippers[arm].pos
            mpos = self.masters[arm].position
            bx, by, bz = self._burst[arm]
            remaining = math.sqrt(bx * bx + by * by + bz * bz)
            if remaining > 1e-12:
                cap = (p.transit_cap if goal.phase == _PHASE_TRANSIT
                       else p.approach_cap)
                step = min(cap * self.dt, remaining)
                f = step / remaining
                mpos = (mpos[0] + bx * f, mpos[1] + by * f, mpos[2] + bz * f)
                # exhaustion must match the idle check above or a float
                # crumb lets the next burst launch without any wait
                if remaining - step <= 1e-12:
                    self._burst[arm] = (0.0, 0.0, 0.0)
                    self._waiting[arm] = self.wait_ticks
                else:
                    self._burst[arm] = (bx * (1 - f), by * (1 - f),
                                        bz * (1 - f))
            elif self._waiting[arm] > 0:
                self._waiting[arm] -= 1
                if self._waiting[arm] == 0:
                    start_seen = self._burst_start_seen[arm]
                    master_moved = math.dist(mpos, self._burst_start_master[arm])
                    if start_seen is not None and master_moved > 1e-6:
                        seen_moved = math.dist(gpos, start_seen)
                        if seen_moved > 1e-7:
                            est = seen_moved / master_moved
                            self.scale_est[arm] = min(20.0, max(0.02, est))
            else:
                ex = goal.target[0] - gpos[0]
                ey = goal.target[1] - gpos[1]
                ez = goal.target[2] - gpos[2]
                err = math.sqrt(ex * ex + ey * ey + ez * ez)
                # descents gate stage switches on fine z lines, so anything
                # guided must step until it is inside the fine tolerance
                tol = (p.coarse_tol if goal.phase == _PHASE_TRANSIT
                       else p.fine_tol)
                if (goal.phase != _PHASE_HOLD and err > tol * 0.5
                        and self.executor.seen_speed[arm] <= p.arrive_precise):
                    self._begin_burst(arm, (ex, ey, ez), err, gpos,
                                      tol * 0.5)
            pose = Pose(mpos, jaw=goal.jaw)
            self.masters[arm] = pose
            out.append(pose)
        return out[0], out[1]

    @property
    def plan_done(self) -> bool:
        return self.executor.done()


_OPERATOR_KINDS = {
    "pursuit": PursuitOperator,
    "move_and_wait": MoveAndWaitOperator,
}


def make_operator(scenario: Scenario, seed: int):
    kind = scenario.operator.get("kind")
    cls = _OPERATOR_KINDS.get(kind)
    if cls is None:
        raise ConfigError(f"unknown operator kind {kind!r}; "
                          f"known: {sorted(_OPERATOR_KINDS)}")
    return cls(scenario, seed)
