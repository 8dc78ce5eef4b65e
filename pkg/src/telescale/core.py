"""Core teleoperation primitives: poses, the sample clock, and integer delay lines.

Everything in the control path works on plain tuples of floats. The tick loop
runs at the full sample rate in pure Python, so these helpers stay allocation
light and avoid numpy on purpose.
"""

from __future__ import annotations

import math
from collections import deque
from enum import IntEnum
from typing import NamedTuple

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # w, x, y, z

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


class ConfigError(ValueError):
    """Raised for invalid clock, scenario, or strategy parameters."""


class Jaw(IntEnum):
    OPEN = 0
    CLOSED = 1


class Pose(NamedTuple):
    """A tool pose: position in meters, unit quaternion, jaw state.

    Orientation and jaw ride along unscaled through every stage of the
    pipeline; only position is ever remapped.
    """

    position: Vec3
    orientation: Quat = IDENTITY_QUAT
    jaw: Jaw = Jaw.OPEN


def make_pose(position, orientation=IDENTITY_QUAT, jaw=Jaw.OPEN) -> Pose:
    """Validating constructor for poses coming from config files or the wire."""
    pos = tuple(float(v) for v in position)
    quat = tuple(float(v) for v in orientation)
    if len(pos) != 3 or len(quat) != 4:
        raise ConfigError("pose needs a 3-vector position and 4-vector quaternion")
    if not all(math.isfinite(v) for v in pos + quat):
        raise ConfigError("pose contains non-finite values")
    norm = math.sqrt(sum(v * v for v in quat))
    if norm < 1e-12:
        raise ConfigError("zero-norm quaternion")
    if norm != 1.0:
        quat = tuple(v / norm for v in quat)
    return Pose(pos, quat, Jaw(jaw))


# -- vector helpers (tuple based, used throughout the tick loop) --

def v_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def v_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def v_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def v_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def v_norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def v_dist(a: Vec3, b: Vec3) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero (37.5 -> 38)."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


class ClockConfig(NamedTuple):
    fs_hz: float
    round_trip_s: float
    one_way_samples: int

    @property
    def dt(self) -> float:
        return 1.0 / self.fs_hz


def make_clock(fs_hz: float, round_trip_s: float) -> ClockConfig:
    """Build the sample clock for a symmetric round-trip delay.

    The command path and the observation path each carry half the round trip,
    so the per-direction delay is fs * d / 2 samples, rounded half away from
    zero. fs and d must be finite; d may be zero for the no-delay case.
    """
    if not (math.isfinite(fs_hz) and fs_hz > 0.0):
        raise ConfigError(f"sample rate must be positive and finite, got {fs_hz!r}")
    if not (math.isfinite(round_trip_s) and round_trip_s >= 0.0):
        raise ConfigError(f"round-trip delay must be >= 0 and finite, got {round_trip_s!r}")
    return ClockConfig(float(fs_hz), float(round_trip_s), round_half_away(fs_hz * round_trip_s / 2.0))


class DelayLine:
    """Fixed integer delay: output at step n is the input from step n - delay.

    Before warm-up completes the line returns the first sample it was given,
    which holds the downstream side at its initial value instead of feeding it
    zeros. Works for any payload type; the line never inspects its samples.
    """

    __slots__ = ("delay_samples", "_buf")

    def __init__(self, delay_samples: int):
        if delay_samples < 0:
            raise ConfigError("delay must be >= 0 samples")
        self.delay_samples = int(delay_samples)
        # maxlen discards the oldest element exactly when it has been consumed
        self._buf = deque(maxlen=self.delay_samples + 1)

    def push(self, sample):
        """Insert one sample and return the delayed one."""
        buf = self._buf
        buf.append(sample)
        return buf[0]

    def __len__(self) -> int:
        return len(self._buf)


def master_to_target(m_now: Pose, m_prev: Pose, scale_m: float, target_prev: Pose) -> Pose:
    """One step of master-side scaling: integrate the scaled master increment.

    Position deltas are multiplied by scale_m and accumulated onto the previous
    target; orientation and jaw pass through from the current master pose.
    """
    mp = m_now.position
    pp = m_prev.position
    tp = target_prev.position
    return Pose(
        (
            tp[0] + scale_m * (mp[0] - pp[0]),
            tp[1] + scale_m * (mp[1] - pp[1]),
            tp[2] + scale_m * (mp[2] - pp[2]),
        ),
        m_now.orientation,
        m_now.jaw,
    )
