"""The three motion scaling strategies and their per-arm runtime state.

Constant scaling multiplies master increments by a fixed factor. Positional
scaling keeps a fixed master-side factor and adds a slave-side factor driven
by how far the delayed target sits from the nearest peg. Velocity scaling
derives the master-side factor from a filtered estimate of master speed.

Each arm carries its own strategy state; nothing here is shared between arms.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Union

from .core import ConfigError, Pose, Vec3


@dataclass(frozen=True)
class ConstantScaling:
    scale: float = 0.2

    def __post_init__(self):
        if not (math.isfinite(self.scale) and 0.0 < self.scale <= 10.0):
            raise ConfigError(f"constant scale must be in (0, 10], got {self.scale!r}")


@dataclass(frozen=True)
class PositionalScaling:
    """Master-side constant plus distance-driven slave-side factor.

    k has units 1/m: with k=100 the slave-side factor saturates one
    centimeter away from the nearest peg. shifted_projection selects the
    variant of the plane projection that removes the plane offset before
    projecting (see plane.project_tooltip); raw_peg_frame measures distance
    against unprojected peg centers.
    """

    scale_m: float = 0.2
    k: float = 100.0
    minscale: float = 0.5
    maxscale: float = 1.0
    shifted_projection: bool = False
    raw_peg_frame: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.scale_m) and 0.0 < self.scale_m <= 10.0):
            raise ConfigError(f"scale_m must be in (0, 10], got {self.scale_m!r}")
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ConfigError(f"k must be positive, got {self.k!r}")
        if not (0.0 < self.minscale <= self.maxscale):
            raise ConfigError("need 0 < minscale <= maxscale")


@dataclass(frozen=True)
class VelocityScaling:
    """scale = v1 + v2 * |filtered master velocity|, optionally capped."""

    v1: float = 0.1
    v2: float = 100.0
    ceiling: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.v1) and self.v1 > 0.0):
            raise ConfigError(f"v1 must be positive, got {self.v1!r}")
        if not (math.isfinite(self.v2) and self.v2 >= 0.0):
            raise ConfigError(f"v2 must be >= 0, got {self.v2!r}")
        if self.ceiling is not None and self.ceiling <= self.v1:
            raise ConfigError("ceiling must exceed v1")


ScalingConfig = Union[ConstantScaling, PositionalScaling, VelocityScaling]


def positional_scale(r: float, cfg: PositionalScaling) -> float:
    """Distance to nearest peg in meters -> slave-side factor, clamped."""
    return min(cfg.maxscale, max(cfg.minscale, cfg.k * r))


def apply_positional(delayed_now: Pose, delayed_prev: Pose, slave_prev: Pose,
                     scale_s: float) -> Pose:
    """Slave-side integration of the scaled delayed-target increment."""
    dn = delayed_now.position
    dp = delayed_prev.position
    sp = slave_prev.position
    return Pose(
        (
            sp[0] + scale_s * (dn[0] - dp[0]),
            sp[1] + scale_s * (dn[1] - dp[1]),
            sp[2] + scale_s * (dn[2] - dp[2]),
        ),
        delayed_now.orientation,
        delayed_now.jaw,
    )


def filtered_velocity(history, fs_hz: float) -> Vec3:
    """Velocity estimate from the last four master positions, newest first.

    (m[n] + m[n-1] - m[n-2] - m[n-3]) / (4 / fs), which equals a 0.25/0.5/0.25
    weighted running average of the three one-step finite differences. With a
    short history (warm-up) the estimate is zero.
    """
    if len(history) < 4:
        return (0.0, 0.0, 0.0)
    m0, m1, m2, m3 = history[0], history[1], history[2], history[3]
    g = fs_hz / 4.0
    return (
        (m0[0] + m1[0] - m2[0] - m3[0]) * g,
        (m0[1] + m1[1] - m2[1] - m3[1]) * g,
        (m0[2] + m1[2] - m2[2] - m3[2]) * g,
    )


def velocity_scale(history, cfg: VelocityScaling, fs_hz: float) -> float:
    vx, vy, vz = filtered_velocity(history, fs_hz)
    scale = cfg.v1 + cfg.v2 * math.sqrt(vx * vx + vy * vy + vz * vz)
    if cfg.ceiling is not None and scale > cfg.ceiling:
        return cfg.ceiling
    return scale


class VelocityFilter:
    """Per-arm history buffer feeding the velocity estimate."""

    __slots__ = ("_hist",)

    def __init__(self):
        self._hist = deque(maxlen=4)

    def push(self, position: Vec3) -> None:
        self._hist.appendleft(position)

    def history(self):
        return self._hist

    def velocity(self, fs_hz: float) -> Vec3:
        return filtered_velocity(self._hist, fs_hz)
