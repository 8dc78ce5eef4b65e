"""Peg-top plane estimation and the distance field used by positional scaling.

The four peg centers are fit with a least-squares plane a*x + b*y + z = c
solved through the normal equations. Tool positions are projected into that
plane before measuring distance to the nearest peg, so the scale field is a
bird's-eye map over the board regardless of board tilt.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

from .core import ConfigError, Pose, Vec3
from .scaling import PositionalScaling, positional_scale

DET_EPSILON = 1e-12


class DegenerateLayoutError(ConfigError):
    """Peg layout does not determine a plane (collinear or coincident pegs)."""


class PegPlane(NamedTuple):
    a: float
    b: float
    c: float
    normal: Vec3  # unit vector (a, b, 1) / |(a, b, 1)|


def fit_plane(points: Sequence[Vec3]) -> PegPlane:
    """Least-squares plane through the given points.

    Rows of the design matrix are [x_i, y_i, -1] against targets z_i, and the
    coefficient vector is -(A^T A)^-1 A^T z. The 3x3 normal matrix is solved
    by adjugate; a determinant below DET_EPSILON means the layout is
    degenerate.
    """
    if len(points) < 3:
        raise DegenerateLayoutError("plane fit needs at least three points")
    sxx = sxy = syy = sx = sy = 0.0
    sxz = syz = sz = 0.0
    n = 0.0
    for (x, y, z) in points:
        sxx += x * x
        sxy += x * y
        syy += y * y
        sx += x
        sy += y
        sxz += x * z
        syz += y * z
        sz += z
        n += 1.0

    # M = A^T A for rows [x, y, -1]; rhs = A^T z
    m11, m12, m13 = sxx, sxy, -sx
    m22, m23 = syy, -sy
    m33 = n
    r1, r2, r3 = sxz, syz, -sz

    det = (m11 * (m22 * m33 - m23 * m23)
           - m12 * (m12 * m33 - m23 * m13)
           + m13 * (m12 * m23 - m22 * m13))
    if abs(det) < DET_EPSILON:
        raise DegenerateLayoutError(f"peg layout is degenerate (det={det:.3e})")

    # adjugate of the symmetric M, then p = -(M^-1 rhs)
    c11 = m22 * m33 - m23 * m23
    c12 = m13 * m23 - m12 * m33
    c13 = m12 * m23 - m22 * m13
    c22 = m11 * m33 - m13 * m13
    c23 = m12 * m13 - m11 * m23
    c33 = m11 * m22 - m12 * m12

    a = -(c11 * r1 + c12 * r2 + c13 * r3) / det
    b = -(c12 * r1 + c22 * r2 + c23 * r3) / det
    c = -(c13 * r1 + c23 * r2 + c33 * r3) / det

    nrm = math.sqrt(a * a + b * b + 1.0)
    return PegPlane(a, b, c, (a / nrm, b / nrm, 1.0 / nrm))


def plane_height(plane: PegPlane, x: float, y: float) -> float:
    """z of the plane at (x, y)."""
    return plane.c - plane.a * x - plane.b * y


def project_tooltip(target: Pose | Vec3, plane: PegPlane, shifted: bool = False) -> Vec3:
    """Map a tool position into the peg plane's frame.

    Default form: s_p = s - (0, 0, c) - (s . e) e, removing the plane offset
    and the along-normal component of the raw position. The shifted variant
    subtracts the offset before projecting, which makes s_p exactly the
    in-plane component of the offset-corrected position; for c = 0 the two
    coincide.
    """
    pos = target.position if isinstance(target, Pose) else target
    ex, ey, ez = plane.normal
    x, y, z = pos
    if shifted:
        z = z - plane.c
        d = x * ex + y * ey + z * ez
        return (x - d * ex, y - d * ey, z - d * ez)
    d = x * ex + y * ey + z * ez
    return (x - d * ex, y - d * ey, z - plane.c - d * ez)


def min_peg_distance(s_p: Vec3, peg_points: Sequence[Vec3]) -> float:
    """Distance from a projected tool position to the nearest peg point."""
    best = math.inf
    x, y, z = s_p
    for (px, py, pz) in peg_points:
        dx = x - px
        dy = y - py
        dz = z - pz
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < best:
            best = d2
    return math.sqrt(best)


class PlaneContext:
    """Fitted plane plus precomputed peg reference points for the tick loop.

    By default the peg centers are carried through the same projection as the
    tool, so a tool hovering straight over a peg measures distance zero. With
    raw_peg_frame the distance is taken against the unprojected centers.
    """

    __slots__ = ("plane", "cfg", "peg_points")

    def __init__(self, peg_centers: Sequence[Vec3], cfg: PositionalScaling):
        self.plane = fit_plane(peg_centers)
        self.cfg = cfg
        if cfg.raw_peg_frame:
            self.peg_points = tuple(peg_centers)
        else:
            self.peg_points = tuple(
                project_tooltip(p, self.plane, cfg.shifted_projection) for p in peg_centers
            )

    def distance(self, position: Vec3) -> float:
        s_p = project_tooltip(position, self.plane, self.cfg.shifted_projection)
        return min_peg_distance(s_p, self.peg_points)

    def scale_for(self, position: Vec3) -> float:
        return positional_scale(self.distance(position), self.cfg)


def scale_grid(peg_centers: Sequence[Vec3], cfg: PositionalScaling,
               x_range: tuple[float, float], y_range: tuple[float, float],
               samples: int) -> list[tuple[float, float, float]]:
    """Sample the slave-side scale field on the plane over a rectangle.

    Returns (x, y, scale) rows in row-major order, samples points per axis.
    """
    if samples < 2:
        raise ConfigError("grid needs at least 2 samples per axis")
    ctx = PlaneContext(peg_centers, cfg)
    x0, x1 = x_range
    y0, y1 = y_range
    rows = []
    for j in range(samples):
        y = y0 + (y1 - y0) * j / (samples - 1)
        for i in range(samples):
            x = x0 + (x1 - x0) * i / (samples - 1)
            z = plane_height(ctx.plane, x, y)
            rows.append((x, y, ctx.scale_for((x, y, z))))
    return rows
