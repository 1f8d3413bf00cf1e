"""5-axis machine model: 3 linear tool axes over a C-on-B rotary-tilting bed.

The part sits on the C stage (rotation about the machine Z), which rides on a
B trunnion (rotation about the machine X); the nozzle stays vertical. Inverse
kinematics finds (B, C) so the commanded tool axis maps to vertical,

    R_B(x, B) @ R_C(z, C) @ tool_axis = (0, 0, 1)

and places the linear axes at bed_pivot + R_B R_C (tip - part_origin). Two
(B, C) branches exist; the one minimizing |C - prev.C| after unwrapping wins,
so C stays continuous along a toolpath. The singular vertical orientation
keeps the previous C and sets B = 0 rather than erroring.

Angles are radians internally, degrees at every file/G-code boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, Unreachable, ZeroLengthSegment

_GAUSS5 = (
    (0.04691007703066800, 0.11846344252809454),
    (0.23076534494715845, 0.23931433524968324),
    (0.5, 0.28444444444444444),
    (0.76923465505284155, 0.23931433524968324),
    (0.95308992296933200, 0.11846344252809454),
)

# Below this XYZ travel a move is timed against its rotary angle instead
# (degrees treated as millimeters, the minimum-feed convention for desktop
# controllers without inverse-time mode). Must stay well above the 5-decimal
# quantization of emitted coordinates so emission and simulation agree.
XYZ_EPS_MM = 1e-3


@dataclass(frozen=True)
class MachineConfig:
    x_range: tuple = (-200.0, 200.0)  # mm
    y_range: tuple = (-200.0, 200.0)
    z_range: tuple = (-50.0, 250.0)
    b_range: tuple = (-math.pi / 4, math.pi / 4)  # rad, tilt about machine X
    bed_pivot: tuple = (0.0, 0.0, 0.0)  # mm, rotary center in machine coords
    part_origin: tuple = (0.0, 0.0, 0.0)  # mm, part frame origin on the C stage
    max_xyz_speed: float = 300.0  # mm/s
    max_b_speed: float = math.pi  # rad/s
    max_c_speed: float = 2 * math.pi  # rad/s
    min_feed_mm_min: float = 1.0  # floor for emitted feeds
    tool_change_time_s: float = 10.0  # simulator cost per tool change

    def __post_init__(self):
        for name, rng in (("x", self.x_range), ("y", self.y_range),
                          ("z", self.z_range), ("b", self.b_range)):
            if rng[1] <= rng[0]:
                raise InvariantViolation(f"{name}_range is empty")
        if not (-math.pi / 2 <= self.b_range[0] and self.b_range[1] <= math.pi / 2):
            raise InvariantViolation("b_range must lie within [-pi/2, pi/2]")


@dataclass(frozen=True)
class MachinePose:
    x: float
    y: float
    z: float
    b: float  # rad
    c: float  # rad, continuous (unwrapped)

    def joints(self):
        return (self.x, self.y, self.z, self.b, self.c)


def _apply_bc(b, c, p):
    """R_B(x, b) @ R_C(z, c) @ p, scalar math (hot path)."""
    cb, sb = math.cos(b), math.sin(b)
    cc, sc = math.cos(c), math.sin(c)
    x = cc * p[0] - sc * p[1]
    y = sc * p[0] + cc * p[1]
    z = p[2]
    return (x, cb * y - sb * z, sb * y + cb * z)


def _apply_bc_inv(b, c, p):
    """(R_B R_C)^T @ p."""
    cb, sb = math.cos(b), math.sin(b)
    cc, sc = math.cos(c), math.sin(c)
    y1 = cb * p[1] + sb * p[2]
    z1 = -sb * p[1] + cb * p[2]
    return (cc * p[0] + sc * y1, -sc * p[0] + cc * y1, z1)


def _unwrap_near(angle, reference):
    """Shift angle by multiples of 2*pi to land within pi of the reference."""
    k = round((reference - angle) / (2 * math.pi))
    return angle + k * 2 * math.pi


def ik(tip, tool_axis, prev: MachinePose, cfg: MachineConfig) -> MachinePose:
    """Joint coordinates realizing a part-frame tip and tool axis.

    Branch choice minimizes |C - prev.C| after unwrapping (ties prefer the
    branch closer in B); the vertical tool axis is singular in C and resolves
    to C = prev.C, B = 0. Raises Unreachable when every branch violates a
    joint limit.
    """
    ax, ay, az = (float(v) for v in tool_axis)
    norm = math.sqrt(ax * ax + ay * ay + az * az)
    if abs(norm - 1.0) > 1e-9:
        raise InvariantViolation(f"|tool_axis| = {norm:.12f}, expected 1")

    r = math.hypot(ax, ay)
    if r < 1e-12:
        if az < 0:
            raise Unreachable("tool axis pointing into the bed")
        candidates = [(0.0, prev.c)]
    else:
        c0 = math.atan2(ax, ay)
        b0 = math.atan2(r, az)
        candidates = []
        for b_sol, c_sol in ((b0, c0), (-b0, c0 + math.pi)):
            candidates.append((b_sol, _unwrap_near(c_sol, prev.c)))
        candidates.sort(key=lambda bc: (abs(bc[1] - prev.c), abs(bc[0] - prev.b)))

    last_err = None
    ox, oy, oz = cfg.part_origin
    px, py, pz = cfg.bed_pivot
    rel = (tip[0] - ox, tip[1] - oy, tip[2] - oz)
    for b_sol, c_sol in candidates:
        if not cfg.b_range[0] - 1e-9 <= b_sol <= cfg.b_range[1] + 1e-9:
            last_err = f"B = {math.degrees(b_sol):.2f} deg outside limits"
            continue
        q = _apply_bc(b_sol, c_sol, rel)
        xyz = (px + q[0], py + q[1], pz + q[2])
        for val, rng, name in ((xyz[0], cfg.x_range, "X"),
                               (xyz[1], cfg.y_range, "Y"),
                               (xyz[2], cfg.z_range, "Z")):
            if not rng[0] - 1e-9 <= val <= rng[1] + 1e-9:
                last_err = f"{name} = {val:.2f} mm outside limits"
                break
        else:
            return MachinePose(x=xyz[0], y=xyz[1], z=xyz[2], b=b_sol, c=c_sol)
    raise Unreachable(last_err or "no kinematic branch reaches the target")


def fk(pose: MachinePose, cfg: MachineConfig):
    """Part-frame (tip, tool_axis) realized by a pose; exact inverse of ik."""
    px, py, pz = cfg.bed_pivot
    rel = (pose.x - px, pose.y - py, pose.z - pz)
    t = _apply_bc_inv(pose.b, pose.c, rel)
    ox, oy, oz = cfg.part_origin
    tip = np.array([t[0] + ox, t[1] + oy, t[2] + oz])
    axis = np.array(_apply_bc_inv(pose.b, pose.c, (0.0, 0.0, 1.0)))
    return tip, axis


def _relative_speed(pose0: MachinePose, pose1: MachinePose, cfg, t):
    """|d(tip_part)/dt| at interpolation parameter t under linear joint motion."""
    px, py, pz = cfg.bed_pivot
    x = pose0.x + t * (pose1.x - pose0.x) - px
    y = pose0.y + t * (pose1.y - pose0.y) - py
    z = pose0.z + t * (pose1.z - pose0.z) - pz
    b = pose0.b + t * (pose1.b - pose0.b)
    db = pose1.b - pose0.b
    dc = pose1.c - pose0.c
    # part angular velocity in machine frame: B about x, C about the tilted z
    cb, sb = math.cos(b), math.sin(b)
    wx, wy, wz = db, -dc * sb, dc * cb
    rx = (pose1.x - pose0.x) - (wy * z - wz * y)
    ry = (pose1.y - pose0.y) - (wz * x - wx * z)
    rz = (pose1.z - pose0.z) - (wx * y - wy * x)
    return math.sqrt(rx * rx + ry * ry + rz * rz)


def part_path_length(pose0: MachinePose, pose1: MachinePose, cfg: MachineConfig):
    """Tip path length relative to the part between two poses, mm.

    Joints interpolate linearly. 5-point Gauss quadrature per slice, slicing
    so each piece rotates at most 0.1 rad: planner-scale segments stay a
    single slice, large rotary moves converge to the true integral, and the
    result is additive under segment subdivision to well below 1e-9.
    """
    rot = max(abs(pose1.b - pose0.b), abs(pose1.c - pose0.c))
    slices = min(512, max(1, int(math.ceil(rot / 0.1))))
    total = 0.0
    for k in range(slices):
        a = k / slices
        h = 1.0 / slices
        total += h * sum(
            w * _relative_speed(pose0, pose1, cfg, a + t * h) for t, w in _GAUSS5
        )
    return total


@dataclass(frozen=True)
class FeedCommand:
    duration_s: float
    feed_mm_min: float  # XYZ-distance feed (desktop convention)
    inverse_time_f: float  # 1/min, for the inverse-time flavor
    clamped: bool  # a joint-speed limit stretched the move
    effective_speed: float  # mm/s tip speed actually achievable


def retime(pose0: MachinePose, pose1: MachinePose, commanded_speed, cfg: MachineConfig,
           min_duration_s=1e-6) -> FeedCommand:
    """Duration and feed for one pose-to-pose move.

    duration = part-relative tip length / commanded speed, stretched so no
    joint exceeds its speed limit. The desktop feed is XYZ Euclidean distance
    over duration in mm/min; rotary-only moves fall back to the configured
    minimum feed.
    """
    if commanded_speed <= 0:
        raise ZeroLengthSegment("commanded speed must be > 0")
    length = part_path_length(pose0, pose1, cfg)
    dxyz = math.dist((pose0.x, pose0.y, pose0.z), (pose1.x, pose1.y, pose1.z))
    db = abs(pose1.b - pose0.b)
    dc = abs(pose1.c - pose0.c)
    if length < 1e-12 and dxyz < 1e-12 and db < 1e-12 and dc < 1e-12:
        raise ZeroLengthSegment("zero-length move should be dropped upstream")

    dt = length / commanded_speed
    dt = max(dt, dxyz / cfg.max_xyz_speed, db / cfg.max_b_speed,
             dc / cfg.max_c_speed, min_duration_s)
    clamped = dt > length / commanded_speed + 1e-12
    if dxyz >= XYZ_EPS_MM:
        feed = max(dxyz / dt * 60.0, cfg.min_feed_mm_min)
    else:
        drot_deg = math.hypot(math.degrees(pose1.b - pose0.b),
                              math.degrees(pose1.c - pose0.c))
        feed = max(drot_deg / dt * 60.0, cfg.min_feed_mm_min) if drot_deg > 1e-12 \
            else cfg.min_feed_mm_min
    return FeedCommand(
        duration_s=dt,
        feed_mm_min=feed,
        inverse_time_f=60.0 / dt,
        clamped=clamped,
        effective_speed=length / dt if dt > 0 else 0.0,
    )


def solve_toolpath(toolpath, cfg: MachineConfig, start_pose=None):
    """Per-segment (pose_start, pose_end) along a toolpath, C kept continuous."""
    prev = start_pose or MachinePose(0.0, 0.0, 0.0, 0.0, 0.0)
    out = []
    for seg in toolpath.segments:
        p0 = ik(seg.start, seg.axis_start, prev, cfg)
        p1 = ik(seg.end, seg.axis_end, p0, cfg)
        out.append((p0, p1))
        prev = p1
    return out
