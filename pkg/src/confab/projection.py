"""Mapping planar layouts onto substrate surfaces and measuring the distortion.

Two modes:

  arc_length   planar x is laid out as arc length along u-isocurves and planar
               y along v-isocurves. This is the physical wrapping of a sheet
               around a developable surface and is an exact isometry there
               (plane, cylinder). On doubly-curved surfaces it is the natural
               approximation and the distortion report quantifies the residual.

  normal_drop  the layout keeps its silhouette: each planar point is dropped
               along -z onto the surface. Foreshortening stretches lengths on
               inclined regions; requires a height-field-like surface.

The layout's bounding-box center lands on the surface parametric center
(u, v) = (0.5, 0.5) in both modes. Polygon edges are resampled at 0.5 mm so
curvature is captured by the 3D polylines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom2d
from .design import PlanarLayout
from .errors import IncompatibleSurface, InvariantViolation, OutOfExtent
from .surfaces import Surface, SurfaceFrame, surface_arc_length

RESAMPLE_MM = 0.5  # below nozzle width, above numerical noise

_GAUSS5 = (
    (0.04691007703066800, 0.11846344252809454),
    (0.23076534494715845, 0.23931433524968324),
    (0.5, 0.28444444444444444),
    (0.76923465505284155, 0.23931433524968324),
    (0.95308992296933200, 0.11846344252809454),
)


@dataclass(frozen=True)
class DistortionRow:
    feature: str
    nominal_length: float  # mm
    conformal_length: float  # mm
    relative_error: float


@dataclass(frozen=True)
class DistortionReport:
    per_feature: list
    mean_abs_error: float
    max_abs_error: float


@dataclass(frozen=True)
class ConformalLayout:
    source: PlanarLayout
    surface: Surface
    mode: str
    regions_uv: list  # per region: [(u, v), ...]
    regions_3d: list  # per region: [SurfaceFrame, ...]
    outline_uv: list  # substrate outline as (u, v) polygon
    feed_point_3d: SurfaceFrame
    raster_direction_field: list  # per region: [unit 3-vector per vertex]
    features_uv: dict = field(default_factory=dict)  # name -> [(u, v), ...]

    def __post_init__(self):
        for frames, dirs in zip(self.regions_3d, self.raster_direction_field):
            for fr, d in zip(frames, dirs):
                if abs(float(np.dot(d, fr.normal))) >= 1e-9:
                    raise InvariantViolation("raster direction not tangent to surface")


class _Mapper:
    """Planar (x, y) -> surface (u, v) for one projection mode."""

    def __init__(self, surface: Surface, mode: str, center_xy):
        if mode not in ("arc_length", "normal_drop"):
            raise InvariantViolation(f"unknown projection mode '{mode}'")
        self.surface = surface
        self.mode = mode
        self.cx, self.cy = center_xy
        # constant-metric fast paths (plane, cylinder)
        fr = surface.evaluate(0.5, 0.5)
        self._su = math.sqrt(fr.metric[0])
        self._sv = math.sqrt(fr.metric[2])
        self._center_pt = fr.point
        if mode == "normal_drop":
            self._check_heightfield()

    def _check_heightfield(self):
        for u in (0.05, 0.5, 0.95):
            for v in (0.05, 0.5, 0.95):
                if self.surface.evaluate(u, v).normal[2] <= 1e-6:
                    raise IncompatibleSurface(
                        "normal_drop requires a height-field-like surface orientation"
                    )

    def to_uv(self, x, y):
        dx, dy = x - self.cx, y - self.cy
        if self.mode == "arc_length":
            return self._arc_uv(dx, dy)
        return self._drop_uv(dx, dy)

    # --- arc-length parametrization -------------------------------------
    def _arc_len_v(self, u, v0, v1, cells=None):
        """Arc length along the u-isocurve between v0 and v1."""
        if cells is None:
            cells = max(1, int(math.ceil(abs(v1 - v0) * 32)))
        total = 0.0
        h = (v1 - v0) / cells
        for i in range(cells):
            a = v0 + i * h
            for t, w in _GAUSS5:
                G = self.surface.evaluate(u, a + t * h).metric[2]
                total += w * abs(h) * math.sqrt(G)
        return math.copysign(total, v1 - v0)

    def _arc_len_u(self, v, u0, u1, cells=None):
        if cells is None:
            cells = max(1, int(math.ceil(abs(u1 - u0) * 32)))
        total = 0.0
        h = (u1 - u0) / cells
        for i in range(cells):
            a = u0 + i * h
            for t, w in _GAUSS5:
                E = self.surface.evaluate(a + t * h, v).metric[0]
                total += w * abs(h) * math.sqrt(E)
        return math.copysign(total, u1 - u0)

    def _invert_arc(self, target, speed, length_fn):
        """Solve s(q) = target for q in [0, 1] relative to q0 = 0.5.

        length_fn(q) gives signed arc length from 0.5 to q; speed(q) its
        derivative magnitude. Bisection bracketed on [0, 1] with a Newton
        polish; raises OutOfExtent when the target exceeds the surface.
        """
        if target == 0.0:
            return 0.5
        lo, hi = (0.5, 1.0) if target > 0 else (0.0, 0.5)
        s_edge = length_fn(lo if target < 0 else hi)
        if (target > 0 and target > s_edge + 1e-9) or (target < 0 and target < s_edge - 1e-9):
            raise OutOfExtent(
                f"required arc length {target:.3f} mm exceeds the surface extent"
            )
        q = min(max(0.5 + target / max(speed(0.5), 1e-12), lo), hi)
        for _ in range(90):
            s = length_fn(q)
            err = s - target
            if abs(err) < 1e-12 * max(1.0, abs(target)):
                break
            if err > 0:
                hi = q
            else:
                lo = q
            dq = err / max(speed(q), 1e-12)
            qn = q - dq
            if not (lo < qn < hi):
                qn = 0.5 * (lo + hi)
            q = qn
        return min(1.0, max(0.0, q))

    def _arc_uv(self, dx, dy):
        surf = self.surface
        if surf.kind in ("plane", "cylinder"):
            # metric constant: E = (R*arc)^2 or width^2, G = length^2
            u = 0.5 + dx / self._su
            v = 0.5 + dy / self._sv
        else:
            v = self._invert_arc(
                dy,
                lambda q: math.sqrt(surf.evaluate(0.5, q).metric[2]),
                lambda q: self._arc_len_v(0.5, 0.5, q),
            )
            u = self._invert_arc(
                dx,
                lambda q: math.sqrt(surf.evaluate(q, v).metric[0]),
                lambda q: self._arc_len_u(v, 0.5, q),
            )
        if not (-1e-9 <= u <= 1 + 1e-9 and -1e-9 <= v <= 1 + 1e-9):
            raise OutOfExtent(
                f"layout point maps to (u, v) = ({u:.4f}, {v:.4f}) outside the surface"
            )
        return min(1.0, max(0.0, u)), min(1.0, max(0.0, v))

    # --- normal-drop parametrization ------------------------------------
    def _drop_uv(self, dx, dy):
        surf = self.surface
        c = self._center_pt
        tx, ty = c[0] + dx, c[1] + dy  # world target in the surface frame
        if surf.kind == "plane":
            u = 0.5 + dx / surf.width
            v = 0.5 + dy / surf.length
        elif surf.kind == "cylinder":
            r = surf.radius
            if abs(tx) > r:
                raise OutOfExtent(f"x = {tx:.3f} mm falls off the cylinder silhouette")
            u = 0.5 + math.asin(tx / r) / surf.arc_angle
            v = ty / surf.length
        elif surf.kind == "sphere_cap":
            a = surf.half_extent
            u = (tx / a + 1) / 2
            v = (ty / a + 1) / 2
        else:
            u, v = self._newton_drop(tx, ty)
        if not (-1e-9 <= u <= 1 + 1e-9 and -1e-9 <= v <= 1 + 1e-9):
            raise OutOfExtent(
                f"layout point maps to (u, v) = ({u:.4f}, {v:.4f}) outside the surface"
            )
        return min(1.0, max(0.0, u)), min(1.0, max(0.0, v))

    def _newton_drop(self, tx, ty):
        best = None
        for su in (0.5, 0.25, 0.75):
            for sv in (0.5, 0.25, 0.75):
                u, v = su, sv
                ok = False
                for _ in range(50):
                    fr = self.surface.evaluate(u, v)
                    rx = fr.point[0] - tx
                    ry = fr.point[1] - ty
                    if math.hypot(rx, ry) < 1e-10:
                        ok = True
                        break
                    J = np.array([[fr.du[0], fr.dv[0]], [fr.du[1], fr.dv[1]]])
                    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
                    if abs(det) < 1e-12:
                        break
                    duv = np.linalg.solve(J, np.array([rx, ry]))
                    u = min(1.0, max(0.0, u - duv[0]))
                    v = min(1.0, max(0.0, v - duv[1]))
                if ok:
                    return u, v
                if best is None:
                    best = (u, v)
        raise OutOfExtent("normal_drop inversion did not converge; point off the surface")


def _resample_region(poly):
    return geom2d.resample_polygon(poly, RESAMPLE_MM)


def project_layout(layout: PlanarLayout, surface: Surface, mode: str) -> ConformalLayout:
    """Project a planar layout onto a surface.

    Returns the conformal layout with per-vertex frames; raises OutOfExtent
    when the layout does not fit the surface in the requested mode and
    IncompatibleSurface for normal_drop onto non-height-field orientations.
    """
    x0, y0, x1, y1 = geom2d.bbox(layout.substrate_outline)
    mapper = _Mapper(surface, mode, ((x0 + x1) / 2.0, (y0 + y1) / 2.0))

    def project_points(pts):
        uv = [mapper.to_uv(x, y) for (x, y) in pts]
        frames = [surface.evaluate(u, v) for (u, v) in uv]
        return uv, frames

    regions_uv, regions_3d, dir_field = [], [], []
    rdir = layout.raster_direction
    eps = 1e-3  # mm step for transporting the raster direction
    for poly in layout.conductive_regions:
        pts = _resample_region(poly)
        uv, frames = project_points(pts)
        dirs = []
        for (x, y), fr in zip(pts, frames):
            try:
                u1, v1 = mapper.to_uv(x + eps * rdir[0], y + eps * rdir[1])
            except OutOfExtent:
                u1, v1 = mapper.to_uv(x - eps * rdir[0], y - eps * rdir[1])
            p1 = surface.evaluate(u1, v1).point
            t = p1 - fr.point
            t = t - float(np.dot(t, fr.normal)) * fr.normal
            n = np.linalg.norm(t)
            if n < 1e-12:
                t = fr.dv / np.linalg.norm(fr.dv)
            else:
                t = t / n
            dirs.append(t)
        regions_uv.append(uv)
        regions_3d.append(frames)
        dir_field.append(dirs)

    outline_uv, _ = project_points(_resample_region(layout.substrate_outline))
    feed_uv = mapper.to_uv(*layout.feed_point)
    feed_frame = surface.evaluate(*feed_uv)

    features_uv = {}
    for name, (a, b) in layout.features.items():
        pts = geom2d.resample_polyline([a, b], RESAMPLE_MM)
        features_uv[name] = [mapper.to_uv(x, y) for (x, y) in pts]

    return ConformalLayout(
        source=layout,
        surface=surface,
        mode=mode,
        regions_uv=regions_uv,
        regions_3d=regions_3d,
        outline_uv=outline_uv,
        feed_point_3d=feed_frame,
        raster_direction_field=dir_field,
        features_uv=features_uv,
    )


def distortion_report(conformal: ConformalLayout) -> DistortionReport:
    """Per-feature nominal vs on-surface lengths and summary statistics."""
    rows = []
    for name in sorted(conformal.features_uv):
        a, b = conformal.source.features[name]
        nominal = math.hypot(b[0] - a[0], b[1] - a[1])
        on_surface = surface_arc_length(conformal.surface, conformal.features_uv[name])
        rows.append(DistortionRow(
            feature=name,
            nominal_length=nominal,
            conformal_length=on_surface,
            relative_error=(on_surface - nominal) / nominal,
        ))
    errs = [abs(r.relative_error) for r in rows]
    return DistortionReport(
        per_feature=rows,
        mean_abs_error=sum(errs) / len(errs) if errs else 0.0,
        max_abs_error=max(errs) if errs else 0.0,
    )


def conformal_to_text(conformal: ConformalLayout) -> str:
    """3D polyline export: one '# region i' block per region, 'x y z nx ny nz' rows."""
    lines = [f"# conformal layout: {conformal.source.design_kind} on {conformal.surface.kind}"]
    lines.append(f"# mode {conformal.mode}")
    fp = conformal.feed_point_3d.point
    lines.append(f"# feed_point {fp[0]:.6f} {fp[1]:.6f} {fp[2]:.6f}")
    for i, frames in enumerate(conformal.regions_3d):
        lines.append(f"# region {i}")
        for fr in frames:
            p, n = fr.point, fr.normal
            lines.append(
                f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {n[0]:.6f} {n[1]:.6f} {n[2]:.6f}"
            )
        lines.append("")
    return "\n".join(lines) + "\n"
