"""Deposition planning: planar 2.5D baseline and conformal multi-axis toolpaths.

The planar baseline is a deliberately simplified slicer: horizontal layers cut
from analytic height fields of the substrate shell, perimeter + rectilinear
infill, sparse vertical support columns under shallow overhangs, and trace
rasters dropped onto the stair-stepped top with a vertical tool. It exists to
produce honest time/mass estimates and orderings, not to replicate any
production slicer.

The conformal planner offsets the substrate surface into shells, fills each
with a serpentine raster (alternating direction per shell), and rasters the
conductive regions on top of the outermost shell with the tool axis along the
local surface normal.

Bead model: rectangular cross-section line_width x layer_height; extrusion
volume is bead area times path length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geom2d
from .errors import InvariantViolation, RasterFailure, UnknownMaterial, UnsliceableGeometry
from .materials import MaterialDB
from .projection import ConformalLayout
from .surfaces import Surface, offset_shells

TRACE_SAMPLE_MM = 0.5  # matches the projection resample bound
SHELL_SAMPLE_MM = 2.0  # chordal sampling of substrate serpentine rows
PLANAR_X_STEP_MM = 0.1  # scanline sampling pitch for the planar slicer

VERTICAL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ToolSettings:
    tool: int
    material: str
    line_width: float = 0.4  # mm
    layer_height: float = 0.2  # mm
    speed: float = 40.0  # mm/s
    temp: float = 225.0  # degC

    def __post_init__(self):
        if self.line_width < 0.4 - 1e-9:
            raise InvariantViolation("line_width below the 0.4 mm nozzle reference")
        if self.layer_height <= 0 or self.speed <= 0:
            raise InvariantViolation("layer_height and speed must be > 0")


@dataclass(frozen=True)
class PrintSettings:
    tools: dict  # tool index -> ToolSettings
    travel_speed: float = 120.0  # mm/s
    tool_change_overhead: float = 10.0  # s
    infill_fraction: float = 0.3
    support_overhang_threshold: float = 45.0  # deg, measured from vertical
    support_spacing: float = 2.5  # mm between support lines

    def __post_init__(self):
        if not 0 <= self.infill_fraction <= 1:
            raise InvariantViolation("infill_fraction must lie in [0, 1]")
        if self.travel_speed <= 0:
            raise InvariantViolation("travel_speed must be > 0")

    @classmethod
    def from_db(cls, db: MaterialDB, **overrides):
        tools = {}
        for tool, name in sorted(db.tool_assignment.items()):
            m = db.materials[name]
            tools[tool] = ToolSettings(
                tool=tool, material=name,
                line_width=overrides.pop(f"line_width_{tool}", overrides.get("line_width", 0.4)),
                layer_height=overrides.get("layer_height", 0.2),
                speed=m.print_speed, temp=m.print_temp,
            )
        overrides.pop("line_width", None)
        overrides.pop("layer_height", None)
        return cls(tools=tools, **overrides)

    def tool_for_kind(self, db: MaterialDB, kind):
        return db.tool_for_kind(kind)


@dataclass(frozen=True)
class Segment:
    tool: int
    kind: str  # extrude | travel | tool_change
    start: tuple  # tip, mm
    end: tuple
    axis_start: tuple  # unit tool axis
    axis_end: tuple
    speed: float  # mm/s
    extrusion_volume: float  # mm^3, > 0 iff extrude
    role: str  # substrate | trace | support | none

    def length(self):
        return math.dist(self.start, self.end)


@dataclass(frozen=True)
class Toolpath:
    segments: tuple
    tool_change_overhead: float = 0.0  # s per tool_change segment

    def __len__(self):
        return len(self.segments)

    def extrude_volume(self, tool=None):
        return sum(s.extrusion_volume for s in self.segments
                   if s.kind == "extrude" and (tool is None or s.tool == tool))


@dataclass(frozen=True)
class PerMaterialEstimate:
    time_s: float
    mass_g: float
    filament_length_mm: float


@dataclass(frozen=True)
class PlanEstimate:
    per_material: dict  # material name -> PerMaterialEstimate
    total_time_s: float
    total_mass_g: float
    time_breakdown_s: dict  # substrate/traces/support/travel/tool_changes
    mass_breakdown_g: dict  # substrate/traces/support


def validate_toolpath(tp: Toolpath, tol=1e-6):
    """Chaining and volume invariants; raises InvariantViolation on failure."""
    prev = None
    for i, s in enumerate(tp.segments):
        if (s.extrusion_volume > 0) != (s.kind == "extrude"):
            raise InvariantViolation(f"segment {i}: extrusion_volume/kind mismatch")
        if prev is not None and s.kind != "tool_change":
            if math.dist(prev.end, s.start) > tol:
                raise InvariantViolation(
                    f"segment {i} does not chain from previous endpoint"
                )
        if s.kind != "tool_change":
            for ax in (s.axis_start, s.axis_end):
                if abs(math.dist((0, 0, 0), ax) - 1.0) > 1e-9:
                    raise InvariantViolation(f"segment {i}: tool axis not unit")
        prev = s


def _seg(tool, kind, p0, p1, a0, a1, speed, vol, role):
    return Segment(tool=tool, kind=kind,
                   start=tuple(float(x) for x in p0), end=tuple(float(x) for x in p1),
                   axis_start=tuple(float(x) for x in a0),
                   axis_end=tuple(float(x) for x in a1),
                   speed=speed, extrusion_volume=vol, role=role)


class _Chain:
    """Accumulates segments, inserting travel moves to keep the chain intact."""

    def __init__(self, travel_speed):
        self.travel_speed = travel_speed
        self.segments = []
        self._pos = None
        self._axis = None
        self._tool = None

    def move_to(self, tool, p, axis):
        if self._pos is not None and math.dist(self._pos, p) > 1e-6:
            self.segments.append(_seg(
                self._tool if self._tool is not None else tool, "travel",
                self._pos, p, self._axis, axis, self.travel_speed, 0.0, "none",
            ))
        self._pos, self._axis, self._tool = tuple(p), tuple(axis), tool

    def extrude_to(self, tool, p, axis, speed, vol, role):
        self.segments.append(_seg(tool, "extrude", self._pos, p,
                                  self._axis, axis, speed, vol, role))
        self._pos, self._axis, self._tool = tuple(p), tuple(axis), tool

    def polyline(self, tool, pts, axes, speed, bead_area, role):
        """Extrude along pts (first point reached by travel)."""
        self.move_to(tool, pts[0], axes[0])
        for p, a in zip(pts[1:], axes[1:]):
            d = math.dist(self._pos, p)
            if d < 1e-9:
                continue
            self.extrude_to(tool, p, a, speed, bead_area * d, role)


# ---------------------------------------------------------------------------
# Conformal planning
# ---------------------------------------------------------------------------

def _uv_mapper_for(conformal: ConformalLayout):
    from .projection import _Mapper
    x0, y0, x1, y1 = geom2d.bbox(conformal.source.substrate_outline)
    return _Mapper(conformal.surface, conformal.mode, ((x0 + x1) / 2, (y0 + y1) / 2))


def plan_conformal_substrate(surface: Surface, conformal: ConformalLayout,
                             settings: PrintSettings, db: MaterialDB) -> Toolpath:
    """Surface-parallel shells filling the substrate outline.

    Shell tip paths sit at normal offsets -(count-1)h ... 0 from the nominal
    surface (top-aligned; any thickness remainder is left at the mandrel
    side). Rows alternate between the layout x and y directions per shell.
    """
    tool = db.tool_for_kind("dielectric")
    ts = settings.tools[tool]
    lh, lw = ts.layer_height, ts.line_width
    count = int(math.floor(surface.thickness / lh + 1e-9))
    if count < 1:
        raise UnsliceableGeometry("substrate thinner than one layer")
    # spec guard: shells must fit the thickness and respect curvature
    offset_shells(surface, lh, count, direction=-1)

    mapper = _uv_mapper_for(conformal)
    outline = conformal.source.substrate_outline
    chain = _Chain(settings.travel_speed)
    bead = lw * lh

    for i in range(count):
        shell = surface.offset(-(count - 1 - i) * lh)
        angle = 0.0 if i % 2 == 0 else math.pi / 2
        passes = geom2d.raster_rows(outline, lw, angle)
        if not passes:
            raise UnsliceableGeometry("substrate outline narrower than one bead")
        for row in passes:
            for (a, b) in row:
                pts2d = geom2d.resample_polyline([a, b], SHELL_SAMPLE_MM)
                pts, axes = [], []
                for (x, y) in pts2d:
                    u, v = mapper.to_uv(x, y)
                    fr = shell.evaluate(u, v)
                    pts.append(tuple(fr.point))
                    axes.append(tuple(fr.normal))
                chain.polyline(tool, pts, axes, ts.speed, bead, "substrate")
    return Toolpath(segments=tuple(chain.segments))


def plan_conformal_traces(surface: Surface, conformal: ConformalLayout,
                          settings: PrintSettings, db: MaterialDB) -> Toolpath:
    """Conductive raster on the outermost shell, tool axis along the normal.

    Rows run along the layout raster direction with line-width spacing; each
    region narrower than one bead raises RasterFailure.
    """
    tool = db.tool_for_kind("conductor")
    ts = settings.tools[tool]
    lw, lh = ts.line_width, ts.layer_height
    top = surface.offset(lh)  # trace bead sits on the substrate top
    mapper = _uv_mapper_for(conformal)
    rdir = conformal.source.raster_direction
    angle = math.atan2(rdir[1], rdir[0])
    chain = _Chain(settings.travel_speed)
    bead = lw * lh

    for poly in conformal.source.conductive_regions:
        passes = geom2d.raster_rows(poly, lw, angle)
        if not passes:
            raise RasterFailure("conductive region narrower than one raster line")
        for row in passes:
            for (a, b) in row:
                pts2d = geom2d.resample_polyline([a, b], TRACE_SAMPLE_MM)
                pts, axes = [], []
                for (x, y) in pts2d:
                    u, v = mapper.to_uv(x, y)
                    fr = top.evaluate(u, v)
                    pts.append(tuple(fr.point))
                    axes.append(tuple(fr.normal))
                chain.polyline(tool, pts, axes, ts.speed, bead, "trace")
    return Toolpath(segments=tuple(chain.segments))


def plan_conformal(surface: Surface, conformal: ConformalLayout,
                   settings: PrintSettings, db: MaterialDB) -> Toolpath:
    substrate = plan_conformal_substrate(surface, conformal, settings, db)
    traces = plan_conformal_traces(surface, conformal, settings, db)
    return sequence_multimaterial(substrate, traces, settings)


# ---------------------------------------------------------------------------
# Planar baseline planning
# ---------------------------------------------------------------------------

class _HeightFields:
    """Vectorized z_top/z_bot height fields of the substrate solid, plate-shifted."""

    def __init__(self, surface: Surface, footprint_xy):
        self.surface = surface
        self.t = surface.thickness
        self.footprint = footprint_xy
        self._grid = None
        if surface.kind == "biquadratic":
            self._build_grid()
        xs = np.array([p[0] for p in footprint_xy])
        ys = np.array([p[1] for p in footprint_xy])
        zb = self.z_bot_raw(xs, ys)
        self.shift = float(np.min(zb))

    def _build_grid(self):
        from .projection import _Mapper
        surf = self.surface
        n = 96
        uu, vv = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n), indexing="ij")
        pts = np.zeros((n, n, 3))
        for i in range(n):
            for j in range(n):
                pts[i, j] = surf.evaluate(uu[i, j], vv[i, j]).point
        self._grid = pts

    def _z_interp(self, X, Y):
        """Nearest-triangle interpolation of z over the sampled biquadratic."""
        pts = self._grid.reshape(-1, 3)
        Z = np.full(np.shape(X), -np.inf, dtype=float)
        X = np.atleast_1d(np.asarray(X, dtype=float))
        Y = np.atleast_1d(np.asarray(Y, dtype=float))
        for k in range(X.size):
            d2 = (pts[:, 0] - X.flat[k]) ** 2 + (pts[:, 1] - Y.flat[k]) ** 2
            Z.flat[k] = pts[np.argmin(d2), 2]
        return Z

    def z_top_raw(self, X, Y):
        s = self.surface
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if s.kind == "plane":
            return np.full(np.broadcast(X, Y).shape, s.z0)
        if s.kind == "cylinder":
            return np.sqrt(np.maximum(s.radius ** 2 - X ** 2, 0.0)) * np.ones_like(Y)
        if s.kind == "sphere_cap":
            return np.sqrt(np.maximum(s.radius ** 2 - X ** 2 - Y ** 2, 0.0))
        return self._z_interp(X, Y)

    def z_bot_raw(self, X, Y):
        s = self.surface
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if s.kind == "plane":
            return np.full(np.broadcast(X, Y).shape, s.z0 - self.t)
        if s.kind == "cylinder":
            r = s.radius - self.t
            return np.sqrt(np.maximum(r ** 2 - X ** 2, 0.0)) * np.ones_like(Y)
        if s.kind == "sphere_cap":
            r = s.radius - self.t
            return np.sqrt(np.maximum(r ** 2 - X ** 2 - Y ** 2, 0.0))
        return self._z_interp(X, Y) - self.t

    def z_top(self, X, Y):
        return self.z_top_raw(X, Y) - self.shift

    def z_bot(self, X, Y):
        return self.z_bot_raw(X, Y) - self.shift

    def needs_support(self, X, Y, threshold_deg):
        """Shallow downward faces: slope from horizontal below 90-threshold."""
        eps = 0.05
        zb = self.z_bot(X, Y)
        gx = (self.z_bot(X + eps, Y) - self.z_bot(X - eps, Y)) / (2 * eps)
        gy = (self.z_bot(X, Y + eps) - self.z_bot(X, Y - eps)) / (2 * eps)
        slope = np.degrees(np.arctan(np.hypot(gx, gy)))
        return (slope < (90.0 - threshold_deg)) & (zb > 1e-6)


def _silhouette(frames):
    return [(float(fr.point[0]), float(fr.point[1])) for fr in frames]


def _mask_intervals(xs, mask):
    """Contiguous True runs of mask -> (x_enter, x_exit) midpoint-refined."""
    out = []
    n = len(xs)
    i = 0
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            xa = xs[i] if i == 0 else 0.5 * (xs[i - 1] + xs[i])
            xb = xs[j] if j == n - 1 else 0.5 * (xs[j] + xs[j + 1])
            out.append((float(xa), float(xb)))
            i = j + 1
        else:
            i += 1
    return out


def plan_planar(surface: Surface, conformal: ConformalLayout,
                settings: PrintSettings, db: MaterialDB) -> Toolpath:
    substrate = plan_planar_substrate(surface, conformal, settings, db)
    traces = plan_planar_traces(surface, conformal, settings, db)
    return sequence_multimaterial(substrate, traces, settings)


def plan_planar_substrate(surface: Surface, conformal: ConformalLayout,
                          settings: PrintSettings, db: MaterialDB) -> Toolpath:
    """Horizontal slicing of the substrate shell: perimeter, infill, supports."""
    tool = db.tool_for_kind("dielectric")
    ts = settings.tools[tool]
    lh, lw = ts.layer_height, ts.line_width
    bead = lw * lh

    footprint = _silhouette([conformal.surface.evaluate(u, v)
                             for (u, v) in conformal.outline_uv])
    if geom2d.polygon_area(footprint) < 0:
        footprint = list(reversed(footprint))
    if abs(geom2d.polygon_area(footprint)) < 1e-6:
        raise UnsliceableGeometry("substrate footprint has no area")
    hf = _HeightFields(surface, footprint)

    x0, y0, x1, y1 = geom2d.bbox(footprint)
    z_max = float(np.max(hf.z_top(
        np.linspace(x0, x1, 64)[None, :], np.linspace(y0, y1, 64)[:, None])))
    n_layers = int(math.ceil(z_max / lh - 1e-9))
    if n_layers < 1:
        raise UnsliceableGeometry("substrate has no height to slice")

    chain = _Chain(settings.travel_speed)
    up = (0.0, 0.0, 1.0)

    infill_spacing = lw / settings.infill_fraction if settings.infill_fraction > 0 else None
    n_rows = max(2, int(math.floor((y1 - y0) / lw)) + 1)

    for k in range(n_layers):
        z_mid = (k + 0.5) * lh
        z_tip = (k + 1) * lh
        xs = np.arange(x0, x1 + PLANAR_X_STEP_MM, PLANAR_X_STEP_MM)

        # per-row solid intervals
        rows = []
        for j in range(n_rows):
            y = y0 + lw / 2 + j * lw
            if y > y1 - lw / 2 + 1e-9:
                break
            spans = geom2d.scanline_intervals(footprint, y)
            if not spans:
                rows.append((y, []))
                continue
            zt = hf.z_top(xs, y)
            zb = hf.z_bot(xs, y)
            inside = np.zeros(len(xs), dtype=bool)
            for (xa, xb) in spans:
                inside |= (xs >= xa) & (xs <= xb)
            mask = inside & (zb <= z_mid) & (z_mid <= zt)
            rows.append((y, _mask_intervals(xs, mask)))

        # perimeter: left/right edge chains of consecutive rows
        runs = _perimeter_loops(rows)
        for loop in runs:
            pts = [(x, y, z_tip) for (x, y) in loop]
            chain.polyline(tool, pts, [up] * len(pts), ts.speed, bead, "substrate")

        # rectilinear infill between perimeters; boundary rows of each run are
        # already covered by the perimeter connectors
        if infill_spacing is not None:
            flip = k % 2 == 1
            for j, (y, ivs) in enumerate(rows):
                if infill_spacing > lw and (j % max(1, round(infill_spacing / lw))) != 0:
                    continue
                for (xa, xb) in ivs:
                    covered_prev = j > 0 and _covers(rows[j - 1][1], xa, xb)
                    covered_next = j + 1 < len(rows) and _covers(rows[j + 1][1], xa, xb)
                    if not (covered_prev and covered_next):
                        continue  # boundary row: perimeter already deposits here
                    xa2, xb2 = xa + lw, xb - lw  # stay inside the perimeter
                    if xb2 - xa2 < lw / 2:
                        continue
                    a, b = ((xb2, y, z_tip), (xa2, y, z_tip)) if flip else \
                           ((xa2, y, z_tip), (xb2, y, z_tip))
                    chain.move_to(tool, a, up)
                    chain.extrude_to(tool, b, up, ts.speed, bead * (xb2 - xa2), "substrate")
                    flip = not flip

        # sparse support columns under shallow overhangs, below the part
        sy = y0 + settings.support_spacing / 2
        while sy < y1:
            spans = geom2d.scanline_intervals(footprint, sy)
            if spans:
                zb = hf.z_bot(xs, sy)
                need = hf.needs_support(xs, sy, settings.support_overhang_threshold)
                inside = np.zeros(len(xs), dtype=bool)
                for (xa, xb) in spans:
                    inside |= (xs >= xa) & (xs <= xb)
                mask = inside & need & (z_mid < zb - lh / 2)
                for (xa, xb) in _mask_intervals(xs, mask):
                    if xb - xa < lw:
                        continue
                    chain.move_to(tool, (xa, sy, z_tip), up)
                    chain.extrude_to(tool, (xb, sy, z_tip), up,
                                     ts.speed, bead * (xb - xa), "support")
            sy += settings.support_spacing

    if not chain.segments:
        raise UnsliceableGeometry("planar slicing produced no material")
    return Toolpath(segments=tuple(chain.segments))


def _perimeter_loops(rows):
    """Closed outline loops from per-row intervals (single-run rows only).

    Connects left endpoints bottom-to-top and right endpoints top-to-bottom
    per contiguous run of rows with intervals. Multiple intervals per row
    (disjoint islands) produce one loop per island column.
    """
    loops = []
    max_parts = max((len(ivs) for _, ivs in rows), default=0)
    for part in range(max_parts):
        run = []
        for y, ivs in rows:
            if len(ivs) > part:
                run.append((y, ivs[part]))
            elif run:
                loops.append(_loop_from_run(run))
                run = []
        if run:
            loops.append(_loop_from_run(run))
    return [lp for lp in loops if lp]


def _covers(intervals, xa, xb):
    """True when the intervals overlap the [xa, xb] span at all."""
    return any(b > xa and a < xb for (a, b) in intervals)


def _loop_from_run(run):
    if not run:
        return []
    left = [(iv[0], y) for y, iv in run]
    right = [(iv[1], y) for y, iv in reversed(run)]
    if len(run) == 1:
        return [left[0], right[0]]  # single row: one pass, no return stroke
    return left + right + [left[0]]


def plan_planar_traces(surface: Surface, conformal: ConformalLayout,
                       settings: PrintSettings, db: MaterialDB) -> Toolpath:
    """Trace raster over the silhouette of the projected regions, stair-stepped z."""
    tool = db.tool_for_kind("conductor")
    ts = settings.tools[tool]
    sub_ts = settings.tools[db.tool_for_kind("dielectric")]
    lw, lh = ts.line_width, ts.layer_height
    sub_lh = sub_ts.layer_height
    bead = lw * lh

    footprint = _silhouette([conformal.surface.evaluate(u, v)
                             for (u, v) in conformal.outline_uv])
    hf = _HeightFields(surface, footprint)
    rdir = conformal.source.raster_direction
    angle = math.atan2(rdir[1], rdir[0])
    up = (0.0, 0.0, 1.0)
    chain = _Chain(settings.travel_speed)

    def stair(x, y):
        zt = float(hf.z_top(np.array([x]), np.array([y]))[0])
        return math.floor(zt / sub_lh + 0.5) * sub_lh + lh

    for frames in conformal.regions_3d:
        sil = _silhouette(frames)
        if abs(geom2d.polygon_area(sil)) < (lw * lw):
            raise RasterFailure("projected region silhouette narrower than one bead")
        passes = geom2d.raster_rows(sil, lw, angle)
        if not passes:
            raise RasterFailure("projected region narrower than one raster line")
        for row in passes:
            for (a, b) in row:
                pts2d = geom2d.resample_polyline([a, b], TRACE_SAMPLE_MM)
                pts = [(x, y, stair(x, y)) for (x, y) in pts2d]
                chain.polyline(tool, pts, [up] * len(pts), ts.speed, bead, "trace")
    return Toolpath(segments=tuple(chain.segments))


# ---------------------------------------------------------------------------
# Sequencing and estimation
# ---------------------------------------------------------------------------

def sequence_multimaterial(substrate: Toolpath, traces: Toolpath,
                           settings: PrintSettings) -> Toolpath:
    """Substrate first, one tool change, then traces; chaining maintained.

    Sequencing an already-sequenced path with empty traces is an identity, so
    the operation is idempotent in the estimate.
    """
    segs = list(substrate.segments)
    if traces.segments:
        sub_tool = segs[-1].tool if segs else traces.segments[0].tool
        trace_tool = traces.segments[0].tool
        if segs and sub_tool != trace_tool:
            p = segs[-1].end
            a = segs[-1].axis_end
            segs.append(_seg(trace_tool, "tool_change", p, p, a, a, 0.0, 0.0, "none"))
        first = traces.segments[0]
        if segs and math.dist(segs[-1].end, first.start) > 1e-6:
            segs.append(_seg(trace_tool, "travel", segs[-1].end, first.start,
                             segs[-1].axis_end, first.axis_start,
                             settings.travel_speed, 0.0, "none"))
        segs.extend(traces.segments)
    return Toolpath(segments=tuple(segs),
                    tool_change_overhead=settings.tool_change_overhead)


def estimate(toolpath: Toolpath, db: MaterialDB) -> PlanEstimate:
    """Time/mass/filament accounting with a category breakdown.

    time = sum(length/speed) + tool-change overheads; mass = sum of extrusion
    volumes times material density. Totals equal the sums of their parts by
    construction.
    """
    per_time, per_mass, per_fil = {}, {}, {}
    t_break = {"substrate": 0.0, "traces": 0.0, "support": 0.0,
               "travel": 0.0, "tool_changes": 0.0}
    m_break = {"substrate": 0.0, "traces": 0.0, "support": 0.0}
    role_key = {"substrate": "substrate", "trace": "traces", "support": "support"}

    for s in toolpath.segments:
        try:
            mat = db.material_for_tool(s.tool)
        except UnknownMaterial:
            raise
        name = mat.name
        if s.kind == "tool_change":
            dt = toolpath.tool_change_overhead
            t_break["tool_changes"] += dt
        else:
            dt = s.length() / s.speed if s.speed > 0 else 0.0
            if s.kind == "travel":
                t_break["travel"] += dt
            else:
                t_break[role_key[s.role]] += dt
        per_time[name] = per_time.get(name, 0.0) + dt
        if s.kind == "extrude":
            g = s.extrusion_volume * mat.density / 1000.0  # mm^3 * g/cm^3
            per_mass[name] = per_mass.get(name, 0.0) + g
            per_fil[name] = per_fil.get(name, 0.0) + s.extrusion_volume / mat.filament_area_mm2
            m_break[role_key[s.role]] += g

    per_material = {
        name: PerMaterialEstimate(
            time_s=per_time.get(name, 0.0),
            mass_g=per_mass.get(name, 0.0),
            filament_length_mm=per_fil.get(name, 0.0),
        )
        for name in sorted(per_time)
    }
    return PlanEstimate(
        per_material=per_material,
        total_time_s=sum(per_time.values()),
        total_mass_g=sum(per_mass.values()),
        time_breakdown_s=t_break,
        mass_breakdown_g=m_break,
    )
