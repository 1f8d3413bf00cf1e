"""Job configuration: one YAML document wiring design, surface, settings, machine.

Angles are degrees and every length/frequency field carries its unit in the
name at the file boundary; radians and raw Hz/mm internally. A job file looks
like:

    name: patch_conformal
    design:
      kind: patch              # or uwb
      f_target_hz: 3.0e9
      substrate_h_mm: 1.5
      margin_mm: 10.0
    surface:
      kind: cylinder           # plane | cylinder | sphere_cap | biquadratic
      radius_mm: 40.0
      arc_angle_deg: 180.0
      length_mm: 60.0
      thickness_mm: 1.5
    projection:
      mode: arc_length         # or normal_drop
    materials: default         # or a path to a materials YAML
    settings: { ... }          # printing overrides, all optional
    machine: { ... }           # joint limits and speeds, all optional
    predict: { f_start_hz: 2.0e9, f_stop_hz: 6.0e9, step_hz: 5.0e6 }
    compare: [{label: ..., path: ...}]   # optional measured S11 sources

Biquadratic control grids are 27 whitespace-separated numbers (9 points,
row-major).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import yaml

from .design import UwbParams
from .errors import ConfigParseError
from .kinematics import MachineConfig
from .materials import MaterialDB, load_material_db
from .pathplan import PrintSettings
from .surfaces import Surface, make_surface


@dataclass(frozen=True)
class DesignSpec:
    kind: str  # patch | uwb
    f_target: float = 3.0e9  # Hz
    substrate_h: float = 1.5  # mm
    margin: float = 10.0  # mm
    uwb: UwbParams | None = None


@dataclass(frozen=True)
class PredictSpec:
    f_start: float = 2.0e9
    f_stop: float = 6.0e9
    step: float = 5.0e6
    feed_inductance_nh_per_mm: float = 0.0


@dataclass(frozen=True)
class JobConfig:
    name: str
    design: DesignSpec
    surface: Surface
    projection_mode: str
    materials: MaterialDB
    settings: PrintSettings
    machine: MachineConfig
    predict: PredictSpec
    compare_sources: tuple = ()  # (label, path) pairs
    measured_dimensions: str | None = None  # CSV: sample,feature,measured_mm
    output: str | None = None  # default artifact directory; CLI --out overrides
    base_dir: str = "."


def _num(node, key, default=None, path=None, required=False):
    if key not in node:
        if required:
            raise ConfigParseError("required field missing", path, key)
        return default
    try:
        return float(node[key])
    except (TypeError, ValueError):
        raise ConfigParseError(f"expected a number, got {node[key]!r}", path, key)


def _parse_design(node, path) -> DesignSpec:
    kind = node.get("kind")
    if kind not in ("patch", "uwb"):
        raise ConfigParseError(f"design.kind must be patch or uwb, got {kind!r}", path,
                               "design.kind")
    f_target = _num(node, "f_target_hz", 3.0e9, path)
    if f_target <= 0:
        raise ConfigParseError("f_target_hz must be > 0", path, "design.f_target_hz")
    uwb = None
    if kind == "uwb":
        axes = node.get("radiator_axes_mm", [12.0, 15.0])
        stub = node.get("ground_stub_mm", [8.0, 10.0])
        uwb = UwbParams(
            radiator_ellipse_axes=tuple(float(v) for v in axes),
            feed_gap=_num(node, "feed_gap_mm", 0.3, path),
            feed_line_width=_num(node, "feed_line_width_mm", 3.0, path),
            ground_stub_dims=tuple(float(v) for v in stub),
            taper_exponent=_num(node, "taper_exponent", 1.0, path),
        )
    return DesignSpec(
        kind=kind,
        f_target=f_target,
        substrate_h=_num(node, "substrate_h_mm", 1.5, path),
        margin=_num(node, "margin_mm", 10.0, path),
        uwb=uwb,
    )


def _parse_surface(node, path) -> Surface:
    kind = node.get("kind")
    thickness = _num(node, "thickness_mm", 1.5, path)
    if kind == "plane":
        return make_surface("plane", thickness,
                            width=_num(node, "width_mm", 100.0, path),
                            length=_num(node, "length_mm", 100.0, path),
                            z0=_num(node, "z_mm", thickness, path))
    if kind == "cylinder":
        return make_surface("cylinder", thickness,
                            radius=_num(node, "radius_mm", 40.0, path),
                            arc_angle=math.radians(_num(node, "arc_angle_deg", 180.0, path)),
                            length=_num(node, "length_mm", 60.0, path))
    if kind == "sphere_cap":
        return make_surface("sphere_cap", thickness,
                            radius=_num(node, "radius_mm", 60.0, path),
                            cap_angle=math.radians(_num(node, "cap_angle_deg", 45.0, path)))
    if kind == "biquadratic":
        raw = node.get("control_grid")
        if isinstance(raw, str):
            vals = [float(t) for t in raw.split()]
        elif isinstance(raw, list):
            vals = [float(t) for row in raw for t in (row if isinstance(row, list) else [row])]
        else:
            raise ConfigParseError("biquadratic needs control_grid", path, "surface.control_grid")
        if len(vals) != 27:
            raise ConfigParseError(
                f"control_grid needs 27 numbers (9 points), got {len(vals)}",
                path, "surface.control_grid",
            )
        grid = [[vals[(3 * i + j) * 3:(3 * i + j) * 3 + 3] for j in range(3)] for i in range(3)]
        return make_surface("biquadratic", thickness, grid=grid)
    raise ConfigParseError(f"unknown surface kind {kind!r}", path, "surface.kind")


def _parse_machine(node, path) -> MachineConfig:
    def rng(key, default):
        v = node.get(key, default)
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise ConfigParseError("expected [lo, hi]", path, f"machine.{key}")
        return (float(v[0]), float(v[1]))

    def vec3(key, default):
        v = node.get(key, default)
        if not (isinstance(v, (list, tuple)) and len(v) == 3):
            raise ConfigParseError("expected [x, y, z]", path, f"machine.{key}")
        return tuple(float(x) for x in v)

    b_lo, b_hi = rng("b_range_deg", [-45.0, 45.0])
    return MachineConfig(
        x_range=rng("x_range_mm", [-200.0, 200.0]),
        y_range=rng("y_range_mm", [-200.0, 200.0]),
        z_range=rng("z_range_mm", [-50.0, 250.0]),
        b_range=(math.radians(b_lo), math.radians(b_hi)),
        bed_pivot=vec3("bed_pivot_mm", [0.0, 0.0, 0.0]),
        part_origin=vec3("part_origin_mm", [0.0, 0.0, 0.0]),
        max_xyz_speed=_num(node, "max_xyz_speed_mm_s", 300.0, path),
        max_b_speed=math.radians(_num(node, "max_b_speed_deg_s", 180.0, path)),
        max_c_speed=math.radians(_num(node, "max_c_speed_deg_s", 360.0, path)),
        min_feed_mm_min=_num(node, "min_feed_mm_min", 1.0, path),
        tool_change_time_s=_num(node, "tool_change_time_s", 10.0, path),
    )


def load_job(path) -> JobConfig:
    """Parse and validate a job file; all referenced files must exist."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigParseError("file not found", path)
    except yaml.YAMLError as e:
        raise ConfigParseError(f"invalid YAML: {e}", path)
    if not isinstance(doc, dict):
        raise ConfigParseError("job file must be a mapping", path)

    base_dir = os.path.dirname(os.path.abspath(path))

    mats = doc.get("materials", "default")
    if mats in (None, "default"):
        db = load_material_db()
    else:
        mpath = mats if os.path.isabs(mats) else os.path.join(base_dir, mats)
        db = load_material_db(mpath)

    design = _parse_design(doc.get("design") or {}, path)
    surface = _parse_surface(doc.get("surface") or {}, path)

    proj = (doc.get("projection") or {}).get("mode", "arc_length")
    if proj not in ("arc_length", "normal_drop"):
        raise ConfigParseError(f"unknown projection mode {proj!r}", path, "projection.mode")

    snode = doc.get("settings") or {}
    settings = PrintSettings.from_db(
        db,
        layer_height=_num(snode, "layer_height_mm", 0.2, path),
        travel_speed=_num(snode, "travel_speed_mm_s", 120.0, path),
        tool_change_overhead=_num(snode, "tool_change_overhead_s", 10.0, path),
        infill_fraction=_num(snode, "infill_fraction", 0.3, path),
        support_overhang_threshold=_num(snode, "support_overhang_threshold_deg", 45.0, path),
        support_spacing=_num(snode, "support_spacing_mm", 2.5, path),
    )

    machine = _parse_machine(doc.get("machine") or {}, path)
    machine = MachineConfig(**{
        **{f: getattr(machine, f) for f in machine.__dataclass_fields__},
        "tool_change_time_s": settings.tool_change_overhead,
    })

    pnode = doc.get("predict") or {}
    predict = PredictSpec(
        f_start=_num(pnode, "f_start_hz", 2.0e9, path),
        f_stop=_num(pnode, "f_stop_hz", 6.0e9, path),
        step=_num(pnode, "step_hz", 5.0e6, path),
        feed_inductance_nh_per_mm=_num(pnode, "feed_inductance_nh_per_mm", 0.0, path),
    )
    if predict.f_stop <= predict.f_start or predict.step <= 0:
        raise ConfigParseError("invalid predict band", path, "predict")

    sources = []
    for item in doc.get("compare") or []:
        label = item.get("label") or os.path.basename(str(item.get("path")))
        spath = str(item.get("path"))
        if not os.path.isabs(spath):
            spath = os.path.join(base_dir, spath)
        if not os.path.exists(spath):
            raise ConfigParseError(f"compare source not found: {spath}", path, "compare")
        sources.append((label, spath))

    measured = doc.get("measured_dimensions")
    if measured:
        measured = str(measured)
        if not os.path.isabs(measured):
            measured = os.path.join(base_dir, measured)
        if not os.path.exists(measured):
            raise ConfigParseError(f"measured_dimensions file not found: {measured}",
                                   path, "measured_dimensions")

    return JobConfig(
        name=str(doc.get("name") or os.path.splitext(os.path.basename(path))[0]),
        design=design,
        surface=surface,
        projection_mode=proj,
        materials=db,
        settings=settings,
        machine=machine,
        predict=predict,
        compare_sources=tuple(sources),
        measured_dimensions=measured,
        output=str(doc["output"]) if doc.get("output") else None,
        base_dir=base_dir,
    )


def bundled_job_path(name):
    return os.path.join(os.path.dirname(__file__), "data", "jobs", name)
