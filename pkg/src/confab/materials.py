"""Material models: frequency-tabulated dielectrics and anisotropic printed conductors.

Dielectrics carry a (frequency, eps_r, tan_delta) table interpolated piecewise
linearly. Printed conductors carry a conductivity tensor expressed in the
trace-local frame: parallel to the deposition direction, transverse in-plane,
and through the layer stack (vertical), the deposition direction being the
best-conducting one.

All values are immutable after load; everything here is a pure function, safe
to share across sweep workers.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import yaml

from .errors import (
    ConfigParseError,
    EmptyTable,
    InvariantViolation,
    NonDielectric,
    NonUnitDirection,
    UnknownMaterial,
)

# Per-material fallbacks applied by load_material_db when a field is omitted.
# Order-of-magnitude values consistent with published filament characterization;
# overridable in the config file and never asserted as ground truth.
MATERIAL_DEFAULTS = {
    "dielectric": {
        "density_g_cm3": 1.24,
        "filament_diameter_mm": 1.75,
        "print_temp_c": 225.0,
        "print_speed_mm_s": 40.0,
    },
    "conductor": {
        "density_g_cm3": 1.8,
        "filament_diameter_mm": 1.75,
        "print_temp_c": 145.0,
        "print_speed_mm_s": 5.0,
    },
}

DEFAULT_DB_ENV_VAR = "CONFAB_MATERIALS"


@dataclass(frozen=True)
class MaterialModel:
    name: str
    kind: str  # "dielectric" or "conductor"
    permittivity_table: tuple = ()  # rows of (freq_hz, eps_r, tan_delta)
    conductivity_tensor: tuple | None = None  # (sigma_par, sigma_perp, sigma_z) S/m
    density: float = 1.0  # g/cm^3
    filament_diameter: float = 1.75  # mm
    print_temp: float = 200.0  # degC
    print_speed: float = 20.0  # mm/s

    def __post_init__(self):
        if self.kind not in ("dielectric", "conductor"):
            raise InvariantViolation(f"{self.name}: kind must be dielectric or conductor")
        if self.density <= 0:
            raise InvariantViolation(f"{self.name}: density must be > 0")
        if not 0 < self.filament_diameter <= 3:
            raise InvariantViolation(f"{self.name}: filament_diameter outside (0, 3] mm")
        if self.kind == "dielectric":
            if not self.permittivity_table:
                raise InvariantViolation(f"{self.name}: dielectric needs a permittivity_table")
            freqs = [row[0] for row in self.permittivity_table]
            if any(b <= a for a, b in zip(freqs, freqs[1:])):
                raise InvariantViolation(
                    f"{self.name}: permittivity_table frequencies must be strictly ascending"
                )
            for f, er, td in self.permittivity_table:
                if er < 1:
                    raise InvariantViolation(f"{self.name}: eps_r < 1 at {f:g} Hz")
                if td < 0:
                    raise InvariantViolation(f"{self.name}: tan_delta < 0 at {f:g} Hz")
        else:
            t = self.conductivity_tensor
            if t is None or len(t) != 3:
                raise InvariantViolation(f"{self.name}: conductor needs a 3-component tensor")
            if any(s <= 0 for s in t):
                raise InvariantViolation(f"{self.name}: conductivity components must be > 0")
            if t[0] < t[1]:
                raise InvariantViolation(
                    f"{self.name}: sigma_parallel must be >= sigma_transverse"
                )

    @property
    def filament_area_mm2(self):
        return math.pi * (self.filament_diameter / 2.0) ** 2


@dataclass(frozen=True)
class MaterialDB:
    materials: dict = field(default_factory=dict)  # name -> MaterialModel
    tool_assignment: dict = field(default_factory=dict)  # tool index -> name

    def __post_init__(self):
        kinds = []
        for tool, name in self.tool_assignment.items():
            if name not in self.materials:
                raise InvariantViolation(f"tool {tool} assigned to unknown material '{name}'")
            kinds.append(self.materials[name].kind)
        if kinds.count("conductor") > 1 or kinds.count("dielectric") > 1:
            raise InvariantViolation(
                "at most one conductor and one dielectric may be assigned per program"
            )

    def material_for_tool(self, tool):
        try:
            return self.materials[self.tool_assignment[tool]]
        except KeyError:
            raise UnknownMaterial(f"no material assigned to tool {tool}") from None

    def tool_for_kind(self, kind):
        for tool, name in self.tool_assignment.items():
            if self.materials[name].kind == kind:
                return tool
        raise UnknownMaterial(f"no {kind} assigned to any tool")

    def by_kind(self, kind):
        for tool, name in self.tool_assignment.items():
            if self.materials[name].kind == kind:
                return self.materials[name]
        raise UnknownMaterial(f"no {kind} assigned to any tool")


def eval_permittivity(model: MaterialModel, f: float):
    """Interpolate (eps_r, tan_delta) at frequency f (Hz).

    Piecewise linear in frequency, exact at table nodes. Out-of-range queries
    clamp to the nearest node so extrapolation stays predictable.
    """
    if model.kind != "dielectric":
        raise NonDielectric(f"{model.name} is not a dielectric")
    table = model.permittivity_table
    if not table:
        raise EmptyTable(f"{model.name}: empty permittivity table")
    if len(table) == 1 or f <= table[0][0]:
        return table[0][1], table[0][2]
    if f >= table[-1][0]:
        return table[-1][1], table[-1][2]
    for (f0, e0, t0), (f1, e1, t1) in zip(table, table[1:]):
        if f0 <= f <= f1:
            w = (f - f0) / (f1 - f0)
            return e0 + w * (e1 - e0), t0 + w * (t1 - t0)
    raise AssertionError("unreachable")


def effective_conductivity(tensor, current_dir):
    """Directional conductivity seen by a current in the trace-local frame.

    Quadratic-form mixing: sigma_eff = s_par*d_par^2 + s_perp*d_perp^2 + s_z*d_z^2.
    Smooth, symmetric under direction flip, and exact in the axis-aligned cases.
    """
    dx, dy, dz = current_dir
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if abs(norm - 1.0) > 1e-9:
        raise NonUnitDirection(f"|current_dir| = {norm:.12f}, expected 1")
    sp, st, sz = tensor
    return sp * dx * dx + st * dy * dy + sz * dz * dz


def skin_depth(f, sigma):
    """Skin depth in mm: delta = 1/sqrt(pi*f*mu0*sigma)."""
    mu0 = 4e-7 * math.pi
    return 1e3 / math.sqrt(math.pi * f * mu0 * sigma)


def _parse_material(name, node, path):
    if not isinstance(node, dict):
        raise ConfigParseError("material entry must be a mapping", path, name)
    kind = node.get("kind")
    if kind not in ("dielectric", "conductor"):
        raise ConfigParseError(
            f"kind must be 'dielectric' or 'conductor', got {kind!r}", path, f"{name}.kind"
        )
    defaults = MATERIAL_DEFAULTS[kind]

    def num(key, fallback=None):
        v = node.get(key, fallback)
        if v is None:
            return None
        try:
            return float(v)
        except (TypeError, ValueError):
            raise ConfigParseError(f"expected a number, got {v!r}", path, f"{name}.{key}")

    table = ()
    tensor = None
    if kind == "dielectric":
        rows = node.get("permittivity")
        if not isinstance(rows, list) or not rows:
            raise ConfigParseError(
                "dielectric needs a 'permittivity' list of [freq_hz, eps_r, tan_delta] rows",
                path,
                f"{name}.permittivity",
            )
        parsed = []
        for i, row in enumerate(rows):
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise ConfigParseError(
                    "each permittivity row is [freq_hz, eps_r, tan_delta]",
                    path,
                    f"{name}.permittivity[{i}]",
                )
            parsed.append(tuple(float(x) for x in row))
        table = tuple(parsed)
    else:
        sp = num("sigma_parallel_s_per_m")
        if sp is None:
            raise ConfigParseError("conductor needs sigma_parallel_s_per_m", path, name)
        st = num("sigma_transverse_s_per_m", sp / 4.0)
        sz = num("sigma_vertical_s_per_m", sp / 16.0)
        tensor = (sp, st, sz)

    try:
        return MaterialModel(
            name=name,
            kind=kind,
            permittivity_table=table,
            conductivity_tensor=tensor,
            density=num("density_g_cm3", defaults["density_g_cm3"]),
            filament_diameter=num("filament_diameter_mm", defaults["filament_diameter_mm"]),
            print_temp=num("print_temp_c", defaults["print_temp_c"]),
            print_speed=num("print_speed_mm_s", defaults["print_speed_mm_s"]),
        )
    except InvariantViolation:
        raise


def load_material_db(path=None) -> MaterialDB:
    """Load a material database from a YAML config file.

    Resolution order: explicit path, the CONFAB_MATERIALS environment variable,
    then the bundled default database. Field names carry units (print_temp_c,
    sigma_parallel_s_per_m, ...); omitted fields fill from MATERIAL_DEFAULTS.
    """
    if path is None:
        path = os.environ.get(DEFAULT_DB_ENV_VAR) or default_db_path()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigParseError("file not found", path)
    except yaml.YAMLError as e:
        raise ConfigParseError(f"invalid YAML: {e}", path)
    if not isinstance(doc, dict) or "materials" not in doc:
        raise ConfigParseError("expected a top-level 'materials' mapping", path)

    materials = {}
    for name, node in doc["materials"].items():
        materials[name] = _parse_material(str(name), node, path)

    tools = {}
    for key, name in (doc.get("tools") or {}).items():
        try:
            idx = int(key)
        except (TypeError, ValueError):
            raise ConfigParseError(f"tool index must be an integer, got {key!r}", path, "tools")
        if name not in materials:
            raise ConfigParseError(f"tool {idx} references unknown material '{name}'", path, "tools")
        tools[idx] = str(name)

    return MaterialDB(materials=materials, tool_assignment=tools)


def default_db_path():
    return os.path.join(os.path.dirname(__file__), "data", "materials.yaml")
