"""G-code emission, parsing, and machine-state simulation.

Canonical emission: every numeric word at fixed 5 decimal places, axis words
X Y Z B C (rotary in degrees, C unwrapped), relative extrusion (M83), one
M109 per tool activation, comments after ';'. Emission is the canonical form:
emit -> parse -> emit is byte-identical.

Supported words: G0 G1 G28 G21, M82 M83, M104 M109, T<n>, X Y Z B C E F S;
arcs (G2/G3) and coordinate tricks (G91/G92) are unsupported by design, since
all curvature is polyline-approximated upstream. Unknown M-codes are harmless
to the machine model and parse into comment records; unknown G-codes raise.

Timing conventions (must match retime):
  desktop_mm_min  F is XYZ distance / duration in mm/min; rotary-only moves
                  carry their rotary angle (degrees treated as mm) at the
                  same F semantics.
  inverse_time    F is 1/duration in min^-1 per move (G93 style).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from .errors import GcodeSyntaxError, UnsupportedCode
from .kinematics import XYZ_EPS_MM, MachineConfig, MachinePose, retime


@dataclass(frozen=True)
class Move:
    g: int  # 0 or 1
    x: float | None = None
    y: float | None = None
    z: float | None = None
    b: float | None = None  # degrees in the file
    c: float | None = None
    e: float | None = None
    f: float | None = None


@dataclass(frozen=True)
class ToolChange:
    index: int


@dataclass(frozen=True)
class SetTemp:
    temp_c: float
    wait: bool  # True for M109


@dataclass(frozen=True)
class ExtrusionMode:
    relative: bool


@dataclass(frozen=True)
class Comment:
    text: str  # raw line, including the ';'


@dataclass(frozen=True)
class Home:
    pass


@dataclass(frozen=True)
class UnitsMM:
    pass


@dataclass(frozen=True)
class GProgram:
    instructions: tuple


@dataclass(frozen=True)
class SimReport:
    total_time_s: float
    filament_mm: dict  # tool -> mm
    mass_g: dict  # tool -> g
    max_joint_speed: dict  # joint letter -> units/s (mm/s, deg/s)
    limit_violations: tuple  # (instruction index, joint, value)
    final_pose: MachinePose
    move_count: int


def _fmt(v):
    return f"{v:.5f}"


def config_hash(cfg: MachineConfig, settings=None):
    base = repr(cfg) + (repr(settings) if settings is not None else "")
    return hashlib.sha1(base.encode()).hexdigest()[:12]


def render(prog: GProgram) -> str:
    """Canonical text for an instruction sequence."""
    out = []
    for ins in prog.instructions:
        if isinstance(ins, Comment):
            out.append(ins.text)
        elif isinstance(ins, UnitsMM):
            out.append("G21")
        elif isinstance(ins, Home):
            out.append("G28")
        elif isinstance(ins, ExtrusionMode):
            out.append("M83" if ins.relative else "M82")
        elif isinstance(ins, ToolChange):
            out.append(f"T{ins.index}")
        elif isinstance(ins, SetTemp):
            out.append(f"{'M109' if ins.wait else 'M104'} S{_fmt(ins.temp_c)}")
        elif isinstance(ins, Move):
            words = [f"G{ins.g}"]
            for letter in "xyzbc":
                v = getattr(ins, letter)
                if v is not None:
                    words.append(f"{letter.upper()}{_fmt(v)}")
            if ins.e is not None:
                words.append(f"E{_fmt(ins.e)}")
            if ins.f is not None:
                words.append(f"F{_fmt(ins.f)}")
            out.append(" ".join(words))
        else:
            raise TypeError(f"unknown instruction {ins!r}")
    return "\n".join(out) + "\n"


def emit(toolpath, poses, cfg: MachineConfig, db, settings, flavor="desktop_mm_min",
         label="job") -> str:
    """Retimed G-code for a solved toolpath.

    poses: per-segment (pose_start, pose_end) from kinematics.solve_toolpath.
    Deterministic byte-exact output for fixed inputs; header comments carry
    the job label and a config hash.
    """
    if flavor not in ("desktop_mm_min", "inverse_time"):
        raise ValueError(f"unknown flavor '{flavor}'")
    ins = [
        Comment(f"; confab job={label}"),
        Comment(f"; config {config_hash(cfg, settings)}"),
        Comment(f"; flavor {flavor}"),
        UnitsMM(),
        Home(),
        ExtrusionMode(relative=True),
    ]
    current_tool = None
    pose = MachinePose(0.0, 0.0, 0.0, 0.0, 0.0)

    def feed_for(p0, p1, speed):
        fc = retime(p0, p1, speed, cfg)
        return fc.inverse_time_f if flavor == "inverse_time" else fc.feed_mm_min

    def move(p0, p1, g, speed, e=None):
        if (math.dist((p0.x, p0.y, p0.z), (p1.x, p1.y, p1.z)) < 1e-12
                and abs(p1.b - p0.b) < 1e-12 and abs(p1.c - p0.c) < 1e-12):
            return p0
        f = feed_for(p0, p1, speed)
        ins.append(Move(g=g, x=p1.x, y=p1.y, z=p1.z,
                        b=math.degrees(p1.b), c=math.degrees(p1.c), e=e, f=f))
        return p1

    for seg, (p0, p1) in zip(toolpath.segments, poses):
        if seg.kind == "tool_change" or current_tool != seg.tool:
            tool = seg.tool
            ins.append(ToolChange(index=tool))
            ins.append(SetTemp(temp_c=settings.tools[tool].temp, wait=True))
            current_tool = tool
            if seg.kind == "tool_change":
                pose = p1
                continue
        # close any gap to the segment start (should be rare: chained paths)
        pose = move(pose, p0, 0, settings.travel_speed)
        if seg.kind == "travel":
            pose = move(pose, p1, 0, seg.speed)
        else:
            mat = db.material_for_tool(seg.tool)
            e = seg.extrusion_volume / mat.filament_area_mm2
            pose = move(pose, p1, 1, seg.speed, e=e)
    ins.append(Comment("; end"))
    return render(GProgram(instructions=tuple(ins)))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_SUPPORTED_G = {0, 1, 21, 28}


def parse(text) -> GProgram:
    """Tokenize supported words into typed records.

    Pure comment lines are preserved verbatim; inline comments become
    separate Comment records after their instruction. Unknown M-codes are
    preserved as comments; unknown or unsupported G-codes raise.
    """
    ins = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.lstrip().startswith(";"):
            ins.append(Comment(line))
            continue
        code, semi, tail = line.partition(";")
        words = []
        for tok in code.split():
            letter = tok[0].upper()
            num = tok[1:]
            if not num:
                raise GcodeSyntaxError(f"bare word '{tok}'", line=lineno)
            try:
                value = float(num)
            except ValueError:
                raise GcodeSyntaxError(f"malformed word '{tok}'", line=lineno,
                                       column=code.index(tok) + 1)
            words.append((letter, value, tok))
        if not words:
            continue
        head_letter, head_value, head_tok = words[0]
        args = {l: v for (l, v, _) in words[1:]}

        if head_letter == "G":
            g = int(head_value)
            if g in (2, 3):
                raise UnsupportedCode(f"G{g} (arcs)", line=lineno)
            if g not in _SUPPORTED_G:
                raise UnsupportedCode(f"G{g}", line=lineno)
            if g == 21:
                ins.append(UnitsMM())
            elif g == 28:
                ins.append(Home())
            else:
                ins.append(Move(
                    g=g,
                    x=args.get("X"), y=args.get("Y"), z=args.get("Z"),
                    b=args.get("B"), c=args.get("C"),
                    e=args.get("E"), f=args.get("F"),
                ))
        elif head_letter == "M":
            m = int(head_value)
            if m == 82:
                ins.append(ExtrusionMode(relative=False))
            elif m == 83:
                ins.append(ExtrusionMode(relative=True))
            elif m in (104, 109):
                ins.append(SetTemp(temp_c=args.get("S", 0.0), wait=(m == 109)))
            else:
                ins.append(Comment(f"; {line.strip()}"))
        elif head_letter == "T":
            ins.append(ToolChange(index=int(head_value)))
        else:
            raise GcodeSyntaxError(f"unexpected word '{head_tok}'", line=lineno)
        if semi:
            ins.append(Comment(f";{tail}"))
    return GProgram(instructions=tuple(ins))


def validate_program(prog: GProgram):
    """Program-shape invariants; returns a list of issue strings."""
    issues = []
    homed = units = False
    ext_mode_set = False
    temp_set = set()
    tool = None
    for i, ins in enumerate(prog.instructions):
        if isinstance(ins, UnitsMM):
            units = True
        elif isinstance(ins, Home):
            homed = True
        elif isinstance(ins, ExtrusionMode):
            ext_mode_set = True
        elif isinstance(ins, ToolChange):
            tool = ins.index
        elif isinstance(ins, SetTemp):
            if tool is not None:
                temp_set.add(tool)
        elif isinstance(ins, Move):
            if not (homed and units):
                issues.append(f"instruction {i}: motion before Home/UnitsMM")
                homed = units = True  # report once
            if ins.e is not None and not ext_mode_set:
                issues.append(f"instruction {i}: E word before any extrusion mode")
                ext_mode_set = True
            if ins.e is not None and tool is not None and tool not in temp_set:
                issues.append(f"instruction {i}: tool {tool} extrudes before its temperature is set")
                temp_set.add(tool)
    return issues


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate(prog: GProgram, cfg: MachineConfig, db) -> SimReport:
    """Machine-state walk: time, filament/mass, joint limits and speeds.

    Total by construction: violations become report rows, never exceptions.
    Timing follows the emission conventions (see module docstring); tool
    changes cost cfg.tool_change_time_s each.
    """
    pos = {"X": 0.0, "Y": 0.0, "Z": 0.0, "B": 0.0, "C": 0.0}
    feed = None
    relative_e = False
    tool = 0
    tool_selected = None  # first selection costs nothing; changes do
    last_e_abs = 0.0
    time_s = 0.0
    filament = {}
    max_speed = {k: 0.0 for k in "XYZBC"}
    violations = []
    inverse_time = False
    moves = 0

    limits = {
        "X": cfg.x_range, "Y": cfg.y_range, "Z": cfg.z_range,
        "B": tuple(math.degrees(v) for v in cfg.b_range), "C": None,
    }

    for idx, ins in enumerate(prog.instructions):
        if isinstance(ins, Comment):
            if "flavor inverse_time" in ins.text:
                inverse_time = True
            continue
        if isinstance(ins, (UnitsMM, SetTemp)):
            continue
        if isinstance(ins, Home):
            pos = {k: 0.0 for k in pos}
            continue
        if isinstance(ins, ExtrusionMode):
            relative_e = ins.relative
            last_e_abs = 0.0
            continue
        if isinstance(ins, ToolChange):
            if tool_selected is not None and ins.index != tool_selected:
                time_s += cfg.tool_change_time_s
            tool_selected = tool = ins.index
            try:
                db.material_for_tool(tool)
            except Exception:
                violations.append((idx, "T", float(tool)))
            continue

        # Move
        moves += 1
        target = dict(pos)
        for letter in "XYZBC":
            v = getattr(ins, letter.lower())
            if v is not None:
                target[letter] = v
        if ins.f is not None:
            feed = ins.f

        for letter, rng in limits.items():
            if rng and not (rng[0] - 1e-6 <= target[letter] <= rng[1] + 1e-6):
                violations.append((idx, letter, target[letter]))

        dxyz = math.dist(
            (pos["X"], pos["Y"], pos["Z"]), (target["X"], target["Y"], target["Z"])
        )
        drot = math.hypot(target["B"] - pos["B"], target["C"] - pos["C"])
        dt = 0.0
        if feed and feed > 0:
            if inverse_time:
                dt = 60.0 / feed
            elif dxyz >= XYZ_EPS_MM:
                dt = dxyz / feed * 60.0
            elif drot > 1e-12:
                dt = drot / feed * 60.0
        time_s += dt
        if dt > 0:
            for letter in "XYZ":
                max_speed[letter] = max(max_speed[letter], abs(target[letter] - pos[letter]) / dt)
            for letter in "BC":
                max_speed[letter] = max(max_speed[letter], abs(target[letter] - pos[letter]) / dt)

        if ins.e is not None:
            de = ins.e if relative_e else ins.e - last_e_abs
            if not relative_e:
                last_e_abs = ins.e
            filament[tool] = filament.get(tool, 0.0) + de
        pos = target

    mass = {}
    for t, mm in filament.items():
        try:
            m = db.material_for_tool(t)
        except Exception:
            continue  # already reported as a violation row; stay total
        mass[t] = mm * m.filament_area_mm2 * m.density / 1000.0
    return SimReport(
        total_time_s=time_s,
        filament_mm=filament,
        mass_g=mass,
        max_joint_speed=max_speed,
        limit_violations=tuple(violations),
        final_pose=MachinePose(pos["X"], pos["Y"], pos["Z"],
                               math.radians(pos["B"]), math.radians(pos["C"])),
        move_count=moves,
    )
