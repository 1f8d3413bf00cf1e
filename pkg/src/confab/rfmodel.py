"""Desk-scale S11 prediction for the patch: cavity mode spectrum + per-mode RLC.

Each cavity mode (m, n) resonates at

    f_mn = c / (2 sqrt(eps_eff)) * sqrt((m/L_e)^2 + (n/W_e)^2)

with effective lengths extended by the fringing formulas. A mode contributes a
parallel RLC branch whose resonant resistance is the slot-radiation edge
resistance reduced by the loss ratio Q_total/Q_rad and scaled by the feed
coupling; branches sum in series with an optional feed-line inductance, and
S11 = 20 log10 |(Z - 50)/(Z + 50)| clamped at the -80 dB floor.

Loss bookkeeping per mode: Q_diel = 1/tan_delta at f_mn, Q_cond = h/skin_depth
with the conductivity resolved against the deposition (raster) direction, and
Q_rad from the stored-energy/slot-conductance estimate. Lowering a conductivity
component therefore reshapes only the depths of the modes whose currents cross
it, not their frequencies.

The UWB design has no prediction path here on purpose: a lumped desk model has
no validity at 3-16 GHz on a doubly-curved substrate, so the pipeline only
ingests measured curves for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import C0, PatchDims, effective_permittivity, fringing_extension, slot_conductance
from .errors import InvariantViolation, NoOverlap, S11FormatError
from .materials import MaterialModel, effective_conductivity, eval_permittivity, skin_depth

S11_FLOOR_DB = -80.0
EPS0 = 8.8541878128e-12


@dataclass(frozen=True)
class Mode:
    m: int
    n: int
    f: float  # Hz
    current_dir: tuple  # unit 2D vector, layout frame (x across W, y along L)
    q_rad: float
    q_diel: float
    q_cond: float
    q_total: float
    r_edge_rad: float  # radiation-only edge resistance, ohm


@dataclass(frozen=True)
class ModeSpectrum:
    modes: tuple

    def __post_init__(self):
        fs = [md.f for md in self.modes]
        if any(f <= 0 for f in fs):
            raise InvariantViolation("mode frequencies must be > 0")
        if any(b <= a for a, b in zip(fs, fs[1:])):
            raise InvariantViolation("mode spectrum must be sorted by frequency")

    def fundamental(self):
        for md in self.modes:
            if (md.m, md.n) == (1, 0):
                return md
        return self.modes[0]


@dataclass(frozen=True)
class S11Curve:
    freqs: np.ndarray  # Hz, strictly increasing
    s11_db: np.ndarray  # <= 0
    source_label: str = ""

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        s = np.asarray(self.s11_db, dtype=float)
        if f.shape != s.shape or f.ndim != 1:
            raise InvariantViolation("freqs and s11_db must be equal-length vectors")
        if np.any(np.diff(f) <= 0):
            raise InvariantViolation("frequency grid must be strictly increasing")
        if np.any(s > 1e-9):
            raise InvariantViolation("S11 must not exceed 0 dB")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "s11_db", s)


@dataclass(frozen=True)
class ResonanceRow:
    f_a: float
    f_b: float
    offset_hz: float
    depth_a_db: float
    depth_b_db: float
    depth_diff_db: float


@dataclass(frozen=True)
class ComparisonMetrics:
    resonances: tuple
    rms_db: float
    band: tuple  # (f_lo, f_hi) of the overlap


def cavity_modes(dims: PatchDims, dielectric: MaterialModel, conductor=None,
                 raster_direction=(0.0, 1.0), m_max=2, n_max=2) -> ModeSpectrum:
    """Cavity resonances of the patch with per-mode quality factors.

    m counts half-waves along L, n along W. Mode currents: along L for (m, 0),
    along W for (0, n), the normalized diagonal otherwise. The conductor loss
    uses the conductivity resolved between the current and the deposition
    direction; omit the conductor for a loss-free (infinite Q_cond) spectrum.
    """
    er_t, _ = eval_permittivity(dielectric, dims.f_target)
    ee_l = effective_permittivity(er_t, dims.h, dims.L)
    dl_w = fringing_extension(ee_l, dims.h, dims.L)
    L_e = dims.L + 2 * dims.delta_L
    W_e = dims.W + 2 * dl_w

    modes = []
    for m in range(m_max + 1):
        for n in range(n_max + 1):
            if m + n < 1:
                continue
            f_mn = C0 / (2 * math.sqrt(dims.eps_eff)) * math.sqrt(
                (m / (L_e * 1e-3)) ** 2 + (n / (W_e * 1e-3)) ** 2
            )
            if n == 0:
                cur = (0.0, 1.0)  # along L
            elif m == 0:
                cur = (1.0, 0.0)  # along W
            else:
                ax, ay = n / W_e, m / L_e
                nn = math.hypot(ax, ay)
                cur = (ax / nn, ay / nn)

            er, tand = eval_permittivity(dielectric, f_mn)
            q_diel = 1.0 / tand if tand > 0 else math.inf

            if conductor is not None:
                c_par = cur[0] * raster_direction[0] + cur[1] * raster_direction[1]
                c_perp = cur[0] * -raster_direction[1] + cur[1] * raster_direction[0]
                sigma = effective_conductivity(
                    conductor.conductivity_tensor, (c_par, c_perp, 0.0)
                )
                q_cond = dims.h / skin_depth(f_mn, sigma)
            else:
                q_cond = math.inf

            # slot conductance of the edges perpendicular to the current
            g1 = (slot_conductance(dims.W, f_mn, dims.h) * cur[1] ** 2
                  + slot_conductance(dims.L, f_mn, dims.h) * cur[0] ** 2)
            q_rad = (2 * math.pi * f_mn) * EPS0 * er * (dims.L * 1e-3) * (dims.W * 1e-3) \
                / (4 * g1 * dims.h * 1e-3)
            inv_q = 1.0 / q_rad
            if math.isfinite(q_diel):
                inv_q += 1.0 / q_diel
            if math.isfinite(q_cond):
                inv_q += 1.0 / q_cond
            modes.append(Mode(
                m=m, n=n, f=f_mn, current_dir=cur,
                q_rad=q_rad, q_diel=q_diel, q_cond=q_cond,
                q_total=1.0 / inv_q, r_edge_rad=1.0 / (2 * g1),
            ))
    modes.sort(key=lambda md: (md.f, md.m, md.n))
    return ModeSpectrum(modes=tuple(modes))


def feed_coupling(mode: Mode, dims: PatchDims):
    """Feed coupling factor in [0, 1] for an inset feed at the W centerline.

    cos^2 placement along L; along W the cosine is averaged over the finite
    feed-line width (a sinc factor), which keeps even-n modes from coupling
    at exactly unity.
    """
    cx = math.cos(mode.m * math.pi * dims.feed_inset / dims.L)
    arg = mode.n * math.pi * dims.feed_line_width / (2 * dims.W)
    width_avg = 1.0 if arg == 0 else math.sin(arg) / arg
    cy = math.cos(mode.n * math.pi * 0.5) * width_avg
    return (cx * cy) ** 2


def impedance_from_spectrum(spectrum: ModeSpectrum, dims: PatchDims, freqs,
                            feed_inductance_nh_per_mm=0.0, feed_length_mm=0.0):
    """Input impedance: series sum of coupled mode RLC branches + feed inductance."""
    f = np.asarray(freqs, dtype=float)
    z = np.zeros(f.shape, dtype=complex)
    for md in spectrum.modes:
        coup = feed_coupling(md, dims)
        if coup <= 0:
            continue
        r = md.r_edge_rad * (md.q_total / md.q_rad) * coup
        z += r / (1 + 1j * md.q_total * (f / md.f - md.f / f))
    z += 1j * 2 * np.pi * f * feed_inductance_nh_per_mm * 1e-9 * feed_length_mm
    return z


def s11_db_from_impedance(z, z0=50.0):
    """Reflection magnitude in dB, floored at -80 dB."""
    gamma = np.abs((z - z0) / (z + z0))
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(gamma)
    return np.maximum(db, S11_FLOOR_DB)


def s11_model(dims: PatchDims, materials, raster_direction, freqs,
              feed_inductance_nh_per_mm=0.0, m_max=2, n_max=2,
              label="model") -> S11Curve:
    """Predicted S11 of the patch over the given frequency grid.

    `materials` is the MaterialDB; its assigned dielectric sets eps/tan_delta
    and its conductor (if any) the anisotropic loss. The raster direction is
    the planar deposition direction of the conductive fill, layout frame.
    """
    dielectric = materials.by_kind("dielectric")
    try:
        conductor = materials.by_kind("conductor")
    except Exception:
        conductor = None
    spectrum = cavity_modes(dims, dielectric, conductor, raster_direction,
                            m_max=m_max, n_max=n_max)
    # feed line spans the substrate margin; only matters with nonzero inductance
    feed_len = dims.feed_inset + 10.0
    z = impedance_from_spectrum(spectrum, dims, freqs,
                                feed_inductance_nh_per_mm, feed_len)
    return S11Curve(freqs=np.asarray(freqs, dtype=float),
                    s11_db=s11_db_from_impedance(z), source_label=label)


def find_resonances(curve: S11Curve, threshold_db=-6.0):
    """Local minima below the threshold: list of (freq, depth)."""
    s = curve.s11_db
    f = curve.freqs
    out = []
    for i in range(1, len(s) - 1):
        if s[i] <= threshold_db and s[i] < s[i - 1] and s[i] <= s[i + 1]:
            if out and s[i] == out[-1][1]:
                continue  # flat-bottomed dip, keep the first sample
            out.append((float(f[i]), float(s[i])))
    return out


def resample(curve: S11Curve, grid):
    return S11Curve(
        freqs=np.asarray(grid, dtype=float),
        s11_db=np.minimum(np.interp(grid, curve.freqs, curve.s11_db), 0.0),
        source_label=curve.source_label,
    )


def compare_s11(a: S11Curve, b: S11Curve) -> ComparisonMetrics:
    """Resonance offsets/depth differences plus band-wide RMS over the overlap.

    Both curves are resampled to the coarser of the two grids restricted to
    the overlapping band before any metric is computed.
    """
    lo = max(a.freqs[0], b.freqs[0])
    hi = min(a.freqs[-1], b.freqs[-1])
    if hi <= lo:
        raise NoOverlap(f"no overlapping frequency support ({lo:g} vs {hi:g} Hz)")

    step_a = np.median(np.diff(a.freqs))
    step_b = np.median(np.diff(b.freqs))
    src = a if step_a >= step_b else b
    grid = src.freqs[(src.freqs >= lo) & (src.freqs <= hi)]
    if len(grid) < 3:
        raise NoOverlap("overlap region contains fewer than 3 samples")
    ra, rb = resample(a, grid), resample(b, grid)

    res_a = find_resonances(ra)
    res_b = find_resonances(rb)
    rows = []
    used = set()
    for fa, da in res_a:
        best = None
        for j, (fb, db_) in enumerate(res_b):
            if j in used:
                continue
            if best is None or abs(fb - fa) < abs(res_b[best][0] - fa):
                best = j
        # pair only within a 10% frequency window; farther minima are
        # different modes, not a displaced version of this one
        if best is None or abs(res_b[best][0] - fa) > 0.10 * fa:
            continue
        used.add(best)
        fb, db_ = res_b[best]
        rows.append(ResonanceRow(
            f_a=fa, f_b=fb, offset_hz=fb - fa,
            depth_a_db=da, depth_b_db=db_, depth_diff_db=db_ - da,
        ))
    rows.sort(key=lambda r: r.f_a)
    rms = float(np.sqrt(np.mean((ra.s11_db - rb.s11_db) ** 2)))
    return ComparisonMetrics(resonances=tuple(rows), rms_db=rms,
                             band=(float(lo), float(hi)))


# ---------------------------------------------------------------------------
# S11 file ingestion and emission
# ---------------------------------------------------------------------------

_TS_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def read_touchstone(path) -> S11Curve:
    """Read a 1-port Touchstone (.s1p) file; RI, MA, and DB variants."""
    unit = 1e9
    fmt = "ma"
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("!")[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                toks = line[1:].lower().split()
                for t in toks:
                    if t in _TS_UNITS:
                        unit = _TS_UNITS[t]
                    elif t in ("ri", "ma", "db"):
                        fmt = t
                continue
            toks = line.split()
            if len(toks) < 3:
                raise S11FormatError(f"{path}:{lineno}: expected 'freq v1 v2'")
            try:
                f, v1, v2 = (float(t) for t in toks[:3])
            except ValueError:
                raise S11FormatError(f"{path}:{lineno}: non-numeric data")
            if fmt == "ri":
                mag = math.hypot(v1, v2)
                db = 20 * math.log10(max(mag, 1e-12))
            elif fmt == "ma":
                db = 20 * math.log10(max(v1, 1e-12))
            else:
                db = v1
            rows.append((f * unit, min(db, 0.0)))
    if not rows:
        raise S11FormatError(f"{path}: no data rows")
    rows.sort()
    return S11Curve(
        freqs=np.array([r[0] for r in rows]),
        s11_db=np.array([max(r[1], S11_FLOOR_DB) for r in rows]),
        source_label=str(path),
    )


def read_s11_csv(path) -> S11Curve:
    """Two-column CSV (frequency Hz, S11 dB); a header row is skipped."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) < 2:
                raise S11FormatError(f"{path}:{lineno}: expected 'freq_hz,s11_db'")
            try:
                f, db = float(parts[0]), float(parts[1])
            except ValueError:
                if not rows:
                    continue  # header row
                raise S11FormatError(f"{path}:{lineno}: non-numeric data")
            rows.append((f, min(max(db, S11_FLOOR_DB), 0.0)))
    if not rows:
        raise S11FormatError(f"{path}: no data rows")
    rows.sort()
    return S11Curve(
        freqs=np.array([r[0] for r in rows]),
        s11_db=np.array([r[1] for r in rows]),
        source_label=str(path),
    )


def load_s11(path) -> S11Curve:
    p = str(path).lower()
    if p.endswith(".s1p"):
        return read_touchstone(path)
    return read_s11_csv(path)


def write_s11_csv(curve: S11Curve, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("freq_hz,s11_db\n")
        for f, db in zip(curve.freqs, curve.s11_db):
            fh.write(f"{f:.1f},{db:.4f}\n")
