"""Parametric planar antenna layouts: inset-fed rectangular patch and UWB monopole.

The patch is synthesized from a target frequency and substrate properties with
the standard closed-form design equations; the inset depth is solved so the
resonant edge resistance scaled by cos^2(pi*inset/L) hits 50 ohm. The UWB
monopole is a clean-room parametric outline: elliptical radiator, power-law
tapered feed transition, coplanar ground stubs.

Layout coordinates: x across the patch width W, y along the resonant length L,
feed entering from y < 0. Conductive fill defaults to rastering along L, the
resonant-current direction of the fundamental mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from . import geom2d
from .errors import InvariantViolation, NonPhysical, SelfIntersection

C0 = 299792458.0  # speed of light, m/s
MU0 = 4e-7 * math.pi


@dataclass(frozen=True)
class PatchDims:
    W: float  # patch width, mm
    L: float  # patch length, mm
    h: float  # substrate thickness, mm
    eps_eff: float
    delta_L: float  # fringing extension, mm
    feed_inset: float  # mm
    feed_line_width: float  # mm
    f_target: float  # Hz

    def __post_init__(self):
        if not (self.W > self.L > 0):
            raise InvariantViolation("patch requires W > L > 0")
        if self.h <= 0:
            raise InvariantViolation("substrate thickness must be > 0")
        if self.eps_eff < 1:
            raise InvariantViolation("eps_eff must be >= 1")
        if not (0 <= self.feed_inset < self.L / 2):
            raise InvariantViolation("feed_inset must lie in [0, L/2)")
        if self.delta_L <= 0:
            raise InvariantViolation("delta_L must be > 0")


@dataclass(frozen=True)
class UwbParams:
    radiator_ellipse_axes: tuple = (12.0, 15.0)  # (a, b) semi-axes, mm
    feed_gap: float = 0.3  # mm
    feed_line_width: float = 3.0  # mm
    ground_stub_dims: tuple = (8.0, 10.0)  # (w, l), mm
    taper_exponent: float = 1.0

    def __post_init__(self):
        lengths = (*self.radiator_ellipse_axes, self.feed_gap,
                   self.feed_line_width, *self.ground_stub_dims)
        if any(v <= 0 for v in lengths):
            raise InvariantViolation("all UWB lengths must be > 0")
        if not 0.5 <= self.taper_exponent <= 3:
            raise InvariantViolation("taper_exponent must lie in [0.5, 3]")


@dataclass(frozen=True)
class PlanarLayout:
    substrate_outline: list  # closed CCW polygon, mm
    conductive_regions: list  # list of closed polygons, mm
    feed_point: tuple  # (x, y), mm
    raster_direction: tuple  # unit 2D vector
    design_kind: str  # "patch" or "uwb"
    features: dict = field(default_factory=dict)  # name -> ((x0,y0),(x1,y1))

    def __post_init__(self):
        for poly in [self.substrate_outline, *self.conductive_regions]:
            if not geom2d.polygon_is_simple(poly):
                raise InvariantViolation("layout polygon is self-intersecting")
        for poly in self.conductive_regions:
            if not geom2d.polygon_contains_polygon(self.substrate_outline, poly, tol=1e-6):
                raise InvariantViolation("conductive region extends outside the substrate")
        if not any(
            geom2d.point_on_polygon_boundary(self.feed_point, poly)
            for poly in self.conductive_regions
        ):
            raise InvariantViolation("feed_point must lie on a conductive-region boundary")
        n = math.hypot(*self.raster_direction)
        if abs(n - 1) > 1e-9:
            raise InvariantViolation("raster_direction must be a unit vector")


def effective_permittivity(er, h_mm, w_mm):
    """Quasi-static effective permittivity of a microstrip of width w on height h."""
    return (er + 1) / 2 + (er - 1) / 2 * (1 + 12 * h_mm / w_mm) ** -0.5


def fringing_extension(ee, h_mm, w_mm):
    """Open-end length extension delta_L of a microstrip edge, mm."""
    r = w_mm / h_mm
    return 0.412 * h_mm * (ee + 0.3) * (r + 0.264) / ((ee - 0.258) * (r + 0.8))


_eps_eff = effective_permittivity
_delta_l = fringing_extension


def slot_conductance(edge_mm, f, h_mm):
    """Single-slot radiation conductance G1 = l/(120*lambda0) * (1 - (k0*h)^2/24)."""
    lam = C0 / f  # m
    k0h = 2 * math.pi / lam * h_mm * 1e-3
    return (edge_mm * 1e-3) / (120 * lam) * (1 - k0h * k0h / 24)


def microstrip_width_for_z0(z0, er, h_mm):
    """Standard closed-form synthesis of microstrip width for a target impedance."""
    A = z0 / 60 * math.sqrt((er + 1) / 2) + (er - 1) / (er + 1) * (0.23 + 0.11 / er)
    w_h = 8 * math.exp(A) / (math.exp(2 * A) - 2)
    if w_h > 2:
        B = 377 * math.pi / (2 * z0 * math.sqrt(er))
        w_h = (2 / math.pi) * (
            B - 1 - math.log(2 * B - 1)
            + (er - 1) / (2 * er) * (math.log(B - 1) + 0.39 - 0.61 / er)
        )
    return w_h * h_mm


def resonant_edge_resistance(W, L, h, f, er, tan_delta=0.0, sigma_eff=None):
    """Loss-inclusive input resistance at the radiating edge of the fed mode.

    Radiation resistance 1/(2*G1) reduced by the ratio of total to radiative
    quality factor; with no loss terms this degenerates to the pure radiation
    resistance. Lengths in mm, f in Hz.
    """
    g1 = slot_conductance(W, f, h)
    r_rad = 1.0 / (2 * g1)
    eps0 = 8.8541878128e-12
    q_rad = (2 * math.pi * f) * eps0 * er * (L * 1e-3) * (W * 1e-3) / (4 * g1 * h * 1e-3)
    inv_q = 1.0 / q_rad
    if tan_delta > 0:
        inv_q += tan_delta
    if sigma_eff is not None:
        delta_mm = 1e3 / math.sqrt(math.pi * f * MU0 * sigma_eff)
        inv_q += delta_mm / h
    q_total = 1.0 / inv_q
    return r_rad * q_total / q_rad


def synthesize_patch(f_target, eps_r, h, tan_delta=0.0, sigma_eff=None,
                     feed_line_width=None) -> PatchDims:
    """Size a rectangular inset-fed patch for resonance at f_target.

    W = (c/2f)*sqrt(2/(eps_r+1)); eps_eff and delta_L from the standard
    closed forms; L = c/(2f*sqrt(eps_eff)) - 2*delta_L. The inset is solved
    against the edge resistance including dielectric/conductor loss when
    those are supplied (they shift the match point noticeably for printed
    conductors).

    Args:
        f_target: design frequency, Hz.
        eps_r: substrate relative permittivity at f_target.
        h: substrate thickness, mm (0 < h <= 5).
        tan_delta: substrate loss tangent at f_target (0 disables).
        sigma_eff: conductor effective conductivity along the resonant
            current, S/m (None disables conductor loss).
        feed_line_width: mm; default synthesizes a 50-ohm microstrip width.
    """
    if f_target <= 0:
        raise NonPhysical("f_target must be > 0")
    if eps_r < 1:
        raise NonPhysical("eps_r must be >= 1")
    if not 0 < h <= 5:
        raise NonPhysical("h must lie in (0, 5] mm")

    w_mm = C0 / (2 * f_target) * math.sqrt(2 / (eps_r + 1)) * 1e3
    ee = _eps_eff(eps_r, h, w_mm)
    dl = _delta_l(ee, h, w_mm)
    l_mm = C0 / (2 * f_target * math.sqrt(ee)) * 1e3 - 2 * dl
    if l_mm <= 0:
        raise NonPhysical(f"resulting patch length {l_mm:.3f} mm is non-physical")

    r_edge = resonant_edge_resistance(w_mm, l_mm, h, f_target, eps_r,
                                      tan_delta, sigma_eff)
    cos2 = 50.0 / r_edge
    inset = 0.0
    if cos2 < 1.0:
        inset = l_mm / math.pi * math.acos(math.sqrt(cos2))

    if feed_line_width is None:
        feed_line_width = microstrip_width_for_z0(50.0, eps_r, h)

    return PatchDims(W=w_mm, L=l_mm, h=h, eps_eff=ee, delta_L=dl,
                     feed_inset=inset, feed_line_width=feed_line_width,
                     f_target=f_target)


def patch_layout(dims: PatchDims, margin: float) -> PlanarLayout:
    """Realize PatchDims as a planar layout: patch, inset feed, substrate outline.

    The feed line runs from the substrate edge (y = -margin) into the inset
    notch; notch clearance each side of the line equals half the line width.
    The substrate outline is the patch bounding box expanded by margin.
    """
    W, L = dims.W, dims.L
    wf = dims.feed_line_width
    inset = dims.feed_inset
    gap = wf / 2.0  # notch clearance each side of the feed line
    b = wf / 2.0 + gap

    if margin <= 0 and inset > 0:
        raise InvariantViolation("margin must be > 0 so the feed reaches the substrate edge")
    if 2 * b >= W:
        raise InvariantViolation("feed notch wider than the patch")

    conductor = [
        (-W / 2, 0.0),
        (-b, 0.0),
        (-b, inset),
        (-wf / 2, inset),
        (-wf / 2, -margin),
        (wf / 2, -margin),
        (wf / 2, inset),
        (b, inset),
        (b, 0.0),
        (W / 2, 0.0),
        (W / 2, L),
        (-W / 2, L),
    ]
    if inset == 0:
        # degenerate notch: drop the collinear notch vertices
        conductor = [
            (-W / 2, 0.0), (-wf / 2, 0.0), (-wf / 2, -margin),
            (wf / 2, -margin), (wf / 2, 0.0),
            (W / 2, 0.0), (W / 2, L), (-W / 2, L),
        ]
    outline = [
        (-W / 2 - margin, -margin),
        (W / 2 + margin, -margin),
        (W / 2 + margin, L + margin),
        (-W / 2 - margin, L + margin),
    ]
    features = {
        "patch_W": ((-W / 2, L / 2), (W / 2, L / 2)),
        "patch_L": ((W / 4, 0.0), (W / 4, L)),
        "feed_width": ((-wf / 2, -margin / 2), (wf / 2, -margin / 2)),
        "feed_inset": ((0.0, 0.0), (0.0, inset)) if inset > 0 else None,
    }
    features = {k: v for k, v in features.items() if v is not None}

    return PlanarLayout(
        substrate_outline=outline,
        conductive_regions=[conductor],
        feed_point=(0.0, -margin),
        raster_direction=(0.0, 1.0),
        design_kind="patch",
        features=features,
    )


def patch_conductor_area(dims: PatchDims, margin: float):
    """Closed-form conductor area: W*L plus the feed extension minus the notch."""
    wf = dims.feed_line_width
    gap = wf / 2.0
    return dims.W * dims.L + wf * margin - 2 * gap * dims.feed_inset


def uwb_layout(params: UwbParams, margin: float = 5.0) -> PlanarLayout:
    """Elliptical UWB monopole with a power-law tapered feed and ground stubs.

    The taper half-width grows from feed_line_width/2 at the base as
    (y/y_top)^taper_exponent until it meets the ellipse at half its width;
    exponent 1 gives straight taper edges. A quarter-wavelength heuristic at
    3 GHz warns (does not fail) when the radiator is too small to cover the
    bottom of the band.
    """
    a, b = params.radiator_ellipse_axes
    wf = params.feed_line_width
    p = params.taper_exponent

    w_top = a  # taper meets the ellipse at half its width
    if wf / 2 >= w_top:
        raise SelfIntersection("feed line wider than the taper top")

    phi_star = math.asin(w_top / (2 * a))  # ellipse parameter where taper lands
    # ellipse: x = a*sin(phi), y = cy - b*cos(phi); phi = 0 at the bottom
    n_taper = 24
    n_ell = 96

    # taper top height: where the ellipse point at x = w_top/2 sits
    # position the ellipse bottom at the taper top
    y_top_guess = None
    # The taper ends on the ellipse at (w_top/2, y_t); choose the ellipse
    # center so the ellipse bottom clears the taper: cy = y_t + b*cos(phi_star)
    # with y_t picked as 0.35*b for a compact transition.
    y_t = 0.35 * b
    cy = y_t + b * math.cos(phi_star)

    def taper_halfwidth(y):
        return wf / 2 + (w_top / 2 - wf / 2) * (y / y_t) ** p

    right_taper = [(taper_halfwidth(y_t * k / n_taper), y_t * k / n_taper)
                   for k in range(n_taper + 1)]
    left_taper = [(-x, y) for (x, y) in right_taper]

    ell = []
    for k in range(1, 2 * n_ell):
        phi = phi_star + (2 * math.pi - 2 * phi_star) * k / (2 * n_ell)
        ell.append((a * math.sin(phi), cy - b * math.cos(phi)))

    radiator = [(0.0, 0.0)] + right_taper[1:] + ell + list(reversed(left_taper[1:]))
    if not geom2d.polygon_is_simple(radiator):
        raise SelfIntersection("taper crosses the radiator outline")

    sw, sl = params.ground_stub_dims
    gx = wf / 2 + params.feed_gap
    stub_r = [(gx, 0.0), (gx + sw, 0.0), (gx + sw, sl), (gx, sl)]
    stub_l = [(-gx - sw, 0.0), (-gx, 0.0), (-gx, sl), (-gx - sw, sl)]

    height = cy + b  # radiator top above the feed base
    quarter_wave = C0 / 3e9 / 4 * 1e3  # mm
    if height < quarter_wave:
        warnings.warn(
            f"radiator height {height:.1f} mm is below a quarter wavelength at 3 GHz "
            f"({quarter_wave:.1f} mm); low-band coverage is unlikely",
            stacklevel=2,
        )

    pts = radiator + stub_r + stub_l
    x0, y0, x1, y1 = geom2d.bbox(pts)
    outline = [
        (x0 - margin, y0 - margin),
        (x1 + margin, y0 - margin),
        (x1 + margin, y1 + margin),
        (x0 - margin, y1 + margin),
    ]
    features = {
        "radiator_a": ((-a, cy), (a, cy)),
        "radiator_b": ((0.0, cy - b), (0.0, cy + b)),
        "feed_gap": ((wf / 2, sl / 2), (gx, sl / 2)),
        "stub_w": ((gx, sl / 2), (gx + sw, sl / 2)),
        "stub_l": ((gx + sw / 2, 0.0), (gx + sw / 2, sl)),
    }

    return PlanarLayout(
        substrate_outline=outline,
        conductive_regions=[radiator, stub_r, stub_l],
        feed_point=(0.0, 0.0),
        raster_direction=(0.0, 1.0),
        design_kind="uwb",
        features=features,
    )


def layout_to_text(layout: PlanarLayout) -> str:
    """Plain-text polygon export: closed CCW loops in mm.

    Format: '# <name>' then one 'x y' pair per line per loop, blank line
    between loops. Feature lines are exported as two-point loops prefixed
    'feature'.
    """
    lines = [f"# planar layout: {layout.design_kind}"]
    lines.append(f"# feed_point {layout.feed_point[0]:.6f} {layout.feed_point[1]:.6f}")
    lines.append(
        f"# raster_direction {layout.raster_direction[0]:.6f} {layout.raster_direction[1]:.6f}"
    )

    def emit(name, pts):
        lines.append(f"# {name}")
        for x, y in pts:
            lines.append(f"{x:.6f} {y:.6f}")
        lines.append("")

    emit("substrate_outline", layout.substrate_outline)
    for i, poly in enumerate(layout.conductive_regions):
        emit(f"conductive_region {i}", poly)
    for name, (p0, p1) in sorted(layout.features.items()):
        emit(f"feature {name}", [p0, p1])
    return "\n".join(lines) + "\n"


def layout_to_svg(layout: PlanarLayout) -> str:
    """Minimal SVG rendering for visual inspection (1 mm = 1 unit, y up)."""
    x0, y0, x1, y1 = geom2d.bbox(layout.substrate_outline)
    pad = 2.0
    w, h = x1 - x0 + 2 * pad, y1 - y0 + 2 * pad

    def path(poly):
        d = " ".join(f"{'M' if i == 0 else 'L'}{x:.3f},{-y:.3f}" for i, (x, y) in enumerate(poly))
        return d + " Z"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0 - pad:.3f} {-y1 - pad:.3f} '
        f'{w:.3f} {h:.3f}" width="{w * 8:.0f}" height="{h * 8:.0f}">',
        f'<path d="{path(layout.substrate_outline)}" fill="#e8e4d8" stroke="#888" stroke-width="0.2"/>',
    ]
    for poly in layout.conductive_regions:
        parts.append(f'<path d="{path(poly)}" fill="#b87333" stroke="#5c3a1e" stroke-width="0.1"/>')
    fx, fy = layout.feed_point
    parts.append(f'<circle cx="{fx:.3f}" cy="{-fy:.3f}" r="0.8" fill="#d22"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
