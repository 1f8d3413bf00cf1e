import math

import numpy as np
import pytest

from confab import geom2d
from confab.design import (
    C0,
    UwbParams,
    layout_to_svg,
    layout_to_text,
    patch_conductor_area,
    patch_layout,
    synthesize_patch,
    uwb_layout,
)
from confab.errors import InvariantViolation, NonPhysical

# Independent evaluation of the closed-form design chain at (3 GHz, 2.7, 1.5 mm),
# frozen before the implementation was written:
#   W       = c/2f * sqrt(2/3.7)                 = 36.735300 mm
#   eps_eff = 1.85 + 0.85*(1 + 12*1.5/W)^-1/2    = 2.546349
#   dL      = 0.412*1.5*(ee+.3)(W/h+.264)/((ee-.258)(W/h+.8)) = 0.752404 mm
#   L       = c/(2f sqrt(ee)) - 2 dL             = 29.807169 mm
ORACLE = dict(W=36.735300, L=29.807169, eps_eff=2.546349, delta_L=0.752404)


class TestSynthesizePatch:
    def test_air_thin_substrate_limit(self):
        d = synthesize_patch(3e9, 1.0, 1e-6)
        half_wave = C0 / (2 * 3e9) * 1e3  # 49.965 mm
        assert d.W == pytest.approx(half_wave, abs=1e-3)
        assert d.L == pytest.approx(half_wave, abs=1e-3)
        assert d.delta_L < 1e-5

    def test_matches_frozen_oracle(self):
        d = synthesize_patch(3e9, 2.7, 1.5)
        assert d.W == pytest.approx(ORACLE["W"], abs=1e-4)
        assert d.L == pytest.approx(ORACLE["L"], abs=1e-4)
        assert d.eps_eff == pytest.approx(ORACLE["eps_eff"], abs=1e-5)
        assert d.delta_L == pytest.approx(ORACLE["delta_L"], abs=1e-5)

    def test_resonance_self_consistency(self, db, patch_dims):
        # the cavity fundamental of the synthesized dims must sit at f_target
        from confab.rfmodel import cavity_modes

        spec = cavity_modes(patch_dims, db.by_kind("dielectric"))
        fund = spec.fundamental()
        assert (fund.m, fund.n) == (1, 0)
        assert abs(fund.f - 3e9) / 3e9 < 0.01

    def test_w_decreasing_in_frequency_and_permittivity(self):
        ws_f = [synthesize_patch(f, 2.7, 1.5).W for f in np.linspace(1e9, 8e9, 8)]
        assert all(b < a for a, b in zip(ws_f, ws_f[1:]))
        ws_e = [synthesize_patch(3e9, er, 1.5).W for er in np.linspace(1.5, 6.0, 8)]
        assert all(b < a for a, b in zip(ws_e, ws_e[1:]))

    def test_fringing_always_shortens(self):
        for f in (1e9, 3e9, 6e9):
            for er in (1.5, 2.7, 4.4):
                d = synthesize_patch(f, er, 1.5)
                assert d.L < C0 / (2 * f * math.sqrt(d.eps_eff)) * 1e3

    def test_loss_inclusive_inset_is_deeper_matched(self):
        lossless = synthesize_patch(3e9, 2.7, 1.5)
        lossy = synthesize_patch(3e9, 2.7, 1.5, tan_delta=0.008, sigma_eff=1.6e4)
        # losses lower the resonant edge resistance, so less inset is needed
        assert 0 < lossy.feed_inset < lossless.feed_inset < lossy.L / 2

    def test_nonphysical_inputs_rejected(self):
        with pytest.raises(NonPhysical):
            synthesize_patch(0.0, 2.7, 1.5)
        with pytest.raises(NonPhysical):
            synthesize_patch(3e9, 0.5, 1.5)
        with pytest.raises(NonPhysical):
            synthesize_patch(3e9, 2.7, 7.0)


class TestPatchLayout:
    def test_outline_expands_by_margin(self, patch_dims):
        lay = patch_layout(patch_dims, 10.0)
        x0, y0, x1, y1 = geom2d.bbox(lay.substrate_outline)
        assert x1 - x0 == pytest.approx(patch_dims.W + 20.0, abs=1e-9)
        assert y1 - y0 == pytest.approx(patch_dims.L + 20.0, abs=1e-9)

    def test_single_region_area_matches_closed_form(self, patch_dims):
        lay = patch_layout(patch_dims, 10.0)
        assert len(lay.conductive_regions) == 1
        area = abs(geom2d.polygon_area(lay.conductive_regions[0]))
        assert area == pytest.approx(patch_conductor_area(patch_dims, 10.0), rel=1e-12)

    def test_feed_point_on_region_boundary_and_outline_edge(self, patch_dims):
        lay = patch_layout(patch_dims, 10.0)
        assert geom2d.point_on_polygon_boundary(lay.feed_point, lay.conductive_regions[0])
        assert geom2d.point_on_polygon_boundary(lay.feed_point, lay.substrate_outline)

    def test_zero_margin_with_inset_rejected(self, patch_dims):
        with pytest.raises(InvariantViolation):
            patch_layout(patch_dims, 0.0)

    def test_raster_defaults_along_length(self, patch_dims):
        lay = patch_layout(patch_dims, 10.0)
        assert lay.raster_direction == (0.0, 1.0)

    def test_randomized_dims_satisfy_layout_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            f = rng.uniform(1.5e9, 6e9)
            er = rng.uniform(1.5, 4.5)
            h = rng.uniform(0.6, 3.0)
            d = synthesize_patch(f, er, h, tan_delta=0.01, sigma_eff=1e4)
            lay = patch_layout(d, rng.uniform(5.0, 15.0))
            # constructor enforces the invariants; double-check polygon simplicity
            for poly in lay.conductive_regions:
                assert geom2d.polygon_is_simple(poly)


class TestUwbLayout:
    def test_default_layout_simple_polygons(self):
        lay = uwb_layout(UwbParams())
        assert len(lay.conductive_regions) == 3
        for poly in lay.conductive_regions:
            # brute-force segment-pair intersection test
            assert geom2d.polygon_is_simple(poly)
        assert lay.feed_point == (0.0, 0.0)

    def test_linear_taper_edges_straight(self):
        lay = uwb_layout(UwbParams(taper_exponent=1.0))
        radiator = lay.conductive_regions[0]
        # taper edge: vertices between the feed base and the ellipse junction
        # must be collinear for exponent 1
        pts = [p for p in radiator if p[0] > 1e-9 and p[1] < 0.35 * 15.0 + 1e-9]
        pts = sorted(pts, key=lambda p: p[1])[:10]
        (x0, y0), (x1, y1) = pts[0], pts[-1]
        for x, y in pts[1:-1]:
            cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
            assert abs(cross) < 1e-9

    def test_small_radiator_warns(self):
        # quarter wavelength at 3 GHz is 25 mm; a 2 mm radiator cannot reach it
        with pytest.warns(UserWarning, match="quarter wavelength"):
            uwb_layout(UwbParams(radiator_ellipse_axes=(2.0, 2.0)))

    def test_default_radiator_passes_band_heuristic(self, recwarn):
        uwb_layout(UwbParams())
        assert not [w for w in recwarn.list if "quarter wavelength" in str(w.message)]

    def test_taper_exponent_range_enforced(self):
        with pytest.raises(InvariantViolation):
            UwbParams(taper_exponent=4.0)

    @pytest.mark.filterwarnings("ignore:radiator height")
    def test_randomized_params_keep_invariants(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            p = UwbParams(
                radiator_ellipse_axes=(rng.uniform(8, 16), rng.uniform(10, 20)),
                feed_gap=rng.uniform(0.2, 0.6),
                feed_line_width=rng.uniform(2.0, 4.0),
                ground_stub_dims=(rng.uniform(5, 10), rng.uniform(6, 12)),
                taper_exponent=rng.uniform(0.5, 3.0),
            )
            lay = uwb_layout(p)
            for poly in lay.conductive_regions:
                assert geom2d.polygon_is_simple(poly)
                assert geom2d.polygon_contains_polygon(lay.substrate_outline, poly, tol=1e-6)


class TestExports:
    def test_text_export_round_readable(self, patch_dims):
        lay = patch_layout(patch_dims, 10.0)
        text = layout_to_text(lay)
        assert "# substrate_outline" in text
        assert "# conductive_region 0" in text
        assert "# feature patch_W" in text
        # every data line is two floats
        for line in text.splitlines():
            if line and not line.startswith("#"):
                parts = line.split()
                assert len(parts) == 2
                float(parts[0]), float(parts[1])

    def test_svg_contains_regions(self, patch_dims):
        svg = layout_to_svg(patch_layout(patch_dims, 10.0))
        assert svg.startswith("<svg")
        assert svg.count("<path") == 2  # outline + one conductor
