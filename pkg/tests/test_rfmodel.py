import dataclasses
import math

import numpy as np
import pytest

from confab.errors import NoOverlap, S11FormatError
from confab.materials import MaterialDB
from confab.rfmodel import (
    S11_FLOOR_DB,
    S11Curve,
    cavity_modes,
    compare_s11,
    feed_coupling,
    find_resonances,
    impedance_from_spectrum,
    load_s11,
    read_s11_csv,
    read_touchstone,
    s11_db_from_impedance,
    s11_model,
    write_s11_csv,
)

FREQS = np.arange(2.0e9, 6.0e9 + 1, 5e6)


def aniso_db(db, ratio):
    """Default DB with the conductor's transverse conductivity scaled."""
    el = db.by_kind("conductor")
    sp = el.conductivity_tensor[0]
    el2 = dataclasses.replace(el, conductivity_tensor=(sp, sp * ratio,
                                                       el.conductivity_tensor[2]))
    return MaterialDB(materials={**db.materials, el.name: el2},
                      tool_assignment=db.tool_assignment)


class TestCavityModes:
    def test_square_air_patch_fundamental(self, db):
        # L_e = W_e = 50 mm, eps_eff = 1: f = c/(2*0.05) = 2.998 GHz.
        # Construct dims whose effective lengths come out at 50 mm.
        from confab.design import PatchDims, effective_permittivity, fringing_extension

        pla = db.by_kind("dielectric")
        air = dataclasses.replace(pla, permittivity_table=((1e9, 1.0, 0.0),
                                                           (16e9, 1.0, 0.0)))
        h = 1e-6
        W = 50.002
        ee = effective_permittivity(1.0, h, W)
        dl = fringing_extension(ee, h, W)
        L = 50.0 - 2 * dl
        dims = PatchDims(W=W, L=L, h=h, eps_eff=1.0, delta_L=dl, feed_inset=0.0,
                         feed_line_width=3.0, f_target=2.998e9)
        spec = cavity_modes(dims, air)
        fund = spec.fundamental()
        assert fund.f == pytest.approx(299792458.0 / (2 * 0.050), rel=1e-4)

    def test_synthesized_patch_mode_set(self, db, patch_dims):
        spec = cavity_modes(dims=patch_dims, dielectric=db.by_kind("dielectric"),
                            conductor=db.by_kind("conductor"))
        by_mn = {(m.m, m.n): m for m in spec.modes}
        # fundamental at the design frequency
        assert by_mn[(1, 0)].f == pytest.approx(3e9, rel=1e-9)
        # second observable mode near 4.4 GHz within the cavity-model bound
        in_window = [m for m in spec.modes if 3.74e9 <= m.f <= 5.06e9]
        assert in_window, "no mode within 15% of 4.4 GHz"
        # frozen expected frequencies of the synthesized patch spectrum
        assert by_mn[(0, 2)].f == pytest.approx(4.9135e9, rel=1e-3)
        assert by_mn[(1, 1)].f == pytest.approx(3.8776e9, rel=1e-3)

    def test_current_directions(self, db, patch_dims):
        spec = cavity_modes(patch_dims, db.by_kind("dielectric"))
        for m in spec.modes:
            assert math.hypot(*m.current_dir) == pytest.approx(1.0, abs=1e-12)
            if m.n == 0:
                assert m.current_dir == (0.0, 1.0)  # along L
            elif m.m == 0:
                assert m.current_dir == (1.0, 0.0)  # along W
        diag = {(m.m, m.n): m for m in spec.modes}[(1, 1)]
        assert 0 < diag.current_dir[0] < 1 and 0 < diag.current_dir[1] < 1

    def test_skin_depth_controls_q_cond(self, db, patch_dims):
        # sigma_eff = 1.6e4 at 3 GHz gives delta ~ 72.6 um (hand evaluated),
        # so Q_cond = h/delta ~ 20.65
        spec = cavity_modes(patch_dims, db.by_kind("dielectric"),
                            db.by_kind("conductor"), raster_direction=(0.0, 1.0))
        fund = spec.fundamental()
        assert fund.q_cond == pytest.approx(1.5 / 0.0726437, rel=1e-4)

    def test_frequency_scaling_with_eps_eff(self, db, patch_dims):
        # doubling eps_eff divides every mode frequency by sqrt(2)
        spec1 = cavity_modes(patch_dims, db.by_kind("dielectric"))
        dims2 = dataclasses.replace(patch_dims, eps_eff=2 * patch_dims.eps_eff)
        spec2 = cavity_modes(dims2, db.by_kind("dielectric"))
        for m1, m2 in zip(spec1.modes, spec2.modes):
            assert m2.f == pytest.approx(m1.f / math.sqrt(2), rel=1e-9)

    def test_lossless_without_conductor(self, db, patch_dims):
        spec = cavity_modes(patch_dims, db.by_kind("dielectric"))
        assert all(math.isinf(m.q_cond) for m in spec.modes)


class TestS11Model:
    def test_matched_impedance_hits_floor(self):
        db_floor = s11_db_from_impedance(np.full(5, 50.0 + 0j))
        assert np.all(db_floor == S11_FLOOR_DB)

    def test_global_minimum_at_design_frequency_default_materials(self, db, patch_dims):
        curve = s11_model(patch_dims, db, (0.0, 1.0), FREQS)
        f_min = curve.freqs[int(np.argmin(curve.s11_db))]
        assert abs(f_min - 3e9) / 3e9 < 0.02

    def test_global_minimum_isotropic_conductor(self, db, patch_dims):
        # brute-force 1 MHz sweep, isotropic conductivity
        dense = np.arange(2.0e9, 6.0e9 + 1, 1e6)
        curve = s11_model(patch_dims, aniso_db(db, 1.0), (0.0, 1.0), dense)
        f_min = dense[int(np.argmin(curve.s11_db))]
        assert abs(f_min - 3e9) / 3e9 < 0.02

    def test_s11_never_positive(self, db, patch_dims):
        for ratio in (1.0, 0.25, 0.01):
            curve = s11_model(patch_dims, aniso_db(db, ratio), (0.0, 1.0), FREQS)
            assert np.all(curve.s11_db <= 1e-9)

    def test_cross_mode_deeper_when_aligned_with_raster(self, db, patch_dims):
        # the 4.4 GHz-class mode carries current across the patch; rastering
        # along W aligns with it and deepens the dip
        lo, hi = 4.4e9, 5.4e9
        sel = (FREQS > lo) & (FREQS < hi)
        along_L = s11_model(patch_dims, db, (0.0, 1.0), FREQS).s11_db[sel].min()
        along_W = s11_model(patch_dims, db, (1.0, 0.0), FREQS).s11_db[sel].min()
        assert along_W < along_L - 3.0

    def test_reduced_sigma_shallows_cross_mode_monotonically(self, db, patch_dims):
        sel = (FREQS > 4.4e9) & (FREQS < 5.4e9)
        depths = []
        for ratio in (1.0, 0.5, 0.25, 0.125, 0.0625):
            curve = s11_model(patch_dims, aniso_db(db, ratio), (0.0, 1.0), FREQS)
            depths.append(float(curve.s11_db[sel].min()))
        assert all(b > a for a, b in zip(depths, depths[1:]))

    def test_sigma_scaling_keeps_resonance_location(self, db, patch_dims):
        # single isolated mode: scaling its conductivity moves depth, not argmin
        pla = db.by_kind("dielectric")
        el = db.by_kind("conductor")
        argmins = []
        for ratio in (1.0, 0.1, 0.01):
            spec = cavity_modes(patch_dims, pla, dataclasses.replace(
                el, conductivity_tensor=(1.6e4 * ratio, 4e3 * ratio, 1e3 * ratio)))
            only_fund = dataclasses.replace(spec, modes=(spec.fundamental(),))
            z = impedance_from_spectrum(only_fund, patch_dims, FREQS)
            argmins.append(int(np.argmin(s11_db_from_impedance(z))))
        step = FREQS[1] - FREQS[0]
        assert max(argmins) - min(argmins) <= 1  # within one grid step

    def test_feed_coupling_suppresses_odd_width_modes(self, db, patch_dims):
        spec = cavity_modes(patch_dims, db.by_kind("dielectric"))
        for m in spec.modes:
            if m.n % 2 == 1:
                assert feed_coupling(m, patch_dims) == pytest.approx(0.0, abs=1e-20)

    def test_curve_invariants_enforced(self):
        with pytest.raises(Exception):
            S11Curve(freqs=np.array([1e9, 1e9]), s11_db=np.array([-1.0, -2.0]))
        with pytest.raises(Exception):
            S11Curve(freqs=np.array([1e9, 2e9]), s11_db=np.array([-1.0, 2.0]))


class TestCompare:
    def make_curve(self, freqs, dips, label="t"):
        s = np.full(len(freqs), -0.5)
        for f0, depth, q in dips:
            s += depth / (1 + ((freqs - f0) / (f0 / (2 * q))) ** 2)
        return S11Curve(freqs=freqs, s11_db=np.minimum(s, 0.0), source_label=label)

    def test_self_comparison_zero(self, db, patch_dims):
        curve = s11_model(patch_dims, db, (0.0, 1.0), FREQS)
        m = compare_s11(curve, curve)
        assert m.rms_db == pytest.approx(0.0, abs=1e-12)
        assert len(m.resonances) >= 2
        for r in m.resonances:
            assert r.offset_hz == 0.0
            assert r.depth_diff_db == 0.0

    def test_constructed_shift_detected(self):
        freqs = np.arange(2.0e9, 5.0e9, 1e7)
        a = self.make_curve(freqs, [(3.0e9, -25.0, 30)])
        b = self.make_curve(freqs, [(3.1e9, -25.0, 30)])
        m = compare_s11(a, b)
        assert len(m.resonances) == 1
        assert m.resonances[0].offset_hz == pytest.approx(1e8, abs=1e7)

    def test_resampling_to_coarser_grid(self):
        fine = np.arange(2.0e9, 5.0e9, 1e6)
        coarse = np.arange(2.2e9, 4.8e9, 2e7)
        a = self.make_curve(fine, [(3.0e9, -20.0, 25)])
        b = self.make_curve(coarse, [(3.0e9, -20.0, 25)])
        m = compare_s11(a, b)
        assert m.band[0] >= 2.2e9 and m.band[1] <= 4.8e9
        assert m.rms_db < 0.5  # only interpolation residue

    def test_no_overlap(self):
        a = self.make_curve(np.arange(1e9, 2e9, 1e7), [(1.5e9, -20.0, 20)])
        b = self.make_curve(np.arange(3e9, 4e9, 1e7), [(3.5e9, -20.0, 20)])
        with pytest.raises(NoOverlap):
            compare_s11(a, b)

    def test_fixture_curves_conformal_closer_at_second_mode(self, db, patch_dims):
        import os

        fixtures = os.path.join(os.path.dirname(__file__), "..", "src", "confab",
                                "data", "fixtures")
        model = s11_model(patch_dims, db, (0.0, 1.0), FREQS)
        diffs = {}
        for kind in ("planar", "conformal"):
            measured = read_s11_csv(os.path.join(fixtures, f"s11_patch_{kind}.csv"))
            m = compare_s11(model, measured)
            row = [r for r in m.resonances if 4.4e9 < r.f_a < 5.4e9]
            assert row, f"no second-mode resonance pair for {kind}"
            diffs[kind] = abs(row[0].depth_diff_db)
        assert diffs["conformal"] < diffs["planar"]


class TestIO:
    def test_touchstone_ri_round_trip(self, tmp_path):
        p = tmp_path / "t.s1p"
        p.write_text(
            "! sample measurement\n"
            "# GHz S RI R 50\n"
            "2.0 0.5 0.0\n"
            "3.0 0.1 0.1\n"
            "4.0 0.0316 0.0\n"
        )
        c = read_touchstone(str(p))
        assert c.freqs[0] == 2e9
        assert c.s11_db[0] == pytest.approx(20 * math.log10(0.5))
        assert c.s11_db[1] == pytest.approx(20 * math.log10(math.hypot(0.1, 0.1)))

    def test_touchstone_db_variant(self, tmp_path):
        p = tmp_path / "t.s1p"
        p.write_text("# MHz S DB R 50\n2500 -12.5 45.0\n3500 -20.0 10.0\n")
        c = read_touchstone(str(p))
        assert c.freqs[0] == 2.5e9
        assert c.s11_db[0] == pytest.approx(-12.5)

    def test_touchstone_ma_variant(self, tmp_path):
        p = tmp_path / "t.s1p"
        p.write_text("# Hz S MA R 50\n2.0e9 0.5 30\n")
        c = read_touchstone(str(p))
        assert c.s11_db[0] == pytest.approx(20 * math.log10(0.5))

    def test_malformed_touchstone(self, tmp_path):
        p = tmp_path / "t.s1p"
        p.write_text("# GHz S RI R 50\n2.0 nope 0.0\n")
        with pytest.raises(S11FormatError):
            read_touchstone(str(p))

    def test_csv_round_trip(self, tmp_path, db, patch_dims):
        curve = s11_model(patch_dims, db, (0.0, 1.0), FREQS)
        p = tmp_path / "c.csv"
        write_s11_csv(curve, str(p))
        back = read_s11_csv(str(p))
        assert np.allclose(back.freqs, curve.freqs)
        assert np.allclose(back.s11_db, curve.s11_db, atol=1e-3)

    def test_loader_dispatch(self, tmp_path):
        p = tmp_path / "x.s1p"
        p.write_text("# GHz S DB R 50\n2.5 -10 0\n3.5 -15 0\n")
        assert load_s11(str(p)).freqs[0] == 2.5e9


def test_find_resonances_threshold():
    freqs = np.arange(2.0e9, 4.0e9, 1e7)
    s = np.full(len(freqs), -3.0)
    i = len(freqs) // 2
    s[i - 1], s[i], s[i + 1] = -8.0, -15.0, -8.0
    res = find_resonances(S11Curve(freqs=freqs, s11_db=s))
    assert len(res) == 1
    assert res[0] == (pytest.approx(freqs[i]), pytest.approx(-15.0))
