import math

import numpy as np
import pytest

from confab.errors import Unreachable, ZeroLengthSegment
from confab.kinematics import (
    MachineConfig,
    MachinePose,
    fk,
    ik,
    part_path_length,
    retime,
    solve_toolpath,
)

CFG = MachineConfig()
WIDE = MachineConfig(b_range=(-math.pi / 2, math.pi / 2))
# generous work volume so every randomized orientation stays in reach
BULK = MachineConfig(x_range=(-250, 250), y_range=(-250, 250), z_range=(-250, 250))
HOME = MachinePose(0.0, 0.0, 0.0, 0.0, 0.0)


def random_reachable(rng, cfg):
    """Random (tip, axis) guaranteed reachable: axis built from in-range (B, C)."""
    b = rng.uniform(cfg.b_range[0] + 1e-6, cfg.b_range[1] - 1e-6)
    c = rng.uniform(-3 * math.pi, 3 * math.pi)
    _, axis = fk(MachinePose(0, 0, 0, b, c), cfg)
    tip = rng.uniform(-40, 40, 3)
    return tuple(tip), tuple(axis)


class TestIK:
    def test_singular_vertical_keeps_previous_c(self):
        prev = MachinePose(0, 0, 0, 0.3, 1.234)
        pose = ik((10, 5, 2), (0, 0, 1), prev, CFG)
        assert pose.b == 0.0
        assert pose.c == 1.234

    def test_horizontal_axis_needs_quarter_turn(self):
        prev = MachinePose(0, 0, 0, 0.0, 0.0)
        pose = ik((0, 0, 0), (1, 0, 0), prev, WIDE)
        assert abs(pose.b) == pytest.approx(math.pi / 2, abs=1e-12)
        tip, axis = fk(pose, WIDE)
        assert np.allclose(axis, [1, 0, 0], atol=1e-12)
        assert np.allclose(tip, [0, 0, 0], atol=1e-12)

    def test_axis_beyond_b_range_unreachable(self):
        with pytest.raises(Unreachable):
            ik((0, 0, 0), (1, 0, 0), HOME, CFG)  # needs |B| = 90 deg > 45

    def test_axis_below_bed_unreachable(self):
        with pytest.raises(Unreachable):
            ik((0, 0, 0), (0, 0, -1), HOME, WIDE)

    def test_xyz_limits_enforced(self):
        tight = MachineConfig(x_range=(-5, 5), y_range=(-5, 5), z_range=(-5, 5))
        with pytest.raises(Unreachable):
            ik((50, 0, 0), (0, 0, 1), HOME, tight)

    def test_round_trip_bulk(self):
        # acceptance-scale randomized round trip, 1e5 targets
        rng = np.random.default_rng(42)
        prev = HOME
        worst = 0.0
        for _ in range(100_000):
            tip, axis = random_reachable(rng, BULK)
            pose = ik(tip, axis, prev, BULK)
            tip2, axis2 = fk(pose, BULK)
            worst = max(
                worst,
                float(np.max(np.abs(tip2 - np.asarray(tip)))),
                float(np.max(np.abs(axis2 - np.asarray(axis)))),
            )
            prev = pose
        assert worst < 1e-9

    def test_branch_choice_deterministic(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            tip, axis = random_reachable(rng, WIDE)
            prev = MachinePose(0, 0, 0, rng.uniform(-0.5, 0.5), rng.uniform(-7, 7))
            a = ik(tip, axis, prev, WIDE)
            b = ik(tip, axis, prev, WIDE)
            assert a == b

    def test_c_continuity_choice(self):
        # after a pose near C = 2 pi, a nearby axis resolves to C near 2 pi,
        # not to the wrapped equivalent near 0
        prev = MachinePose(0, 0, 0, 0.2, 2 * math.pi - 0.05)
        _, axis = fk(MachinePose(0, 0, 0, 0.2, 2 * math.pi + 0.05), CFG)
        pose = ik((0, 0, 0), tuple(axis), prev, CFG)
        assert abs(pose.c - prev.c) < math.pi

    def test_fk_identity_configuration(self):
        cfg = MachineConfig(bed_pivot=(2.0, 3.0, 4.0), part_origin=(1.0, 0.0, 0.0))
        tip, axis = fk(MachinePose(10.0, 10.0, 10.0, 0.0, 0.0), cfg)
        assert np.allclose(tip, [10 - 2 + 1, 10 - 3, 10 - 4])
        assert np.allclose(axis, [0, 0, 1])


class TestRetime:
    def test_pure_xyz_move(self):
        p0 = HOME
        p1 = MachinePose(10.0, 0.0, 0.0, 0.0, 0.0)
        fc = retime(p0, p1, 40.0, CFG)
        assert fc.duration_s == pytest.approx(0.25, rel=1e-12)
        assert fc.feed_mm_min == pytest.approx(2400.0, rel=1e-12)
        assert not fc.clamped

    def test_pure_c_rotation_arc_length(self):
        # tip 50 mm off axis, 0.1 rad at 5 mm/s: the part-relative path is the
        # 5 mm arc, so the move takes 1 s despite zero XYZ motion
        p0 = MachinePose(50.0, 0.0, 0.0, 0.0, 0.0)
        p1 = MachinePose(50.0, 0.0, 0.0, 0.0, 0.1)
        assert part_path_length(p0, p1, CFG) == pytest.approx(5.0, rel=1e-9)
        fc = retime(p0, p1, 5.0, CFG)
        assert fc.duration_s == pytest.approx(1.0, rel=1e-9)
        # minimum-feed convention: degrees as millimeters
        assert fc.feed_mm_min == pytest.approx(math.degrees(0.1) / 1.0 * 60.0, rel=1e-9)

    def test_joint_speed_clamp_stretches(self):
        slow_b = MachineConfig(max_b_speed=math.radians(10))
        p0 = HOME
        p1 = MachinePose(1.0, 0.0, 0.0, math.radians(40), 0.0)
        fc = retime(p0, p1, 100.0, slow_b)
        assert fc.clamped
        assert fc.duration_s == pytest.approx(4.0, rel=1e-6)  # 40 deg at 10 deg/s
        assert fc.effective_speed < 100.0

    def test_zero_length_rejected(self):
        with pytest.raises(ZeroLengthSegment):
            retime(HOME, HOME, 10.0, CFG)
        with pytest.raises(ZeroLengthSegment):
            retime(HOME, MachinePose(1, 0, 0, 0, 0), 0.0, CFG)

    def test_duration_additive_under_subdivision(self):
        rng = np.random.default_rng(44)
        for _ in range(50):
            p0 = MachinePose(*rng.uniform(-20, 20, 3), rng.uniform(-0.6, 0.6),
                             rng.uniform(-3, 3))
            p1 = MachinePose(*rng.uniform(-20, 20, 3), rng.uniform(-0.6, 0.6),
                             rng.uniform(-3, 3))
            whole = part_path_length(p0, p1, CFG)
            ts = [0.0] + sorted(rng.uniform(0.2, 0.8, 3)) + [1.0]
            parts = 0.0
            for a, b in zip(ts, ts[1:]):
                pa = MachinePose(*(np.array(p0.joints()) * (1 - a) + np.array(p1.joints()) * a))
                pb = MachinePose(*(np.array(p0.joints()) * (1 - b) + np.array(p1.joints()) * b))
                parts += part_path_length(pa, pb, CFG)
            assert parts == pytest.approx(whole, rel=1e-9)


class TestSolveToolpath:
    def test_c_stays_continuous(self, db, patch_job):
        import confab.pathplan as pathplan
        import confab.projection as projection
        from confab import report

        _, layout = report.build_layout(patch_job)
        conf = projection.project_layout(layout, patch_job.surface,
                                         patch_job.projection_mode)
        tp = pathplan.plan_conformal_traces(patch_job.surface, conf,
                                            patch_job.settings, patch_job.materials)
        poses = solve_toolpath(tp, patch_job.machine)
        cs = [p.c for pair in poses for p in pair]
        assert all(abs(b - a) < math.pi for a, b in zip(cs, cs[1:]))
