import json
import os

import pytest

from confab.cli import main
from confab.errors import UnknownFeature
from confab.jobs import bundled_job_path, load_job
from confab.report import dim_error_report

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "src", "confab",
                        "data", "fixtures")


class TestJobLoading:
    def test_bundled_jobs_parse(self, patch_job, uwb_job):
        assert patch_job.design.kind == "patch"
        assert patch_job.surface.kind == "cylinder"
        assert patch_job.projection_mode == "arc_length"
        assert uwb_job.design.kind == "uwb"
        assert uwb_job.surface.kind == "sphere_cap"
        assert uwb_job.projection_mode == "normal_drop"

    def test_machine_block_converts_degrees(self, patch_job):
        import math

        assert patch_job.machine.b_range == pytest.approx((-math.pi / 4, math.pi / 4))

    def test_invalid_f_target_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.job"
        bad.write_text(
            "name: bad\ndesign:\n  kind: patch\n  f_target_hz: 0\n"
            "surface:\n  kind: cylinder\n"
        )
        rc = main(["pipeline", "--job", str(bad), "--out", str(tmp_path / "out")])
        assert rc != 0
        err = capsys.readouterr().err
        assert "config" in err and "f_target" in err

    def test_output_field_used_as_default_out_dir(self, tmp_path, monkeypatch):
        jb = tmp_path / "o.job"
        jb.write_text(
            "name: o\noutput: artifacts/o\n"
            "design:\n  kind: patch\n  f_target_hz: 3.0e9\n"
            "surface:\n  kind: cylinder\n  radius_mm: 40.0\n"
            "  arc_angle_deg: 180.0\n  length_mm: 60.0\n"
        )
        monkeypatch.chdir(tmp_path)
        rc = main(["design", "--job", str(jb)])
        assert rc == 0
        assert (tmp_path / "artifacts" / "o" / "layout.svg").exists()

    def test_biquadratic_grid_from_string(self, tmp_path):
        vals = []
        for i in range(3):
            for j in range(3):
                vals += [i * 30.0, j * 30.0, 5.0 * (1 - abs(i - 1)) * (1 - abs(j - 1))]
        jb = tmp_path / "bq.job"
        jb.write_text(
            "name: bq\ndesign:\n  kind: uwb\n  margin_mm: 4.0\n"
            "surface:\n  kind: biquadratic\n  thickness_mm: 1.0\n"
            "  control_grid: \"" + " ".join(str(v) for v in vals) + "\"\n"
            "projection:\n  mode: normal_drop\n"
        )
        job = load_job(str(jb))
        assert job.surface.kind == "biquadratic"


class TestPipelineCommand:
    def test_patch_pipeline_artifacts_and_ordering(self, patch_run):
        job, out, bundle = patch_run
        expected = [
            "layout.txt", "layout.svg", "conformal.txt", "distortion.csv",
            "toolpath_planar.txt", "toolpath_conformal.txt",
            "estimate_planar.json", "estimate_conformal.json",
            "planar.gcode", "conformal.gcode",
            "sim_planar.json", "sim_conformal.json",
            "predicted_s11.csv", "comparison.json", "plan_table.csv",
        ]
        for name in expected:
            assert os.path.exists(os.path.join(out, name)), name
        t = bundle.plan_table
        assert t.conformal_time_s < t.planar_time_s
        assert t.conformal_mass_g < t.planar_mass_g

    def test_uwb_pipeline_ordering_and_skip_note(self, uwb_run):
        job, out, bundle = uwb_run
        t = bundle.plan_table
        assert t.conformal_time_s < t.planar_time_s
        assert t.conformal_mass_g < t.planar_mass_g
        assert any("prediction skipped" in n for n in bundle.notes)
        assert not os.path.exists(os.path.join(out, "predicted_s11.csv"))

    def test_comparison_json_consistent(self, patch_run):
        _, out, bundle = patch_run
        with open(os.path.join(out, "comparison.json")) as fh:
            doc = json.load(fh)
        pt = doc["plan_table"]
        assert pt["time_reduction_pct"] == pytest.approx(
            100 * (1 - pt["conformal_time_s"] / pt["planar_time_s"]), rel=1e-9)
        assert pt["reference_time_reduction_pct"] == 28
        assert pt["reference_mass_reduction_pct"] == 10
        # s11 table carries both fixture comparisons
        pairs = {row["pair"] for row in doc["s11_table"]}
        assert pairs == {"model vs planar_sample", "model vs conformal_sample"}

    def test_bundle_carries_measured_dim_errors(self, patch_run):
        _, out, bundle = patch_run
        samples = {r["sample"] for r in bundle.dim_error_table}
        assert samples == {"planar_1", "planar_2", "conformal_1", "conformal_2"}
        assert os.path.exists(os.path.join(out, "dim_error.csv"))
        # geometric distortion rows stay available separately
        assert bundle.distortion_table and all(
            "relative_error" in r for r in bundle.distortion_table)

    def test_pipeline_determinism(self, patch_job, patch_run, tmp_path):
        from confab import report

        _, out1, bundle1 = patch_run
        out2 = tmp_path / "rerun"
        bundle2 = report.run_pipeline(patch_job, str(out2))
        for name in ("conformal.gcode", "planar.gcode"):
            with open(os.path.join(out1, name), "rb") as fh:
                a = fh.read()
            with open(out2 / name, "rb") as fh:
                b = fh.read()
            assert a == b, f"{name} differs between runs"
        t1, t2 = bundle1.plan_table, bundle2.plan_table
        assert t1.planar_time_s == pytest.approx(t2.planar_time_s, abs=1e-12)
        assert t1.conformal_mass_g == pytest.approx(t2.conformal_mass_g, abs=1e-12)


class TestSubcommands:
    def test_design_command(self, tmp_path, capsys):
        rc = main(["design", "--job", bundled_job_path("patch_conformal.job"),
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "layout.svg").exists()
        dims = json.loads((tmp_path / "dims.json").read_text())
        assert dims["W_mm"] == pytest.approx(36.7353, abs=1e-3)
        assert dims["L_mm"] == pytest.approx(29.8072, abs=1e-3)

    def test_predict_command(self, tmp_path):
        rc = main(["predict", "--job", bundled_job_path("patch_conformal.job"),
                   "--out", str(tmp_path)])
        assert rc == 0
        rows = (tmp_path / "predicted_s11.csv").read_text().splitlines()
        assert rows[0] == "freq_hz,s11_db"
        assert len(rows) > 500

    def test_predict_refuses_uwb(self, tmp_path, capsys):
        rc = main(["predict", "--job", bundled_job_path("uwb_doublecurve.job"),
                   "--out", str(tmp_path)])
        assert rc == 1
        assert "skipped" in capsys.readouterr().err

    def test_emit_inverse_time_flavor(self, tmp_path):
        rc = main(["emit", "--job", bundled_job_path("patch_conformal.job"),
                   "--out", str(tmp_path), "--mode", "conformal",
                   "--flavor", "inverse_time"])
        assert rc == 0
        text = (tmp_path / "conformal.gcode").read_text()
        assert "; flavor inverse_time" in text

    def test_verify_command_flags_violations(self, tmp_path, capsys):
        bad = tmp_path / "bad.gcode"
        bad.write_text(
            "G21\nG28\nM83\nT1\nM109 S225.00000\n"
            "G1 X10.00000 B50.00000 F600.00000\n"
        )
        rc = main(["verify", str(bad), "--job",
                   bundled_job_path("patch_conformal.job")])
        assert rc == 1
        out = capsys.readouterr().out
        assert "B = 50.000" in out

    def test_compare_command_model_vs_itself(self, tmp_path, capsys):
        src = os.path.join(FIXTURES, "s11_patch_conformal.csv")
        rc = main(["compare", src, src, "--labels", "a,b"])
        assert rc == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l.startswith("a vs b")]
        assert lines, "no comparison rows"
        for line in lines:
            parts = line.split(",")
            assert float(parts[3]) == 0.0  # offset
            assert float(parts[7]) == 0.0  # rms

    def test_compare_command_single_input_usage_error(self, capsys):
        src = os.path.join(FIXTURES, "s11_patch_conformal.csv")
        assert main(["compare", src]) == 2

    def test_dimcheck_command(self, tmp_path, capsys):
        rc = main(["dimcheck", "--job", bundled_job_path("patch_conformal.job"),
                   "--measured", os.path.join(FIXTURES, "patch_dims_measured.csv"),
                   "--out", str(tmp_path)])
        assert rc == 0
        doc = json.loads((tmp_path / "dim_error.json").read_text())
        assert 0.015 < doc["summary"]["mean_abs_error"] < 0.03
        assert 0.10 < doc["summary"]["max_abs_error"] < 0.14


class TestDimErrorReport:
    def test_measured_equals_nominal_gives_zeros(self, patch_job, tmp_path):
        from confab import report

        _, layout = report.build_layout(patch_job)
        import math

        csv_path = tmp_path / "m.csv"
        lines = ["sample,feature,measured_mm"]
        for name, (a, b) in layout.features.items():
            lines.append(f"s1,{name},{math.hypot(b[0] - a[0], b[1] - a[1])!r}")
        csv_path.write_text("\n".join(lines) + "\n")
        rows, summary = dim_error_report(layout, str(csv_path))
        assert summary["mean_abs_error"] == pytest.approx(0.0, abs=1e-12)
        assert summary["max_abs_error"] == pytest.approx(0.0, abs=1e-12)

    def test_unknown_feature_rejected(self, patch_job, tmp_path):
        from confab import report

        _, layout = report.build_layout(patch_job)
        csv_path = tmp_path / "m.csv"
        csv_path.write_text("sample,feature,measured_mm\ns1,bogus,1.0\n")
        with pytest.raises(UnknownFeature):
            dim_error_report(layout, str(csv_path))

    def test_patch_fixture_statistics(self, patch_job):
        # the fixture is the ground truth: recompute its statistics
        # independently and require exact agreement
        from confab import report

        _, layout = report.build_layout(patch_job)
        path = os.path.join(FIXTURES, "patch_dims_measured.csv")
        rows, summary = dim_error_report(layout, path)
        import csv as csvmod
        import math

        nominal = {n: math.hypot(b[0] - a[0], b[1] - a[1])
                   for n, (a, b) in layout.features.items()}
        errs = []
        with open(path) as fh:
            for row in csvmod.DictReader(r for r in fh if not r.startswith("#")):
                errs.append(abs(float(row["measured_mm"]) - nominal[row["feature"]])
                            / nominal[row["feature"]])
        assert summary["mean_abs_error"] == pytest.approx(sum(errs) / len(errs), rel=1e-12)
        assert summary["max_abs_error"] == pytest.approx(max(errs), rel=1e-12)

    def test_uwb_fixture_outliers_flagged(self, uwb_job):
        from confab import report

        _, layout = report.build_layout(uwb_job)
        rows, summary = dim_error_report(
            layout, os.path.join(FIXTURES, "uwb_dims_measured.csv"))
        assert 0.10 < summary["mean_abs_error"] < 0.20
        assert summary["max_abs_error"] > 0.8
        flagged = [r for r in rows if r["flagged"]]
        assert flagged and all(r["feature"] == "feed_gap" for r in flagged)
