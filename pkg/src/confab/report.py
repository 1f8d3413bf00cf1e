"""Pipeline orchestration and comparison reporting.

run_pipeline drives design -> project -> plan (planar and conformal) ->
kinematics -> G-code -> simulation -> prediction -> comparison, writes every
artifact under the output directory, and returns a ComparisonBundle. Any
module error is re-raised as StageError with the stage label; verification
mismatches (round-trip, mass/time accounting, joint limits) count as invariant
violations and fail the run.

Reference reduction percentages used for side-by-side reporting live in
data/fixtures/reference_reductions.csv; they are published reference values,
reported next to computed ones and never asserted.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from . import design as design_mod
from . import gcode, kinematics, pathplan, projection, rfmodel
from .errors import ConfabError, StageError, UnknownFeature
from .jobs import JobConfig
from .materials import eval_permittivity

OUTLIER_FLAG_THRESHOLD = 0.5  # |relative error| above this is flagged


@dataclass(frozen=True)
class PlanComparison:
    planar_time_s: float
    conformal_time_s: float
    planar_mass_g: float
    conformal_mass_g: float
    time_reduction_pct: float
    mass_reduction_pct: float
    reference_time_reduction_pct: float | None
    reference_mass_reduction_pct: float | None


@dataclass(frozen=True)
class ComparisonBundle:
    job: str
    plan_table: PlanComparison | None
    s11_table: list  # rows of dicts per curve pair
    dim_error_table: list  # measured-sample error rows (when the job has data)
    distortion_table: list  # geometric projection distortion rows
    notes: list


def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, ConfabError) and not isinstance(exc, StageError):
                raise StageError(name, exc) from exc
            return False

    return _Ctx()


def reference_reductions():
    path = os.path.join(os.path.dirname(__file__), "data", "fixtures",
                        "reference_reductions.csv")
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.DictReader(r for r in fh if not r.startswith("#")):
            out[row["design"]] = (float(row["time_reduction_pct"]),
                                  float(row["mass_reduction_pct"]))
    return out


def build_layout(job: JobConfig):
    """Design stage: synthesize the layout from the job and material DB."""
    db = job.materials
    if job.design.kind == "patch":
        dielectric = db.by_kind("dielectric")
        er, tand = eval_permittivity(dielectric, job.design.f_target)
        try:
            conductor = db.by_kind("conductor")
            # raster defaults along L; fed-mode current is aligned with it
            sigma = conductor.conductivity_tensor[0]
        except ConfabError:
            sigma = None
        dims = design_mod.synthesize_patch(
            job.design.f_target, er, job.design.substrate_h,
            tan_delta=tand, sigma_eff=sigma,
        )
        return dims, design_mod.patch_layout(dims, job.design.margin)
    return None, design_mod.uwb_layout(job.design.uwb, margin=job.design.margin)


def run_pipeline(job: JobConfig, out_dir, mode="both", flavor="desktop_mm_min"):
    os.makedirs(out_dir, exist_ok=True)
    notes = []

    with _stage("design"):
        dims, layout = build_layout(job)
        _write(out_dir, "layout.txt", design_mod.layout_to_text(layout))
        _write(out_dir, "layout.svg", design_mod.layout_to_svg(layout))

    with _stage("project"):
        conformal = projection.project_layout(layout, job.surface, job.projection_mode)
        _write(out_dir, "conformal.txt", projection.conformal_to_text(conformal))
        distortion = projection.distortion_report(conformal)
        dim_rows = [
            {
                "feature": r.feature,
                "nominal_mm": r.nominal_length,
                "conformal_mm": r.conformal_length,
                "relative_error": r.relative_error,
            }
            for r in distortion.per_feature
        ]
        _write_csv(out_dir, "distortion.csv",
                   ["feature", "nominal_mm", "conformal_mm", "relative_error"],
                   [[r["feature"], f"{r['nominal_mm']:.6f}", f"{r['conformal_mm']:.6f}",
                     f"{r['relative_error']:.8f}"] for r in dim_rows])

    plans = {}
    with _stage("plan"):
        if mode in ("both", "conformal"):
            tp = pathplan.plan_conformal(job.surface, conformal, job.settings, job.materials)
            plans["conformal"] = (tp, pathplan.estimate(tp, job.materials))
        if mode in ("both", "planar"):
            tp = pathplan.plan_planar(job.surface, conformal, job.settings, job.materials)
            plans["planar"] = (tp, pathplan.estimate(tp, job.materials))
        for name, (tp, est) in plans.items():
            pathplan.validate_toolpath(tp)
            _write(out_dir, f"toolpath_{name}.txt", toolpath_dump(tp))
            _write(out_dir, f"estimate_{name}.json", json.dumps(estimate_dict(est), indent=2))

    with _stage("emit"):
        programs = {}
        for name, (tp, est) in plans.items():
            poses = kinematics.solve_toolpath(tp, job.machine)
            text = gcode.emit(tp, poses, job.machine, job.materials, job.settings,
                              flavor=flavor, label=f"{job.name}_{name}")
            programs[name] = text
            _write(out_dir, f"{name}.gcode", text)

    with _stage("verify"):
        for name, text in programs.items():
            prog = gcode.parse(text)
            if gcode.render(prog) != text:
                raise gcode.GcodeSyntaxError(f"{name}: emit/parse round trip not byte-identical")
            issues = gcode.validate_program(prog)
            if issues:
                raise ConfabError(f"{name}: program invariants violated: {issues[:3]}")
            rep = gcode.simulate(prog, job.machine, job.materials)
            est = plans[name][1]
            sim_mass = sum(rep.mass_g.values())
            if est.total_mass_g > 0 and abs(sim_mass - est.total_mass_g) / est.total_mass_g > 1e-3:
                raise ConfabError(
                    f"{name}: simulated mass {sim_mass:.4f} g deviates from the "
                    f"planner estimate {est.total_mass_g:.4f} g by more than 0.1%"
                )
            if rep.limit_violations:
                raise ConfabError(
                    f"{name}: {len(rep.limit_violations)} joint-limit violations, "
                    f"first {rep.limit_violations[0]}"
                )
            _write(out_dir, f"sim_{name}.json", json.dumps(sim_dict(rep), indent=2))

    predicted = None
    with _stage("predict"):
        if job.design.kind == "patch":
            freqs = np.arange(job.predict.f_start, job.predict.f_stop + job.predict.step / 2,
                              job.predict.step)
            predicted = rfmodel.s11_model(
                dims, job.materials, layout.raster_direction, freqs,
                feed_inductance_nh_per_mm=job.predict.feed_inductance_nh_per_mm,
                label="model",
            )
            rfmodel.write_s11_csv(predicted, os.path.join(out_dir, "predicted_s11.csv"))
        else:
            notes.append("prediction skipped: no desk-scale model for the UWB design")

    s11_rows = []
    with _stage("compare"):
        if predicted is not None and job.compare_sources:
            for label, path in job.compare_sources:
                measured = rfmodel.load_s11(path)
                metrics = rfmodel.compare_s11(predicted, measured)
                for row in metrics.resonances:
                    s11_rows.append({
                        "pair": f"model vs {label}",
                        "f_model_hz": row.f_a,
                        "f_other_hz": row.f_b,
                        "offset_hz": row.offset_hz,
                        "depth_model_db": row.depth_a_db,
                        "depth_other_db": row.depth_b_db,
                        "depth_diff_db": row.depth_diff_db,
                        "rms_db": metrics.rms_db,
                    })

    measured_rows = []
    with _stage("dimcheck"):
        if job.measured_dimensions:
            measured_rows, summary = dim_error_report(layout, job.measured_dimensions)
            write_dim_report(measured_rows, summary, out_dir)

    plan_table = None
    if len(plans) == 2:
        refs = reference_reductions().get(job.design.kind, (None, None))
        est_p, est_c = plans["planar"][1], plans["conformal"][1]
        plan_table = PlanComparison(
            planar_time_s=est_p.total_time_s,
            conformal_time_s=est_c.total_time_s,
            planar_mass_g=est_p.total_mass_g,
            conformal_mass_g=est_c.total_mass_g,
            time_reduction_pct=100 * (1 - est_c.total_time_s / est_p.total_time_s),
            mass_reduction_pct=100 * (1 - est_c.total_mass_g / est_p.total_mass_g),
            reference_time_reduction_pct=refs[0],
            reference_mass_reduction_pct=refs[1],
        )

    bundle = ComparisonBundle(job=job.name, plan_table=plan_table,
                              s11_table=s11_rows, dim_error_table=measured_rows,
                              distortion_table=dim_rows, notes=notes)
    _write(out_dir, "comparison.json", json.dumps(bundle_dict(bundle), indent=2))
    if plan_table:
        _write_csv(out_dir, "plan_table.csv",
                   ["metric", "planar", "conformal", "reduction_pct", "reference_pct"],
                   [["time_s", f"{plan_table.planar_time_s:.1f}",
                     f"{plan_table.conformal_time_s:.1f}",
                     f"{plan_table.time_reduction_pct:.1f}",
                     str(plan_table.reference_time_reduction_pct)],
                    ["mass_g", f"{plan_table.planar_mass_g:.3f}",
                     f"{plan_table.conformal_mass_g:.3f}",
                     f"{plan_table.mass_reduction_pct:.1f}",
                     str(plan_table.reference_mass_reduction_pct)]])
    if s11_rows:
        _write_csv(out_dir, "s11_table.csv", list(s11_rows[0].keys()),
                   [[str(v) for v in row.values()] for row in s11_rows])
    return bundle


def dim_error_report(layout, measured_csv):
    """Relative feature errors of measured samples against the nominal layout.

    CSV columns: sample, feature, measured_mm. Returns per-sample rows plus
    mean/max of |relative error| per sample and overall; |error| above 50%
    is flagged as an outlier.
    """
    names = set(layout.features)
    nominal = {}
    for name, (a, b) in layout.features.items():
        nominal[name] = math.hypot(b[0] - a[0], b[1] - a[1])

    samples = {}
    with open(measured_csv, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for i, row in enumerate(reader, 2):
            feature = (row.get("feature") or "").strip()
            if feature not in names:
                raise UnknownFeature(
                    f"{measured_csv}:{i}: feature '{feature}' not in the layout's "
                    f"named-feature set {sorted(names)}"
                )
            sample = (row.get("sample") or "sample").strip()
            measured = float(row["measured_mm"])
            samples.setdefault(sample, []).append((feature, measured))

    rows = []
    per_sample = {}
    for sample in sorted(samples):
        errs = []
        for feature, measured in samples[sample]:
            nom = nominal[feature]
            err = (measured - nom) / nom
            errs.append(abs(err))
            rows.append({
                "sample": sample,
                "feature": feature,
                "nominal_mm": nom,
                "measured_mm": measured,
                "relative_error": err,
                "flagged": abs(err) > OUTLIER_FLAG_THRESHOLD,
            })
        per_sample[sample] = {
            "mean_abs_error": sum(errs) / len(errs),
            "max_abs_error": max(errs),
        }
    all_errs = [abs(r["relative_error"]) for r in rows]
    summary = {
        "per_sample": per_sample,
        "mean_abs_error": sum(all_errs) / len(all_errs) if all_errs else 0.0,
        "max_abs_error": max(all_errs) if all_errs else 0.0,
    }
    return rows, summary


def write_dim_report(rows, summary, out_dir, stem="dim_error"):
    _write(out_dir, f"{stem}.json", json.dumps({"rows": rows, "summary": summary}, indent=2))
    _write_csv(out_dir, f"{stem}.csv",
               ["sample", "feature", "nominal_mm", "measured_mm", "relative_error", "flagged"],
               [[r["sample"], r["feature"], f"{r['nominal_mm']:.6f}",
                 f"{r['measured_mm']:.6f}", f"{r['relative_error']:.8f}",
                 str(r["flagged"])] for r in rows])


def toolpath_dump(tp):
    """One segment per line: tool kind role start end axis speed volume."""
    lines = [f"# toolpath: {len(tp.segments)} segments"]
    for s in tp.segments:
        lines.append(
            f"{s.tool} {s.kind} {s.role} "
            f"{s.start[0]:.4f} {s.start[1]:.4f} {s.start[2]:.4f} "
            f"{s.end[0]:.4f} {s.end[1]:.4f} {s.end[2]:.4f} "
            f"{s.axis_end[0]:.6f} {s.axis_end[1]:.6f} {s.axis_end[2]:.6f} "
            f"{s.speed:.3f} {s.extrusion_volume:.6f}"
        )
    return "\n".join(lines) + "\n"


def estimate_dict(est):
    return {
        "per_material": {k: asdict(v) for k, v in est.per_material.items()},
        "total_time_s": est.total_time_s,
        "total_mass_g": est.total_mass_g,
        "time_breakdown_s": est.time_breakdown_s,
        "mass_breakdown_g": est.mass_breakdown_g,
    }


def sim_dict(rep):
    return {
        "total_time_s": rep.total_time_s,
        "filament_mm": {str(k): v for k, v in rep.filament_mm.items()},
        "mass_g": {str(k): v for k, v in rep.mass_g.items()},
        "max_joint_speed": rep.max_joint_speed,
        "limit_violations": [list(v) for v in rep.limit_violations],
        "final_pose": list(rep.final_pose.joints()),
        "move_count": rep.move_count,
    }


def bundle_dict(bundle: ComparisonBundle):
    return {
        "job": bundle.job,
        "plan_table": asdict(bundle.plan_table) if bundle.plan_table else None,
        "s11_table": bundle.s11_table,
        "dim_error_table": bundle.dim_error_table,
        "distortion_table": bundle.distortion_table,
        "notes": bundle.notes,
    }


def _write(out_dir, name, text):
    with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_csv(out_dir, name, header, rows):
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
