"""Command-line driver.

Subcommands mirror the pipeline stages:

    confab design   --job file [--out dir]        layout text + SVG
    confab project  --job file [--out dir]        conformal polylines + distortion
    confab plan     --job file [--out dir] [--mode both|planar|conformal]
    confab emit     --job file [--out dir] [--mode ...] [--flavor ...]
    confab verify   gcode [gcode...] --job file   parse + simulate, report limits
    confab predict  --job file [--out dir]        predicted S11 CSV
    confab compare  src src [src...] [--labels a,b,...] [--out dir]
    confab dimcheck --job file --measured csv [--out dir]
    confab pipeline --job file [--out dir] [--mode ...] [--flavor ...]

The pipeline is deterministic; --seed is accepted and ignored (reserved).
Material database resolution honors the CONFAB_MATERIALS environment
variable when a job says `materials: default`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import design as design_mod
from . import gcode, kinematics, pathplan, projection, report, rfmodel
from .errors import ConfabError, StageError
from .jobs import JobConfig, load_job


def _load_job_or_fail(args) -> JobConfig:
    try:
        return load_job(args.job)
    except ConfabError as e:
        raise StageError("config", e) from e


def _out_dir(args, job):
    out = args.out or job.output or os.path.join("out", job.name)
    os.makedirs(out, exist_ok=True)
    return out


def cmd_design(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    try:
        dims, layout = report.build_layout(job)
    except ConfabError as e:
        raise StageError("design", e) from e
    report._write(out, "layout.txt", design_mod.layout_to_text(layout))
    report._write(out, "layout.svg", design_mod.layout_to_svg(layout))
    if dims is not None:
        report._write(out, "dims.json", json.dumps({
            "W_mm": dims.W, "L_mm": dims.L, "h_mm": dims.h,
            "eps_eff": dims.eps_eff, "delta_L_mm": dims.delta_L,
            "feed_inset_mm": dims.feed_inset,
            "feed_line_width_mm": dims.feed_line_width,
            "f_target_hz": dims.f_target,
        }, indent=2))
    print(f"wrote layout artifacts to {out}")
    return 0


def cmd_project(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    try:
        _, layout = report.build_layout(job)
        conformal = projection.project_layout(layout, job.surface, job.projection_mode)
        rep = projection.distortion_report(conformal)
    except ConfabError as e:
        raise StageError("project", e) from e
    report._write(out, "conformal.txt", projection.conformal_to_text(conformal))
    report._write_csv(out, "distortion.csv",
                      ["feature", "nominal_mm", "conformal_mm", "relative_error"],
                      [[r.feature, f"{r.nominal_length:.6f}", f"{r.conformal_length:.6f}",
                        f"{r.relative_error:.8f}"] for r in rep.per_feature])
    print(f"distortion: mean |err| {rep.mean_abs_error:.4%}, max {rep.max_abs_error:.4%}")
    return 0


def _plan(job, mode):
    _, layout = report.build_layout(job)
    conformal = projection.project_layout(layout, job.surface, job.projection_mode)
    plans = {}
    if mode in ("both", "conformal"):
        tp = pathplan.plan_conformal(job.surface, conformal, job.settings, job.materials)
        plans["conformal"] = tp
    if mode in ("both", "planar"):
        tp = pathplan.plan_planar(job.surface, conformal, job.settings, job.materials)
        plans["planar"] = tp
    return plans


def cmd_plan(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    try:
        plans = _plan(job, args.mode)
    except ConfabError as e:
        raise StageError("plan", e) from e
    for name, tp in plans.items():
        est = pathplan.estimate(tp, job.materials)
        report._write(out, f"toolpath_{name}.txt", report.toolpath_dump(tp))
        report._write(out, f"estimate_{name}.json",
                      json.dumps(report.estimate_dict(est), indent=2))
        print(f"{name}: {len(tp.segments)} segments, "
              f"{est.total_time_s / 60:.1f} min, {est.total_mass_g:.2f} g")
    return 0


def cmd_emit(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    try:
        plans = _plan(job, args.mode)
        for name, tp in plans.items():
            poses = kinematics.solve_toolpath(tp, job.machine)
            text = gcode.emit(tp, poses, job.machine, job.materials, job.settings,
                              flavor=args.flavor, label=f"{job.name}_{name}")
            report._write(out, f"{name}.gcode", text)
            print(f"wrote {name}.gcode ({text.count(chr(10))} lines)")
    except ConfabError as e:
        raise StageError("emit", e) from e
    return 0


def cmd_verify(args):
    job = _load_job_or_fail(args)
    out = args.out
    status = 0
    for path in args.gcode:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        try:
            prog = gcode.parse(text)
        except ConfabError as e:
            raise StageError("verify", e) from e
        issues = gcode.validate_program(prog)
        rep = gcode.simulate(prog, job.machine, job.materials)
        print(f"{path}: {rep.move_count} moves, {rep.total_time_s / 60:.1f} min, "
              f"{sum(rep.mass_g.values()):.2f} g, "
              f"{len(rep.limit_violations)} limit violations, {len(issues)} issues")
        for idx, joint, value in rep.limit_violations[:10]:
            print(f"  instruction {idx}: {joint} = {value:.3f} outside limits")
        for msg in issues[:10]:
            print(f"  {msg}")
        if out:
            os.makedirs(out, exist_ok=True)
            stem = os.path.splitext(os.path.basename(path))[0]
            report._write(out, f"sim_{stem}.json", json.dumps(report.sim_dict(rep), indent=2))
        if rep.limit_violations or issues:
            status = 1
    return status


def cmd_predict(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    if job.design.kind != "patch":
        print("prediction skipped: no desk-scale model for the UWB design", file=sys.stderr)
        return 1
    try:
        dims, layout = report.build_layout(job)
        freqs = np.arange(job.predict.f_start, job.predict.f_stop + job.predict.step / 2,
                          job.predict.step)
        curve = rfmodel.s11_model(
            dims, job.materials, layout.raster_direction, freqs,
            feed_inductance_nh_per_mm=job.predict.feed_inductance_nh_per_mm)
    except ConfabError as e:
        raise StageError("predict", e) from e
    path = os.path.join(out, "predicted_s11.csv")
    rfmodel.write_s11_csv(curve, path)
    i = int(np.argmin(curve.s11_db))
    print(f"wrote {path}; minimum {curve.s11_db[i]:.1f} dB at {curve.freqs[i] / 1e9:.3f} GHz")
    return 0


def cmd_compare(args):
    if len(args.sources) < 2:
        print("compare needs at least two S11 sources", file=sys.stderr)
        return 2
    labels = (args.labels.split(",") if args.labels else
              [os.path.basename(p) for p in args.sources])
    if len(labels) != len(args.sources):
        print("number of labels must match number of sources", file=sys.stderr)
        return 2
    try:
        curves = [rfmodel.load_s11(p) for p in args.sources]
    except ConfabError as e:
        raise StageError("compare", e) from e
    rows = []
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            try:
                m = rfmodel.compare_s11(curves[i], curves[j])
            except ConfabError as e:
                raise StageError("compare", e) from e
            for r in sorted(m.resonances, key=lambda r: r.f_a):
                rows.append([f"{labels[i]} vs {labels[j]}", f"{r.f_a:.4e}", f"{r.f_b:.4e}",
                             f"{r.offset_hz:.4e}", f"{r.depth_a_db:.2f}",
                             f"{r.depth_b_db:.2f}", f"{r.depth_diff_db:.2f}",
                             f"{m.rms_db:.3f}"])
    header = ["pair", "f_a_hz", "f_b_hz", "offset_hz", "depth_a_db", "depth_b_db",
              "depth_diff_db", "rms_db"]
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report._write_csv(args.out, "s11_table.csv", header, rows)
    return 0


def cmd_dimcheck(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    try:
        _, layout = report.build_layout(job)
        rows, summary = report.dim_error_report(layout, args.measured)
    except ConfabError as e:
        raise StageError("dimcheck", e) from e
    report.write_dim_report(rows, summary, out)
    for sample, stats in summary["per_sample"].items():
        print(f"{sample}: mean |err| {stats['mean_abs_error']:.4%}, "
              f"max {stats['max_abs_error']:.4%}")
    print(f"overall: mean |err| {summary['mean_abs_error']:.4%}, "
          f"max {summary['max_abs_error']:.4%}")
    return 0


def cmd_pipeline(args):
    job = _load_job_or_fail(args)
    out = _out_dir(args, job)
    bundle = report.run_pipeline(job, out, mode=args.mode, flavor=args.flavor)
    if bundle.plan_table:
        t = bundle.plan_table
        print(f"time:  planar {t.planar_time_s / 60:.1f} min -> conformal "
              f"{t.conformal_time_s / 60:.1f} min ({t.time_reduction_pct:.0f}% less; "
              f"reference {t.reference_time_reduction_pct}%)")
        print(f"mass:  planar {t.planar_mass_g:.2f} g -> conformal "
              f"{t.conformal_mass_g:.2f} g ({t.mass_reduction_pct:.0f}% less; "
              f"reference {t.reference_mass_reduction_pct}%)")
    for note in bundle.notes:
        print(f"note: {note}")
    print(f"artifacts in {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="confab",
                                description="conformal antenna fabrication pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    def add_job(sp, out=True):
        sp.add_argument("--job", required=True, help="job YAML file")
        if out:
            sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("design", help="synthesize the planar layout")
    add_job(sp)
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("project", help="project the layout onto the surface")
    add_job(sp)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("plan", help="generate toolpaths and estimates")
    add_job(sp)
    sp.add_argument("--mode", choices=["both", "planar", "conformal"], default="both")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("emit", help="emit G-code")
    add_job(sp)
    sp.add_argument("--mode", choices=["both", "planar", "conformal"], default="both")
    sp.add_argument("--flavor", choices=["desktop_mm_min", "inverse_time"],
                    default="desktop_mm_min")
    sp.set_defaults(func=cmd_emit)

    sp = sub.add_parser("verify", help="parse and simulate G-code files")
    sp.add_argument("gcode", nargs="+", help="G-code files")
    add_job(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("predict", help="predict S11 for the patch design")
    add_job(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("compare", help="compare S11 curves (.s1p or CSV)")
    sp.add_argument("sources", nargs="+", help="two or more S11 files")
    sp.add_argument("--labels", default=None, help="comma-separated labels")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("dimcheck", help="measured-dimension error report")
    add_job(sp)
    sp.add_argument("--measured", required=True, help="CSV: sample,feature,measured_mm")
    sp.set_defaults(func=cmd_dimcheck)

    sp = sub.add_parser("pipeline", help="run the whole chain")
    add_job(sp)
    sp.add_argument("--mode", choices=["both", "planar", "conformal"], default="both")
    sp.add_argument("--flavor", choices=["desktop_mm_min", "inverse_time"],
                    default="desktop_mm_min")
    sp.add_argument("--seed", type=int, default=None,
                    help="reserved; the pipeline is deterministic")
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ConfabError as e:
        print(f"error: [unlabeled] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
