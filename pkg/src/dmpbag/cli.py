"""Command-line entry point: demo-gen, prep, fit, constrain, rollout,
metrics, simulate, compare.

Every subcommand is deterministic under --seed. Exit codes: 0 success,
1 usage error, 2 infeasible problem or residual limit violation, 3 I/O or
format error.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import io as formats
from .bagsim import (
    BagSimConfig,
    EpisodeConfig,
    run_episode,
    trajectory_quality,
)
from .constrain import (
    KinematicLimits,
    OptDmpConfig,
    TcConfig,
    constrain_opt,
    constrain_tau,
    tune_gamma_a,
    violation_report,
)
from .demoprep import KinematicChain, preprocess, to_joint_space
from .dmp import fit as fit_dmp, rollout
from .errors import (
    DmpBagError,
    FormatError,
    InfeasibleQpError,
    UnsatisfiableBySlowdownError,
)
from .markers import AlphaRule, evaluate
from .svg import write_chart
from .trajectory import Trajectory

_EXIT_OK = 0
_EXIT_USAGE = 1
_EXIT_INFEASIBLE = 2
_EXIT_IO = 3
_VIOLATION_TOL = 1e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def synthetic_demo(seed, dofs=3, tau=1.0, n=201, wiggle=0.1):
    """Seeded smooth point-to-point demo: min-jerk plus enveloped harmonics."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, tau, n)
    u = t / tau
    minjerk = 10.0 * u**3 - 15.0 * u**4 + 6.0 * u**5
    envelope = (4.0 * u * (1.0 - u)) ** 3
    pos = np.empty((dofs, n))
    for d in range(dofs):
        y0, g = rng.uniform(-1.0, 1.0, 2)
        pos[d] = y0 + (g - y0) * minjerk
        for k in (2, 3):
            pos[d] += wiggle * rng.uniform(-1.0, 1.0) * envelope * np.sin(
                np.pi * k * u
            )
    return Trajectory.from_positions(t, pos)


def _scenario(seed, dofs=3, tau=1.0, n=201):
    """Demo plus limits where only one wiggly DOF is velocity-limited.

    DOF 0 carries little net displacement but a fast oscillation whose peak
    speed dominates the motion; its velocity cap forces a uniform slowdown to
    a ~0.3 speed ratio while per-DOF weight optimization can simply flatten
    the oscillation.
    """
    demo = synthetic_demo(seed, dofs=dofs, tau=tau, n=n, wiggle=0.05)
    u = demo.t / tau
    envelope = (4.0 * u * (1.0 - u)) ** 3
    pos = demo.pos.copy()
    pos[0] = 0.2 * (10.0 * u**3 - 15.0 * u**4 + 6.0 * u**5)
    pos[0] += 0.45 * envelope * np.sin(4.0 * np.pi * u)
    demo = Trajectory.from_positions(demo.t, pos)
    vel_peak = np.max(np.abs(demo.vel), axis=1)
    acc_peak = np.max(np.abs(demo.acc), axis=1)
    caps = np.full(demo.dof_count, 1.5)
    caps[0] = 0.3
    v_hi = caps * vel_peak / 0.98
    a_hi = 10.0 * acc_peak
    q_span = 10.0 * np.max(np.abs(demo.pos), axis=1) + 1.0
    limits = KinematicLimits(-q_span, q_span, -v_hi, v_hi, -a_hi, a_hi)
    return demo, limits


def _constrain(method, model, limits, dt, tc_cfg=None, opt_cfg=None):
    if method == "tau":
        return constrain_tau(model, limits, dt)
    if method == "tc":
        return tune_gamma_a(model, limits, tc_cfg or TcConfig(), dt)
    return constrain_opt(model, limits, opt_cfg or OptDmpConfig(), dt)


def _report_doc(result):
    return {
        "method": result.method,
        "tau_final": result.tau_final,
        "max_excess": {
            kind: float(np.max(values))
            for kind, values in result.violation_report.items()
        },
        "per_dof_excess": {
            kind: [float(v) for v in values]
            for kind, values in result.violation_report.items()
        },
        "solver_stats": _jsonable(result.solver_stats),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _require(config, key, flag):
    if key not in config:
        raise _UsageError(f"config is missing the {key!r} section needed by {flag}")
    return config[key]


# ---------------------------------------------------------------------------
# subcommands


def _cmd_demo_gen(args):
    demo = synthetic_demo(
        args.seed, dofs=args.dofs, tau=args.tau, n=args.samples, wiggle=args.wiggle
    )
    formats.write_trajectory(args.out, demo)
    return _EXIT_OK


def _cmd_prep(args):
    pair = formats.read_pose_pair(args.poses)
    bundle = preprocess(pair, window=args.window)
    config = formats.read_config(args.config)
    limits = _require(config, "limits", "prep")
    chain = (
        KinematicChain.from_json(args.chain)
        if args.chain
        else KinematicChain.default_7dof()
    )
    traj = to_joint_space(bundle.pair, chain, limits)
    formats.write_trajectory(args.out, traj)
    return _EXIT_OK


def _cmd_fit(args):
    demo = formats.read_trajectory(args.demo)
    model = fit_dmp(demo, n_kernels=args.kernels)
    formats.write_model(args.out, model)
    return _EXIT_OK


def _cmd_rollout(args):
    model = formats.read_model(args.model)
    traj = rollout(model, args.dt, tau_override=args.tau)
    formats.write_trajectory(args.out, traj)
    return _EXIT_OK


def _cmd_constrain(args):
    model = formats.read_model(args.model)
    config = formats.read_config(args.limits)
    limits = _require(config, "limits", "constrain")
    try:
        result = _constrain(
            args.method, model, limits, args.dt,
            tc_cfg=config.get("tc"), opt_cfg=config.get("opt"),
        )
    except (InfeasibleQpError, UnsatisfiableBySlowdownError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if getattr(exc, "violated", None):
            for item in exc.violated:
                print(f"  first violation: {item}", file=sys.stderr)
        return _EXIT_INFEASIBLE
    formats.write_trajectory(args.out, result.trajectory)
    if args.report:
        _write_json(args.report, _report_doc(result))
    if result.max_excess() > _VIOLATION_TOL:
        print(
            f"residual limit violation {result.max_excess():.3e}", file=sys.stderr
        )
        return _EXIT_INFEASIBLE
    return _EXIT_OK


def _cmd_metrics(args):
    cloud = formats.read_marker_cloud(args.cloud)
    rule = AlphaRule()
    volume_ref = area_ref = None
    if args.config:
        config = formats.read_config(args.config)
        rule = config.get("alpha", rule)
    if args.reference:
        ref_cloud = formats.read_marker_cloud(args.reference)
        ref = evaluate(ref_cloud, rule)
        volume_ref, area_ref = ref.volume, ref.area
    report = evaluate(cloud, rule, volume_ref=volume_ref, area_ref=area_ref)
    doc = {
        "volume": report.volume,
        "area": report.area,
        "elongation": report.elongation,
        "delta_elongation": report.delta_elongation,
        "volume_ratio": report.volume_ratio,
        "area_ratio": report.area_ratio,
        "flags": report.flags,
    }
    if args.out:
        _write_json(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    return _EXIT_OK


def _episode_rows(trace):
    rows = []
    for i, step in enumerate(trace.steps):
        rows.append(
            [
                i,
                step.action,
                "%.12g" % step.report.area_ratio,
                "%.12g" % step.report.volume_ratio,
                "%.12g" % step.report.delta_elongation,
            ]
        )
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_simulate(args):
    config = formats.read_config(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    episode_cfg = config.get("episode", EpisodeConfig())
    sim_base = config.get("sim", BagSimConfig())

    if "limits" in config and args.model:
        model = formats.read_model(args.model)
        demo = rollout(model, args.dt)
        limits = config["limits"]
    else:
        demo, limits = _scenario(seed)
        model = fit_dmp(demo)
    try:
        result = _constrain(
            args.method, model, limits, args.dt,
            tc_cfg=config.get("tc"), opt_cfg=config.get("opt"),
        )
    except (InfeasibleQpError, UnsatisfiableBySlowdownError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return _EXIT_INFEASIBLE
    quality = trajectory_quality(result.trajectory, demo)

    os.makedirs(args.out, exist_ok=True)
    header = ["action_index", "action", "area_ratio", "volume_ratio", "delta_elongation"]
    summary_rows = []
    traces = []
    for run in range(args.runs):
        sim_cfg = BagSimConfig(
            **{**vars(sim_base), "seed": seed + run}
        )
        trace = run_episode(sim_cfg, episode_cfg, quality)
        traces.append(trace)
        _write_csv(
            os.path.join(args.out, f"episode_{run:03d}.csv"),
            header,
            _episode_rows(trace),
        )
        final = trace.final_report
        summary_rows.append(
            [
                run,
                int(trace.targets_reached),
                trace.dynamic_actions,
                len(trace.steps) - 1,
                "%.12g" % final.area_ratio,
                "%.12g" % final.volume_ratio,
                "%.12g" % final.delta_elongation,
                trace.termination,
            ]
        )
    _write_csv(
        os.path.join(args.out, "summary.csv"),
        [
            "episode",
            "targets_reached",
            "dynamic_actions",
            "total_actions",
            "final_area_ratio",
            "final_volume_ratio",
            "final_delta_elongation",
            "termination",
        ],
        summary_rows,
    )
    if args.svg:
        metrics = [
            ("area_ratio", lambda r: r.area_ratio, [("target", episode_cfg.area_target)]),
            ("volume_ratio", lambda r: r.volume_ratio, [("target", episode_cfg.volume_target)]),
            ("delta_elongation", lambda r: r.delta_elongation, [("target", episode_cfg.delta_e_target)]),
        ]
        for name, pick, rules in metrics:
            series = [
                (
                    f"run {i}",
                    list(range(len(trace.steps))),
                    [pick(s.report) for s in trace.steps],
                )
                for i, trace in enumerate(traces)
            ]
            write_chart(
                os.path.join(args.out, f"{name}.svg"),
                series,
                title=f"{name} vs action ({args.method})",
                x_label="action index",
                y_label=name,
                hlines=rules,
            )
    reached = sum(row[1] for row in summary_rows)
    print(f"{reached}/{args.runs} episodes reached the targets (quality {quality:.3f})")
    return _EXIT_OK


def _path_rmse(result_traj, demo):
    """Position RMSE after mapping both onto normalized time."""
    u = np.linspace(0.0, 1.0, 200)
    t_a = (demo.t - demo.t[0]) / demo.duration
    t_b = (result_traj.t - result_traj.t[0]) / result_traj.duration
    a = np.vstack([np.interp(u, t_a, row) for row in demo.pos])
    b = np.vstack([np.interp(u, t_b, row) for row in result_traj.pos])
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _cmd_compare(args):
    model = formats.read_model(args.model)
    config = formats.read_config(args.limits)
    limits = _require(config, "limits", "compare")
    demo = rollout(model, args.dt)
    rows = []
    for method in ("tau", "tc", "opt"):
        try:
            result = _constrain(
                method, model, limits, args.dt,
                tc_cfg=config.get("tc"), opt_cfg=config.get("opt"),
            )
        except DmpBagError as exc:
            rows.append([method, "failed: " + str(exc)] + [""] * (2 + 2 * model.dof_count))
            continue
        traj = result.trajectory
        peaks_v = np.max(np.abs(traj.vel), axis=1)
        peaks_a = np.max(np.abs(traj.acc), axis=1)
        rows.append(
            [method, "ok", "%.6g" % traj.duration, "%.6g" % _path_rmse(traj, demo)]
            + ["%.6g" % v for v in peaks_v]
            + ["%.6g" % a for a in peaks_a]
        )
    os.makedirs(args.out, exist_ok=True)
    header = (
        ["method", "status", "duration", "path_rmse"]
        + [f"peak_qd{d}" for d in range(model.dof_count)]
        + [f"peak_qdd{d}" for d in range(model.dof_count)]
    )
    _write_csv(os.path.join(args.out, "compare.csv"), header, rows)
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    for row in [header] + rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    return _EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="dmpbag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-gen", help="write a seeded synthetic joint-space demo")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--dofs", type=int, default=3, help="number of joints")
    p.add_argument("--tau", type=float, default=1.0, help="demo duration, s")
    p.add_argument("--samples", type=int, default=201, help="sample count")
    p.add_argument("--wiggle", type=float, default=0.1, help="harmonic amplitude, rad")
    p.add_argument("--out", required=True, help="output trajectory CSV")
    p.set_defaults(func=_cmd_demo_gen)

    p = sub.add_parser("prep", help="preprocess a hand-pose capture to joint space")
    p.add_argument("--poses", required=True, help="input pose-pair CSV")
    p.add_argument("--config", required=True, help="config JSON with a limits section")
    p.add_argument("--chain", help="kinematic chain JSON (default: built-in 7-DOF)")
    p.add_argument("--window", type=int, default=21, help="smoothing window, odd")
    p.add_argument("--out", required=True, help="output trajectory CSV")
    p.set_defaults(func=_cmd_prep)

    p = sub.add_parser("fit", help="fit a DMP to a demo trajectory")
    p.add_argument("--demo", required=True, help="input trajectory CSV")
    p.add_argument("--kernels", type=int, default=30, help="kernel count")
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("rollout", help="integrate a fitted model")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--dt", type=float, default=0.005, help="integration step, s")
    p.add_argument("--tau", type=float, default=None, help="time-constant override, s")
    p.add_argument("--out", required=True, help="output trajectory CSV")
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("constrain", help="apply a limit-satisfaction method")
    p.add_argument("--method", required=True, choices=("tau", "tc", "opt"))
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--limits", required=True, help="config JSON with a limits section")
    p.add_argument("--dt", type=float, default=0.005, help="integration step, s")
    p.add_argument("--out", required=True, help="output trajectory CSV")
    p.add_argument("--report", help="optional JSON report path")
    p.set_defaults(func=_cmd_constrain)

    p = sub.add_parser("metrics", help="evaluate bag metrics on a marker cloud")
    p.add_argument("--cloud", required=True, help="marker cloud CSV")
    p.add_argument("--reference", help="reference cloud CSV for ratios")
    p.add_argument("--config", help="config JSON with an alpha section")
    p.add_argument("--out", help="output JSON (default: stdout)")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("simulate", help="run seeded refinement episodes")
    p.add_argument("--config", help="config JSON (sim/episode/limits sections)")
    p.add_argument("--model", help="model JSON (else a built-in scenario)")
    p.add_argument("--method", required=True, choices=("tau", "tc", "opt"))
    p.add_argument("--runs", type=int, default=10, help="episode count")
    p.add_argument("--seed", type=int, default=None, help="base seed override")
    p.add_argument("--dt", type=float, default=0.005, help="integration step, s")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--svg", action="store_true", help="also write SVG line plots")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="side-by-side table of all three methods")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--limits", required=True, help="config JSON with a limits section")
    p.add_argument("--dt", type=float, default=0.005, help="integration step, s")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError, FormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except (InfeasibleQpError, UnsatisfiableBySlowdownError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return _EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
