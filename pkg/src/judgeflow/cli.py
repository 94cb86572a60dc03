"""Command-line front end.

Subcommands: solve, phases, simulate, capacity-plan,
experiment asymptotic, experiment policy-compare, figure <id>.

Exit status: 0 on success, 1 on a domain error (bad instance file,
closed forms requested outside their assumptions, ...), 2 on usage
errors.  All tables print numbers with fixed 6-decimal formatting and
echo the master seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiments, instances
from .errors import JudgeflowError
from .fluid import Instance, solve_capacity_plan, solve_feedback, solve_steady_state
from .phases import single_class_phase, two_class_report
from .policies import (
    always_judge,
    fluid_tracking,
    fluid_tracking_feedback,
    greedy_optimal,
    never_judge,
)
from .sim import SimConfig, detect_instability, run

DEFAULT_SEED = 42

_POLICY_FLAGS = {
    "fluid": "fluid_tracking",
    "greedy-optimal": "greedy_optimal",
    "always-judge": "always_judge",
    "never-judge": "never_judge",
}


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _load(args) -> instances.InstanceFile:
    if not args.instance:
        raise JudgeflowError("missing --instance <path>")
    spec = instances.load_instance_file(args.instance)
    if args.nh is not None:
        spec = instances.InstanceFile(
            instance=spec.instance.with_nh(args.nh),
            kappas=spec.kappas,
            budget=spec.budget,
            sim=spec.sim,
        )
    return spec


def _solution_dict(instance: Instance, sol) -> dict:
    return {
        "objective": sol.objective,
        "n_w": instance.n_w,
        "n_j": instance.n_j,
        "n_h": instance.n_h,
        "classes": [
            {
                "x": sol.x[i],
                "v": sol.v[i],
                "y": sol.y[i],
                "z_d": sol.z_d[i],
                "z_j": sol.z_j[i],
                "q_w": sol.q_w[i],
                "phi": sol.phi[i],
            }
            for i in range(len(instance.classes))
        ],
    }


def _print_solution_table(instance: Instance, sol, seed: int) -> None:
    print(f"# seed: {seed}")
    print(f"R_star {_fmt(sol.objective)}")
    header = ["class", "x", "v", "y", "z_d", "z_j", "q_w", "phi"]
    print(" ".join(f"{h:>10s}" for h in header))
    for i in range(len(instance.classes)):
        cells = [
            f"{i + 1:>10d}",
            *(f"{_fmt(v):>10s}" for v in (
                sol.x[i], sol.v[i], sol.y[i], sol.z_d[i], sol.z_j[i],
                sol.q_w[i], sol.phi[i],
            )),
        ]
        print(" ".join(cells))


def _cmd_solve(args) -> int:
    spec = _load(args)
    inst = spec.instance
    if args.feedback:
        if spec.kappas is None:
            raise JudgeflowError("--feedback needs kappa on every class")
        fb = solve_feedback(inst, spec.kappas)
        print(f"# seed: {args.seed}")
        print(f"R_star {_fmt(fb.objective)}")
        header = ["class", "x", "v", "x_fb", "v_fb", "phi", "phi_fb"]
        print(" ".join(f"{h:>10s}" for h in header))
        for i in range(len(inst.classes)):
            cells = [
                f"{i + 1:>10d}",
                *(f"{_fmt(v):>10s}" for v in (
                    fb.x[i], fb.v[i], fb.x_fb[i], fb.v_fb[i],
                    fb.phi[i], fb.phi_fb[i],
                )),
            ]
            print(" ".join(cells))
        payload = {
            "objective": fb.objective,
            "classes": [
                {"x": fb.x[i], "v": fb.v[i], "x_fb": fb.x_fb[i],
                 "v_fb": fb.v_fb[i], "phi": fb.phi[i], "phi_fb": fb.phi_fb[i]}
                for i in range(len(inst.classes))
            ],
        }
    else:
        sol = solve_steady_state(inst)
        _print_solution_table(inst, sol, args.seed)
        payload = _solution_dict(inst, sol)
    out_json = args.json or os.path.join(args.out, "solution.json")
    os.makedirs(os.path.dirname(out_json) or ".", exist_ok=True)
    with open(out_json, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"wrote {out_json}")
    return 0


def _cmd_phases(args) -> int:
    spec = _load(args)
    inst = spec.instance
    print(f"# seed: {args.seed}")
    if len(inst.classes) == 1:
        rep = single_class_phase(inst)
        print(f"regime {rep.regime}")
        if rep.phase is not None:
            print(f"phase {rep.phase}")
        if rep.phi_star is not None:
            print(f"phi_star {_fmt(rep.phi_star)}")
        t = rep.thresholds
        print(f"thresholds {_fmt(t.t1)} {_fmt(t.t2)} {_fmt(t.t3)}")
        caps = rep.caps
        print(f"normalized H={_fmt(caps.H)} J={_fmt(caps.J)} "
              f"J_eff={_fmt(caps.J_eff)}")
        if rep.aw_threshold is not None:
            print(f"aw_threshold {_fmt(rep.aw_threshold)}")
    elif len(inst.classes) == 2:
        rep = two_class_report(inst)
        print(f"q_acc {_fmt(rep.q_acc[0])} {_fmt(rep.q_acc[1])}")
        print(f"eta {_fmt(rep.eta[0])} {_fmt(rep.eta[1])}")
        print(f"indices k_q={rep.k_q} k_eta={rep.k_eta} k_c={rep.k_c}")
        if rep.degenerate:
            print("degenerate: same class dominates both metrics; no reversal")
        else:
            print(f"lower_threshold {_fmt(rep.lower_threshold)}")
            print(f"upper_threshold {_fmt(rep.upper_threshold)}")
            lo, hi = rep.complementarity_interval
            print(f"complementarity_interval ({_fmt(lo)}, {_fmt(hi)}) "
                  f"[{rep.interval_kind}]")
    else:
        raise JudgeflowError("closed-form analysis requires 1 or 2 classes")
    return 0


def _cmd_simulate(args) -> int:
    spec = _load(args)
    inst = spec.instance
    sim = spec.sim or instances.SimSettings()
    scale = args.scale if args.scale is not None else sim.scale_n
    seed = args.seed if args.seed_given else sim.seed
    kind = _POLICY_FLAGS[args.policy]
    if args.feedback:
        if spec.kappas is None:
            raise JudgeflowError("--feedback needs kappa on every class")
        if kind != "fluid_tracking":
            raise JudgeflowError(
                "feedback simulation supports only --policy fluid"
            )
        fb = solve_feedback(inst, spec.kappas)
        policy = fluid_tracking_feedback(fb)
        feedback = spec.kappas
        reference = fb.objective
    else:
        sol = solve_steady_state(inst)
        feedback = None
        reference = sol.objective
        if kind == "fluid_tracking":
            policy = fluid_tracking(sol)
        elif kind == "greedy_optimal":
            policy = greedy_optimal(sol)
        elif kind == "always_judge":
            policy = always_judge(len(inst.classes))
        else:
            policy = never_judge(len(inst.classes))
    cfg = SimConfig(
        instance=inst,
        scale_n=scale,
        horizon_T=args.horizon if args.horizon else sim.horizon_T,
        warmup=args.warmup if args.warmup is not None else sim.warmup,
        seed=seed,
        sample_interval=sim.sample_interval,
        feedback=feedback,
    )
    os.makedirs(args.out, exist_ok=True)
    trajectory_csv = (
        os.path.join(args.out, "trajectory.csv") if args.dump_trajectory else None
    )
    metrics = run(cfg, policy, trajectory_csv=trajectory_csv)
    print(f"# seed: {seed}")
    print(f"policy {kind}")
    print(f"scale_n {scale}")
    print(f"R_star {_fmt(reference)}")
    print(f"throughput {_fmt(metrics.throughput_rate)}")
    gap = (reference - metrics.throughput_rate) / reference * 100 if reference else 0.0
    print(f"gap_pct {_fmt(gap)}")
    print(f"utilization workers={_fmt(metrics.utilization_workers)} "
          f"judges={_fmt(metrics.utilization_judges)} "
          f"humans={_fmt(metrics.utilization_humans)}")
    verdicts = detect_instability(metrics.trajectory, cfg.horizon_T)
    for key in ("judge", "human", "work"):
        v = verdicts[key]
        print(f"stability {key} {v.verdict} slope={_fmt(v.slope)} "
              f"r2={_fmt(v.r_squared)}")
    if trajectory_csv:
        print(f"wrote {trajectory_csv}")
    return 0


def _cmd_capacity_plan(args) -> int:
    spec = _load(args)
    budget = spec.budget
    if args.budget is not None:
        budget = (args.budget, args.gamma_w, args.gamma_j)
    if budget is None:
        raise JudgeflowError(
            "capacity-plan needs a [budget] table or --budget/--gamma-w/--gamma-j"
        )
    B, gw, gj = budget
    plan = solve_capacity_plan(spec.instance, B, gw, gj)
    print(f"# seed: {args.seed}")
    print(f"budget B={_fmt(B)} gamma_w={_fmt(gw)} gamma_j={_fmt(gj)}")
    print(f"n_w_star {_fmt(plan.n_w)}")
    print(f"n_j_star {_fmt(plan.n_j)}")
    _print_solution_table(
        Instance(classes=spec.instance.classes, n_w=plan.n_w, n_j=plan.n_j,
                 n_h=spec.instance.n_h),
        plan.solution,
        args.seed,
    )
    return 0


def _cmd_experiment(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.what == "asymptotic":
        spec = experiments.RandomInstanceSpec(
            n_instances=args.instances, seed=args.seed
        )
        study = experiments.run_asymptotic_study(
            spec,
            scales=tuple(args.scales),
            replications=args.replications,
            horizon=args.horizon or 500.0,
            warmup=args.warmup if args.warmup is not None else 100.0,
            out_dir=args.out,
            max_workers=args.workers,
        )
        print(f"# seed: {args.seed}")
        print(f"{'n':>6s} {'mean_gap_pct':>14s} {'std':>10s} {'runs':>6s}")
        for scale in sorted(study.summary):
            mean, std, _se, count = study.summary[scale]
            print(f"{scale:>6d} {_fmt(mean):>14s} {_fmt(std):>10s} {count:>6d}")
        print(f"wrote {os.path.join(args.out, 'gap.csv')}")
    else:
        instance = instances.fig3_sim()
        if args.instance:
            instance = instances.load_instance_file(args.instance).instance
        comparison = experiments.run_policy_comparison(
            instance=instance,
            nh_values=tuple(args.nh_grid),
            scale_n=args.scale or 10,
            seeds=args.replications,
            horizon=args.horizon or 250.0,
            warmup=args.warmup if args.warmup is not None else 50.0,
            master_seed=args.seed,
            out_dir=args.out,
            max_workers=args.workers,
        )
        print(f"# seed: {args.seed}")
        print(f"{'policy':>16s} {'n_h':>8s} {'throughput':>12s} {'stable':>7s}")
        for (name, n_h) in sorted(comparison.summary):
            thr, stable = comparison.summary[(name, n_h)]
            print(f"{name:>16s} {_fmt(n_h):>8s} {_fmt(thr):>12s} "
                  f"{str(stable):>7s}")
        print(f"wrote {os.path.join(args.out, 'policy_compare.csv')}")
    return 0


def _cmd_figure(args) -> int:
    paths = experiments.emit_figure_series(args.id, args.out)
    print(f"# seed: {args.seed}")
    print(f"wrote {paths['csv']}")
    print(f"wrote {paths['svg']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="judgeflow",
        description="Fluid-optimal screening control: solve, analyze, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_instance=True):
        if needs_instance:
            p.add_argument("--instance", help="TOML instance file")
            p.add_argument("--nh", type=float, default=None,
                           help="override n_h from the file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("solve", help="solve the steady-state fluid LP")
    common(p)
    p.add_argument("--json", default=None, help="write the solution JSON here")
    p.add_argument("--feedback", action="store_true",
                   help="solve the feedback extension (classes need kappa)")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("phases", help="closed-form phase / priority analysis")
    common(p)
    p.set_defaults(fn=_cmd_phases)

    p = sub.add_parser("simulate", help="run one stochastic replication")
    common(p)
    p.add_argument("--policy", choices=sorted(_POLICY_FLAGS), default="fluid")
    p.add_argument("--scale", type=int, default=None, help="scale factor n")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--warmup", type=float, default=None)
    p.add_argument("--feedback", action="store_true")
    p.add_argument("--dump-trajectory", action="store_true",
                   help="write per-class queue trajectory CSV")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("capacity-plan", help="budgeted worker/judge split")
    common(p)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--gamma-w", type=float, default=1.0)
    p.add_argument("--gamma-j", type=float, default=1.0)
    p.set_defaults(fn=_cmd_capacity_plan)

    p = sub.add_parser("experiment", help="reproduce the numerical studies")
    p.add_argument("what", choices=("asymptotic", "policy-compare"))
    common(p)
    p.add_argument("--instances", type=int, default=20,
                   help="random instances (asymptotic)")
    p.add_argument("--scales", type=int, nargs="+",
                   default=[1, 2, 5, 10, 20, 50])
    p.add_argument("--replications", type=int, default=5)
    p.add_argument("--nh-grid", type=float, nargs="+",
                   default=list(range(3, 23)))
    p.add_argument("--scale", type=int, default=10)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--warmup", type=float, default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="process pool size (default: JUDGEFLOW_THREADS)")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("figure", help="emit a figure series (CSV + SVG)")
    p.add_argument("id", choices=("2a", "2b", "3", "4", "6"))
    common(p, needs_instance=False)
    p.set_defaults(fn=_cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    raw = argv if argv is not None else sys.argv[1:]
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in raw)
    try:
        return args.fn(args)
    except JudgeflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
