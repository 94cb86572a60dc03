"""Experiment harness: asymptotic-gap study, policy comparison, figure series.

Everything here is deterministic given the master seed: instance draws
and replication seeds are derived by hashing, never taken from OS
entropy, and parallel execution cannot reorder results (tasks are
aggregated by submission order).  Replications fan out over a process
pool bounded by the JUDGEFLOW_THREADS environment variable (or the
``max_workers`` argument).

CSV outputs carry the schema tag ``# judgeflow-csv v1`` and echo the
master seed; figures are written as SVG next to the CSVs.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import figures, instances
from .errors import DomainError
from .fluid import (
    ClassParams,
    FluidSolution,
    Instance,
    solve_capacity_plan,
    solve_feedback,
    solve_steady_state,
)
from .phases import single_class_phase, two_class_report
from .policies import (
    PolicySpec,
    always_judge,
    fluid_tracking,
    greedy_optimal,
    never_judge,
)
from .quality import QualityParams
from .sim import SimConfig, detect_instability, run

CSV_TAG = "# judgeflow-csv v1"

#: Parameter ranges of the random-instance study (uniform draws).
RANDOM_RANGES = {
    "alpha": (0.20, 0.35),
    "beta_I": (0.05, 0.15),
    "beta_II": (0.10, 0.25),
    "mu_w": (18.0, 22.0),
    "mu_j": (28.0, 32.0),
    "mu_h": (9.0, 11.0),
    "lambda": (50.0, 70.0),
    "theta": (0.4, 0.6),
    "n_w": (4.0, 6.0),
    "n_j": (2.0, 4.0),
    "n_h": (5.0, 8.0),
}


@dataclass(frozen=True)
class RandomInstanceSpec:
    n_instances: int = 20
    seed: int = 42
    class_count_range: tuple = (3, 5)


@dataclass(frozen=True)
class GapResult:
    instance_id: int
    scale_n: int
    seed: int
    r_star: float
    r_sim: float
    gap_percent: float


@dataclass(frozen=True)
class GapStudy:
    rows: tuple
    summary: dict  # scale -> (mean, stddev, stderr, count)
    master_seed: int


@dataclass(frozen=True)
class PolicyRun:
    policy: str
    n_h: float
    seed: int
    throughput: float
    stable: bool
    slope: float
    r_squared: float
    unstable_queue: str  # "", "judge", "human"


@dataclass(frozen=True)
class PolicyComparison:
    rows: tuple
    summary: dict  # (policy, n_h) -> (mean throughput, stable on all seeds)
    master_seed: int


def stable_seed(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def sample_instance(rng) -> Instance:
    lo, hi = 3, 5
    k = rng.randrange(lo, hi + 1)
    u = lambda key: rng.uniform(*RANDOM_RANGES[key])  # noqa: E731
    classes = []
    for _ in range(k):
        classes.append(
            ClassParams(
                lam=u("lambda"),
                theta=u("theta"),
                mu_w=u("mu_w"),
                mu_j=u("mu_j"),
                mu_h=u("mu_h"),
                reward=1.0,
                quality=QualityParams(
                    alpha=u("alpha"), beta_I=u("beta_I"), beta_II=u("beta_II")
                ),
            )
        )
    return Instance(
        classes=tuple(classes),
        n_w=u("n_w"),
        n_j=u("n_j"),
        n_h=u("n_h"),
    )


def sample_instances(spec: RandomInstanceSpec) -> tuple:
    import random

    rng = random.Random(stable_seed("instances", spec.seed))
    return tuple(sample_instance(rng) for _ in range(spec.n_instances))


def scaled_lp(instance: Instance, scale_n: int):
    """LP at the capacities the n-th system actually has (floor(n*cap)/n).

    Comparing the simulation against this program isolates the policy's
    suboptimality from the O(1/n) loss of rounding server counts down.
    """
    realized = replace(
        instance,
        n_w=math.floor(scale_n * instance.n_w + 1e-12) / scale_n,
        n_j=math.floor(scale_n * instance.n_j + 1e-12) / scale_n,
        n_h=math.floor(scale_n * instance.n_h + 1e-12) / scale_n,
    )
    return realized, solve_steady_state(realized)


def _gap_task(args) -> GapResult:
    instance, instance_id, scale_n, seed, horizon, warmup, policy, r_star = args
    cfg = SimConfig(
        instance=instance,
        scale_n=scale_n,
        horizon_T=horizon,
        warmup=warmup,
        seed=seed,
    )
    metrics = run(cfg, policy)
    gap = (r_star - metrics.throughput_rate) / r_star * 100.0
    return GapResult(
        instance_id=instance_id,
        scale_n=scale_n,
        seed=seed,
        r_star=r_star,
        r_sim=metrics.throughput_rate,
        gap_percent=gap,
    )


def _resolve_workers(max_workers) -> int:
    if max_workers is not None:
        return max(1, int(max_workers))
    env = os.environ.get("JUDGEFLOW_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, 8))


def _run_tasks(task_fn, tasks, max_workers):
    workers = _resolve_workers(max_workers)
    if workers == 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks, chunksize=1))


def _mean_std(values):
    k = len(values)
    mean = sum(values) / k
    if k < 2:
        return mean, 0.0, 0.0
    var = sum((v - mean) ** 2 for v in values) / (k - 1)
    std = math.sqrt(var)
    return mean, std, std / math.sqrt(k)


def run_asymptotic_study(
    spec: RandomInstanceSpec = RandomInstanceSpec(),
    scales=(1, 2, 5, 10, 20, 50),
    replications: int = 5,
    horizon: float = 500.0,
    warmup: float = 100.0,
    out_dir=None,
    max_workers=None,
) -> GapStudy:
    """Random instances x scales x seeds under Fluid-Tracking; gap table."""
    insts = sample_instances(spec)
    tasks = []
    for idx, inst in enumerate(insts):
        for scale in scales:
            realized, sol = scaled_lp(inst, scale)
            policy = fluid_tracking(sol)
            for rep in range(replications):
                seed = stable_seed("gap", spec.seed, idx, scale, rep)
                tasks.append(
                    (realized, idx, scale, seed, horizon, warmup, policy,
                     sol.objective)
                )
    rows = _run_tasks(_gap_task, tasks, max_workers)
    summary = {}
    for scale in scales:
        gaps = [r.gap_percent for r in rows if r.scale_n == scale]
        summary[scale] = (*_mean_std(gaps), len(gaps))
    study = GapStudy(rows=tuple(rows), summary=summary, master_seed=spec.seed)
    if out_dir is not None:
        write_gap_csv(study, out_dir)
        figures.plot_gap(study, os.path.join(out_dir, "asymptotic_gap.svg"))
    return study


def write_gap_csv(study: GapStudy, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "gap.csv")
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_TAG}\n# seed: {study.master_seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["instance", "n", "seed", "R_star", "R_sim", "gap_pct"])
        for r in study.rows:
            writer.writerow(
                [r.instance_id, r.scale_n, r.seed,
                 f"{r.r_star:.6f}", f"{r.r_sim:.6f}", f"{r.gap_percent:.6f}"]
            )
    return path


POLICY_NAMES = ("fluid_tracking", "greedy_optimal", "always_judge", "never_judge")


def _policy_for(name: str, solution: FluidSolution, n_classes: int) -> PolicySpec:
    if name == "fluid_tracking":
        return fluid_tracking(solution)
    if name == "greedy_optimal":
        return greedy_optimal(solution)
    if name == "always_judge":
        return always_judge(n_classes)
    if name == "never_judge":
        return never_judge(n_classes)
    raise DomainError(f"unknown policy name {name!r}")


def _policy_task(args) -> PolicyRun:
    name, instance, n_h, scale_n, seed, horizon, warmup, policy = args
    cfg = SimConfig(
        instance=instance,
        scale_n=scale_n,
        horizon_T=horizon,
        warmup=warmup,
        seed=seed,
    )
    metrics = run(cfg, policy)
    verdicts = detect_instability(metrics.trajectory, horizon)
    judge, human = verdicts["judge"], verdicts["human"]
    unstable = []
    if judge.verdict == "unstable":
        unstable.append(("judge", judge))
    if human.verdict == "unstable":
        unstable.append(("human", human))
    if unstable:
        worst_name, worst = max(unstable, key=lambda kv: kv[1].slope)
        return PolicyRun(
            policy=name, n_h=n_h, seed=seed,
            throughput=metrics.throughput_rate, stable=False,
            slope=worst.slope, r_squared=worst.r_squared,
            unstable_queue=worst_name,
        )
    worst = max((judge, human), key=lambda v: v.slope)
    return PolicyRun(
        policy=name, n_h=n_h, seed=seed,
        throughput=metrics.throughput_rate, stable=True,
        slope=worst.slope, r_squared=worst.r_squared, unstable_queue="",
    )


def run_policy_comparison(
    instance: Instance | None = None,
    nh_values=tuple(range(3, 23)),
    scale_n: int = 10,
    seeds: int = 3,
    horizon: float = 250.0,
    warmup: float = 50.0,
    master_seed: int = 42,
    policies=POLICY_NAMES,
    out_dir=None,
    max_workers=None,
) -> PolicyComparison:
    """Fluid-Tracking against the greedy baselines over an n_h sweep."""
    base = instance if instance is not None else instances.fig3_sim()
    tasks = []
    for n_h in nh_values:
        inst = base.with_nh(float(n_h))
        sol = solve_steady_state(inst)
        for name in policies:
            policy = _policy_for(name, sol, len(inst.classes))
            for rep in range(seeds):
                seed = stable_seed("policy", master_seed, name, n_h, rep)
                tasks.append(
                    (name, inst, float(n_h), scale_n, seed, horizon, warmup, policy)
                )
    rows = _run_tasks(_policy_task, tasks, max_workers)
    summary = {}
    for n_h in nh_values:
        for name in policies:
            sub = [r for r in rows if r.policy == name and r.n_h == float(n_h)]
            mean_thr = sum(r.throughput for r in sub) / len(sub)
            summary[(name, float(n_h))] = (mean_thr, all(r.stable for r in sub))
    comparison = PolicyComparison(
        rows=tuple(rows), summary=summary, master_seed=master_seed
    )
    if out_dir is not None:
        write_policy_csv(comparison, out_dir)
        figures.plot_policy_compare(
            comparison, os.path.join(out_dir, "policy_compare.svg")
        )
    return comparison


def write_policy_csv(comparison: PolicyComparison, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "policy_compare.csv")
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_TAG}\n# seed: {comparison.master_seed}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["policy", "n_h", "seed", "throughput", "stable", "slope", "r2"]
        )
        for r in comparison.rows:
            writer.writerow(
                [r.policy, f"{r.n_h:.6f}", r.seed, f"{r.throughput:.6f}",
                 int(r.stable), f"{r.slope:.6f}", f"{r.r_squared:.6f}"]
            )
    return path


def _grid(start: float, stop: float, step: float):
    out = []
    k = 0
    while True:
        v = start + k * step
        if v > stop + 1e-9:
            break
        out.append(round(v, 9))
        k += 1
    return out


def _write_series_csv(path, header_lines, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_TAG}\n")
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)
    return path


def emit_figure_series(figure: str, out_dir, grid=None) -> dict:
    """Sweep n_h on a canonical instance; write fig{ID}.csv and fig{ID}.svg."""
    os.makedirs(out_dir, exist_ok=True)
    figure = str(figure).lower()
    csv_path = os.path.join(out_dir, f"fig{figure}.csv")
    svg_path = os.path.join(out_dir, f"fig{figure}.svg")

    if figure in ("2a", "2b"):
        inst = instances.fig2a() if figure == "2a" else instances.fig2b()
        grid = grid if grid is not None else _grid(3.0, 12.0, 0.25)
        rows = []
        for n_h in grid:
            sub = inst.with_nh(n_h)
            rep = single_class_phase(sub)
            sol = solve_steady_state(sub)
            rows.append(
                (n_h, f"{rep.phi_star:.9f}", f"{sol.phi[0]:.9f}",
                 f"{sol.worker_mass / sub.n_w:.9f}",
                 f"{sol.judge_mass / sub.n_j:.9f}",
                 f"{sol.human_mass / sub.n_h:.9f}")
            )
        rep0 = single_class_phase(inst)
        header = [
            f"thresholds: t1={rep0.thresholds.t1:.6f} "
            f"t2={rep0.thresholds.t2:.6f} t3={rep0.thresholds.t3:.6f}"
        ]
        if figure == "2b":
            header.append(
                f"abundant-worker threshold: {rep0.aw_threshold:.6f}"
            )
        _write_series_csv(
            csv_path, header,
            ["n_h", "phi_closed", "phi_lp", "util_workers", "util_judges",
             "util_humans"],
            rows,
        )
        figures.plot_fig2(grid, rows, rep0, svg_path,
                          title=f"Single-class allocation (fig{figure})")
    elif figure == "3":
        inst = instances.fig3()
        grid = grid if grid is not None else _grid(4.0, 19.0, 0.25)
        report = two_class_report(inst)
        rows = []
        for n_h in grid:
            sol = solve_steady_state(inst.with_nh(n_h))
            active = "+".join(
                str(i + 1) for i, v in enumerate(sol.v) if v > 1e-9
            )
            rows.append(
                (n_h, f"{sol.v[0]:.9f}", f"{sol.v[1]:.9f}",
                 f"{sol.x[0]:.9f}", f"{sol.x[1]:.9f}", active or "none")
            )
        header = [
            f"k_q={report.k_q} k_eta={report.k_eta} k_c={report.k_c}",
            f"lower_threshold={report.lower_threshold:.6f}",
            "complementarity_interval=({:.6f}, {:.6f})".format(
                *report.complementarity_interval
            ),
        ]
        _write_series_csv(
            csv_path, header,
            ["n_h", "v1", "v2", "x1", "x2", "active_classes"], rows,
        )
        figures.plot_fig3(grid, rows, report, svg_path)
    elif figure == "4":
        inst = instances.fig4()
        kappa = instances.FIG4_KAPPA
        grid = grid if grid is not None else _grid(3.0, 12.0, 0.25)
        c = inst.classes[0]
        rows = []
        for n_h in grid:
            fb = solve_feedback(inst.with_nh(n_h), kappa)
            ju_fresh = (c.mu_w / c.mu_j) * fb.v[0] / inst.n_j
            ju_fb = (c.mu_w / c.mu_j) * fb.v_fb[0] / inst.n_j
            rows.append(
                (n_h, f"{fb.x[0]:.9f}", f"{fb.v[0]:.9f}",
                 f"{fb.x_fb[0]:.9f}", f"{fb.v_fb[0]:.9f}",
                 f"{fb.phi[0]:.9f}", f"{fb.phi_fb[0]:.9f}",
                 f"{ju_fresh:.9f}", f"{ju_fb:.9f}")
            )
        _write_series_csv(
            csv_path, [f"kappa={kappa}"],
            ["n_h", "x", "v", "x_fb", "v_fb", "phi", "phi_fb",
             "judge_util_fresh", "judge_util_fb"],
            rows,
        )
        figures.plot_fig4(grid, rows, svg_path)
    elif figure == "6":
        inst = instances.fig6()
        B, gw, gj = instances.FIG6_BUDGET
        grid = grid if grid is not None else _grid(2.0, 20.0, 0.5)
        fixed_splits = ((5.0, 5.0), (7.0, 3.0), (10.0, 0.0))
        rows = []
        for n_h in grid:
            sub = inst.with_nh(n_h)
            plan = solve_capacity_plan(sub, B, gw, gj)
            fixed = []
            for (w, j) in fixed_splits:
                fi = replace(sub, n_w=w, n_j=j)
                fixed.append(solve_steady_state(fi).objective)
            rows.append(
                (n_h, f"{plan.n_w:.9f}", f"{plan.n_j:.9f}",
                 f"{plan.solution.objective:.9f}",
                 *(f"{v:.9f}" for v in fixed))
            )
        _write_series_csv(
            csv_path,
            [f"budget B={B} gamma_w={gw} gamma_j={gj}",
             "fixed splits: (5,5), (7,3), (10,0)"],
            ["n_h", "n_w_star", "n_j_star", "R_planned",
             "R_fixed_5_5", "R_fixed_7_3", "R_fixed_10_0"],
            rows,
        )
        figures.plot_fig6(grid, rows, svg_path)
    else:
        raise DomainError(
            f"unknown figure id {figure!r}; expected one of 2a, 2b, 3, 4, 6"
        )
    return {"csv": csv_path, "svg": svg_path}
