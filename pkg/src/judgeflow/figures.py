"""Matplotlib rendering of report figures (SVG, headless backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_POLICY_STYLE = {
    "fluid_tracking": ("tab:blue", "Fluid-Tracking"),
    "greedy_optimal": ("tab:orange", "Greedy + Optimal"),
    "always_judge": ("tab:red", "Always-Judge"),
    "never_judge": ("tab:green", "Never-Judge"),
}


def plot_fig2(grid, rows, report, path, title="Single-class allocation"):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    phi = [float(r[1]) for r in rows]
    uw = [float(r[3]) for r in rows]
    uj = [float(r[4]) for r in rows]
    uh = [float(r[5]) for r in rows]
    ax.plot(grid, phi, "-", lw=2, color="tab:blue", label=r"$\varphi^*$")
    ax.plot(grid, uw, "--", color="tab:orange", label="worker util")
    ax.plot(grid, uj, "--", color="tab:green", label="judge util")
    ax.plot(grid, uh, "--", color="tab:red", label="human util")
    for t in report.thresholds.as_tuple():
        if grid[0] <= t <= grid[-1]:
            ax.axvline(t, color="gray", lw=0.8, ls=":")
    if report.aw_threshold and grid[0] <= report.aw_threshold <= grid[-1]:
        ax.axvline(report.aw_threshold, color="black", lw=0.8, ls="-.")
    ax.set_xlabel(r"human capacity $n_h$")
    ax.set_ylabel("fraction")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_fig3(grid, rows, report, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    v1 = [float(r[1]) for r in rows]
    v2 = [float(r[2]) for r in rows]
    ax.plot(grid, v1, "-", lw=2, color="tab:blue", label=r"$v_1^*$ (lenient judge)")
    ax.plot(grid, v2, "-", lw=2, color="tab:red", label=r"$v_2^*$ (strict judge)")
    lo, hi = report.complementarity_interval
    ax.axvspan(lo, hi, color="gray", alpha=0.15, label="complementarity zone")
    ax.axvline(report.lower_threshold, color="gray", lw=0.8, ls=":")
    ax.set_xlabel(r"human capacity $n_h$")
    ax.set_ylabel("judge-routed worker mass")
    ax.set_title("Two-class judge allocation and priority reversal")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_fig4(grid, rows, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    ju_fresh = [float(r[7]) for r in rows]
    ju_fb = [float(r[8]) for r in rows]
    ax1.stackplot(
        grid, ju_fresh, ju_fb,
        labels=["fresh", "feedback"], colors=["tab:blue", "tab:orange"],
        alpha=0.8,
    )
    ax1.set_xlabel(r"$n_h$")
    ax1.set_ylabel("judge utilization share")
    ax1.set_title("Judge utilization decomposition")
    ax1.legend(loc="best", fontsize=8)
    phi = [float(r[5]) for r in rows]
    phi_fb = [float(r[6]) for r in rows]
    ax2.plot(grid, phi, "-", lw=2, color="tab:blue", label=r"$\varphi^*$ (fresh)")
    ax2.plot(grid, phi_fb, "-", lw=2, color="tab:orange",
             label=r"$\varphi_{fb}^*$ (feedback)")
    ax2.set_xlabel(r"$n_h$")
    ax2.set_ylabel("routing fraction")
    ax2.set_title("Routing with human feedback")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_fig6(grid, rows, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    nw = [float(r[1]) for r in rows]
    nj = [float(r[2]) for r in rows]
    ax1.plot(grid, nw, "-", lw=2, color="tab:blue", label=r"$n_w^*$")
    ax1.plot(grid, nj, "-", lw=2, color="tab:orange", label=r"$n_j^*$")
    ax1.set_xlabel(r"$n_h$")
    ax1.set_ylabel("planned capacity")
    ax1.set_title("Budget split")
    ax1.legend(loc="best", fontsize=8)
    planned = [float(r[3]) for r in rows]
    labels = ["(5,5)", "(7,3)", "(10,0)"]
    ax2.plot(grid, planned, "-", lw=2.2, color="tab:blue", label="planned")
    for k, lab in enumerate(labels):
        vals = [float(r[4 + k]) for r in rows]
        ax2.plot(grid, vals, "--", lw=1.2, label=f"fixed {lab}")
    ax2.set_xlabel(r"$n_h$")
    ax2.set_ylabel("throughput")
    ax2.set_title("Planning vs fixed allocations")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_policy_compare(comparison, path):
    fig, ax = plt.subplots(figsize=(7.5, 4.8))
    by_policy = {}
    for (name, n_h), (thr, stable) in comparison.summary.items():
        by_policy.setdefault(name, []).append((n_h, thr, stable))
    for name, pts in by_policy.items():
        pts.sort()
        color, label = _POLICY_STYLE.get(name, ("gray", name))
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, "-", lw=1.2, color=color, label=label)
        stable_pts = [(x, y) for x, y, s in pts if s]
        unstable_pts = [(x, y) for x, y, s in pts if not s]
        if stable_pts:
            ax.plot(*zip(*stable_pts), "o", ms=5, color=color, mfc="white")
        if unstable_pts:
            ax.plot(*zip(*unstable_pts), "x", ms=6, color=color)
    ax.set_xlabel(r"human capacity $n_h$")
    ax.set_ylabel("throughput (per unit scale)")
    ax.set_title("Policy comparison (circle = stable, cross = unstable)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_gap(study, path):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    scales = sorted(study.summary)
    means = [study.summary[s][0] for s in scales]
    stds = [study.summary[s][1] for s in scales]
    ax.errorbar(scales, means, yerr=stds, fmt="o-", lw=1.5, capsize=3,
                color="tab:blue")
    ax.set_xscale("log")
    ax.set_xticks(scales)
    ax.set_xticklabels([str(s) for s in scales])
    ax.set_xlabel("system scale n")
    ax.set_ylabel("optimality gap (%)")
    ax.set_title("Convergence to the fluid optimum")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
