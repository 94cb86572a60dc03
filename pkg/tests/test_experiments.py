import math
import statistics

import pytest

from judgeflow.errors import DomainError
from judgeflow.experiments import (
    CSV_TAG,
    RANDOM_RANGES,
    RandomInstanceSpec,
    emit_figure_series,
    run_asymptotic_study,
    run_policy_comparison,
    sample_instances,
    scaled_lp,
)

TINY = RandomInstanceSpec(n_instances=2, seed=7)


def test_sampled_instances_respect_ranges_and_are_deterministic():
    insts = sample_instances(RandomInstanceSpec(n_instances=12, seed=3))
    again = sample_instances(RandomInstanceSpec(n_instances=12, seed=3))
    assert insts == again
    for inst in insts:
        assert 3 <= len(inst.classes) <= 5
        lo, hi = RANDOM_RANGES["n_w"]
        assert lo <= inst.n_w <= hi
        for c in inst.classes:
            assert RANDOM_RANGES["alpha"][0] <= c.quality.alpha <= RANDOM_RANGES["alpha"][1]
            assert RANDOM_RANGES["lambda"][0] <= c.lam <= RANDOM_RANGES["lambda"][1]
            assert c.reward == 1.0
    assert sample_instances(RandomInstanceSpec(n_instances=12, seed=4)) != insts


def test_scaled_lp_uses_integer_server_counts():
    inst = sample_instances(TINY)[0]
    realized, sol = scaled_lp(inst, 3)
    assert realized.n_w == math.floor(3 * inst.n_w) / 3
    assert sol.objective > 0
    # More rounding at small n can only lose capacity.
    _, sol_big = scaled_lp(inst, 50)
    assert sol_big.objective >= sol.objective - 1e-6


def test_asymptotic_study_smoke(tmp_path):
    study = run_asymptotic_study(
        TINY, scales=(1, 5), replications=2, horizon=60.0, warmup=10.0,
        out_dir=tmp_path, max_workers=2,
    )
    assert len(study.rows) == 2 * 2 * 2
    for scale in (1, 5):
        mean, std, se, count = study.summary[scale]
        assert count == 4
        assert math.isfinite(mean)
    gap_csv = (tmp_path / "gap.csv").read_text().splitlines()
    assert gap_csv[0] == CSV_TAG
    assert gap_csv[1] == "# seed: 7"
    assert gap_csv[2] == "instance,n,seed,R_star,R_sim,gap_pct"
    assert len(gap_csv) == 3 + len(study.rows)
    assert (tmp_path / "asymptotic_gap.svg").exists()


def test_asymptotic_study_deterministic_given_master_seed(tmp_path):
    a = run_asymptotic_study(
        TINY, scales=(2,), replications=2, horizon=40.0, warmup=5.0,
        max_workers=1,
    )
    b = run_asymptotic_study(
        TINY, scales=(2,), replications=2, horizon=40.0, warmup=5.0,
        max_workers=2,
    )
    assert a.rows == b.rows


def test_lp_upper_bounds_simulation_up_to_noise():
    study = run_asymptotic_study(
        RandomInstanceSpec(n_instances=3, seed=21),
        scales=(5,), replications=3, horizon=120.0, warmup=20.0,
    )
    by_instance = {}
    for row in study.rows:
        by_instance.setdefault(row.instance_id, []).append(row)
    for rows in by_instance.values():
        sims = [r.r_sim for r in rows]
        r_star = rows[0].r_star
        se = statistics.stdev(sims) / math.sqrt(len(sims)) if len(sims) > 1 else 0.0
        assert statistics.mean(sims) <= r_star + 3 * se + 1e-6


def test_unconstrained_instance_gap_is_pure_noise():
    # With every capacity far above demand, the LP just serves all
    # arrivals; the simulated gap is boundary noise only.
    from judgeflow.fluid import ClassParams, Instance
    from judgeflow.policies import fluid_tracking
    from judgeflow.quality import QualityParams
    from judgeflow.sim import SimConfig, run

    c = ClassParams(lam=50.0, theta=0.01, mu_w=20.0, mu_j=30.0, mu_h=10.0,
                    reward=1.0, quality=QualityParams(0.3, 0.1, 0.2))
    inst = Instance(classes=(c,), n_w=30.0, n_j=20.0, n_h=40.0)
    realized, sol = scaled_lp(inst, 4)
    assert sol.objective == pytest.approx(50.0, abs=1e-6)
    m = run(
        SimConfig(instance=realized, scale_n=4, horizon_T=250.0, warmup=50.0,
                  seed=5),
        fluid_tracking(sol),
    )
    gap = (sol.objective - m.throughput_rate) / sol.objective
    assert abs(gap) < 0.01, gap


def test_gap_scale_consistent_when_doubling_horizon():
    means = {}
    ses = {}
    for horizon in (250.0, 450.0):  # measurement spans 200 vs 400
        study = run_asymptotic_study(
            RandomInstanceSpec(n_instances=1, seed=1742),
            scales=(10,), replications=3, horizon=horizon, warmup=50.0,
        )
        mean, _std, se, _count = study.summary[10]
        means[horizon] = mean
        ses[horizon] = se
    band = 3 * math.sqrt(ses[250.0] ** 2 + ses[450.0] ** 2)
    assert abs(means[250.0] - means[450.0]) <= max(band, 0.1)


def test_policy_comparison_smoke(tmp_path):
    comparison = run_policy_comparison(
        nh_values=(14,), seeds=1, horizon=60.0, warmup=10.0, scale_n=3,
        out_dir=tmp_path, max_workers=2,
    )
    assert len(comparison.rows) == 4
    names = {r.policy for r in comparison.rows}
    assert names == {"fluid_tracking", "greedy_optimal", "always_judge", "never_judge"}
    csv_lines = (tmp_path / "policy_compare.csv").read_text().splitlines()
    assert csv_lines[0] == CSV_TAG
    assert csv_lines[2] == "policy,n_h,seed,throughput,stable,slope,r2"
    assert (tmp_path / "policy_compare.svg").exists()


def test_figure_series_fig2a(tmp_path):
    paths = emit_figure_series("2a", tmp_path, grid=[3.0, 6.5, 9.0, 12.0])
    lines = (tmp_path / "fig2a.csv").read_text().splitlines()
    assert lines[0] == CSV_TAG
    assert "thresholds" in lines[1]
    header = lines[2].split(",")
    assert header == ["n_h", "phi_closed", "phi_lp", "util_workers",
                      "util_judges", "util_humans"]
    rows = [line.split(",") for line in lines[3:]]
    for row in rows:
        assert abs(float(row[1]) - float(row[2])) < 1e-8
    assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-9)
    assert float(rows[-1][1]) == pytest.approx(0.0, abs=1e-9)
    assert paths["svg"].endswith("fig2a.svg")


def test_figure_series_fig3_crossover(tmp_path):
    emit_figure_series("3", tmp_path, grid=[8.0, 14.5, 18.0])
    lines = (tmp_path / "fig3.csv").read_text().splitlines()
    rows = [line.split(",") for line in lines if not line.startswith("#")][1:]
    assert rows[0][5] == "2"      # below the reversal: class 2 only
    assert rows[1][5] == "1+2"    # inside the complementarity zone
    assert rows[2][5] == "1"      # above it: class 1 only


def test_figure_series_fig4_and_fig6(tmp_path):
    emit_figure_series("4", tmp_path, grid=[5.0, 6.5, 8.0])
    lines = (tmp_path / "fig4.csv").read_text().splitlines()
    rows = [line.split(",") for line in lines if not line.startswith("#")][1:]
    # Prop-4 equality columns: x_fb = alpha (x - (1 - beta_II) v).
    for row in rows:
        x, v, x_fb = float(row[1]), float(row[2]), float(row[3])
        assert x_fb == pytest.approx(0.3 * (x - 0.8 * v), abs=1e-8)

    emit_figure_series("6", tmp_path, grid=[4.0, 12.0])
    lines6 = (tmp_path / "fig6.csv").read_text().splitlines()
    rows6 = [line.split(",") for line in lines6 if not line.startswith("#")][1:]
    for row in rows6:
        planned = float(row[3])
        assert planned >= max(float(row[4]), float(row[5]), float(row[6])) - 1e-9


def test_figure_series_unknown_id(tmp_path):
    with pytest.raises(DomainError):
        emit_figure_series("9", tmp_path)
