"""Exact stochastic simulation of the scaled screening network.

The n-th system has floor(n * cap) servers per pool, Poisson arrivals at
rate n * lambda_i, exponential services and patience.  Because every
distribution is exponential and within-class order does not change the
count dynamics, the network is simulated as a continuous-time Markov
chain on the per-class count vector (Gillespie-style: total event rate,
exponential step, categorical pick).  This is exact for the model and
far faster than an event calendar.

Event effects:

* arrival            -> work queue (+ admission attempt)
* abandonment        -> waiting task leaves the work queue
* worker completion  -> routed to judge queue or direct human queue by a
                        policy coin; the freed server triggers admission
* judge completion   -> pass coin p_pass: to the judge-path human queue,
                        else rework back to the work queue
* human completion   -> direct path fails w.p. alpha, judge path w.p.
                        1 - q_acc; failures rework, successes complete

With the feedback extension every state is duplicated per task type:
human rejections of fresh tasks become feedback tasks (error rate
kappa * alpha), judge-rejected tasks of either type return to the fresh
pool, and feedback tasks failing human review a second time are removed
from the system (reported, not counted as completions).

Judge and human pools admit work-conserving FCFS (count-level surrogate:
the admitted class is drawn proportionally to queue length).  Worker
admission is policy-controlled.  The per-class mass-balance identity

    in-system counts = arrivals - abandonments - completions - removals

is spot-checked every ``check_interval`` events (set it to 1 for a
debug run that checks after every event) together with the capacity and
work-conservation invariants.
"""

from __future__ import annotations

import csv
import hashlib
import math
import random
from dataclasses import dataclass, field

from .errors import DomainError, SimulationError
from .fluid import Instance
from .policies import GREEDY_KINDS, PolicySpec
from .quality import derive_feedback, feedback_accept_correct_prob


@dataclass(frozen=True)
class SimConfig:
    instance: Instance
    scale_n: int
    horizon_T: float
    warmup: float = 0.0
    seed: int = 42
    sample_interval: float = 1.0
    feedback: object = None  # kappa scalar or per-class tuple; None disables
    check_interval: int = 8192
    initial_work_queue: tuple = ()

    def __post_init__(self) -> None:
        if self.scale_n < 1 or int(self.scale_n) != self.scale_n:
            raise DomainError("scale_n must be an integer >= 1")
        if not (0.0 <= self.warmup < self.horizon_T):
            raise DomainError("need 0 <= warmup < horizon_T")
        if self.sample_interval <= 0:
            raise DomainError("sample_interval must be > 0")
        if self.check_interval < 1:
            raise DomainError("check_interval must be >= 1")
        if self.initial_work_queue and len(self.initial_work_queue) != len(
            self.instance.classes
        ):
            raise DomainError("initial_work_queue needs one count per class")


@dataclass
class SimState:
    """Count-vector state plus cumulative flow counters (per class lists)."""

    cap_w: int
    cap_j: int
    cap_h: int
    Qw: list
    X: list
    Qj: list
    Y: list
    Qhd: list
    Zd: list
    Qhj: list
    Zj: list
    # feedback-type duplicates (all zero when the extension is off)
    Qw_fb: list
    X_fb: list
    Qj_fb: list
    Y_fb: list
    Qhd_fb: list
    Zd_fb: list
    Qhj_fb: list
    Zj_fb: list
    # cumulative counters
    A: list
    B: list
    B_fb: list
    C: list
    C_fb: list
    removed_fb: list
    # inter-node flow counts
    S_w: list
    S_wj: list
    S_wh: list
    S_jw: list
    S_jh: list
    S_hdw: list
    S_hdc: list
    S_hjw: list
    S_hjc: list
    S_w_fb: list
    S_wj_fb: list
    S_wh_fb: list
    S_jw_fb: list
    S_jh_fb: list
    S_hd_rm: list
    S_hdc_fb: list
    S_hj_rm: list
    S_hjc_fb: list
    initial_work_queue: tuple = ()

    @classmethod
    def empty(cls, n_classes: int, cap_w: int, cap_j: int, cap_h: int,
              initial_work_queue=()):
        def z():
            return [0] * n_classes

        state = cls(
            cap_w=cap_w, cap_j=cap_j, cap_h=cap_h,
            Qw=z(), X=z(), Qj=z(), Y=z(), Qhd=z(), Zd=z(), Qhj=z(), Zj=z(),
            Qw_fb=z(), X_fb=z(), Qj_fb=z(), Y_fb=z(),
            Qhd_fb=z(), Zd_fb=z(), Qhj_fb=z(), Zj_fb=z(),
            A=z(), B=z(), B_fb=z(), C=z(), C_fb=z(), removed_fb=z(),
            S_w=z(), S_wj=z(), S_wh=z(), S_jw=z(), S_jh=z(),
            S_hdw=z(), S_hdc=z(), S_hjw=z(), S_hjc=z(),
            S_w_fb=z(), S_wj_fb=z(), S_wh_fb=z(), S_jw_fb=z(), S_jh_fb=z(),
            S_hd_rm=z(), S_hdc_fb=z(), S_hj_rm=z(), S_hjc_fb=z(),
            initial_work_queue=tuple(initial_work_queue),
        )
        for i, q in enumerate(state.initial_work_queue):
            state.Qw[i] = int(q)
        return state

    def in_system(self, i: int) -> int:
        return (
            self.Qw[i] + self.X[i] + self.Qj[i] + self.Y[i]
            + self.Qhd[i] + self.Zd[i] + self.Qhj[i] + self.Zj[i]
            + self.Qw_fb[i] + self.X_fb[i] + self.Qj_fb[i] + self.Y_fb[i]
            + self.Qhd_fb[i] + self.Zd_fb[i] + self.Qhj_fb[i] + self.Zj_fb[i]
        )

    def check_mass_balance(self) -> None:
        """Summing all balance equations cancels internal routing flows."""
        for i in range(len(self.Qw)):
            init = self.initial_work_queue[i] if self.initial_work_queue else 0
            expected = (
                init + self.A[i] - self.B[i] - self.B_fb[i]
                - self.C[i] - self.C_fb[i] - self.removed_fb[i]
            )
            if self.in_system(i) != expected:
                raise SimulationError(
                    f"mass balance violated for class {i}: "
                    f"in_system={self.in_system(i)} expected={expected}"
                )

    def check_capacity(self) -> None:
        if sum(self.X) + sum(self.X_fb) > self.cap_w:
            raise SimulationError("worker capacity exceeded")
        if sum(self.Y) + sum(self.Y_fb) > self.cap_j:
            raise SimulationError("judge capacity exceeded")
        if (sum(self.Zd) + sum(self.Zj) + sum(self.Zd_fb) + sum(self.Zj_fb)
                > self.cap_h):
            raise SimulationError("human capacity exceeded")
        for name in ("Qw", "X", "Qj", "Y", "Qhd", "Zd", "Qhj", "Zj",
                     "Qw_fb", "X_fb", "Qj_fb", "Y_fb", "Qhd_fb", "Zd_fb",
                     "Qhj_fb", "Zj_fb"):
            if any(v < 0 for v in getattr(self, name)):
                raise SimulationError(f"negative count in {name}")


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str  # "stable" | "unstable" | "inconclusive"
    slope: float
    r_squared: float
    n_samples: int


@dataclass(frozen=True)
class SimMetrics:
    throughput_rate: float
    completions: tuple  # post-warmup, fresh + feedback, per class
    completions_total: tuple
    arrivals: tuple  # post-warmup, per class
    abandoned: tuple  # post-warmup, fresh + feedback, per class
    removed_fb: tuple
    utilization_workers: float
    utilization_judges: float
    utilization_humans: float
    trajectory: tuple  # (time, Qj_total, Qh_total, Qw_total) samples
    event_count: int
    seed: int
    scale_n: int
    state: SimState = field(repr=False, compare=False, default=None)


def derive_replication_seed(instance: Instance, scale_n: int, seed: int) -> int:
    """Stable 64-bit stream key from (instance, n, seed); hash-seed independent."""
    fields = tuple(
        (c.lam, c.theta, c.mu_w, c.mu_j, c.mu_h, c.reward,
         c.quality.alpha, c.quality.beta_I, c.quality.beta_II)
        for c in instance.classes
    )
    payload = repr((fields, instance.n_w, instance.n_j, instance.n_h,
                    int(scale_n), int(seed)))
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _ols(times, values) -> tuple:
    n = len(times)
    mean_t = sum(times) / n
    mean_v = sum(values) / n
    sxx = sum((t - mean_t) ** 2 for t in times)
    sxy = sum((t - mean_t) * (v - mean_v) for t, v in zip(times, values))
    if sxx <= 0.0:
        return 0.0, 0.0
    slope = sxy / sxx
    ss_tot = sum((v - mean_v) ** 2 for v in values)
    if ss_tot <= 0.0:
        return slope, 0.0  # constant series: no variance to explain
    intercept = mean_v - slope * mean_t
    ss_res = sum((v - (intercept + slope * t)) ** 2 for t, v in zip(times, values))
    return slope, max(0.0, 1.0 - ss_res / ss_tot)


def detect_instability(trajectory, horizon_T: float,
                       slope_threshold: float = 1.0,
                       r2_threshold: float = 0.9) -> dict:
    """Regression-based stability verdicts for the judge/human/work queues.

    Fits OLS on the latter half [T/2, T] of each sampled total-queue
    series; a queue is unstable iff R^2 > 0.9 and slope > 1.0 per unit
    time.  Fewer than 10 samples in the window -> inconclusive.
    """
    half = horizon_T / 2.0
    tail = [row for row in trajectory if row[0] >= half]
    out = {}
    for key, idx in (("judge", 1), ("human", 2), ("work", 3)):
        if len(tail) < 10:
            out[key] = StabilityVerdict("inconclusive", math.nan, math.nan, len(tail))
            continue
        times = [row[0] for row in tail]
        values = [row[idx] for row in tail]
        slope, r2 = _ols(times, values)
        unstable = r2 > r2_threshold and slope > slope_threshold
        out[key] = StabilityVerdict(
            "unstable" if unstable else "stable", slope, r2, len(tail)
        )
    return out


def run(config: SimConfig, policy: PolicySpec, trajectory_csv=None) -> SimMetrics:
    """Simulate one replication; bit-identical for identical inputs."""
    inst = config.instance
    I = len(inst.classes)
    if policy.n_classes != I:
        raise DomainError("policy and instance class counts differ")
    fb_on = config.feedback is not None
    if fb_on != (policy.kind == "fluid_tracking_feedback"):
        raise DomainError(
            "feedback simulations require the fluid_tracking_feedback policy "
            "and vice versa"
        )

    n = int(config.scale_n)
    cls = inst.classes
    der = inst.derived()
    lam_n = [c.lam * n for c in cls]
    theta = [c.theta for c in cls]
    mu_w = [c.mu_w for c in cls]
    mu_j = [c.mu_j for c in cls]
    mu_h = [c.mu_h for c in cls]
    rewards = [c.reward for c in cls]
    p_pass = [d.p_pass for d in der]
    fail_d = [c.quality.alpha for c in cls]
    fail_j = [1.0 - d.q_acc for d in der]
    if fb_on:
        kap = config.feedback
        kappas = [float(kap)] * I if isinstance(kap, (int, float)) else [
            float(k) for k in kap
        ]
        if len(kappas) != I:
            raise DomainError("feedback kappa must be scalar or per-class")
        fbp = [derive_feedback(c.quality, k) for c, k in zip(cls, kappas)]
        p_pass_fb = [f.p_pass_fb for f in fbp]
        fail_d_fb = [k * c.quality.alpha for c, k in zip(cls, kappas)]
        fail_j_fb = [
            1.0 - feedback_accept_correct_prob(c.quality, k)
            for c, k in zip(cls, kappas)
        ]
    else:
        p_pass_fb = fail_d_fb = fail_j_fb = [0.0] * I

    cap_w = int(math.floor(n * inst.n_w + 1e-12))
    cap_j = int(math.floor(n * inst.n_j + 1e-12))
    cap_h = int(math.floor(n * inst.n_h + 1e-12))
    state = SimState.empty(I, cap_w, cap_j, cap_h, config.initial_work_queue)

    rng = random.Random(derive_replication_seed(inst, n, config.seed))
    rnd = rng.random
    expo = rng.expovariate

    greedy = policy.kind in GREEDY_KINDS
    ftfb = policy.kind == "fluid_tracking_feedback"
    phi = list(policy.phi)
    phi_fb = list(policy.phi_fb) if ftfb else [0.0] * I
    target_n = [t * n for t in policy.targets]
    tiebreak = policy.admission_tiebreak
    rr_cursor = 0

    Qw, X, Qj, Y = state.Qw, state.X, state.Qj, state.Y
    Qhd, Zd, Qhj, Zj = state.Qhd, state.Zd, state.Qhj, state.Zj
    Qw_fb, X_fb, Qj_fb, Y_fb = state.Qw_fb, state.X_fb, state.Qj_fb, state.Y_fb
    Qhd_fb, Zd_fb, Qhj_fb, Zj_fb = (
        state.Qhd_fb, state.Zd_fb, state.Qhj_fb, state.Zj_fb,
    )
    A, B, B_fb, C, C_fb, removed = (
        state.A, state.B, state.B_fb, state.C, state.C_fb, state.removed_fb,
    )
    S_w, S_wj, S_wh = state.S_w, state.S_wj, state.S_wh
    S_jw, S_jh = state.S_jw, state.S_jh
    S_hdw, S_hdc, S_hjw, S_hjc = state.S_hdw, state.S_hdc, state.S_hjw, state.S_hjc
    S_w_fb, S_wj_fb, S_wh_fb = state.S_w_fb, state.S_wj_fb, state.S_wh_fb
    S_jw_fb, S_jh_fb = state.S_jw_fb, state.S_jh_fb
    S_hd_rm, S_hdc_fb = state.S_hd_rm, state.S_hdc_fb
    S_hj_rm, S_hjc_fb = state.S_hj_rm, state.S_hjc_fb

    Xtot = Ytot = Ztot = 0
    Qw_tot = sum(Qw)
    Qwfb_tot = 0
    Qj_tot = Qh_tot = 0

    r_arr = sum(lam_n)
    r_ab = sum(th * q for th, q in zip(theta, Qw))
    r_w = r_j = r_hd = r_hj = 0.0
    r_ab_fb = r_w_fb = r_j_fb = r_hd_fb = r_hj_fb = 0.0

    T = config.horizon_T
    warmup = config.warmup
    sample_dt = config.sample_interval
    check_every = config.check_interval

    t = 0.0
    next_sample = 0.0
    events = 0
    warm_done = warmup <= 0.0
    snap_C = [0] * I
    snap_C_fb = [0] * I
    snap_A = [0] * I
    snap_B = [0] * I
    snap_B_fb = [0] * I
    area_x = area_y = area_z = 0.0
    trajectory = []
    per_class_rows = [] if trajectory_csv is not None else None

    def record_sample(ts: float) -> None:
        trajectory.append((ts, Qj_tot, Qh_tot, Qw_tot + Qwfb_tot))
        if per_class_rows is not None:
            for i in range(I):
                per_class_rows.append(
                    (ts, i, Qw[i], X[i], Qj[i], Y[i], Qhd[i], Zd[i], Qhj[i], Zj[i])
                )

    def pick_class(u: float, weights) -> int:
        """Walk a positive weight vector; immune to float dust at the edges."""
        last = -1
        for k in range(I):
            w = weights[k]
            if w > 0.0:
                last = k
                u -= w
                if u < 0.0:
                    break
        if last < 0:
            raise SimulationError("event drawn from an empty category")
        return last

    def worker_admit_scan() -> bool:
        """Admit at most one waiting task into a free worker server."""
        nonlocal Xtot, Qw_tot, Qwfb_tot, r_w, r_w_fb, r_ab, r_ab_fb, rr_cursor
        if Xtot >= cap_w:
            return False
        use_fb = False
        if ftfb:
            cands = [
                i for i in range(I)
                if Qw_fb[i] > 0 and X[i] + X_fb[i] < target_n[i]
            ]
            if cands:
                use_fb = True
            else:
                cands = [
                    i for i in range(I)
                    if Qw[i] > 0 and X[i] + X_fb[i] < target_n[i]
                ]
        elif greedy:
            cands = [i for i in range(I) if Qw[i] > 0]
        else:
            cands = [i for i in range(I) if Qw[i] > 0 and X[i] < target_n[i]]
        if not cands:
            return False
        if len(cands) == 1:
            i = cands[0]
        elif tiebreak == "round_robin":
            i = min(cands, key=lambda k: (k - rr_cursor) % I)
        elif tiebreak == "fcfs":
            queue = Qw_fb if use_fb else Qw
            tot = sum(queue[k] for k in cands)
            u = rnd() * tot
            i = cands[-1]
            for k in cands:
                u -= queue[k]
                if u < 0:
                    i = k
                    break
        else:  # max_deficit
            if greedy:
                i = max(cands, key=lambda k: (Qw[k], -k))
            else:
                i = max(
                    cands,
                    key=lambda k: (target_n[k] - X[k] - (X_fb[k] if ftfb else 0), -k),
                )
        rr_cursor = (i + 1) % I
        if use_fb:
            Qw_fb[i] -= 1
            Qwfb_tot -= 1
            r_ab_fb -= theta[i]
            X_fb[i] += 1
            r_w_fb += mu_w[i]
        else:
            Qw[i] -= 1
            Qw_tot -= 1
            r_ab -= theta[i]
            X[i] += 1
            r_w += mu_w[i]
        Xtot += 1
        return True

    def enqueue_fresh_rework(i: int) -> None:
        """A task re-enters the fresh pool (judge rejection / human failure)."""
        nonlocal Xtot, Qw_tot, r_w, r_ab
        if Xtot < cap_w and (
            greedy or (X[i] + X_fb[i] if ftfb else X[i]) < target_n[i]
        ):
            X[i] += 1
            Xtot += 1
            r_w += mu_w[i]
        else:
            Qw[i] += 1
            Qw_tot += 1
            r_ab += theta[i]

    def enqueue_feedback(i: int) -> None:
        nonlocal Xtot, Qwfb_tot, r_w_fb, r_ab_fb
        if Xtot < cap_w and X[i] + X_fb[i] < target_n[i]:
            X_fb[i] += 1
            Xtot += 1
            r_w_fb += mu_w[i]
        else:
            Qw_fb[i] += 1
            Qwfb_tot += 1
            r_ab_fb += theta[i]

    def judge_admit_pick() -> None:
        """Fill one freed judge server, FCFS surrogate across all classes."""
        nonlocal Ytot, Qj_tot, r_j, r_j_fb
        if Qj_tot <= 0 or Ytot >= cap_j:
            return
        u = rnd() * Qj_tot
        for j in range(I):
            u -= Qj[j]
            if u < 0.0:
                Qj[j] -= 1
                Qj_tot -= 1
                Y[j] += 1
                Ytot += 1
                r_j += mu_j[j]
                return
        for j in range(I):
            u -= Qj_fb[j]
            if u < 0.0 or j == I - 1:
                Qj_fb[j] -= 1
                Qj_tot -= 1
                Y_fb[j] += 1
                Ytot += 1
                r_j_fb += mu_j[j]
                return

    def human_admit_pick() -> None:
        """Fill one freed human server, FCFS surrogate across all queues."""
        nonlocal Ztot, Qh_tot, r_hd, r_hj, r_hd_fb, r_hj_fb
        if Qh_tot <= 0 or Ztot >= cap_h:
            return
        u = rnd() * Qh_tot
        for j in range(I):
            u -= Qhd[j]
            if u < 0.0:
                Qhd[j] -= 1
                Qh_tot -= 1
                Zd[j] += 1
                Ztot += 1
                r_hd += mu_h[j]
                return
        for j in range(I):
            u -= Qhj[j]
            if u < 0.0:
                Qhj[j] -= 1
                Qh_tot -= 1
                Zj[j] += 1
                Ztot += 1
                r_hj += mu_h[j]
                return
        for j in range(I):
            u -= Qhd_fb[j]
            if u < 0.0:
                Qhd_fb[j] -= 1
                Qh_tot -= 1
                Zd_fb[j] += 1
                Ztot += 1
                r_hd_fb += mu_h[j]
                return
        for j in range(I):
            u -= Qhj_fb[j]
            if u < 0.0 or j == I - 1:
                Qhj_fb[j] -= 1
                Qh_tot -= 1
                Zj_fb[j] += 1
                Ztot += 1
                r_hj_fb += mu_h[j]
                return

    def recompute_aggregates() -> None:
        nonlocal r_ab, r_w, r_j, r_hd, r_hj
        nonlocal r_ab_fb, r_w_fb, r_j_fb, r_hd_fb, r_hj_fb
        r_ab = sum(th * q for th, q in zip(theta, Qw))
        r_w = sum(m * x for m, x in zip(mu_w, X))
        r_j = sum(m * y for m, y in zip(mu_j, Y))
        r_hd = sum(m * z for m, z in zip(mu_h, Zd))
        r_hj = sum(m * z for m, z in zip(mu_h, Zj))
        r_ab_fb = sum(th * q for th, q in zip(theta, Qw_fb))
        r_w_fb = sum(m * x for m, x in zip(mu_w, X_fb))
        r_j_fb = sum(m * y for m, y in zip(mu_j, Y_fb))
        r_hd_fb = sum(m * z for m, z in zip(mu_h, Zd_fb))
        r_hj_fb = sum(m * z for m, z in zip(mu_h, Zj_fb))

    def check_invariants() -> None:
        state.check_mass_balance()
        state.check_capacity()
        if Ytot < cap_j and Qj_tot > 0:
            raise SimulationError("judge pool idling with nonempty queue")
        if Ztot < cap_h and Qh_tot > 0:
            raise SimulationError("human pool idling with nonempty queue")
        if greedy:
            if Xtot < cap_w and Qw_tot > 0:
                raise SimulationError("greedy worker pool idling with waiting work")
        else:
            # Admission uses a strict threshold, so in-service counts can
            # never exceed the target rounded up.
            for i in range(I):
                if X[i] + X_fb[i] > math.ceil(target_n[i]):
                    raise SimulationError(
                        f"class {i} exceeds its admission target"
                    )

    # Pre-fill from a configured initial queue.
    while worker_admit_scan():
        pass

    while True:
        R6 = r_arr + r_ab + r_w + r_j + r_hd + r_hj
        R = R6 + (r_ab_fb + r_w_fb + r_j_fb + r_hd_fb + r_hj_fb) if fb_on else R6
        if R <= 1e-13:
            if Xtot + Ytot + Ztot + Qw_tot + Qwfb_tot + Qj_tot + Qh_tot > 0:
                raise SimulationError(
                    "total event rate is zero with tasks still in the system"
                )
            if not warm_done:
                warm_done = True
                snap_C = list(C)
                snap_C_fb = list(C_fb)
                snap_A = list(A)
                snap_B = list(B)
                snap_B_fb = list(B_fb)
            while next_sample <= T + 1e-12:
                record_sample(next_sample)
                next_sample += sample_dt
            t = T
            break

        t_new = t + expo(R)
        seg_end = t_new if t_new < T else T
        if not warm_done:
            if seg_end >= warmup:
                area_x += (seg_end - warmup) * Xtot
                area_y += (seg_end - warmup) * Ytot
                area_z += (seg_end - warmup) * Ztot
                snap_C = list(C)
                snap_C_fb = list(C_fb)
                snap_A = list(A)
                snap_B = list(B)
                snap_B_fb = list(B_fb)
                warm_done = True
        else:
            dt_seg = seg_end - t
            area_x += dt_seg * Xtot
            area_y += dt_seg * Ytot
            area_z += dt_seg * Ztot
        while next_sample <= seg_end + 1e-12:
            record_sample(next_sample)
            next_sample += sample_dt
        if t_new >= T:
            t = T
            break
        t = t_new

        u = rnd() * R
        if u < r_arr:
            i = pick_class(u, lam_n)
            A[i] += 1
            if Xtot < cap_w and (
                greedy or (X[i] + X_fb[i] if ftfb else X[i]) < target_n[i]
            ):
                X[i] += 1
                Xtot += 1
                r_w += mu_w[i]
            else:
                Qw[i] += 1
                Qw_tot += 1
                r_ab += theta[i]
        elif u < r_arr + r_ab:
            i = pick_class(
                u - r_arr, [theta[k] * Qw[k] for k in range(I)]
            )
            Qw[i] -= 1
            Qw_tot -= 1
            r_ab -= theta[i]
            B[i] += 1
        elif u < r_arr + r_ab + r_w:
            i = pick_class(
                u - (r_arr + r_ab), [mu_w[k] * X[k] for k in range(I)]
            )
            X[i] -= 1
            Xtot -= 1
            r_w -= mu_w[i]
            S_w[i] += 1
            if rnd() < phi[i]:
                S_wj[i] += 1
                if Ytot < cap_j:
                    Y[i] += 1
                    Ytot += 1
                    r_j += mu_j[i]
                else:
                    Qj[i] += 1
                    Qj_tot += 1
            else:
                S_wh[i] += 1
                if Ztot < cap_h:
                    Zd[i] += 1
                    Ztot += 1
                    r_hd += mu_h[i]
                else:
                    Qhd[i] += 1
                    Qh_tot += 1
            worker_admit_scan()
        elif u < r_arr + r_ab + r_w + r_j:
            i = pick_class(
                u - (r_arr + r_ab + r_w), [mu_j[k] * Y[k] for k in range(I)]
            )
            Y[i] -= 1
            Ytot -= 1
            r_j -= mu_j[i]
            if rnd() < p_pass[i]:
                S_jh[i] += 1
                if Ztot < cap_h:
                    Zj[i] += 1
                    Ztot += 1
                    r_hj += mu_h[i]
                else:
                    Qhj[i] += 1
                    Qh_tot += 1
            else:
                S_jw[i] += 1
                enqueue_fresh_rework(i)
            judge_admit_pick()
        elif u < r_arr + r_ab + r_w + r_j + r_hd:
            i = pick_class(
                u - (r_arr + r_ab + r_w + r_j),
                [mu_h[k] * Zd[k] for k in range(I)],
            )
            Zd[i] -= 1
            Ztot -= 1
            r_hd -= mu_h[i]
            if rnd() < fail_d[i]:
                S_hdw[i] += 1
                if fb_on:
                    enqueue_feedback(i)
                else:
                    enqueue_fresh_rework(i)
            else:
                S_hdc[i] += 1
                C[i] += 1
            human_admit_pick()
        elif (not fb_on) or u < R6:
            i = pick_class(
                u - (r_arr + r_ab + r_w + r_j + r_hd),
                [mu_h[k] * Zj[k] for k in range(I)],
            )
            Zj[i] -= 1
            Ztot -= 1
            r_hj -= mu_h[i]
            if rnd() < fail_j[i]:
                S_hjw[i] += 1
                if fb_on:
                    enqueue_feedback(i)
                else:
                    enqueue_fresh_rework(i)
            else:
                S_hjc[i] += 1
                C[i] += 1
            human_admit_pick()
        else:
            u -= R6
            if u < r_ab_fb:
                i = pick_class(u, [theta[k] * Qw_fb[k] for k in range(I)])
                Qw_fb[i] -= 1
                Qwfb_tot -= 1
                r_ab_fb -= theta[i]
                B_fb[i] += 1
            elif u < r_ab_fb + r_w_fb:
                i = pick_class(
                    u - r_ab_fb, [mu_w[k] * X_fb[k] for k in range(I)]
                )
                X_fb[i] -= 1
                Xtot -= 1
                r_w_fb -= mu_w[i]
                S_w_fb[i] += 1
                if rnd() < phi_fb[i]:
                    S_wj_fb[i] += 1
                    if Ytot < cap_j:
                        Y_fb[i] += 1
                        Ytot += 1
                        r_j_fb += mu_j[i]
                    else:
                        Qj_fb[i] += 1
                        Qj_tot += 1
                else:
                    S_wh_fb[i] += 1
                    if Ztot < cap_h:
                        Zd_fb[i] += 1
                        Ztot += 1
                        r_hd_fb += mu_h[i]
                    else:
                        Qhd_fb[i] += 1
                        Qh_tot += 1
                worker_admit_scan()
            elif u < r_ab_fb + r_w_fb + r_j_fb:
                i = pick_class(
                    u - (r_ab_fb + r_w_fb), [mu_j[k] * Y_fb[k] for k in range(I)]
                )
                Y_fb[i] -= 1
                Ytot -= 1
                r_j_fb -= mu_j[i]
                if rnd() < p_pass_fb[i]:
                    S_jh_fb[i] += 1
                    if Ztot < cap_h:
                        Zj_fb[i] += 1
                        Ztot += 1
                        r_hj_fb += mu_h[i]
                    else:
                        Qhj_fb[i] += 1
                        Qh_tot += 1
                else:
                    # Judge rejection yields no human feedback: fresh pool.
                    S_jw_fb[i] += 1
                    enqueue_fresh_rework(i)
                judge_admit_pick()
            elif u < r_ab_fb + r_w_fb + r_j_fb + r_hd_fb:
                i = pick_class(
                    u - (r_ab_fb + r_w_fb + r_j_fb),
                    [mu_h[k] * Zd_fb[k] for k in range(I)],
                )
                Zd_fb[i] -= 1
                Ztot -= 1
                r_hd_fb -= mu_h[i]
                if rnd() < fail_d_fb[i]:
                    # Second human failure: removed to keep rework finite.
                    S_hd_rm[i] += 1
                    removed[i] += 1
                else:
                    S_hdc_fb[i] += 1
                    C_fb[i] += 1
                human_admit_pick()
            else:
                i = pick_class(
                    u - (r_ab_fb + r_w_fb + r_j_fb + r_hd_fb),
                    [mu_h[k] * Zj_fb[k] for k in range(I)],
                )
                Zj_fb[i] -= 1
                Ztot -= 1
                r_hj_fb -= mu_h[i]
                if rnd() < fail_j_fb[i]:
                    S_hj_rm[i] += 1
                    removed[i] += 1
                else:
                    S_hjc_fb[i] += 1
                    C_fb[i] += 1
                human_admit_pick()

        events += 1
        if events % check_every == 0:
            check_invariants()
            recompute_aggregates()

    check_invariants()

    span = T - warmup
    completions = tuple(
        (C[i] - snap_C[i]) + (C_fb[i] - snap_C_fb[i]) for i in range(I)
    )
    throughput = sum(r * c for r, c in zip(rewards, completions)) / (n * span)
    metrics = SimMetrics(
        throughput_rate=throughput,
        completions=completions,
        completions_total=tuple(C[i] + C_fb[i] for i in range(I)),
        arrivals=tuple(A[i] - snap_A[i] for i in range(I)),
        abandoned=tuple(
            (B[i] - snap_B[i]) + (B_fb[i] - snap_B_fb[i]) for i in range(I)
        ),
        removed_fb=tuple(removed),
        utilization_workers=area_x / (span * cap_w) if cap_w else 0.0,
        utilization_judges=area_y / (span * cap_j) if cap_j else 0.0,
        utilization_humans=area_z / (span * cap_h) if cap_h else 0.0,
        trajectory=tuple(trajectory),
        event_count=events,
        seed=config.seed,
        scale_n=n,
        state=state,
    )
    if trajectory_csv is not None:
        with open(trajectory_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["time", "class", "Qw", "X", "Qj", "Y", "Qhd", "Zd", "Qhj", "Zj"]
            )
            writer.writerows(per_class_rows)
    return metrics
