"""Canonical benchmark instances and the TOML instance-file format.

The canonical instances reproduce the parameter sets behind the package's
reference sweeps (see README for provenance notes):

* ``fig2a``  one class, scarce workers: lambda=75, mu=(20,30,10),
  n_w=5, n_j=3, alpha=0.3, beta=(0.1, 0.2).  Overloaded, so the
  four-phase closed forms apply.
* ``fig2b``  abundant-worker variant: n_w=10 with lambda=150 so the
  overload premise still holds on the whole n_h sweep.
* ``fig3``   two classes sharing worker-side parameters, class 1 with a
  lenient judge (0.05, 0.40) and class 2 with a strict judge
  (0.15, 0.10); lambda=150 per class keeps both classes overloaded at
  n_w=10, which the closed-form priority analysis requires.
* ``fig3_sim``  the same two classes at lambda=75, the values used for
  the stochastic policy-comparison experiments.
* ``fig6``   the fig3_sim classes with a compute budget B=10 at unit
  prices, for capacity planning.

Instance files are TOML with the schema::

    [[classes]]
    lambda = 75.0
    theta = 0.5
    mu_w = 20.0
    mu_j = 30.0
    mu_h = 10.0
    reward = 1.0
    alpha = 0.3
    beta_I = 0.1
    beta_II = 0.2
    kappa = 0.5          # optional, enables the feedback extension

    [capacities]
    n_w = 5.0
    n_j = 3.0
    n_h = 5.0

    [budget]             # optional
    B = 10.0
    gamma_w = 1.0
    gamma_j = 1.0

    [sim]                # optional
    scale_n = 10
    horizon_T = 250.0
    warmup = 50.0
    seed = 42
    sample_interval = 1.0

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import DomainError
from .fluid import ClassParams, Instance
from .quality import QualityParams


def _cls(lam, theta, mu, reward, alpha, beta_I, beta_II) -> ClassParams:
    return ClassParams(
        lam=lam,
        theta=theta,
        mu_w=mu[0],
        mu_j=mu[1],
        mu_h=mu[2],
        reward=reward,
        quality=QualityParams(alpha=alpha, beta_I=beta_I, beta_II=beta_II),
    )


_MU = (20.0, 30.0, 10.0)


def fig2a(n_h: float = 5.0) -> Instance:
    c = _cls(75.0, 0.5, _MU, 1.0, 0.3, 0.1, 0.2)
    return Instance(classes=(c,), n_w=5.0, n_j=3.0, n_h=n_h)


def fig2b(n_h: float = 5.0) -> Instance:
    c = _cls(150.0, 0.5, _MU, 1.0, 0.3, 0.1, 0.2)
    return Instance(classes=(c,), n_w=10.0, n_j=3.0, n_h=n_h)


def _fig3_classes(lam: float) -> tuple:
    c1 = _cls(lam, 0.5, _MU, 1.0, 0.3, 0.05, 0.40)
    c2 = _cls(lam, 0.5, _MU, 1.0, 0.3, 0.15, 0.10)
    return (c1, c2)


def fig3(n_h: float = 8.0) -> Instance:
    return Instance(classes=_fig3_classes(150.0), n_w=10.0, n_j=6.0, n_h=n_h)


def fig3_sim(n_h: float = 8.0) -> Instance:
    return Instance(classes=_fig3_classes(75.0), n_w=10.0, n_j=6.0, n_h=n_h)


FIG4_KAPPA = 0.5


def fig4(n_h: float = 5.0) -> Instance:
    return fig2a(n_h)


FIG6_BUDGET = (10.0, 1.0, 1.0)  # (B, gamma_w, gamma_j)


def fig6(n_h: float = 8.0) -> Instance:
    # n_w / n_j are decision variables for the planner; placeholders here.
    return Instance(classes=_fig3_classes(75.0), n_w=10.0, n_j=0.0, n_h=n_h)


@dataclass(frozen=True)
class SimSettings:
    scale_n: int = 1
    horizon_T: float = 250.0
    warmup: float = 50.0
    seed: int = 42
    sample_interval: float = 1.0


@dataclass(frozen=True)
class InstanceFile:
    instance: Instance
    kappas: tuple | None  # per-class feedback factors, when all classes set one
    budget: tuple | None  # (B, gamma_w, gamma_j)
    sim: SimSettings | None


_CLASS_KEYS = {
    "lambda", "theta", "mu_w", "mu_j", "mu_h", "reward",
    "alpha", "beta_I", "beta_II", "kappa",
}
_CAP_KEYS = {"n_w", "n_j", "n_h"}
_BUDGET_KEYS = {"B", "gamma_w", "gamma_j"}
_SIM_KEYS = {"scale_n", "horizon_T", "warmup", "seed", "sample_interval"}
_TOP_KEYS = {"classes", "capacities", "budget", "sim"}


def _reject_unknown(section: str, data: dict, allowed: set) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise DomainError(
            f"{section}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _get(section: str, data: dict, key: str, kind=float):
    if key not in data:
        raise DomainError(f"{section}: missing required key {key!r}")
    value = data[key]
    if kind is float and isinstance(value, bool):
        raise DomainError(f"{section}.{key}: expected a number")
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise DomainError(f"{section}.{key}: expected {kind.__name__}, got {value!r}")


def load_instance_file(path) -> InstanceFile:
    """Parse and validate a TOML instance file."""
    with open(path, "rb") as fh:
        try:
            data = _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise DomainError(f"{path}: invalid TOML: {exc}") from exc

    _reject_unknown(str(path), data, _TOP_KEYS)
    raw_classes = data.get("classes")
    if not isinstance(raw_classes, list) or not raw_classes:
        raise DomainError(f"{path}: needs at least one [[classes]] entry")
    classes = []
    kappas = []
    for idx, entry in enumerate(raw_classes):
        section = f"classes[{idx}]"
        if not isinstance(entry, dict):
            raise DomainError(f"{section}: expected a table")
        _reject_unknown(section, entry, _CLASS_KEYS)
        classes.append(
            ClassParams(
                lam=_get(section, entry, "lambda"),
                theta=_get(section, entry, "theta"),
                mu_w=_get(section, entry, "mu_w"),
                mu_j=_get(section, entry, "mu_j"),
                mu_h=_get(section, entry, "mu_h"),
                reward=_get(section, entry, "reward"),
                quality=QualityParams(
                    alpha=_get(section, entry, "alpha"),
                    beta_I=_get(section, entry, "beta_I"),
                    beta_II=_get(section, entry, "beta_II"),
                ),
            )
        )
        kappas.append(float(entry["kappa"]) if "kappa" in entry else None)

    caps = data.get("capacities")
    if not isinstance(caps, dict):
        raise DomainError(f"{path}: missing [capacities] table")
    _reject_unknown("capacities", caps, _CAP_KEYS)
    instance = Instance(
        classes=tuple(classes),
        n_w=_get("capacities", caps, "n_w"),
        n_j=_get("capacities", caps, "n_j"),
        n_h=_get("capacities", caps, "n_h"),
    )

    budget = None
    if "budget" in data:
        b = data["budget"]
        _reject_unknown("budget", b, _BUDGET_KEYS)
        budget = (
            _get("budget", b, "B"),
            _get("budget", b, "gamma_w"),
            _get("budget", b, "gamma_j"),
        )

    sim = None
    if "sim" in data:
        s = dict(data["sim"])
        _reject_unknown("sim", s, _SIM_KEYS)
        defaults = SimSettings()
        sim = SimSettings(
            scale_n=int(s.get("scale_n", defaults.scale_n)),
            horizon_T=float(s.get("horizon_T", defaults.horizon_T)),
            warmup=float(s.get("warmup", defaults.warmup)),
            seed=int(s.get("seed", defaults.seed)),
            sample_interval=float(s.get("sample_interval", defaults.sample_interval)),
        )

    if any(k is not None for k in kappas):
        if any(k is None for k in kappas):
            raise DomainError(
                f"{path}: kappa must be set on every class or on none"
            )
        kappa_tuple = tuple(kappas)
    else:
        kappa_tuple = None
    return InstanceFile(instance=instance, kappas=kappa_tuple, budget=budget, sim=sim)
