"""Ensembles for the functional central limit theorems.

Three kinds of terminal-value samples, each replica drawn from its own
derived seed (see ``weights.replica_seed``):

    Zn         F_n(1)/σ_n                         (TightCLT regime)
    Reference  √(F_{W^(2),n}(1))·g, g ~ N(0, 1)    (Brownian motion in
                                                    multifractal time)
    Rn         (F_n(1) − F_{n+tail}(1))/(σ·b^{−nφ(2)/2})
                                                   (ConvergentLp, φ(2) > 0)

Replicas run through ``pool.ordered_map``; results are index-ordered, so
an ensemble does not depend on the worker count.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import ks_2samp

from . import log as _log
from .cascade import coupled_companion, path, realize
from .errors import (
    DegenerateTail,
    InvalidArgument,
    RegimeError,
    WrongRegime,
)
from .moments import (
    finite_n_moment,
    limit_moment_convergent,
    limit_moment_even,
    second_moment_exact,
)
from .pool import ordered_map
from .regime import ZERO_TOL, Regime, classify, sigma_n
from .weights import beta_transform, phi, replica_seed

KINDS = ("Zn", "Rn", "Reference")

# Level of the coarse grid kept per replica in path mode.
PATH_LEVEL = 8


@dataclass(eq=False)
class EnsembleSample:
    spec: object
    kind: str
    depth: int
    count: int
    seed: int
    values: np.ndarray
    tail: Optional[int] = None
    paths: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)


@dataclass
class ComparisonReport:
    ks_statistic: Optional[float]
    moments: list
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "ks_statistic": self.ks_statistic,
            "moments": [dict(m) for m in self.moments],
            "notes": list(self.notes),
        }


# -- Guards ------------------------------------------------------------------


def _check_count(count):
    if count < 2:
        raise InvalidArgument(f"count must be at least 2, got {count}")


def _check_real(spec):
    if not spec.is_real:
        raise WrongRegime("the CLT harness only covers real-valued specs")


def _guard(ok, message, force, notes):
    if ok:
        return
    if not force:
        raise WrongRegime(message)
    _log.warn(f"Warning: {message}; continuing because of --force.")
    notes.append(f"regime_violation: {message}")


def _coarse(values, b, n):
    level = min(PATH_LEVEL, n)
    return np.asarray(values)[:: b ** (n - level)]


# -- Ensembles -------------------------------------------------------------


def normalized_ensemble(spec, n, count, seed, threads=None, paths=False, force=False):
    """Terminal values of Z_n = F_n/σ_n over ``count`` replicas."""
    _check_count(count)
    _check_real(spec)
    notes = []
    report = classify(spec)
    _guard(report.regime == Regime.TIGHT_CLT,
           f"Zn ensembles need the TightCLT regime, spec is {report.regime.value}",
           force, notes)
    norm = sigma_n(spec, n)

    def one(index):
        real = realize(spec, n, replica_seed(seed, index, "cascade"), threads=1)
        if paths:
            p = _coarse(path(real, n).values.real, spec.b, n) / norm
            return p[-1], p
        return float(real.q_levels[n].sum().real) / norm, None

    out = ordered_map(one, range(count), threads, label="Zn")
    return EnsembleSample(
        spec=spec, kind="Zn", depth=n, count=count, seed=seed,
        values=np.array([v for v, _ in out]),
        paths=np.array([p for _, p in out]) if paths else None,
        notes=notes,
    )


def reference_sample(spec, n, count, seed, threads=None, paths=False, force=False):
    """Samples of B(F_{W^(2)}(1)) with F_{W^(2)} approximated at depth n."""
    _check_count(count)
    _check_real(spec)
    notes = []
    w2 = beta_transform(spec, 2)
    report = classify(w2)
    _guard(report.regime == Regime.CONVERGENT_LP,
           f"W^(2) must be in the ConvergentLp regime, it is {report.regime.value}",
           force, notes)

    def one(index):
        real = realize(spec, n, replica_seed(seed, index, "reference"), threads=1)
        g = np.random.default_rng(replica_seed(seed, index, "gauss"))
        time = coupled_companion(real, 2).values
        if paths:
            steps = np.diff(_coarse(time, spec.b, n))
            inc = np.sqrt(np.maximum(steps, 0)) * g.standard_normal(len(steps))
            p = np.concatenate([[0.0], np.cumsum(inc)])
            return p[-1], p
        return math.sqrt(max(time[-1], 0.0)) * g.standard_normal(), None

    out = ordered_map(one, range(count), threads, label="Reference")
    return EnsembleSample(
        spec=spec, kind="Reference", depth=n, count=count, seed=seed,
        values=np.array([v for v, _ in out]),
        paths=np.array([p for _, p in out]) if paths else None,
        notes=notes,
    )


def residual_scale(spec, n):
    """σ·b^{−nφ(2)/2} with σ = √(m₂ − 1)."""
    m2 = limit_moment_convergent(spec, 2)
    if m2 - 1 <= ZERO_TOL:
        raise WrongRegime("F_W(1) is almost surely constant; residuals vanish")
    return math.sqrt(m2 - 1) * spec.b ** (-n * phi(spec, 2) / 2)


def truncation_factor(spec, tail):
    """Variance of the normalized residual when F is replaced by F_{n+tail}."""
    return 1 - spec.b ** (-tail * phi(spec, 2))


def residual_ensemble(spec, n, tail, count, seed, threads=None, force=False):
    """Terminal values of R_n with F approximated by F_{n+tail} on the same tree."""
    _check_count(count)
    _check_real(spec)
    if tail < 1:
        raise DegenerateTail(f"tail must be at least 1, got {tail}")
    notes = []
    report = classify(spec)
    _guard(report.regime == Regime.CONVERGENT_LP and report.phi_at_2 > ZERO_TOL,
           f"Rn ensembles need ConvergentLp with φ(2) > 0, spec is "
           f"{report.regime.value} with φ(2) = {report.phi_at_2:.6g}",
           force, notes)
    scale = residual_scale(spec, n)

    def one(index):
        real = realize(spec, n + tail, replica_seed(seed, index, "cascade"), threads=1)
        diff = real.q_levels[n].sum() - real.q_levels[n + tail].sum()
        return float(diff.real) / scale

    values = np.array(ordered_map(one, range(count), threads, label="Rn"))
    notes.append(
        f"truncation: Var(R_n) is {truncation_factor(spec, tail):.17g} "
        f"instead of 1 (tail {tail})"
    )
    return EnsembleSample(
        spec=spec, kind="Rn", depth=n, count=count, seed=seed,
        values=values, tail=tail, notes=notes,
    )


# -- Statistics --------------------------------------------------------------


def _values(sample):
    return np.asarray(getattr(sample, "values", sample), dtype=float)


def ks_distance(a, b):
    """Two-sample Kolmogorov–Smirnov statistic on terminal values."""
    x, y = _values(a), _values(b)
    if x.size == 0 or y.size == 0:
        raise InvalidArgument("KS distance needs two nonempty samples")
    return float(ks_2samp(x, y).statistic)


def jackknife(values, order):
    """(E x^order, jackknife standard error)."""
    p = np.asarray(values, dtype=float) ** order
    n = p.size
    loo = (p.sum() - p) / (n - 1)
    se = math.sqrt((n - 1) / n * float(((loo - loo.mean()) ** 2).sum()))
    return float(p.mean()), se


def _target(sample, order):
    spec = sample.spec
    try:
        if sample.kind == "Zn":
            return finite_n_moment(spec, order, sample.depth)
        if sample.kind == "Reference":
            return limit_moment_even(spec, order)
        if sample.kind == "Rn":
            if order == 1:
                return 0.0
            if order == 2:
                return truncation_factor(spec, sample.tail)
    except RegimeError as e:
        _log.progress(f"  no target for order {order}: {e}")
    return None


def moment_report(sample, orders=(1, 2, 3, 4)):
    """Empirical moments with jackknife errors and exact targets where defined."""
    rows = []
    for k in orders:
        if k not in (1, 2, 3, 4):
            raise InvalidArgument(f"moment order must be in 1..4, got {k}")
        value, se = jackknife(_values(sample), k)
        target = _target(sample, k)
        row = {"order": k, "value": value, "stderr": se, "target": target}
        if target is not None and se > 0:
            row["z"] = (value - target) / se
        rows.append(row)
    notes = list(sample.notes)
    if sample.kind == "Reference":
        notes.extend(_reference_bias_notes(sample))
    return ComparisonReport(ks_statistic=None, moments=rows, notes=notes)


def _reference_bias_notes(sample):
    try:
        w2 = beta_transform(sample.spec, 2)
        v_hat = second_moment_exact(w2, sample.depth)
        m2 = limit_moment_convergent(w2, 2)
    except RegimeError:
        return []
    return [
        f"depth-{sample.depth} reference biases E(Z^4) by 3(v̂ − m̂₂) = "
        f"{3 * (v_hat - m2):.17g}"
    ]


def compare(sample, reference=None, orders=(1, 2, 3, 4)):
    """moment_report of ``sample`` plus the KS distance to ``reference``."""
    report = moment_report(sample, orders)
    if reference is not None:
        report.ks_statistic = ks_distance(sample, reference)
        if reference.kind == "Reference":
            report.notes.extend(_reference_bias_notes(reference))
    return report

