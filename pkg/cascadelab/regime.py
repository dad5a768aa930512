"""Regime classification and the scalar parameters β, p₀, σ, σ_n.

The decision follows condition (C) and the phase parameter

    p₀ = sup{p : φ'(p)p − φ(p) > 0}

searched on (0, P_MAX]. Since φ_W is concave, g(p) = φ'(p)p − φ(p) is
nonincreasing, so every search below is a sign-change bracket followed
by bisection.

    (C) holds (C1/C2)                      → ConvergentLp
    C3 with the γ-structure                → ConservativeCritical
    (C) fails, p₀ ≤ 1                      → Degenerate
    (C) fails, φ(p₀) = 0, p₀ finite        → Undetermined
    (C) fails, conservative, p₀ > 1        → DivergentUnbounded
    (C) fails, nonconservative, p₀ ∈ (1,2] → DivergentUnbounded
    (C) fails, nonconservative, p₀ > 2     → TightCLT
"""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import bisect, minimize_scalar
from scipy.special import comb

from .errors import InvalidArgument, NonFinitePhi, WrongRegime
from .weights import (
    moment_sum,
    pair_moment,
    phi,
    phi_curve,
    phi_derivative,
    vector_support,
)

P_MAX = 256.0
GRID_STEP = 1.0 / 64
ROOT_TOL = 1e-9
ZERO_TOL = 1e-12
BOUNDARY_TOL = 1e-9
UNIT_TOL = 1e-12

# p-grid of the phi_table emitted next to a report.
PHI_TABLE_GRID = tuple(k / 4 for k in range(0, 33))


class Condition(str, Enum):
    C1 = "C1"
    C2 = "C2"
    C3_CRITICAL = "C3_critical"
    FAILS = "fails"


class Regime(str, Enum):
    CONVERGENT_LP = "ConvergentLp"
    CONSERVATIVE_CRITICAL = "ConservativeCritical"
    DEGENERATE = "Degenerate"
    DIVERGENT_UNBOUNDED = "DivergentUnbounded"
    TIGHT_CLT = "TightCLT"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class ExtinctionPolynomial:
    """P(x) = E(x^N), N = #{i : |W_i| > 0}; coefficients[k] = P(N = k)."""
    coefficients: tuple

    def __call__(self, x):
        return float(sum(c * x ** k for k, c in enumerate(self.coefficients)))

    def mean(self):
        return float(sum(k * c for k, c in enumerate(self.coefficients)))


@dataclass
class RegimeReport:
    condition_c: Condition
    regime: Regime
    beta: Optional[float]
    p0: float
    phi_at_2: float
    sigma: Optional[float]
    critical_gamma: Optional[float]
    extinction_prob: float
    notes: list = field(default_factory=list)
    holder_bound: Optional[float] = None
    monofractal_H: Optional[float] = None
    log_growth_rate: Optional[float] = None
    degeneracy_exponent: Optional[float] = None

    def to_dict(self):
        d = asdict(self)
        d["condition_c"] = self.condition_c.value
        d["regime"] = self.regime.value
        return d


# -- Searches over p --------------------------------------------------------


def _grid(lo, hi):
    """Points of the 1/64 grid in (lo, hi]."""
    steps = int(round((hi - lo) / GRID_STEP))
    return lo + GRID_STEP * np.arange(1, steps + 1)


def _argmax(spec, f_curve, f_point, lo, hi):
    # Grid maximum, then bounded refinement on the neighbouring cells.
    grid = _grid(lo, hi)
    values = f_curve(grid)
    k = int(np.argmax(values))
    best_p, best = float(grid[k]), float(values[k])
    a = max(lo, best_p - GRID_STEP)
    b = min(hi, best_p + GRID_STEP)
    res = minimize_scalar(lambda p: -f_point(p), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    if res.success and -res.fun > best:
        return float(res.x), float(-res.fun)
    return best_p, best


def max_phi(spec, lo, hi):
    """(argmax, max) of φ_W on (lo, hi]."""
    return _argmax(spec, lambda ps: phi_curve(spec, ps), lambda p: phi(spec, p), lo, hi)


def holder_bound(spec, p_hi=2.0):
    """sup over q ∈ (1, p_hi] of φ_W(q)/q."""
    _, value = _argmax(
        spec,
        lambda ps: phi_curve(spec, ps) / ps,
        lambda p: phi(spec, p) / p,
        1.0, float(p_hi),
    )
    return value


def solve_beta(spec):
    """Smallest root of φ_W = 0 on [1, P_MAX]; None if φ < 0 throughout."""
    if abs(phi(spec, 1.0)) <= ZERO_TOL:
        return 1.0
    grid = _grid(1.0, P_MAX)
    values = phi_curve(spec, grid)
    # φ may creep up to 0⁻ and round to 0.0 without ever crossing
    hits = np.nonzero(values > ZERO_TOL)[0]
    if hits.size == 0:
        return None
    k = int(hits[0])
    lo = float(grid[k - 1]) if k > 0 else 1.0
    if phi(spec, lo) >= 0:
        return lo
    return float(bisect(lambda p: phi(spec, p), lo, float(grid[k]), xtol=ROOT_TOL))


def _g(spec, p):
    return phi_derivative(spec, p) * p - phi(spec, p)


def _g_scale(spec, p):
    # magnitude of the terms cancelling in g(p)
    return max(1.0, abs(phi(spec, p)), abs(phi_derivative(spec, p)) * p)


def compute_p0(spec):
    """The zero of g(p) = φ'(p)p − φ(p) on (0, P_MAX], or +inf."""
    if not math.isfinite(phi(spec, P_MAX)):
        raise NonFinitePhi(f"φ_W({P_MAX:g}) is not finite")
    g_cap = _g(spec, P_MAX)
    if g_cap > 0 or abs(g_cap) <= ZERO_TOL * _g_scale(spec, P_MAX):
        return math.inf
    lo = 1e-6
    if _g(spec, lo) <= 0:
        return lo
    root = float(bisect(lambda p: _g(spec, p), lo, P_MAX, xtol=ROOT_TOL))
    # g → 0⁺ that rounds below zero near the cap
    if root >= P_MAX - ROOT_TOL:
        return math.inf
    return root


# -- Condition (C) -----------------------------------------------------------


def _critical_moduli(spec):
    """|W_i| ≤ 1 a.s., Σ_i P(|W_i| = 1) = 1, P(#{i : |W_i| = 1} = 1) < 1."""
    probs, vectors = vector_support(spec)
    moduli = np.abs(vectors)
    if np.any(moduli > 1 + UNIT_TOL):
        return False
    units = np.abs(moduli - 1) <= UNIT_TOL
    if abs(float(np.dot(probs, units.sum(axis=1))) - 1) > UNIT_TOL:
        return False
    single = float(np.dot(probs, units.sum(axis=1) == 1))
    return single < 1 - UNIT_TOL


def check_condition_c(spec):
    """Which case of condition (C) holds, if any."""
    _, best = max_phi(spec, 1.0, 2.0)
    if best > ZERO_TOL:
        return Condition.C1
    if spec.conservative:
        _, best = max_phi(spec, 1.0, P_MAX)
        if best > ZERO_TOL:
            return Condition.C2
        if _critical_moduli(spec):
            return Condition.C3_CRITICAL
    return Condition.FAILS


def _close(z, target):
    return abs(z - target) <= UNIT_TOL


def check_critical_structure(spec):
    """Smallest γ for which every support vector has the critical structure.

    Each entry must satisfy |W_i| ≤ γ, or |W_i| = 1 with partial sums
    (Σ_{k<i} W_k, Σ_{k≤i} W_k) ∈ {(0,1), (1,0)}. Returns None when an entry
    breaks the structure or when γ would be 0 (γ must lie in (0, 1)).
    """
    _, vectors = vector_support(spec)
    gamma = 0.0
    for vec in vectors:
        partial = 0j
        for w in vec:
            before, partial = partial, partial + w
            if abs(abs(w) - 1) <= UNIT_TOL:
                if not ((_close(before, 0) and _close(partial, 1))
                        or (_close(before, 1) and _close(partial, 0))):
                    return None
            else:
                gamma = max(gamma, abs(w))
    if not (0.0 < gamma < 1.0):
        return None
    return float(gamma)


# -- Scalars ---------------------------------------------------------------


def extinction_polynomial(spec):
    """Offspring law of the Galton–Watson tree of nonzero weights."""
    b = spec.b
    if spec.kind == "iid":
        q0 = float(spec.p[np.abs(spec.v) == 0].sum())
        coeffs = [float(comb(b, k, exact=True)) * (1 - q0) ** k * q0 ** (b - k)
                  for k in range(b + 1)]
    else:
        probs, vectors = vector_support(spec)
        counts = (np.abs(vectors) > 0).sum(axis=1)
        coeffs = [float(probs[counts == k].sum()) for k in range(b + 1)]
    return ExtinctionPolynomial(tuple(coeffs))


def extinction_probability(spec):
    """Smallest fixed point of P(x) = E(x^N) on [0, 1]."""
    if not spec.has_zero:
        return 0.0
    poly = extinction_polynomial(spec)
    if poly.coefficients[0] == 0:
        return 0.0
    if poly.mean() <= 1 + ZERO_TOL:
        return 1.0

    def f(x):
        return poly(x) - x

    # f is convex with f(0) > 0, f(1) = 0 and f'(1) > 0: it dips below 0 on (q, 1).
    res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded")
    hi = float(res.x)
    if f(hi) >= 0:
        return 1.0
    return float(bisect(f, 0.0, hi, xtol=1e-15))


def monofractal_exponent(spec):
    """H ∈ (0, 1) when |W_i| = b^{−H} almost surely, else None."""
    moduli = np.abs(spec.v).ravel()
    c = float(moduli[0])
    if c <= 0 or not np.allclose(moduli, c, rtol=1e-12, atol=0):
        return None
    h = -math.log(c) / math.log(spec.b)
    return h if 0 < h < 1 else None


def _sigma_value(spec, phi2):
    if abs(phi2) <= ZERO_TOL:
        return math.sqrt(pair_moment(spec))
    abs_sum_sq = pair_moment(spec) + moment_sum(spec, 2)
    return math.sqrt((abs_sum_sq - 1) / (moment_sum(spec, 2) - 1))


def sigma(spec):
    """The asymptotic constant of E|F_n(1)|² in the nonconservative, (C)-failing regime."""
    if spec.conservative:
        raise WrongRegime("σ is undefined for conservative specs (F_n(1) ≡ 1)")
    if check_condition_c(spec) != Condition.FAILS:
        raise WrongRegime("σ is only defined when condition (C) fails")
    phi2 = phi(spec, 2)
    if phi2 > ZERO_TOL:
        raise WrongRegime(f"σ needs φ(2) ≤ 0, got {phi2}")
    return _sigma_value(spec, phi2)


def sigma_n(spec, n):
    """Depth-n normalization: σ·b^{−nφ(2)/2}, or σ·√n when φ(2) = 0."""
    if n < 1:
        raise InvalidArgument(f"n must be at least 1, got {n}")
    s = sigma(spec)
    phi2 = phi(spec, 2)
    if abs(phi2) <= ZERO_TOL:
        return s * math.sqrt(n)
    return s * spec.b ** (-n * phi2 / 2)


# -- Classification -----------------------------------------------------------


def classify(spec):
    """Decide the regime of ``spec`` and collect its scalar parameters."""
    cond = check_condition_c(spec)
    phi2 = phi(spec, 2)
    p0 = compute_p0(spec)
    beta = solve_beta(spec)
    notes = []
    gamma = None
    sig = None
    bound = None
    degeneracy = None
    growth = None

    if cond in (Condition.C1, Condition.C2):
        regime = Regime.CONVERGENT_LP
        bound = holder_bound(spec, P_MAX if cond == Condition.C2 else 2.0)
        if not spec.conservative:
            growth = 0.0
            if beta is not None and beta > 1 and not 0.5 < 1 / beta < 1:
                notes.append(f"1/β = {1 / beta:.6g} lies outside (1/2, 1)")
    elif cond == Condition.C3_CRITICAL:
        gamma = check_critical_structure(spec)
        if gamma is not None:
            regime = Regime.CONSERVATIVE_CRITICAL
        else:
            regime = Regime.UNDETERMINED
            cond = Condition.FAILS
            notes.append(
                "unit-modulus weights without the γ-structure; "
                "convergence of this critical conservative spec is not decided"
            )
    else:
        phi_p0 = phi(spec, p0) if math.isfinite(p0) else phi(spec, P_MAX)
        boundary = (math.isfinite(p0) and abs(phi_p0) <= BOUNDARY_TOL
                    and (spec.conservative or p0 <= 2))
        if p0 <= 1:
            regime = Regime.DEGENERATE
            degeneracy = phi_p0 / p0
        elif boundary:
            regime = Regime.UNDETERMINED
            notes.append(
                f"φ(p₀) = 0 at p₀ = {p0:.9g}; convergence "
                f"at α = φ(p₀)/p₀ is not decided"
            )
        elif spec.conservative or p0 <= 2:
            regime = Regime.DIVERGENT_UNBOUNDED
        else:
            regime = Regime.TIGHT_CLT
        if not spec.conservative:
            sig = _sigma_value(spec, phi2) if phi2 <= ZERO_TOL else None
            growth = -phi_p0 / p0 if p0 <= 2 else -phi2 / 2

    return RegimeReport(
        condition_c=cond,
        regime=regime,
        beta=beta,
        p0=p0,
        phi_at_2=phi2,
        sigma=sig,
        critical_gamma=gamma,
        extinction_prob=extinction_probability(spec),
        notes=notes,
        holder_bound=bound,
        monofractal_H=monofractal_exponent(spec),
        log_growth_rate=growth,
        degeneracy_exponent=degeneracy,
    )


def phi_table(spec, grid=PHI_TABLE_GRID):
    """[(p, φ(p))] on the documented grid."""
    return [[p, phi(spec, p)] for p in grid]
