"""Exact moments of F_n(1), of the normalized Z_n(1) and of their limits.

Every recursion expands (Σ_i X_i Y_i)^q with independent subtree factors,

    E(Σ_i X_i Y_i)^q = Σ_{|β| = q} γ_β E(∏ X_i^{β_i}) ∏ E(Y^{β_i}),

γ_β = q!/∏β_i!, and differs only in how the concentrated indices
(β = q·e_i) and the normalization are handled. The brute-force oracle
enumerates the whole depth-n tree instead.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import log as _log
from .errors import (
    ComplexSpec,
    DenominatorNotPositive,
    InvalidArgument,
    NonFinitePhi,
    RegimeError,
    TooManyCombinations,
    WrongRegime,
)
from .pool import ordered_map
from .regime import ZERO_TOL, Condition, check_condition_c, sigma, sigma_n
from .weights import mixed_moment, pair_moment, phi, vector_support

MAX_ORDER = 20
MAX_COMBINATIONS = 10 ** 7

_BLOCK = 2 ** 15

# Tags of the published MomentTable schema; eq44 is the finite-n recursion
# for Z_n, eq45 the limit even moments of Z.
METHODS = ("v_recursion", "eq44", "eq45", "sesi", "brute_force")


@dataclass
class MomentEntry:
    q: int
    n: object  # int depth or "limit"
    value: float
    method: str


@dataclass
class MomentTable:
    spec: str
    entries: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, q, n, value, method):
        if not math.isfinite(value):
            self.notes.append(f"{method} q={q} n={n}: non-finite value dropped")
            return
        self.entries.append(MomentEntry(q, n, float(value), method))

    def lookup(self, q, n, method):
        for e in self.entries:
            if e.q == q and e.n == n and e.method == method:
                return e.value
        return None

    def to_dict(self):
        return {
            "spec": self.spec,
            "entries": [
                {"q": e.q, "n": e.n, "value": e.value, "method": e.method}
                for e in self.entries
            ],
            "notes": list(self.notes),
        }


# -- Multi-indices -----------------------------------------------------------


@lru_cache(maxsize=None)
def _compositions(q, b):
    if b == 1:
        return ((q,),)
    return tuple(
        (k,) + rest for k in range(q + 1) for rest in _compositions(q - k, b - 1)
    )


def multi_indices(q, b):
    """S_q: all β ∈ ℕ^b with Σβ = q and every β_k < q."""
    return [beta for beta in _compositions(q, b) if max(beta) < q]


def multinomial(beta):
    q = sum(beta)
    if q > MAX_ORDER:
        raise InvalidArgument(f"order {q} exceeds the supported maximum {MAX_ORDER}")
    out = math.factorial(q)
    for k in beta:
        out //= math.factorial(k)
    return out


def _check_order(q):
    if q < 0 or q > MAX_ORDER:
        raise InvalidArgument(f"order must be in [0, {MAX_ORDER}], got {q}")


def _power_sum(spec, q):
    """Σ_i E(W_i^q)."""
    if spec.kind == "iid":
        return complex(spec.b * np.dot(spec.p, spec.v ** q))
    return complex(np.dot(spec.p, (spec.v ** q).sum(axis=1)))


def _require_real(spec):
    if not spec.is_real:
        raise ComplexSpec("this moment recursion needs a real-valued spec")


def _mixed_table(spec, q, scale=1.0, concentrated=True):
    """[(γ_β, E∏(scale·W)^β, β)] for |β| = q."""
    out = []
    for beta in _compositions(q, spec.b):
        if not concentrated and max(beta) == q:
            continue
        out.append((multinomial(beta), mixed_moment(spec, beta) * scale ** q, beta))
    return out


def _expand(table, lower):
    return sum(g * m * math.prod(lower[k] for k in beta) for g, m, beta in table)


# -- Second moment -----------------------------------------------------------


def second_moment_exact(spec, n):
    """v_n = E|F_n(1)|² in closed form."""
    if n < 0:
        raise InvalidArgument(f"n must be nonnegative, got {n}")
    phi2 = phi(spec, 2)
    if not math.isfinite(phi2):
        raise NonFinitePhi("φ_W(2) is not finite")
    c = pair_moment(spec)
    if abs(phi2) <= ZERO_TOL:
        return 1.0 + n * c
    a = spec.b ** -phi2
    limit = c / (1 - a)
    return limit + (1 - limit) * a ** n


# -- Normalized moments ----------------------------------------------------


def _normalization(spec):
    """(b^{φ(2)/2}, critical?) for the normalized recursion."""
    phi2 = phi(spec, 2)
    critical = abs(phi2) <= ZERO_TOL
    return (1.0 if critical else spec.b ** (phi2 / 2)), critical


def finite_n_moment(spec, q, n):
    """E(Z_n(1)^q) for Z_n = F_n/σ_n, by the exact depth recursion."""
    _require_real(spec)
    _check_order(q)
    if n < 1:
        raise InvalidArgument(f"n must be at least 1, got {n}")
    sigma(spec)
    scale, critical = _normalization(spec)
    s1 = sigma_n(spec, 1)

    probs, vectors = vector_support(spec)
    totals = vectors.sum(axis=1).real
    moments = [float(np.dot(probs, totals ** k)) / s1 ** k for k in range(q + 1)]

    tables = [_mixed_table(spec, k, scale) for k in range(q + 1)]
    for step in range(1, n):
        r = math.sqrt(step / (step + 1)) if critical else 1.0
        moments = [
            r ** k * _expand(tables[k], moments).real for k in range(q + 1)
        ]
    return moments[q]


def limit_moment_even(spec, order):
    """Moments of the limit law of Z_n(1); odd orders vanish."""
    _require_real(spec)
    _check_order(order)
    sigma(spec)
    if order % 2:
        return 0.0
    scale, _ = _normalization(spec)
    moments = {0: 1.0, 2: 1.0}
    for k in range(4, order + 1, 2):
        denom = 1 - _power_sum(spec, k).real * scale ** k
        if denom <= ZERO_TOL:
            raise DenominatorNotPositive(
                f"1 − b^(−φ_W̃({k})) = {denom:.6g} is not positive"
            )
        total = 0.0
        for beta in multi_indices(k, spec.b):
            if any(x % 2 for x in beta):
                continue
            m = mixed_moment(spec, beta).real * scale ** k
            total += multinomial(beta) * m * math.prod(moments[x] for x in beta)
        moments[k] = total / denom
    return moments[order]


def limit_moment_convergent(spec, q):
    """m_q = E(F_W(1)^q) from the fixed-point equation F(1) = Σ W_i F^{(i)}(1)."""
    _require_real(spec)
    _check_order(q)
    if check_condition_c(spec) == Condition.FAILS:
        raise WrongRegime("F_n(1) has no nondegenerate limit: condition (C) fails")
    moments = [1.0, 1.0]
    for k in range(2, q + 1):
        denom = 1 - _power_sum(spec, k).real
        if abs(denom) < ZERO_TOL or (k % 2 == 0 and denom <= 0):
            raise DenominatorNotPositive(
                f"1 − E(Σ W_i^{k}) = {denom:.6g} is not usable"
            )
        table = [
            (multinomial(beta), mixed_moment(spec, beta).real, beta)
            for beta in multi_indices(k, spec.b)
        ]
        moments.append(_expand(table, moments) / denom)
    return moments[q]


def raw_moment(spec, q, n):
    """E(F_n(1)^q) (complex) iterated from F_0(1) = 1."""
    _check_order(q)
    if n < 0:
        raise InvalidArgument(f"n must be nonnegative, got {n}")
    moments = [1.0 + 0j] * (q + 1)
    tables = [_mixed_table(spec, k) for k in range(q + 1)]
    for _ in range(n):
        moments = [_expand(tables[k], moments) for k in range(q + 1)]
    return complex(moments[q])


# -- Brute force -----------------------------------------------------------


def brute_force_moment(spec, q, n, normalized=False, absolute=False, threads=None):
    """E(F_n(1)^q) (or Z_n, or |F_n|) by enumerating every weight assignment."""
    _check_order(q)
    if n < 1:
        raise InvalidArgument(f"n must be at least 1, got {n}")
    probs, vectors = vector_support(spec)
    size = len(probs)
    nodes = (spec.b ** n - 1) // (spec.b - 1)
    total = size ** nodes
    if total > MAX_COMBINATIONS:
        raise TooManyCombinations(
            f"{size}^{nodes} = {total} weight assignments exceed {MAX_COMBINATIONS}"
        )
    norm = sigma_n(spec, n) if normalized else 1.0
    places = size ** np.arange(nodes - 1, -1, -1, dtype=np.int64)

    def block(bounds):
        s, e = bounds
        codes = np.arange(s, e, dtype=np.int64)
        digits = (codes[:, None] // places[None, :]) % size
        weight = probs[digits].prod(axis=1)
        q_level = np.ones((e - s, 1), dtype=complex)
        offset = 0
        for level in range(n):
            width = spec.b ** level
            w = vectors[digits[:, offset:offset + width]]
            q_level = (q_level[:, :, None] * w).reshape(e - s, -1)
            offset += width
        f = q_level.sum(axis=1) / norm
        if absolute:
            f = np.abs(f)
        return complex(np.dot(weight, f ** q))

    bounds = [(s, min(s + _BLOCK, total)) for s in range(0, total, _BLOCK)]
    parts = ordered_map(block, bounds, threads)
    return complex(sum(parts))


# -- Table -------------------------------------------------------------------


def moment_table(spec, order, depth, brute=False, threads=None):
    """All applicable exact moments of ``spec`` up to ``order`` at ``depth``."""
    _check_order(order)
    table = MomentTable(spec=spec.description)

    try:
        for n in range(1, depth + 1):
            table.add(2, n, second_moment_exact(spec, n), "v_recursion")
    except NonFinitePhi as e:
        table.notes.append(str(e))

    if spec.is_real:
        for q in range(1, order + 1):
            table.add(q, depth, raw_moment(spec, q, depth).real, "sesi")
        _add_limits(table, spec, order)
        _add_normalized(table, spec, order, depth)

    if brute:
        n = min(depth, 3)
        try:
            for q in range(1, order + 1):
                value = brute_force_moment(spec, q, n, absolute=not spec.is_real,
                                           threads=threads)
                table.add(q, n, value.real, "brute_force")
        except TooManyCombinations as e:
            table.notes.append(str(e))
    return table


def _add_limits(table, spec, order):
    try:
        for q in range(2, order + 1):
            table.add(q, "limit", limit_moment_convergent(spec, q), "sesi")
    except RegimeError as e:
        _log.progress(f"  no limit moments of F_W(1): {e}")


def _add_normalized(table, spec, order, depth):
    try:
        sigma(spec)
    except RegimeError as e:
        _log.progress(f"  no normalized moments: {e}")
        return
    for q in range(1, order + 1):
        table.add(q, depth, finite_n_moment(spec, q, depth), "eq44")
    try:
        for q in range(2, order + 1, 2):
            table.add(q, "limit", limit_moment_even(spec, q), "eq45")
    except DenominatorNotPositive as e:
        table.notes.append(str(e))
