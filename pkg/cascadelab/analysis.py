"""Oscillation diagnostics: τ estimation, Cauchy profiles, time changes.

Oscillations are diameters of the sampled values of a path within each
closed b-adic cell. Sampled diameters under-estimate the true supremum,
and the shortfall grows as cells hold fewer samples, which tilts every
slope fitted across levels. Windows therefore stop at the deepest level
whose cells still hold MIN_CELL_SAMPLES samples (level − 8 for b = 2).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from . import log as _log
from .cascade import SamplePath, coupled_companion, path
from .errors import (
    AllCellsZero,
    DegenerateCells,
    InvalidArgument,
    NonFinitePhi,
    NotMonotone,
)
from .moments import second_moment_exact
from .regime import solve_beta

# Cells with at most this many samples use all pairwise distances.
_PAIRWISE_MAX = 64

# Cells per block in the pairwise computation.
_PAIRWISE_BLOCK = 4096

MIN_CELL_SAMPLES = 2 ** 8 + 1

# Relative spread below which log-lengths count as a single value.
_FLAT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ParametricCurve:
    """Knots (G(t_k), F(t_k)) of B = F ∘ G⁻¹ over the level-n grid."""
    times: np.ndarray
    values: np.ndarray
    level: int
    b: int
    beta: float

    @property
    def knots(self):
        return list(zip(self.times.tolist(), self.values.tolist()))


@dataclass
class TauEstimate:
    q_values: list
    tau_hat: list
    level_lo: int
    level_hi: int
    partition_sums: list

    @property
    def levels_used(self):
        return range(self.level_lo, self.level_hi + 1)

    def to_dict(self):
        return {
            "q": list(self.q_values),
            "tau_hat": list(self.tau_hat),
            "level_lo": self.level_lo,
            "level_hi": self.level_hi,
            "partition_sums": [list(s) for s in self.partition_sums],
        }


@dataclass
class HolderEstimate:
    exponent: float
    per_level: dict = field(default_factory=dict)
    excluded: int = 0

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "per_level": {str(k): v for k, v in self.per_level.items()},
            "excluded": self.excluded,
        }


@dataclass(frozen=True, eq=False)
class MonotoneInverse:
    """Right-continuous generalized inverse of a nondecreasing grid function."""
    times: np.ndarray
    values: np.ndarray

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        t, v = self.times, self.values
        k = np.searchsorted(v, y, side="right")
        lo = np.clip(k - 1, 0, len(v) - 1)
        hi = np.clip(k, 0, len(v) - 1)
        span = v[hi] - v[lo]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(span > 0, (y - v[lo]) / span, 0.0)
        out = t[lo] + frac * (t[hi] - t[lo])
        out = np.where(k == 0, t[0], out)
        out = np.where(k >= len(v), t[-1], out)
        return out if out.ndim else float(out)


# -- Oscillations ------------------------------------------------------------


def diameter(points):
    """Diameter of a finite set of complex points."""
    z = np.asarray(points, dtype=complex).ravel()
    if z.size < 2:
        return 0.0
    if z.size <= _PAIRWISE_MAX:
        return float(np.abs(z[:, None] - z[None, :]).max())
    xy = np.column_stack([z.real, z.imag])
    try:
        hull = ConvexHull(xy)
    except QhullError:
        # Collinear (or repeated) points: the farthest point from any
        # point is an endpoint of the segment.
        a = z[np.argmax(np.abs(z - z[0]))]
        return float(np.abs(z - a).max())
    return float(pdist(xy[hull.vertices]).max())


def _cells(values, b, level, m):
    s = b ** (level - m)
    inner = values[:-1].reshape(b ** m, s)
    right = values[s::s]
    return np.concatenate([inner, right[:, None]], axis=1)


def _is_real(values):
    return not np.iscomplexobj(values) or not np.any(np.imag(values))


def oscillations(p, m):
    """Per level-m cell, the diameter of the path samples in the closed cell."""
    if not (0 <= m <= p.level):
        raise InvalidArgument(f"level {m} is outside [0, {p.level}]")
    values = np.asarray(p.values)
    if _is_real(values):
        cells = _cells(np.real(values), p.b, p.level, m)
        return cells.max(axis=1) - cells.min(axis=1)

    if p.b ** (p.level - m) + 1 < MIN_CELL_SAMPLES:
        _log.warn(
            f"Warning: oscillations at level {m} of a level-{p.level} complex "
            f"path use {p.b ** (p.level - m) + 1} samples per cell and "
            f"under-estimate the true diameter."
        )
    cells = _cells(values.astype(complex), p.b, p.level, m)
    if cells.shape[1] <= _PAIRWISE_MAX:
        out = np.empty(len(cells))
        for s in range(0, len(cells), _PAIRWISE_BLOCK):
            block = cells[s:s + _PAIRWISE_BLOCK]
            out[s:s + len(block)] = np.abs(
                block[:, :, None] - block[:, None, :]
            ).max(axis=(1, 2))
        return out
    return np.array([diameter(c) for c in cells])


def sample_margin(b):
    """Smallest k with b^k + 1 ≥ MIN_CELL_SAMPLES."""
    k = 0
    while b ** k + 1 < MIN_CELL_SAMPLES:
        k += 1
    return k


def default_window(level, b, span=6):
    """(lo, hi) levels for slope fits on a level-``level`` path.

    hi keeps MIN_CELL_SAMPLES samples per cell where the path is deep
    enough; the window always spans at least 3 levels.
    """
    hi = min(level, max(2, level - sample_margin(b)))
    return max(0, hi - span), hi


def _check_window(p, level_lo, level_hi):
    if level_hi > p.level:
        raise InvalidArgument(f"level_hi {level_hi} exceeds the path level {p.level}")
    if level_lo < 0 or level_hi - level_lo < 2:
        raise InvalidArgument(
            f"level window [{level_lo}, {level_hi}] must span at least 3 levels"
        )


def _tau(p, q_list, level_lo, level_hi, scale):
    q_list = [float(q) for q in q_list]
    levels = list(range(level_lo, level_hi + 1))
    sums = [[] for _ in q_list]
    for m in levels:
        osc = oscillations(p, m) / scale(m)
        live = osc[osc > 0]
        if live.size == 0:
            raise AllCellsZero(f"every level-{m} cell has zero oscillation")
        logs = np.log(live)
        for i, q in enumerate(q_list):
            sums[i].append(float(np.exp(q * logs).sum()))
    ms = np.asarray(levels, dtype=float)
    tau = [
        float(np.polyfit(ms, -np.log(s) / math.log(p.b), 1)[0]) for s in sums
    ]
    return TauEstimate(q_list, tau, level_lo, level_hi, sums)


def tau_estimate(p, q_list, level_lo, level_hi):
    """Least-squares slope of −log_b Σ_{Osc≠0} Osc^q over the level window."""
    _check_window(p, level_lo, level_hi)
    return _tau(p, q_list, level_lo, level_hi, lambda m: 1.0)


def tau_estimate_normalized(p, spec, q_list, level_lo, level_hi):
    """τ estimate with level-m oscillations divided by √v_{n−m}.

    A level-m cell of F_n is Q(w) times an independent copy of F_{n−m}; when
    φ(2) ≤ 0 the size of that copy grows with n − m and v_k = E|F_k(1)|²
    measures it. Needs level_hi < n.
    """
    _check_window(p, level_lo, level_hi)
    if level_hi >= p.level:
        raise InvalidArgument(
            f"level_hi {level_hi} leaves no depth below it on a level-{p.level} path"
        )
    if spec.b != p.b:
        raise InvalidArgument(f"spec has b = {spec.b}, path has b = {p.b}")
    return _tau(
        p, q_list, level_lo, level_hi,
        lambda m: math.sqrt(second_moment_exact(spec, p.level - m)),
    )


def cauchy_profile(real):
    """Entry m: sup-distance between F_{m+1} and F_m on the level-(m+1) grid."""
    if real.depth < 2:
        raise InvalidArgument(f"depth must be at least 2, got {real.depth}")
    b = real.b
    out = np.empty(real.depth)
    coarse = path(real, 0).values
    for m in range(real.depth):
        fine = path(real, m + 1).values
        steps = np.diff(coarse)
        frac = np.arange(b) / b
        interp = (coarse[:-1, None] + frac[None, :] * steps[:, None]).ravel()
        interp = np.append(interp, coarse[-1])
        out[m] = float(np.abs(fine - interp).max())
        coarse = fine
    return out


# -- Time change -----------------------------------------------------------


def invert_monotone(p):
    """G⁻¹ for a real nondecreasing path G."""
    values = np.asarray(p.values)
    if not _is_real(values):
        raise NotMonotone("path has complex values")
    values = np.real(values).astype(float)
    if np.any(np.diff(values) < 0):
        k = int(np.argmax(np.diff(values) < 0))
        raise NotMonotone(f"path decreases between grid points {k} and {k + 1}")
    return MonotoneInverse(times=p.times, values=values)


def compose_inverse(f_path, g_path, y):
    """F ∘ G⁻¹ at the query points ``y``."""
    s = np.atleast_1d(invert_monotone(g_path)(y))
    f = np.asarray(f_path.values, dtype=complex)
    t = f_path.times
    return np.interp(s, t, f.real) + 1j * np.interp(s, t, f.imag)


def time_change(real, beta=None):
    """Graph of B = F_W ∘ F_{W^(β)}⁻¹ as knots over the level-depth grid."""
    if beta is None:
        beta = solve_beta(real.spec)
        if beta is None:
            raise NonFinitePhi("φ_W has no root on [1, 256]; no time change exists")
    companion = coupled_companion(real, beta)
    f = path(real)
    return ParametricCurve(
        times=companion.values,
        values=f.values,
        level=real.depth,
        b=real.b,
        beta=float(beta),
    )


def _spread(x):
    return x.size >= 2 and np.ptp(x) > _FLAT_TOL * max(1.0, float(np.abs(x).max()))


def holder_estimate(curve, levels):
    """Pooled slope of log Osc_B(J_w) against log |J_w| over ``levels``."""
    levels = sorted(set(int(m) for m in levels))
    if len(levels) < 3:
        raise InvalidArgument(f"need at least 3 levels, got {levels}")
    if levels[-1] > curve.level or levels[0] < 0:
        raise InvalidArgument(f"levels must lie in [0, {curve.level}]")
    f = SamplePath(level=curve.level, b=curve.b, values=curve.values)
    xs, ys, per_level = [], [], {}
    excluded = 0
    for m in levels:
        stride = curve.b ** (curve.level - m)
        lengths = np.diff(curve.times[::stride])
        osc = oscillations(f, m)
        keep = (lengths > 0) & (osc > 0)
        excluded += int((~keep).sum())
        x, y = np.log(lengths[keep]), np.log(osc[keep])
        xs.append(x)
        ys.append(y)
        if _spread(x):
            per_level[m] = float(np.polyfit(x, y, 1)[0])
        else:
            per_level[m] = math.nan
    x, y = np.concatenate(xs), np.concatenate(ys)
    if not _spread(x):
        raise DegenerateCells(
            f"{excluded} cells have zero-length time or zero oscillation; "
            f"too few remain for a slope"
        )
    if excluded:
        _log.progress(f"  holder_estimate: excluded {excluded} degenerate cells")
    return HolderEstimate(float(np.polyfit(x, y, 1)[0]), per_level, excluded)
