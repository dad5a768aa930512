"""Seeded cascade realizations and exact sample paths of F_n.

A realization stores every level-ℓ product Q(w) for ℓ ≤ depth, indexed by
the integer encoding of the word w (most significant digit first):

    >>> real = realize(spec, depth=12, seed=7)
    >>> p = path(real, 12)          # F_12 on the grid k·b^-12
    >>> p.values[-1]                # F_12(1)

The weight vector of node (ℓ, index) is a pure function of
(spec, seed, ℓ, index), so extend(realize(s, 8, σ), 12) and
realize(s, 12, σ) agree bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import log as _log
from .errors import DepthTooLarge, InvalidArgument, NonFinitePhi, WordTooDeep
from .pool import ordered_map
from .weights import phi, replica_seed, sample_level

MAX_NODES = 2 ** 26

# Nodes per sampling block within a level.
_CHUNK = 2 ** 18

# Levels at least this wide get timing progress messages.
_PROGRESS_NODES = 2 ** 20


@dataclass(frozen=True, eq=False)
class CascadeRealization:
    spec: object
    seed: int
    depth: int
    q_levels: tuple

    @property
    def b(self):
        return self.spec.b


@dataclass(frozen=True, eq=False)
class SamplePath:
    """F_level at the grid k·b^-level, k = 0..b^level."""
    level: int
    b: int
    values: np.ndarray

    @property
    def times(self):
        return np.arange(self.b ** self.level + 1) / float(self.b ** self.level)


@dataclass(frozen=True)
class LogGrowthEstimate:
    mean: float
    stderr: float
    count: int
    dead: int


def _frozen(a):
    a.flags.writeable = False
    return a


def _check_size(spec, depth, allow_large):
    if depth < 0:
        raise InvalidArgument(f"depth must be nonnegative, got {depth}")
    nodes = spec.b ** depth
    if nodes > MAX_NODES and not allow_large:
        raise DepthTooLarge(
            f"b^depth = {spec.b}^{depth} = {nodes} exceeds {MAX_NODES} nodes; "
            f"pass --allow-large to override"
        )


def _next_level(spec, parent, level, seed, threads):
    """Level level+1 products from the level-`level` products."""
    n = len(parent)
    if n <= _CHUNK:
        w = sample_level(spec, level, seed, 0, n)
        return (parent[:, None] * w).ravel()

    def block(bounds):
        s, e = bounds
        return (parent[s:e, None] * sample_level(spec, level, seed, s, e)).ravel()

    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    return np.concatenate(ordered_map(block, bounds, threads))


def _grow(spec, seed, levels, new_depth, threads):
    levels = list(levels)
    for level in range(len(levels) - 1, new_depth):
        size = len(levels[level]) * spec.b
        with _log.timed(f"level {level + 1}: {size} nodes", size >= _PROGRESS_NODES):
            levels.append(_frozen(_next_level(spec, levels[level], level, seed, threads)))
    return tuple(levels)


def realize(spec, depth, seed, allow_large=False, threads=None):
    """Sample the depth-``depth`` tree of ``spec`` under ``seed``."""
    _check_size(spec, depth, allow_large)
    root = _frozen(np.ones(1, dtype=complex))
    levels = _grow(spec, seed, (root,), depth, threads)
    return CascadeRealization(spec=spec, seed=int(seed), depth=depth, q_levels=levels)


def extend(real, new_depth, allow_large=False, threads=None):
    """The same realization grown to ``new_depth``."""
    if new_depth < real.depth:
        raise InvalidArgument(
            f"new depth {new_depth} is below the current depth {real.depth}"
        )
    if new_depth == real.depth:
        return real
    _check_size(real.spec, new_depth, allow_large)
    levels = _grow(real.spec, real.seed, real.q_levels, new_depth, threads)
    return CascadeRealization(
        spec=real.spec, seed=real.seed, depth=new_depth, q_levels=levels
    )


def _check_level(real, m):
    if not (0 <= m <= real.depth):
        raise WordTooDeep(f"level {m} is outside [0, {real.depth}]")


# -- Paths -------------------------------------------------------------------


def _tree_prefix(increments, b, m):
    """Grid values of the cumulative sum of b^m increments.

    Subtree masses are formed bottom-up by b-way sums; values are then
    assembled top-down, so each grid value is a sum of at most m·(b−1)
    subtree masses instead of a running total of b^m terms.
    """
    masses = [np.asarray(increments)]
    for _ in range(m):
        masses.append(masses[-1].reshape(-1, b).sum(axis=1))
    masses.reverse()
    left = np.zeros(1, dtype=masses[0].dtype)
    for level in range(1, m + 1):
        children = masses[level].reshape(-1, b)
        before = np.cumsum(children, axis=1) - children
        left = (left[:, None] + before).ravel()
    return np.concatenate([left, masses[0]])


def path(real, m=None):
    """F_m on the level-m grid: prefix sums of the level-m products."""
    m = real.depth if m is None else m
    _check_level(real, m)
    values = _tree_prefix(real.q_levels[m], real.b, m)
    values[0] = 0
    return SamplePath(level=m, b=real.b, values=_frozen(values))


def _word_index(word, b):
    index = 0
    for d in word:
        if not (0 <= d < b):
            raise InvalidArgument(f"digit {d} is not in [0, {b})")
        index = index * b + int(d)
    return index


def increment(real, word, n):
    """ΔF_n(I_w) = Q(w) · F^{[w]}_{n−|w|}(1), summed from the stored subtree."""
    word = tuple(word)
    if len(word) > n:
        raise WordTooDeep(f"|w| = {len(word)} exceeds n = {n}")
    if n > real.depth:
        raise WordTooDeep(f"n = {n} exceeds the realization depth {real.depth}")
    width = real.b ** (n - len(word))
    start = _word_index(word, real.b) * width
    return complex(real.q_levels[n][start:start + width].sum())


def coupled_companion(real, beta, level=None):
    """F_{W^(β)} at ``level`` from the same tree: increments b^{nφ(β)}|Q(w)|^β."""
    n = real.depth if level is None else level
    _check_level(real, n)
    phi_beta = phi(real.spec, beta)
    if not math.isfinite(phi_beta):
        raise NonFinitePhi(f"φ_W({beta}) is not finite")
    inc = np.abs(real.q_levels[n]) ** beta * real.b ** (n * phi_beta)
    values = _tree_prefix(inc, real.b, n)
    values[0] = 0.0
    return SamplePath(level=n, b=real.b, values=_frozen(values))


def max_level_product(real, m):
    """m_n = max over |w| = m of |Q(w)|."""
    _check_level(real, m)
    return float(np.abs(real.q_levels[m]).max())


def sup_norm(real, m):
    """max_k |F_m(k·b^-m)|."""
    return float(np.abs(path(real, m).values).max())


def log_growth_estimate(spec, n, count, seed, threads=None):
    """Replica mean of log_b|F_n(1)|/n; replicas with F_n(1) = 0 are counted as dead."""
    if n < 1:
        raise InvalidArgument(f"n must be at least 1, got {n}")
    if count < 2:
        raise InvalidArgument(f"count must be at least 2, got {count}")
    _check_size(spec, n, False)

    def one(index):
        real = realize(spec, n, replica_seed(seed, index), threads=1)
        return abs(complex(real.q_levels[n].sum()))

    totals = np.asarray(ordered_map(one, range(count), threads, label="growth"))
    alive = totals > 0
    rates = np.log(totals[alive]) / (n * math.log(spec.b))
    dead = int(count - alive.sum())
    if rates.size < 2:
        return LogGrowthEstimate(mean=-math.inf, stderr=math.nan, count=count, dead=dead)
    return LogGrowthEstimate(
        mean=float(rates.mean()),
        stderr=float(rates.std(ddof=1) / math.sqrt(rates.size)),
        count=count,
        dead=dead,
    )
