"""Finite-support weight vectors W = (W_0, …, W_{b-1}).

A spec is one of three models:

    deterministic   one fixed vector of b complex values
    iid             i.i.d. components drawn from a list of (p, value) atoms
    mixture         the whole vector drawn from a list of (p, vector) atoms

Specs are validated once and are immutable afterwards. Every expectation
in the package (φ_W, mixed moments, cross moments) is computed exactly
over the finite support.

JSON format (complex numbers are [re, im]; reals may omit im):

    {"b": 2,
     "description": "optional one-liner",
     "weights": {"kind": "iid",
                 "atoms": [{"p": 0.6, "value": [1, 0]},
                           {"p": 0.4, "value": -0.25}]}}

Sampling is counter-based: the weight vector at node (level, index) is a
pure function of (seed, level, index). Each level has its own Philox key,
derived as SeedSequence([seed, level, stream tag]); node ``index`` reads
the uniforms at raw positions [index·k, (index+1)·k) of that key's
stream, where k is the number of uniforms one node consumes (0, b or 1
for the three models). A uniform is the top 53 bits of a raw 64-bit
output. This schedule is fixed for the 0.x series.
"""

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import (
    BadProbabilities,
    BadSpecFile,
    BranchingTooSmall,
    InvalidArgument,
    MeanNotOne,
    NonFiniteMoment,
    NonFinitePhi,
)

KINDS = ("deterministic", "iid", "mixture")

PROB_TOL = 1e-12
MEAN_TOL = 1e-9
CONSERVATIVE_TOL = 1e-12

_MASK64 = (1 << 64) - 1
_STREAMS = {"cascade": 0, "reference": 1, "gauss": 2}
_REPLICA_TAG = 0x5EED


@dataclass(frozen=True)
class RawSpec:
    """Unvalidated input. atoms: [(p, value)] for iid, [(p, vector)] otherwise."""
    b: int
    kind: str
    atoms: list
    description: str = ""


@dataclass(frozen=True)
class WeightVector:
    """One sampled realization of W."""
    values: tuple

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class WeightSpec:
    b: int
    kind: str
    probs: tuple
    values: tuple  # iid: complex per atom; otherwise a b-tuple per atom
    conservative: bool
    has_zero: bool
    description: str = field(default="", compare=False)

    @cached_property
    def p(self):
        """Atom probabilities as an array."""
        return np.asarray(self.probs, dtype=float)

    @cached_property
    def v(self):
        """Atom values: shape (A,) for iid, (A, b) otherwise."""
        return np.asarray(self.values, dtype=complex)

    @cached_property
    def is_real(self):
        return bool(np.all(self.v.imag == 0.0))

    @cached_property
    def draws_per_node(self):
        return {"deterministic": 0, "iid": self.b, "mixture": 1}[self.kind]

    @cached_property
    def _entries(self):
        # (weight, modulus) over all entries so that E Σ_i f(|W_i|) = Σ weight·f(modulus).
        if self.kind == "iid":
            return self.b * self.p, np.abs(self.v)
        return np.repeat(self.p, self.b), np.abs(self.v).ravel()

    @cached_property
    def _cdf(self):
        cdf = np.cumsum(self.p)
        cdf[-1] = 1.0
        return cdf


# -- Construction and validation ------------------------------------------


def validate(raw):
    """RawSpec → WeightSpec, or raise a SpecError."""
    b = raw.b
    if not isinstance(b, (int, np.integer)) or isinstance(b, bool):
        raise BadSpecFile(f"b must be an integer, got {b!r}")
    b = int(b)
    if b < 2:
        raise BranchingTooSmall(f"b must be at least 2, got {b}")
    if raw.kind not in KINDS:
        raise BadSpecFile(f"unknown weight kind {raw.kind!r}; expected one of {KINDS}")
    if not raw.atoms:
        raise BadProbabilities("at least one atom is required")

    probs = []
    values = []
    for p, value in raw.atoms:
        p = float(p)
        if not (0.0 < p <= 1.0):
            raise BadProbabilities(f"atom probability {p} is not in (0, 1]")
        probs.append(p)
        if raw.kind == "iid":
            values.append(complex(value))
        else:
            vec = tuple(complex(x) for x in value)
            if len(vec) != b:
                raise BadSpecFile(f"vector has {len(vec)} entries, expected b={b}")
            values.append(vec)
    if abs(math.fsum(probs) - 1.0) > PROB_TOL:
        raise BadProbabilities(f"atom probabilities sum to {math.fsum(probs)!r}, not 1")

    v = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(v)):
        raise BadSpecFile("weight values must be finite")
    p_arr = np.asarray(probs)
    if raw.kind == "iid":
        mean = b * np.sum(p_arr * v)
        conservative = len(values) == 1 and abs(b * v[0] - 1.0) <= CONSERVATIVE_TOL
    else:
        mean = np.sum(p_arr * v.sum(axis=1))
        conservative = bool(np.all(np.abs(v.sum(axis=1) - 1.0) <= CONSERVATIVE_TOL))
    if abs(mean - 1.0) > MEAN_TOL:
        raise MeanNotOne(f"E(sum W_i) = {complex(mean)}, expected 1")

    return WeightSpec(
        b=b,
        kind=raw.kind,
        probs=tuple(probs),
        values=tuple(values),
        conservative=bool(conservative),
        has_zero=bool(np.any(v == 0)),
        description=raw.description,
    )


def deterministic(values, description=""):
    """Spec of a fixed weight vector."""
    values = list(values)
    return validate(RawSpec(len(values), "deterministic", [(1.0, values)], description))


def iid(b, atoms, description=""):
    """Spec with i.i.d. components; atoms = [(p, value), ...]."""
    return validate(RawSpec(b, "iid", list(atoms), description))


def mixture(atoms, description=""):
    """Spec drawing the whole vector from atoms = [(p, vector), ...]."""
    atoms = list(atoms)
    b = len(atoms[0][1]) if atoms else 0
    return validate(RawSpec(b, "mixture", atoms, description))


# -- JSON ------------------------------------------------------------------


def _complex(x):
    if isinstance(x, bool):
        raise BadSpecFile(f"not a number: {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) in (1, 2) and all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in x
    ):
        return complex(x[0], x[1] if len(x) == 2 else 0.0)
    raise BadSpecFile(f"expected a number or [re, im], got {x!r}")


def parse_spec(obj):
    """Parsed JSON document → validated WeightSpec."""
    if not isinstance(obj, dict) or "b" not in obj or "weights" not in obj:
        raise BadSpecFile('spec must be an object with "b" and "weights"')
    weights = obj["weights"]
    if not isinstance(weights, dict) or "kind" not in weights:
        raise BadSpecFile('"weights" must be an object with a "kind"')
    kind = weights["kind"]
    try:
        if kind == "deterministic":
            atoms = [(1.0, [_complex(x) for x in weights["values"]])]
        elif kind == "iid":
            atoms = [(a["p"], _complex(a["value"])) for a in weights["atoms"]]
        elif kind == "mixture":
            atoms = [(a["p"], [_complex(x) for x in a["vector"]])
                     for a in weights["atoms"]]
        else:
            raise BadSpecFile(f"unknown weight kind {kind!r}")
    except (KeyError, TypeError) as e:
        raise BadSpecFile(f"malformed weights for kind {kind!r}: {e}") from e
    return validate(RawSpec(obj["b"], kind, atoms, str(obj.get("description", ""))))


def load_spec(path):
    """Read and validate a JSON spec file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise BadSpecFile(f"cannot read spec file {path}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise BadSpecFile(f"{path}: invalid JSON: {e}") from e
    return parse_spec(obj)


def _pair(z):
    return [float(z.real), float(z.imag)]


def spec_to_obj(spec):
    """WeightSpec → JSON-ready dict in the published format."""
    if spec.kind == "deterministic":
        weights = {"kind": "deterministic", "values": [_pair(z) for z in spec.values[0]]}
    elif spec.kind == "iid":
        weights = {"kind": "iid", "atoms": [
            {"p": p, "value": _pair(z)} for p, z in zip(spec.probs, spec.values)
        ]}
    else:
        weights = {"kind": "mixture", "atoms": [
            {"p": p, "vector": [_pair(z) for z in vec]}
            for p, vec in zip(spec.probs, spec.values)
        ]}
    obj = {"b": spec.b, "weights": weights}
    if spec.description:
        obj["description"] = spec.description
    return obj


# -- Exact expectations ----------------------------------------------------


def vector_support(spec):
    """(probabilities, vectors) of the whole vector W; iid expands as a product."""
    if spec.kind != "iid":
        return spec.p.copy(), spec.v.copy()
    combos = list(itertools.product(range(len(spec.probs)), repeat=spec.b))
    idx = np.asarray(combos, dtype=np.intp)
    return spec.p[idx].prod(axis=1), spec.v[idx]


def _log_terms(spec, ps):
    # log(weight · modulus^p) per (p, entry); 0⁰ = 1 and 0^{p<0} = +inf.
    weights, moduli = spec._entries
    ps = np.asarray(ps, dtype=float)
    log_w = np.log(weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mod = np.log(moduli)
        terms = log_w[None, :] + ps[:, None] * log_mod[None, :]
    return np.where(ps[:, None] == 0, log_w[None, :], terms), moduli


def phi_curve(spec, ps):
    """φ_W evaluated at every p in ``ps`` (vectorized)."""
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    terms, _ = _log_terms(spec, ps)
    values = -logsumexp(terms, axis=1) / math.log(spec.b)
    # E Σ|W_i|⁰ = b exactly
    values[ps == 0] = -1.0
    return values


def phi(spec, p):
    """φ_W(p) = −log_b E(Σ_i |W_i|^p), with 0⁰ = 1.

    Returns −inf for p < 0 when a zero weight has positive probability.
    """
    return float(phi_curve(spec, [float(p)])[0])


def moment_sum(spec, p):
    """E(Σ_i |W_i|^p) = b^{−φ_W(p)}, summed directly for p ≥ 0."""
    p = float(p)
    if p < 0:
        return float(spec.b ** -phi(spec, p))
    weights, moduli = spec._entries
    powers = np.ones_like(moduli) if p == 0 else moduli ** p
    return float(np.dot(weights, powers))


def phi_derivative(spec, p):
    """dφ_W/dp = −E(Σ|W_i|^p ln|W_i|) / (ln b · E(Σ|W_i|^p))."""
    p = float(p)
    if p <= 0 and spec.has_zero:
        raise NonFiniteMoment(f"|W|^p log|W| diverges at a zero weight for p = {p}")
    terms, moduli = _log_terms(spec, [p])
    terms = terms[0]
    live = moduli > 0
    log_mod = np.log(moduli[live])
    w = np.exp(terms[live] - logsumexp(terms[live]))
    value = -float(np.dot(w, log_mod)) / math.log(spec.b)
    if not math.isfinite(value):
        raise NonFiniteMoment(f"φ'({p}) is not finite")
    return value


def _powers(x, exponents):
    exponents = np.asarray(exponents)
    with np.errstate(all="ignore"):
        return np.where(exponents == 0, 1.0 + 0j, np.power(x, exponents))


def mixed_moment(spec, exponents, use_modulus=False):
    """E(∏_k W_k^{β_k}) (or |W_k|) exactly; factorizes for iid components."""
    e = np.asarray(exponents, dtype=np.int64)
    if e.shape != (spec.b,):
        raise InvalidArgument(f"expected {spec.b} exponents, got {len(e)}")
    if np.any(e < 0):
        raise InvalidArgument("exponents must be nonnegative")
    v = np.abs(spec.v).astype(complex) if use_modulus else spec.v
    if spec.kind == "iid":
        out = 1.0 + 0j
        for k in e:
            if k:
                out *= complex(np.dot(spec.p, v ** int(k)))
        return out
    return complex(np.dot(spec.p, _powers(v, e[None, :]).prod(axis=1)))


def pair_moment(spec):
    """Σ_{i≠j} E(W_i conj(W_j)) (real)."""
    if spec.kind == "iid":
        mean = complex(np.dot(spec.p, spec.v))
        return float(spec.b * (spec.b - 1) * abs(mean) ** 2)
    sums = spec.v.sum(axis=1)
    cross = np.abs(sums) ** 2 - (np.abs(spec.v) ** 2).sum(axis=1)
    return float(np.dot(spec.p, cross))


def sum_moment(spec, q):
    """E((Σ_i W_i)^q), exact over the vector support."""
    probs, vectors = vector_support(spec)
    return complex(np.dot(probs, vectors.sum(axis=1) ** int(q)))


def beta_transform(spec, beta):
    """Spec of W^(β) = b^{φ_W(β)}(|W_0|^β, …, |W_{b-1}|^β)."""
    beta = float(beta)
    if beta <= 0:
        raise InvalidArgument(f"β must be positive, got {beta}")
    phi_beta = phi(spec, beta)
    if not math.isfinite(phi_beta):
        raise NonFinitePhi(f"φ_W({beta}) is not finite")
    factor = spec.b ** phi_beta
    moduli = np.abs(spec.v) ** beta * factor
    if spec.kind == "iid":
        atoms = [(p, complex(m)) for p, m in zip(spec.probs, moduli)]
    else:
        atoms = [(p, [complex(x) for x in row]) for p, row in zip(spec.probs, moduli)]
    description = f"W^({beta:g}) of {spec.description}" if spec.description else ""
    return validate(RawSpec(spec.b, spec.kind, atoms, description))


# -- Counter-based sampling -----------------------------------------------


def level_key(seed, level, stream="cascade"):
    """Philox key for one level of one stream."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, int(level), _STREAMS[stream]])
    return ss.generate_state(2, dtype=np.uint64)


def replica_seed(seed, index, stream="cascade"):
    """Independent 64-bit seed for ensemble replica ``index``."""
    ss = np.random.SeedSequence(
        [int(seed) & _MASK64, _REPLICA_TAG, _STREAMS[stream], int(index)]
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def uniforms(key, start, count):
    """Uniforms at raw positions [start, start+count) of the keyed stream."""
    block, skip = divmod(int(start), 4)
    gen = np.random.Philox(key=key, counter=block)
    raw = gen.random_raw(skip + int(count))[skip:]
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def sample_level(spec, level, seed, start=0, stop=None):
    """Weight vectors of nodes [start, stop) at ``level``, shape (n, b)."""
    if stop is None:
        stop = spec.b ** level
    n = stop - start
    k = spec.draws_per_node
    if k == 0:
        return np.broadcast_to(spec.v[0], (n, spec.b)).copy()
    u = uniforms(level_key(seed, level), start * k, n * k)
    idx = np.minimum(np.searchsorted(spec._cdf, u, side="right"), len(spec.probs) - 1)
    if spec.kind == "iid":
        return spec.v[idx.reshape(n, spec.b)]
    return spec.v[idx]


def sample(spec, node_key, seed):
    """The weight vector W(w) at node (level, index)."""
    level, index = node_key
    if not (0 <= index < spec.b ** level):
        raise InvalidArgument(f"node index {index} out of range at level {level}")
    row = sample_level(spec, level, seed, index, index + 1)[0]
    return WeightVector(tuple(complex(z) for z in row))
