"""CLI front end for cascadelab.

One command, one subcommand per task:

    cascadelab classify --spec specs/clt.json
    cascadelab simulate --spec specs/levy-c.json --depth 12 --seed 7 --out path.csv
    cascadelab ensemble --spec specs/sign.json --kind zn --depth 12 --count 10000
    cascadelab moments --spec specs/clt.json --order 4
    cascadelab tau --spec specs/levy-c.json --depth 16 --q 1,2,4
    cascadelab timechange --spec specs/b3.json --depth 10 --report holder.json
    cascadelab clt --spec specs/sign.json --depth 12 --count 10000 --dump z.csv
    cascadelab specs

--spec takes a path or the name of a bundled spec (``clt`` for
specs/clt.json). JSON reports and CSV tables go to stdout or --out.
Errors go to stderr as one JSON object; the exit status is 2 for invalid
input, 3 for regime or numerical errors and 4 for resource guards.
"""

import argparse
import sys
from pathlib import Path

from . import analysis as _analysis
from . import cascade as _cascade
from . import clt as _clt
from . import fmt as _fmt
from . import log as _log
from . import moments as _moments
from . import regime as _regime
from .config import apply_config, load_config
from .errors import BadSpecFile, CascadeError, InvalidArgument
from .weights import load_spec

SPEC_DIR = Path(__file__).parent.parent / "specs"

# Applied after config, for anything still unset.
_DEFAULTS = {
    "seed": 0,
    "depth": 12,
    "count": 10000,
    "tail": 10,
    "q": "1,2,4",
    "order": 4,
}


# -- Error handling ---------------------------------------------------------


def _fail(err):
    """Report a CascadeError on stderr as JSON and exit with its code."""
    _log.failure(err, err.exit_code)
    sys.exit(err.exit_code)


def _resolve_spec(name):
    """Path to a spec file: as given, or a bundled spec by name."""
    p = Path(name)
    if p.is_file():
        return p
    bundled = SPEC_DIR / f"{name}.json"
    if bundled.is_file():
        return bundled
    raise BadSpecFile(f"Spec file not found: {name}")


def _emit(args, text):
    """Write output text to --out, or stdout."""
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        _log.progress(f"  → {args.out}")
    else:
        sys.stdout.write(text)


def _q_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as e:
        raise InvalidArgument(f"--q must be a comma-separated list of numbers: {text}") from e


# -- Shared argument helpers ------------------------------------------------


def _add_verbose_flag(p):
    """Add --verbose / -v flag (repeatable) to control stderr output."""
    p.add_argument("-v", "--verbose", action="count", default=None,
                   help="increase output verbosity (repeat for more: -v warnings, -vv progress)")


def _init_logging(args):
    """Configure logging from the parsed --verbose flag."""
    level = getattr(args, "verbose", None)
    if level is None:
        _log.configure()  # use CASCADELAB_VERBOSE env
    else:
        _log.configure(verbose=min(level, 2))


def _add_common(p, spec=True):
    if spec:
        p.add_argument("--spec", required=True,
                       help="weight spec JSON file, or the name of a bundled spec")
    p.add_argument("--seed", type=int, default=None,
                   help="64-bit seed (default: 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: CASCADELAB_THREADS or all cores)")
    p.add_argument("--force", action="store_true",
                   help="run outside the regime an operation is meant for")
    p.add_argument("--allow-large", action="store_true",
                   help="allow trees with more than 2^26 nodes per level")
    p.add_argument("--out", default=None,
                   help="output file (default: stdout)")
    _add_verbose_flag(p)


def _add_depth(p):
    p.add_argument("--depth", type=int, default=None,
                   help="cascade depth n (default: 12)")


def _build_parser():
    p = argparse.ArgumentParser(
        prog="cascadelab",
        description="Simulate, classify and check complex b-adic multiplicative cascades.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", help="regime report of a spec")
    _add_common(s)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("simulate", help="sample path F_n as CSV t,re,im")
    _add_common(s)
    _add_depth(s)
    s.add_argument("--level", type=int, default=None,
                   help="grid level m ≤ depth (default: depth)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("ensemble", help="terminal values of an ensemble as CSV")
    _add_common(s)
    _add_depth(s)
    s.add_argument("--kind", choices=("zn", "rn", "reference"), default="zn")
    s.add_argument("--count", type=int, default=None,
                   help="number of replicas (default: 10000)")
    s.add_argument("--tail", type=int, default=None,
                   help="extra depth standing in for the limit in rn (default: 10)")
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("moments", help="exact moment table as JSON")
    _add_common(s)
    _add_depth(s)
    s.add_argument("--order", type=int, default=None,
                   help="highest moment order (default: 4)")
    s.add_argument("--brute", action="store_true",
                   help="add brute-force enumeration at depth min(n, 3)")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("tau", help="τ estimate from oscillations as JSON")
    _add_common(s)
    _add_depth(s)
    s.add_argument("--q", default=None,
                   help="comma-separated q values (default: 1,2,4)")
    s.add_argument("--level-lo", type=int, default=None)
    s.add_argument("--level-hi", type=int, default=None)
    s.add_argument("--normalized", action="store_true",
                   help="divide level-m oscillations by the L² size of F_{n−m}(1)")
    s.set_defaults(func=cmd_tau)

    s = sub.add_parser("timechange", help="knots of F ∘ G⁻¹ as CSV g,re,im")
    _add_common(s)
    _add_depth(s)
    s.add_argument("--beta", type=float, default=None,
                   help="time-change exponent (default: smallest root of φ)")
    s.add_argument("--report", default=None,
                   help="also write β and the Hölder estimate as JSON here")
    s.set_defaults(func=cmd_timechange)

    s = sub.add_parser("clt", help="ensemble vs reference comparison as JSON")
    _add_common(s)
    _add_depth(s)
    s.add_argument("--kind", choices=("zn", "rn"), default="zn")
    s.add_argument("--count", type=int, default=None,
                   help="number of replicas (default: 10000)")
    s.add_argument("--tail", type=int, default=None,
                   help="extra depth standing in for the limit in rn (default: 10)")
    s.add_argument("--dump", default=None,
                   help="write the raw sample values as one-column CSV here")
    s.set_defaults(func=cmd_clt)

    s = sub.add_parser("specs", help="list bundled weight specs")
    _add_common(s, spec=False)
    s.add_argument("--dir", default=None,
                   help="spec directory (default: built-in specs/)")
    s.set_defaults(func=cmd_specs)
    return p


def _apply_defaults(args):
    for key, value in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if getattr(args, "depth", None) is not None and args.depth < 1:
        raise InvalidArgument(f"--depth must be at least 1, got {args.depth}")


def _spec(args):
    return load_spec(_resolve_spec(args.spec))


def _realize(args, spec):
    return _cascade.realize(spec, args.depth, args.seed,
                            allow_large=args.allow_large, threads=args.threads)


# -- Subcommands -------------------------------------------------------------


def cmd_classify(args):
    spec = _spec(args)
    report = _regime.classify(spec)
    for note in report.notes:
        _log.progress(f"  note: {note}")
    doc = report.to_dict()
    doc["phi_table"] = _regime.phi_table(spec)
    _emit(args, _fmt.to_json(doc))


def cmd_simulate(args):
    spec = _spec(args)
    real = _realize(args, spec)
    level = args.depth if args.level is None else args.level
    _emit(args, _fmt.path_csv(_cascade.path(real, level)))


def _ensemble(args, spec, kind):
    if kind == "zn":
        return _clt.normalized_ensemble(spec, args.depth, args.count, args.seed,
                                        threads=args.threads, force=args.force)
    if kind == "reference":
        return _clt.reference_sample(spec, args.depth, args.count, args.seed,
                                     threads=args.threads, force=args.force)
    return _clt.residual_ensemble(spec, args.depth, args.tail, args.count, args.seed,
                                  threads=args.threads, force=args.force)


def cmd_ensemble(args):
    spec = _spec(args)
    sample = _ensemble(args, spec, args.kind)
    _emit(args, _fmt.column_csv("value", sample.values))


def cmd_moments(args):
    spec = _spec(args)
    table = _moments.moment_table(spec, args.order, args.depth,
                                  brute=args.brute, threads=args.threads)
    _emit(args, _fmt.to_json(table.to_dict()))


def _tau_window(args, b):
    lo, hi = _analysis.default_window(args.depth, b, span=8)
    if args.level_hi is not None:
        hi = args.level_hi
        lo = max(0, hi - 8)
    if args.level_lo is not None:
        lo = args.level_lo
    return lo, hi


def cmd_tau(args):
    spec = _spec(args)
    p = _cascade.path(_realize(args, spec))
    lo, hi = _tau_window(args, spec.b)
    if args.normalized:
        est = _analysis.tau_estimate_normalized(p, spec, _q_list(args.q), lo, hi)
    else:
        est = _analysis.tau_estimate(p, _q_list(args.q), lo, hi)
    _emit(args, _fmt.to_json(est.to_dict()))


def cmd_timechange(args):
    spec = _spec(args)
    real = _realize(args, spec)
    curve = _analysis.time_change(real, args.beta)
    _emit(args, _fmt.curve_csv(curve))
    if args.report:
        lo, hi = _analysis.default_window(args.depth, spec.b)
        est = _analysis.holder_estimate(curve, range(lo, hi + 1))
        doc = {"beta": curve.beta, "inverse_beta": 1 / curve.beta}
        doc.update(est.to_dict())
        Path(args.report).write_text(_fmt.to_json(doc), encoding="utf-8")


def cmd_clt(args):
    spec = _spec(args)
    if args.kind == "zn":
        sample = _ensemble(args, spec, "zn")
        reference = _ensemble(args, spec, "reference")
        report = _clt.compare(sample, reference)
    else:
        sample = _ensemble(args, spec, "rn")
        report = _clt.compare(sample)
    if args.dump:
        Path(args.dump).write_text(_fmt.column_csv("value", sample.values),
                                   encoding="utf-8")
    _emit(args, _fmt.to_json(report.to_dict()))


def cmd_specs(args):
    spec_dir = Path(args.dir) if args.dir else SPEC_DIR
    if not spec_dir.is_dir():
        raise BadSpecFile(f"Spec directory not found: {spec_dir}")
    lines = []
    for path in sorted(spec_dir.glob("*.json")):
        try:
            desc = load_spec(path).description
        except CascadeError as e:
            desc = f"(invalid: {e})"
        lines.append(f"  {path.stem:20s} {desc[:72]}")
    _emit(args, "\n".join(lines) + "\n" if lines else "")


# -- cascadelab (main) -----------------------------------------------------


def main(argv=None):
    p = _build_parser()
    args = p.parse_args(argv)
    _init_logging(args)
    apply_config(args, load_config())
    try:
        _apply_defaults(args)
        args.func(args)
    except CascadeError as e:
        _fail(e)


if __name__ == "__main__":
    main()
