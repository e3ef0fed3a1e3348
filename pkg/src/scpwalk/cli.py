"""scpwalk command line: JSON in, JSON out.

Exit codes: 0 success, 1 a mathematical check failed (report still printed),
2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from ._numeric import as_rational, number_to_json
from .chain import build_bases_exchange, build_mcmc, generator_from_dict, validate
from .concentration import herbst_check, pemantle_peres_check
from .decompose import TARGETS, certify_main, synthesize_flip_swap
from .dynamics import mixing_bound_detail, mixing_report
from .errors import InfeasibleCouplingError, ScpWalkError
from .functional import poincare_exact, sobolev_estimate, two_state_constants
from .lattice_measure import condition, split
from .negdep import check_scp

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input helpers

def _measure(args):
    if getattr(args, "measure", None) is None:
        raise UsageError("--measure is required")
    return io.measure_from_doc(io.load_json(args.measure))


def _walk(args, m):
    w = getattr(args, "walk", None) or "mcmc"
    if w == "mcmc":
        return build_mcmc(m)
    if w == "bases-exchange":
        return build_bases_exchange(m)
    if w == "synthesize":
        return synthesize_flip_swap(m).averaged
    return generator_from_dict(io.load_json(w), m)


def _observable(args, m):
    if args.f is not None:
        f = np.asarray(io.load_json(args.f), dtype=float)
        if f.shape != (m.size,):
            raise UsageError(f"--f needs {m.size} values (one per support state), got {f.size}")
        return f
    if args.f_coords is not None:
        coords = [int(c) for c in args.f_coords.split(",") if c.strip()]
        if any(not 1 <= c <= m.n for c in coords):
            raise UsageError(f"--f-coords must lie in 1..{m.n}")
        return np.array([sum((s >> (m.n - c)) & 1 for c in coords) for s in m.support], dtype=float)
    raise UsageError("give the observable with --f (JSON list) or --f-coords (e.g. 1,2)")


def _assignment(text):
    doc = io.load_json(text) if text.strip().startswith("{") else \
        dict(part.split("=") for part in text.split(",") if part.strip())
    try:
        return {int(k): int(v) for k, v in doc.items()}
    except (TypeError, ValueError):
        raise UsageError(f"bad assignment {text!r}; use '3=0,1=1' or a JSON object") from None


# ---------------------------------------------------------------------------
# commands; each returns (payload, passed)

def cmd_measure_build(args):
    if args.spec is None and args.measure is None:
        raise UsageError("give --spec JSON or --measure FILE")
    m = io.measure_from_doc(io.load_json(args.spec if args.spec is not None else args.measure))
    return io.measure_to_doc(m), True


def cmd_measure_condition(args):
    m = _measure(args)
    c = condition(m, _assignment(args.assign))
    doc = io.measure_to_doc(c.measure)
    doc["coordinates"] = {str(new): old for new, old in enumerate(c.coords, 1)}
    doc["assignment"] = {str(k): v for k, v in sorted(c.assignment.items())}
    return doc, True


def cmd_measure_split(args):
    m = _measure(args)
    s = split(m, args.coord)
    return {"coordinate": args.coord,
            "projection": [number_to_json(x) for x in s.projection],
            "block0": io.measure_to_doc(s.block0), "block1": io.measure_to_doc(s.block1)}, True


def cmd_scp_check(args):
    m = _measure(args)
    rep = check_scp(m, mode=args.mode, seed=args.seed if args.mode == "sampled" else None,
                    count=args.count)
    return rep.to_dict(), rep.holds


def _walk_doc(Q):
    return {"generator": Q.to_dict(), "stats": validate(Q).to_dict()}


def cmd_walk(args):
    m = _measure(args)
    if args.kind == "synthesize":
        s = synthesize_flip_swap(m)
        return s.to_dict(), s.passed
    Q = build_mcmc(m) if args.kind == "mcmc" else build_bases_exchange(m)
    return _walk_doc(Q), True


def cmd_constants_exact(args):
    m = _measure(args)
    return poincare_exact(_walk(args, m)).to_dict(), True


def cmd_constants_estimate(args):
    m = _measure(args)
    est = sobolev_estimate(_walk(args, m), args.kind, restarts=args.restarts,
                           max_iter=args.max_iter, seed=args.seed)
    return est.to_dict(), True


def cmd_constants_two_state(args):
    return two_state_constants(as_rational(args.a), as_rational(args.b)).to_dict(), True


def cmd_constants_certify(args):
    m = _measure(args)
    Q = _walk(args, m)
    try:
        cert = certify_main(m, Q, args.target, verify_scp=not args.trust_scp, paranoid=args.paranoid)
    except InfeasibleCouplingError as exc:
        return {"target": args.target, "passed": False, "error": str(exc)}, False
    return cert.to_dict(), cert.passed


def cmd_mixing_time(args):
    m = _measure(args)
    Q = _walk(args, m)
    rep = mixing_report(Q, args.start, args.epsilon)
    return rep.to_dict(), rep.passed


def cmd_mixing_bound(args):
    value, floored = mixing_bound_detail(args.kind, as_rational(args.constant),
                                         as_rational(args.pi_x), args.epsilon)
    return {"kind": args.kind, "constant": args.constant, "pi_x": args.pi_x,
            "epsilon": args.epsilon, "bound": value, "loglog_floored": floored}, True


def _grid(args):
    return None if args.grid is None else np.asarray(io.load_json(args.grid), dtype=float)


def cmd_conc_herbst(args):
    m = _measure(args)
    Q = _walk(args, m)
    f = _observable(args, m)
    if args.alpha is not None:
        alpha, source = as_rational(args.alpha), "user"
    else:
        cert = certify_main(m, Q, "alpha")
        alpha, source = cert.best, "certificate"
    rep = herbst_check(m, Q, f, alpha, _grid(args))
    doc = rep.to_dict()
    doc["alpha_source"] = source
    return doc, rep.all_pass


def cmd_conc_pp(args):
    m = _measure(args)
    rep = pemantle_peres_check(m, _observable(args, m), _grid(args), metric=args.metric)
    return rep.to_dict(), rep.all_pass


def cmd_suite_run(args):
    from .suite import Suite
    numbers = [int(x) for x in args.criteria.split(",")] if args.criteria else None
    results = Suite(seed=args.seed).run(numbers)
    for r in results:
        print(r.line(), file=sys.stderr)
    ok = all(r.passed for r in results)
    return {"passed": ok, "criteria": [r.to_dict() for r in results]}, ok


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--measure", help="measure JSON file (or inline JSON)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--pretty", action="store_true", help="human-readable output")

    walk = _Parser(add_help=False)
    walk.add_argument("--walk", default="mcmc",
                      help="mcmc | bases-exchange | synthesize | generator JSON file")

    p = _Parser(prog="scpwalk", description=__doc__.splitlines()[0])
    top = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = top.add_parser("measure").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    b = g.add_parser("build", parents=[common])
    b.add_argument("--spec", help="measure spec JSON including n")
    b.set_defaults(fn=cmd_measure_build)
    c = g.add_parser("condition", parents=[common])
    c.add_argument("--assign", required=True, help="e.g. '3=0,1=1' or '{\"3\": 0}'")
    c.set_defaults(fn=cmd_measure_condition)
    s = g.add_parser("split", parents=[common])
    s.add_argument("--coord", type=int, required=True)
    s.set_defaults(fn=cmd_measure_split)

    g = top.add_parser("scp").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    c = g.add_parser("check", parents=[common])
    c.add_argument("--mode", choices=["full", "sampled"], default="full")
    c.add_argument("--count", type=int, default=10000)
    c.set_defaults(fn=cmd_scp_check)

    g = top.add_parser("walk").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for kind in ("mcmc", "bases-exchange", "synthesize"):
        g.add_parser(kind, parents=[common]).set_defaults(fn=cmd_walk, kind=kind)

    g = top.add_parser("constants").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    g.add_parser("exact", parents=[common, walk]).set_defaults(fn=cmd_constants_exact)
    e = g.add_parser("estimate", parents=[common, walk])
    e.add_argument("--kind", choices=["mlsi", "lsi"], default="mlsi")
    e.add_argument("--restarts", type=int, default=32)
    e.add_argument("--max-iter", type=int, default=5000)
    e.set_defaults(fn=cmd_constants_estimate)
    t = g.add_parser("two-state", parents=[common])
    t.add_argument("--a", required=True)
    t.add_argument("--b", required=True)
    t.set_defaults(fn=cmd_constants_two_state)
    c = g.add_parser("certify", parents=[common, walk])
    c.add_argument("--target", choices=TARGETS, default="alpha")
    c.add_argument("--trust-scp", action="store_true", help="skip the SCP check")
    c.add_argument("--paranoid", action="store_true", help="re-check the SCP at every node")
    c.set_defaults(fn=cmd_constants_certify)

    g = top.add_parser("mixing").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    t = g.add_parser("time", parents=[common, walk])
    t.add_argument("--start", required=True, help="start state as a bit-string")
    t.add_argument("--epsilon", type=float, default=0.25)
    t.set_defaults(fn=cmd_mixing_time)
    b = g.add_parser("bound", parents=[common])
    b.add_argument("--kind", choices=["pi", "mlsi"], required=True)
    b.add_argument("--constant", required=True)
    b.add_argument("--pi-x", required=True)
    b.add_argument("--epsilon", type=float, default=0.25)
    b.set_defaults(fn=cmd_mixing_bound)

    g = top.add_parser("conc").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    obs = _Parser(add_help=False)
    obs.add_argument("--f", help="JSON list of values on the support")
    obs.add_argument("--f-coords", help="sum of these coordinates, e.g. 1,2")
    obs.add_argument("--grid", help="JSON list of thresholds a")
    h = g.add_parser("herbst", parents=[common, walk, obs])
    h.add_argument("--alpha", help="alpha lower bound (default: from the certificate)")
    h.set_defaults(fn=cmd_conc_herbst)
    q = g.add_parser("pp", parents=[common, obs])
    q.add_argument("--metric", choices=["hamming", "flip_swap"], default="hamming")
    q.set_defaults(fn=cmd_conc_pp)

    g = top.add_parser("suite").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    r = g.add_parser("run", parents=[common])
    r.add_argument("--criteria", help="comma-separated subset, e.g. 1,4,7")
    r.set_defaults(fn=cmd_suite_run)
    return p


def _pretty(doc, indent=0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            v = doc[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(doc, list):
        for v in doc:
            if isinstance(v, dict):
                lines.append(f"{pad}-")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{doc}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        payload, passed = args.fn(args)
    except UsageError as exc:
        print(f"scpwalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScpWalkError, ValueError, KeyError, OSError) as exc:
        print(f"scpwalk: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.pretty:
        import json
        print(_pretty(json.loads(io.dumps(payload))))
    else:
        print(io.dumps(payload))
    return EXIT_OK if passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
