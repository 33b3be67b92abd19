"""Command line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .equiv import equivalence, irreducibility_report
from .errors import (InconsistencyError, InvalidInputError, InvariantViolation, TruncationError,
                     UnsupportedError, WordSyntaxError)
from .lattice import LatticeSpec
from .monomial_ops import TwistedTuple, compose, diag_op, direct_sum, model_tuple, mult_op
from .relations import derived_checks, matrix_unit_check, projection_family_check, verify_twisted
from .scenario import dumps_report, encode_matrix, load_scenario, make_report
from .wold import build_model, decompose, model_residuals, roundtrip_check
from .words import normalize, oracle_check, parse

INPUT_ERRORS = (InvalidInputError, InvariantViolation, TruncationError, WordSyntaxError,
                FileNotFoundError, IsADirectoryError, UnsupportedError)


class InputError(Exception):
    pass


def _scenario(args, path=None):
    path = path or args.scenario
    if not path:
        raise InputError("a --scenario file is required")
    sc = load_scenario(path)
    if args.truncation is not None:
        sc.tuple_ = sc.tuple_.with_truncation(args.truncation)
    if args.tol is not None:
        sc.tol = sc.tol.with_overrides(residual=args.tol)
    return sc


def _seed(args, sc=None, name="default"):
    if args.seed is not None:
        return args.seed
    return sc.seed(name) if sc is not None else 0


def _shape(T) -> dict:
    return {"n": T.n, "blocks": [{"m": b.spec.m, "d": b.d, "N": b.spec.N} for b in T.blocks]}


def cmd_verify(args):
    sc = _scenario(args)
    T = sc.tuple_
    r1 = verify_twisted(T, tol=sc.tol)
    r2 = derived_checks(T, tol=sc.tol)
    ok = r1.passed and r2.passed
    res = {"relations": r1.to_dict(), "derived": r2.to_dict()}
    failed = [e.relation for e in r1.failures() + r2.failures()]
    if failed:
        res["failed"] = failed
    return make_report("verify", {"scenario": args.scenario, **_shape(T)}, res, ok,
                       max(r1.max_residual, r2.max_residual))


def cmd_decompose(args):
    sc = _scenario(args)
    T = sc.tuple_
    try:
        dec = decompose(T, tol=sc.tol)
    except InconsistencyError as exc:
        return make_report("decompose", {"scenario": args.scenario, **_shape(T)},
                           {"error": str(exc)}, False)
    ok = dec.certificate["complete"] and dec.certificate["max_overlap"] < sc.tol.orth
    return make_report("decompose", {"scenario": args.scenario, **_shape(T)}, dec.to_dict(), ok,
                       dec.certificate["max_overlap"])


def _subset(text):
    if text is None:
        return None
    text = text.strip().strip("{}")
    return tuple(sorted(int(x) for x in text.replace(",", " ").split())) if text else ()


def cmd_model(args):
    sc = _scenario(args)
    T = sc.tuple_
    dec = decompose(T, tol=sc.tol)
    A = _subset(args.subset)
    results = {}
    if A is not None:
        md = build_model(T, A, dec, sc.tol)
        rep = model_residuals(T, md, sc.tol)
        results["model"] = {"A": list(A), "fiber_dim": md.fiber_dim, "empty": md.empty,
                            "tails": {str(q): encode_matrix(M) for q, M in sorted(md.tails.items())},
                            "twists": {f"{s},{t}": encode_matrix(M) for (s, t), M in sorted(md.twists.items())},
                            "residuals": rep.to_dict()}
        ok = rep.passed
        resid = rep.max_residual
    rt = roundtrip_check(T, dec, sc.tol)
    results["roundtrip"] = rt.to_dict()
    if A is None:
        ok, resid = rt.passed, rt.max_residual
    else:
        ok = ok and rt.passed
        resid = max(resid, rt.max_residual)
    return make_report("model", {"scenario": args.scenario, "subset": args.subset, **_shape(T)},
                       results, ok, resid)


def cmd_equiv(args):
    sa = _scenario(args, args.first)
    sb = _scenario(args, args.second)
    r = equivalence(sa.tuple_, sb.tuple_, seed=_seed(args, sa, "equiv"), tol=sa.tol)
    ok = r.verdict == "equivalent"
    return make_report("equiv", {"first": args.first, "second": args.second}, r.to_dict(), ok,
                       None if r.glue is None else r.residual)


def cmd_normalize(args):
    w = parse(args.word)
    nf = normalize(w)
    results = {"input": args.word, "normal_form": nf.to_dict()}
    ok, resid = True, None
    if args.eval:
        sc = _scenario(args, args.eval)
        resid = oracle_check(w, sc.tuple_)
        ok = resid < sc.tol.residual
        results["oracle_residual"] = resid
    return make_report("normalize", {"word": args.word, "eval": args.eval}, results, ok, resid)


# ---------------------------------------------------------------------------
# demos


def _example21(N: int, lam: complex):
    s = LatticeSpec(2, 1, N)
    tw = compose(mult_op(s, 2), diag_op(s, 1, [[lam]]))
    b1 = TwistedTuple([mult_op(s, 1), tw], {(1, 2): [[np.conj(lam)]]})
    b2 = TwistedTuple([tw, mult_op(s, 1)], {(1, 2): [[lam]]})
    return direct_sum(b1, b2)


def demo_example21(args):
    N = args.truncation or 5
    lam = np.exp(2j * np.pi * 0.3)
    T = _example21(N, lam)
    r1, r2 = verify_twisted(T), derived_checks(T)
    dec = decompose(T)
    md = build_model(T, (1, 2), dec)
    ev = np.sort_complex(np.linalg.eigvals(md.twists[(1, 2)]))
    want = np.sort_complex(np.array([np.conj(lam), lam]))
    twist_ok = md.fiber_dim == 2 and np.allclose(ev, want, atol=1e-10)
    rt = roundtrip_check(T, dec)
    ok = r1.passed and r2.passed and twist_ok and rt.passed and dec.nonzero() == [(1, 2)]
    return {"relations": r1.to_dict(), "derived": r2.to_dict(), "decomposition": dec.to_dict(),
            "model_twist_eigenvalues": [complex(z) for z in ev], "roundtrip": rt.to_dict(),
            "irreducibility": irreducibility_report(T, dec)}, ok


def demo_prop24(args):
    N = args.truncation or 6
    s = LatticeSpec(1, 1, N)
    lam, om = np.exp(2j * np.pi * 0.3), np.exp(2j * np.pi / 3)
    T = model_tuple(s, [1], {(1, 2): [[lam]]}, {2: [[om]]}, n=2)
    r1, r2 = verify_twisted(T), derived_checks(T)
    dec = decompose(T)
    pure = dec.nonzero() == [(1,)] and dec[(1,)].fiber_dim == 1
    ok = r1.passed and r2.passed and pure
    return {"relations": r1.to_dict(), "derived": r2.to_dict(), "decomposition": dec.to_dict()}, ok


def demo_matrix_units(args):
    N = args.truncation or 8
    lam = np.exp(2j * np.pi * 0.3)
    T = model_tuple(LatticeSpec(2, 1, N), [1, 2], {(1, 2): [[lam]]})
    mu = matrix_unit_check(T, 2)
    pf = projection_family_check(T, [1, 2])
    return {"matrix_units": mu.to_dict(), "projections": pf.to_dict()}, mu.passed and pf.passed


DEMOS = {"example21": demo_example21, "prop24": demo_prop24, "matrix-units": demo_matrix_units}


def cmd_demo(args):
    fn = DEMOS.get(args.name)
    if fn is None:
        raise InputError(f"unknown demo {args.name!r}; choose from {', '.join(sorted(DEMOS))}")
    results, ok = fn(args)
    return make_report("demo", {"name": args.name}, results, ok)


# ---------------------------------------------------------------------------


def _text(report: dict) -> str:
    cmd = report["command"]
    res = report["results"]
    if cmd == "normalize":
        line = res["normal_form"]["text"]
        if "oracle_residual" in res:
            line += f"  (oracle residual {res['oracle_residual']:.3e})"
        return line
    lines = [f"{cmd}: {'PASS' if report['pass'] else 'FAIL'}"]
    if report.get("residual") is not None:
        lines.append(f"  max residual {report['residual']:.3e}")
    if cmd == "decompose" and "summands" in res:
        for key, s in res["summands"].items():
            if s["summand_dim"]:
                lines.append(f"  A={{{key.strip('{}')}}}: wandering dim {s['wandering_dim']}, "
                             f"summand slabs {s['summand_slabs']}")
    if cmd == "equiv":
        lines.append(f"  verdict {res['verdict']}")
    for e in res.get("failed", []):
        lines.append(f"  failed: {e}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--tol", type=float, help="residual tolerance override")
    common.add_argument("--seed", type=int, help="seed for randomized searches")
    common.add_argument("--truncation", type=int, help="override the truncation degree N")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text")

    p = argparse.ArgumentParser(prog="twisted-iso", description="Twisted isometry toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="check the defining and derived relations")
    sub.add_parser("decompose", parents=[common], help="Wold decomposition with slab tables")
    pm = sub.add_parser("model", parents=[common], help="analytic model and round trip")
    pm.add_argument("--subset", help="subset A, e.g. '1,3'")
    pe = sub.add_parser("equiv", parents=[common], help="unitary equivalence of two scenarios")
    pe.add_argument("first")
    pe.add_argument("second")
    pn = sub.add_parser("normalize", parents=[common], help="normal form of a word")
    pn.add_argument("word")
    pn.add_argument("--eval", help="scenario to evaluate the word on")
    pd = sub.add_parser("demo", parents=[common], help="built-in examples")
    pd.add_argument("name")
    return p


COMMANDS = {"verify": cmd_verify, "decompose": cmd_decompose, "model": cmd_model,
            "equiv": cmd_equiv, "normalize": cmd_normalize, "demo": cmd_demo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = COMMANDS[args.command](args)
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InconsistencyError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    fmt = args.fmt or ("text" if args.command == "normalize" else "json")
    text = dumps_report(report) if fmt == "json" else _text(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if report["pass"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
