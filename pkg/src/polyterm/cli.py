"""Command-line driver.

Exit codes: 0 success (for `prove`: termination proved), 1 error (parse,
validation, safety, hint replay), 2 for `prove` when the system is stuck.
The POLYTERM_SEED environment variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import PolytermError
from .interp import is_final, nf, normalize, typecheck_interp
from .ordering import (
    canonical_monomials,
    compare_terms,
    ground_compare,
    replay_witness,
)
from .prover import (
    Interpretation,
    ProofTranscript,
    check_safety,
    interpret_term,
    interpret_type,
    orient_rule,
    rule_removal,
)
from .syntax import NAT, term_size
from .textform import (
    Ctx,
    format_hint_steps,
    parse_interp,
    parse_interp_term,
    parse_interp_type,
    parse_system,
    print_term,
    print_type,
)

TRANSCRIPT_FORMAT = "polyterm-transcript v1"


def _seed_default() -> int:
    env = os.environ.get("POLYTERM_SEED")
    return int(env) if env else 0


def _load_system(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system(fh.read())


def _load_interp(path: str, system):
    label = os.path.splitext(os.path.basename(path))[0]
    with open(path, "r", encoding="utf-8") as fh:
        return parse_interp(fh.read(), system, label)


def _parse_vars(pairs):
    frees = {}
    for p in pairs or ():
        if ":" not in p:
            raise PolytermError(f"--var needs name:TYPE, got {p!r}")
        name, ty = p.split(":", 1)
        frees[name.strip()] = parse_interp_type(ty.strip())
    return frees


# ---------------------------------------------------------------------
# check
# ---------------------------------------------------------------------


def cmd_check(args) -> int:
    try:
        system = _load_system(args.system)
    except PolytermError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    sig = system.sig
    print(f"type constants: {len(sig.tycons)}")
    for name in sig.tycons:
        from .textform import print_kind

        print(f"  {name} : {print_kind(sig.tycons[name], args.unicode)}")
    if sig.chi_name:
        print(f"chi: {sig.chi_name}")
    print(f"function symbols: {len(sig.funs)}")
    for name in sig.funs:
        print(f"  {name} : {print_type(sig.funs[name], args.unicode)}")
    print(f"rules: {len(system.rules)}")
    for r in system.rules:
        print(
            f"  {r.name} : {print_term(r.lhs, args.unicode)} => "
            f"{print_term(r.rhs, args.unicode)}"
        )
    print("ok")
    return 0


# ---------------------------------------------------------------------
# normalize
# ---------------------------------------------------------------------


def cmd_normalize(args) -> int:
    try:
        frees = _parse_vars(args.var)
        term = parse_interp_term(args.term, frees)
        typecheck_interp(term)
        fuel = args.fuel if args.fuel else None
        nf_term, trace = normalize(
            term, fuel=fuel, strategy=args.strategy, trace=args.trace
        )
    except PolytermError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.trace:
        for e in trace:
            pos = ".".join(map(str, e.pos)) or "root"
            print(
                f"rule{e.rule} @ {pos} : {print_term(e.before, args.unicode)}"
                f"  ~>  {print_term(e.after, args.unicode)}"
            )
    print(print_term(nf_term, args.unicode))
    return 0


# ---------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------


def cmd_compare(args) -> int:
    try:
        frees = _parse_vars(args.var)
        lhs = parse_interp_term(args.lhs, frees)
        rhs = parse_interp_term(args.rhs, frees)
        lty = typecheck_interp(lhs)
        rty = typecheck_interp(rhs)
        if lty != rty:
            raise PolytermError(
                f"sides have different types: {print_type(lty)} vs {print_type(rty)}"
            )
    except PolytermError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    want_strict = args.relation == "gt"
    outcome = 0
    if args.mode in ("symbolic", "both"):
        verdict, lp, rp, aty = compare_terms(lhs, rhs, lty)
        print(f"symbolic: {verdict.kind}")
        if args.verbose:
            print(f"  atom type: {print_type(aty, args.unicode)}")
            print(f"  derivation: {format_hint_steps(verdict.steps)}")
        established = verdict.is_strict if want_strict else verdict.is_weak
        if not established and args.mode == "symbolic":
            outcome = 2
    if args.mode in ("oracle", "both"):
        v = ground_compare(
            lhs, rhs, lty, args.relation,
            budget=args.oracle_budget, seed=args.seed, vectors=args.oracle_vectors,
        )
        print(f"oracle: {v.describe()}")
        if v.kind == "refuted":
            closure, cargs, nl, nr = v.witness
            for name, image in sorted(closure.omega.items()):
                print(f"  {name} := {print_type(image, args.unicode)}")
            for name, image in sorted(closure.gamma.items()):
                print(f"  {name} := {print_term(image, args.unicode)}")
            for kind, a in cargs:
                if kind == "v":
                    print(f"  argument {print_term(a, args.unicode)}")
                else:
                    print(f"  type argument {print_type(a, args.unicode)}")
            print(f"  values: {nl} vs {nr}")
            outcome = 2
    return outcome


# ---------------------------------------------------------------------
# prove
# ---------------------------------------------------------------------


def _transcript_text(tr: ProofTranscript, unicode: bool) -> str:
    lines = []
    for rd in tr.rounds:
        lines.append(f"round {rd.number} [{rd.interp_label}]")
        for sym in sorted(rd.safety):
            rep = rd.safety[sym]
            status = "safe" if rep.ok else "unknown"
            lines.append(f"  safety {sym}: {status}")
        for res in rd.results:
            mark = ">" if res.verdict.is_strict else (
                ">=" if res.verdict.is_weak else "?"
            )
            extra = " (hint)" if res.hint_used else ""
            oracle = ""
            if res.oracle is not None:
                oracle = f"; oracle {res.oracle.describe()}"
                if not res.oracle_consistent:
                    oracle += "  << REFUTED: internal inconsistency"
            lines.append(f"  {res.rule_id}: {mark} {res.verdict.kind}{extra}{oracle}")
        if rd.removed:
            lines.append(f"  removed: {', '.join(rd.removed)}")
        else:
            lines.append("  removed: none")
    if tr.terminating:
        lines.append(f"TERMINATING after {len(tr.rounds)} round(s)")
    else:
        lines.append(f"STUCK; unoriented rules: {', '.join(tr.survivors)}")
    return "\n".join(lines)


def _transcript_json(tr: ProofTranscript) -> dict:
    return {
        "status": tr.status,
        "survivors": list(tr.survivors),
        "rounds": [
            {
                "number": rd.number,
                "interpretation": rd.interp_label,
                "safety": {
                    sym: [list(a) for a in rep.args]
                    for sym, rep in sorted(rd.safety.items())
                },
                "results": [
                    {
                        "rule": res.rule_id,
                        "verdict": res.verdict.kind,
                        "hint": res.hint_used,
                        "derivation": format_hint_steps(res.verdict.steps),
                        "oracle_checks": res.oracle.checks if res.oracle else 0,
                        "oracle_consistent": res.oracle_consistent,
                    }
                    for res in rd.results
                ],
                "removed": list(rd.removed),
            }
            for rd in tr.rounds
        ],
    }


def cmd_prove(args) -> int:
    try:
        system = _load_system(args.system)
        interps = [_load_interp(p, system) for p in args.interps]
        tr = rule_removal(
            system, interps,
            oracle_budget=args.oracle_budget,
            oracle_vectors=args.oracle_vectors,
            seed=args.seed,
        )
    except PolytermError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(_transcript_text(tr, args.unicode))
    if args.out:
        payload = _transcript_json(tr)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(TRANSCRIPT_FORMAT + "\n")
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if any(
        not res.oracle_consistent for rd in tr.rounds for res in rd.results
    ):
        print("error: oracle refuted a symbolic verdict", file=sys.stderr)
        return 1
    return 0 if tr.terminating else 2


# ---------------------------------------------------------------------
# emit-hints
# ---------------------------------------------------------------------


def cmd_emit_hints(args) -> int:
    try:
        system = _load_system(args.system)
        interp = _load_interp(args.interp, system)
        names = args.rules or [r.name for r in system.rules]
        for name in names:
            rule = system.rule(name)
            interp.hints.pop(name, None)
            res = orient_rule(rule, interp, system.sig)
            if not res.verdict.is_weak:
                print(f"-- {name}: {res.verdict.kind}; no derivation to emit")
                continue
            print(f"hint {name}:")
            text = format_hint_steps(res.verdict.steps)
            line = "   "
            for part in text.split("; "):
                if len(line) + len(part) > 76:
                    print(line)
                    line = "   "
                line += " " + part + ";"
            print(line)
            print()
    except PolytermError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polyterm",
        description=(
            "Termination checking for polymorphic functional systems via "
            "polynomial interpretations"
        ),
    )
    ap.add_argument("--unicode", action="store_true",
                    help="pretty-print with unicode symbols")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a system file")
    p.add_argument("system")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("normalize", help="normalize an interpretation term")
    p.add_argument("term")
    p.add_argument("--var", action="append", metavar="NAME:TYPE",
                   help="declare a free variable (repeatable)")
    p.add_argument("--trace", action="store_true", help="print each step")
    p.add_argument("--fuel", type=int, default=0,
                   help="step budget (default 10*size^2)")
    p.add_argument("--strategy", choices=("outermost", "innermost"),
                   default="outermost")
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("compare", help="compare two interpretation terms")
    p.add_argument("lhs")
    p.add_argument("rhs")
    p.add_argument("--relation", choices=("gt", "ge"), default="ge")
    p.add_argument("--mode", choices=("symbolic", "oracle", "both"),
                   default="both")
    p.add_argument("--var", action="append", metavar="NAME:TYPE")
    p.add_argument("--seed", type=int, default=_seed_default())
    p.add_argument("--oracle-budget", type=int, default=200)
    p.add_argument("--oracle-vectors", type=int, default=5)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("prove", help="run the rule-removal loop")
    p.add_argument("system")
    p.add_argument("interps", nargs="+", metavar="interp")
    p.add_argument("--seed", type=int, default=_seed_default())
    p.add_argument("--oracle-budget", type=int, default=40,
                   help="closures per oracle cross-check (0 disables)")
    p.add_argument("--oracle-vectors", type=int, default=3)
    p.add_argument("--out", help="write a structured transcript here")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("emit-hints",
                       help="print checked derivations as hint blocks")
    p.add_argument("system")
    p.add_argument("interp")
    p.add_argument("rules", nargs="*")
    p.set_defaults(fn=cmd_emit_hints)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
