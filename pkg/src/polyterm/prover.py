"""Interpretations, the safety checker, rule orientation and rule removal.

An interpretation is a pair of mappings: every type-constructor constant of
the system goes to a closed interpretation type constructor of the same
kind, and every function symbol to a closed interpretation term of the
interpreted type.  Terms are translated homomorphically; a rule is oriented
by translating both sides, normalizing, and comparing the resulting
polynomials, with the sampling oracle cross-checking every positive answer.

Safety is what makes the strict order close under contexts: the image of a
symbol must expose its binder prefix, and every argument variable must be
used in a way that passes the syntactic safety criteria (head position,
under lift/flatten, one branch of a sum, a factor of a product whose other
factor is at least one, or under an abstraction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    SafetyFailure,
    ShapeError,
    TypeCheckError,
    UnmappedConstant,
    UnmappedSymbol,
)
from .interp import (
    INTERP_SIG,
    _binop_parts,
    _unop_parts,
    LIFT,
    PLUS,
    lift,
    nf,
    typecheck_interp,
)
from .ordering import (
    Verdict,
    compare_terms,
    eta_expand_to_atom,
    ground_compare,
    symbolic_compare,
    to_polynomial,
    verify_certificate,
    _poly,
)
from .pfs import RuleSchema, System
from .syntax import (
    NAT,
    Abs,
    App,
    Free,
    Meta,
    Num,
    PatAbs,
    PatTAll,
    PatTLam,
    PatTyAbs,
    Signature,
    Sym,
    TAll,
    TApp,
    TArrow,
    TCon,
    TFree,
    TLam,
    TMeta,
    Tm,
    Ty,
    TyAbs,
    TyApp,
    beta_normalize_type,
    canon_ty,
    kind_of,
    mk_tapp,
    spine,
    subst_tv,
    subst_v,
    tsubst,
)


# =====================================================================
# Interpretations
# =====================================================================


@dataclass
class Interpretation:
    """Type-constructor mapping, symbol mapping, optional hint scripts."""

    label: str
    tmap: dict
    jmap: dict
    hints: dict = field(default_factory=dict)


def interpret_type(ty: Ty, tmap: dict) -> Ty:
    """Homomorphic image of a system type in the interpretation world.
    Pattern type binders are closed into de Bruijn form on the way: the
    type-driven reduction rules match on the structural binders."""
    out = canon_ty(_ity(ty, tmap))
    return beta_normalize_type(out)


def _ity(ty: Ty, tmap: dict) -> Ty:
    if isinstance(ty, TCon):
        if ty.name not in tmap:
            raise UnmappedConstant(f"no type mapping for constant '{ty.name}'")
        return tmap[ty.name]
    if isinstance(ty, TArrow):
        return TArrow(_ity(ty.lhs, tmap), _ity(ty.rhs, tmap))
    if isinstance(ty, TApp):
        return mk_tapp(_ity(ty.fn, tmap), _ity(ty.arg, tmap))
    if isinstance(ty, (TAll, TLam)):
        return type(ty)(ty.kind, _ity(ty.body, tmap), ty.hint)
    if isinstance(ty, TMeta):
        pend = tuple((n, _ity(v, tmap)) for n, v in ty.pend)
        return TMeta(ty.name, ty.kind, ty.deps, pend)
    if isinstance(ty, (PatTLam, PatTAll)):
        return type(ty)(ty.name, ty.kind, _ity(ty.body, tmap))
    return ty  # TVar, TFree


def interpret_term(t: Tm, interp: Interpretation) -> Tm:
    """Homomorphic image of a system term (or rule side) in the
    interpretation world; holes pass through with interpreted types."""
    tmap, jmap = interp.tmap, interp.jmap
    if isinstance(t, Sym):
        if t.name not in jmap:
            raise UnmappedSymbol(f"no symbol mapping for '{t.name}'")
        return jmap[t.name]
    if isinstance(t, Free):
        return Free(t.name, interpret_type(t.ty, tmap))
    if isinstance(t, App):
        return App(interpret_term(t.fn, interp), interpret_term(t.arg, interp))
    if isinstance(t, TyApp):
        return TyApp(interpret_term(t.fn, interp), interpret_type(t.ty, tmap))
    if isinstance(t, Abs):
        return Abs(interpret_type(t.ty, tmap), interpret_term(t.body, interp), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, interpret_term(t.body, interp), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, interpret_type(t.ty, tmap), interpret_term(t.body, interp))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, interpret_term(t.body, interp))
    if isinstance(t, Meta):
        deps = tuple(
            (k, n, interpret_type(d, tmap) if k == "v" else d) for k, n, d in t.deps
        )
        pend = tuple(
            (
                k,
                n,
                interpret_term(v, interp) if k == "v" else interpret_type(v, tmap),
            )
            for k, n, v in t.pend
        )
        return Meta(t.name, interpret_type(t.ty, tmap), deps, pend)
    raise TypeCheckError(f"cannot interpret node {type(t).__name__}")


def validate_interpretation(interp: Interpretation, sig: Signature):
    """Kind-check the type mapping, type-check every symbol image against
    the interpreted declared type."""
    for name, image in interp.tmap.items():
        if name not in sig.tycons:
            raise UnmappedConstant(
                f"type mapping names unknown constant '{name}'"
            )
        if image.t_open or image.names:
            raise TypeCheckError(f"type mapping for '{name}' is not closed")
        k = kind_of(image)
        if k != sig.tycons[name]:
            raise TypeCheckError(
                f"type mapping for '{name}' has kind {k!r}, expected "
                f"{sig.tycons[name]!r}"
            )
    for name, image in interp.jmap.items():
        if name not in sig.funs:
            raise UnmappedSymbol(f"symbol mapping names unknown symbol '{name}'")
        if image.v_open or image.t_open or image.names:
            raise TypeCheckError(f"symbol mapping for '{name}' is not closed")
        want = interpret_type(sig.funs[name], interp.tmap)
        got = typecheck_interp(image)
        if got != want:
            raise TypeCheckError(
                f"symbol mapping for '{name}' has type {got.ckey()}, expected "
                f"{want.ckey()}"
            )


# =====================================================================
# Safety
# =====================================================================


@dataclass
class SafetyReport:
    symbol: str
    args: list  # (argument name, 'safe' or reason string)

    @property
    def ok(self) -> bool:
        return all(status == "safe" for _, status in self.args)


def _head_is(t: Tm, name: str) -> bool:
    head, _ = spine(t)
    return isinstance(head, Free) and head.name == name


def _ge_one(u: Tm, ty: Ty) -> bool:
    """u is at least lift(1), established symbolically."""
    try:
        verdict, _, _, _ = compare_terms(u, lift(ty, Num(1)), ty)
    except TypeCheckError:
        return False
    return verdict.is_weak


def _safe_for(t: Tm, x: str, counter: list) -> str | None:
    """None when safe; otherwise the reason no criterion applies."""
    if _head_is(t, x):
        return None
    un = _unop_parts(t)
    if un is not None:
        return _safe_for(un[2], x, counter)
    bi = _binop_parts(t)
    if bi is not None:
        name, ty, a, b = bi
        if name == PLUS:
            ra = _safe_for(a, x, counter)
            if ra is None:
                return None
            rb = _safe_for(b, x, counter)
            if rb is None:
                return None
            return f"neither summand is safe for '{x}'"
        ra = _safe_for(a, x, counter)
        if ra is None and _ge_one(b, ty):
            return None
        rb = _safe_for(b, x, counter)
        if rb is None and _ge_one(a, ty):
            return None
        return (
            f"no factor of the product is safe for '{x}' with the other "
            f"factor at least lift(1)"
        )
    if isinstance(t, Abs):
        counter[0] += 1
        q = Free(f"~safe{counter[0]}", t.ty)
        return _safe_for(subst_v(t.body, 0, q), x, counter)
    if isinstance(t, TyAbs):
        counter[0] += 1
        q = TFree(f"~safe{counter[0]}", t.kind)
        return _safe_for(subst_tv(t.body, 0, q), x, counter)
    return f"variable '{x}' is not used in a safe position"


def eta_shape(f: str, image: Tm, sig: Signature, tmap: dict):
    """Bring a symbol image into binder-prefix shape by applying it to
    fresh variables and normalizing: returns (open body, list of argument
    variable names in declaration order)."""
    n, k = sig.arity(f)
    ty = interpret_type(sig.funs[f], tmap)
    body = image
    for i in range(n):
        if not isinstance(ty, TAll):
            raise ShapeError(f"symbol '{f}': expected a quantifier prefix")
        q = TFree(f"~{f}.t{i}", ty.kind)
        body = TyApp(body, q)
        ty = beta_normalize_type(tsubst(ty.body, 0, q))
    names = []
    for i in range(k):
        if not isinstance(ty, TArrow):
            raise ShapeError(f"symbol '{f}': expected {k} argument types")
        name = f"~{f}.x{i}"
        names.append(name)
        body = App(body, Free(name, ty.lhs))
        ty = ty.rhs
    return nf(body), names


def check_safety(interp: Interpretation, sig: Signature,
                 symbols=None) -> dict[str, SafetyReport]:
    """Check the safety criteria for each symbol's image; 'safe' for every
    argument or a reason string (Unknown is not a refutation)."""
    out: dict[str, SafetyReport] = {}
    names = sorted(symbols) if symbols is not None else sorted(interp.jmap)
    for f in names:
        if f not in interp.jmap:
            raise UnmappedSymbol(f"no symbol mapping for '{f}'")
        body, args = eta_shape(f, interp.jmap[f], sig, interp.tmap)
        counter = [0]
        report = []
        for i, x in enumerate(args):
            reason = _safe_for(body, x, counter)
            report.append((f"argument {i + 1}", "safe" if reason is None else reason))
        out[f] = SafetyReport(f, report)
    return out


# =====================================================================
# Orientation
# =====================================================================


@dataclass
class OrientationResult:
    rule_id: str
    verdict: Verdict
    lhs_poly: dict
    rhs_poly: dict
    atom_type: Ty
    oracle: Verdict | None = None
    hint_used: bool = False

    @property
    def oracle_consistent(self) -> bool:
        return self.oracle is None or self.oracle.kind != "refuted"


def orient_rule(rule: RuleSchema, interp: Interpretation, sig: Signature,
                oracle_budget: int = 0, oracle_vectors: int = 3,
                seed: int = 0) -> OrientationResult:
    """Interpret both sides of a rule, compare, optionally cross-check.

    When the interpretation attaches a hint script for this rule, the
    script is replayed and checked instead of searching; a failing step
    raises HintReplayError.
    """
    lhat = interpret_term(rule.lhs, interp)
    rhat = interpret_term(rule.rhs, interp)
    ity = interpret_type(rule.ty, interp.tmap)
    for side in (lhat, rhat):
        got = typecheck_interp(side)
        if got != ity:
            raise TypeCheckError(
                f"rule '{rule.name}': interpreted side has type {got.ckey()}, "
                f"expected {ity.ckey()}"
            )
    (l2, r2), aty, _ = eta_expand_to_atom([nf(lhat), nf(rhat)], ity)
    at_nat = aty == NAT
    lp = _poly(l2, at_nat)
    rp = _poly(r2, at_nat)
    hint = interp.hints.get(rule.name)
    if hint is not None:
        verdict = verify_certificate(lp, rp, hint, rule.name)
        hint_used = True
    else:
        verdict = symbolic_compare(lp, rp)
        hint_used = False
    oracle = None
    if oracle_budget > 0 and verdict.is_weak:
        rel = "gt" if verdict.is_strict else "ge"
        oracle = ground_compare(
            lhat, rhat, ity, rel, budget=oracle_budget, seed=seed,
            vectors=oracle_vectors,
        )
    return OrientationResult(rule.name, verdict, lp, rp, aty, oracle, hint_used)


# =====================================================================
# Rule removal
# =====================================================================


@dataclass
class Round:
    number: int
    interp_label: str
    results: list  # OrientationResult, in rule order
    removed: list  # rule names removed this round
    safety: dict  # symbol -> SafetyReport


@dataclass
class ProofTranscript:
    rounds: list
    status: str  # 'terminating' or 'stuck'
    survivors: list  # rule names blocking progress when stuck

    @property
    def terminating(self) -> bool:
        return self.status == "terminating"


def _symbols_of(t: Tm, acc: set):
    if isinstance(t, Sym):
        acc.add(t.name)
    elif isinstance(t, App):
        _symbols_of(t.fn, acc)
        _symbols_of(t.arg, acc)
    elif isinstance(t, TyApp):
        _symbols_of(t.fn, acc)
    elif isinstance(t, (Abs, TyAbs, PatAbs, PatTyAbs)):
        _symbols_of(t.body, acc)
    elif isinstance(t, Meta):
        for k, _, v in t.pend:
            if k == "v":
                _symbols_of(v, acc)


def rule_symbols(rules) -> set:
    acc: set = set()
    for r in rules:
        _symbols_of(r.lhs, acc)
        _symbols_of(r.rhs, acc)
    return acc


def rule_removal(system: System, interps: list[Interpretation],
                 oracle_budget: int = 40, oracle_vectors: int = 3,
                 seed: int = 0) -> ProofTranscript:
    """The rule-removal loop.

    Each round uses the next interpretation: all remaining rules are
    oriented; when every rule is at least weakly oriented and at least one
    strictly, the strict ones are removed (that is exactly when the
    removal theorem applies).  Otherwise the loop stops: the system is
    reported Stuck with the unoriented rules as survivors.  An empty rule
    set is Terminating with no rounds.
    """
    remaining = list(system.rules)
    rounds: list[Round] = []
    status = None
    survivors: list[str] = []
    for number, interp in enumerate(interps, 1):
        if not remaining:
            break
        syms = rule_symbols(remaining)
        safety = check_safety(interp, system.sig, syms)
        for s in sorted(syms):
            if not safety[s].ok:
                detail = "; ".join(
                    f"{arg}: {why}" for arg, why in safety[s].args if why != "safe"
                )
                raise SafetyFailure(number, s, detail)
        results = [
            orient_rule(r, interp, system.sig, oracle_budget, oracle_vectors, seed)
            for r in remaining
        ]
        unknown = [res.rule_id for res in results if not res.verdict.is_weak]
        strict = [res.rule_id for res in results if res.verdict.is_strict]
        removable = bool(strict) and not unknown
        removed = strict if removable else []
        rounds.append(Round(number, interp.label, results, removed, safety))
        if not removable:
            status = "stuck"
            survivors = unknown if unknown else [r.name for r in remaining]
            break
        remaining = [r for r in remaining if r.name not in set(removed)]
        if not remaining:
            status = "terminating"
            break
    if status is None:
        if remaining:
            status = "stuck"
            survivors = [r.name for r in remaining]
        else:
            status = "terminating"
    return ProofTranscript(rounds, status, survivors)
