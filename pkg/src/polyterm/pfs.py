"""Polymorphic functional systems.

A PFS restricts the general terms of the calculus: every application must
have a declared function symbol at its head, fully instantiated with its
type arguments and not over-applied.  Rules are given as finitely many
schemas over metavariables; a schema stands for the replacement-closed set
of all its instances.

A schema keeps its pattern binders as *named* binders (PatAbs and friends
from the syntax module), with binder names made unique per rule.  A term
metavariable may mention exactly the pattern binders in scope at its
left-hand-side occurrence; this is also how explicit substitutions on the
right-hand side resolve their variable names.
"""

from __future__ import annotations

from .errors import (
    HeadViolation,
    ScopeError,
    TypeCheckError,
    TypeMismatch,
)
from .syntax import (
    Abs,
    App,
    Free,
    Kind,
    Meta,
    Num,
    PatAbs,
    PatTyAbs,
    PatTAll,
    PatTLam,
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
    TVar,
    Var,
    beta_normalize_type,
    inst_tm,
    inst_ty,
    kind_of,
    spine,
    subst_tv,
    subst_v,
    tsubst,
    tsubst_tfree,
    typecheck,
)


# ---------------------------------------------------------------------
# The application-head restriction
# ---------------------------------------------------------------------


def validate_pfs_term(t: Tm, sig: Signature, path: tuple = ()) -> Tm:
    """Check the head restriction at every application subterm; returns the
    term unchanged on success, raises HeadViolation otherwise."""
    if isinstance(t, App):
        head, args = spine(t)
        if not isinstance(head, Sym):
            kind = type(head).__name__.lower()
            raise HeadViolation(
                f"application head is a {kind}, not a function symbol", path
            )
        if head.name not in sig.funs:
            raise HeadViolation(f"unknown function symbol '{head.name}'", path)
        n, k = sig.arity(head.name)
        n_ty = 0
        n_tm = 0
        for kd, _ in args:
            if kd == "T":
                if n_tm:
                    raise HeadViolation(
                        "type argument after term arguments in an application spine",
                        path,
                    )
                n_ty += 1
            else:
                n_tm += 1
        if n_ty != n:
            raise HeadViolation(
                f"symbol '{head.name}' expects {n} type arguments, got {n_ty}", path
            )
        if n_tm > k:
            raise HeadViolation(
                f"symbol '{head.name}' takes at most {k} arguments, got {n_tm}", path
            )
        for i, (kd, a) in enumerate(args):
            if kd == "v":
                validate_pfs_term(a, sig, path + (i,))
        return t
    if isinstance(t, TyApp):
        # s * tau and x * tau are fine; only App heads are restricted.
        if isinstance(t.fn, (Abs, PatAbs, TyAbs, PatTyAbs)):
            raise HeadViolation("abstraction at the head of a type application", path)
        validate_pfs_term(t.fn, sig, path + (0,))
        return t
    if isinstance(t, (Abs, TyAbs)):
        validate_pfs_term(t.body, sig, path + (0,))
        return t
    if isinstance(t, (PatAbs, PatTyAbs)):
        validate_pfs_term(t.body, sig, path + (0,))
        return t
    if isinstance(t, Num):
        raise HeadViolation("numerals are not PFS terms", path)
    return t


# ---------------------------------------------------------------------
# Rule schemas
# ---------------------------------------------------------------------


class MetaDecl:
    """Declared metavariable: a type-constructor hole (kind) or a term hole
    (type schema), plus the pattern binders it may mention."""

    __slots__ = ("name", "sort", "ty", "kind", "deps")

    def __init__(self, name, sort, ty=None, kind=None, deps=()):
        self.name = name
        self.sort = sort  # 'v' (term) or 'T' (type constructor)
        self.ty = ty
        self.kind = kind
        self.deps = deps  # tuple of ('v', name, Ty) / ('T', name, Kind)


class RuleSchema:
    def __init__(self, name: str, decls: dict, lhs: Tm, rhs: Tm, ty: Ty):
        self.name = name
        self.decls = decls
        self.lhs = lhs
        self.rhs = rhs
        self.ty = ty

    def __repr__(self):
        return f"<rule {self.name}>"


class _Renamer:
    def __init__(self):
        self.counter = 0
        self.map: dict[str, str] = {}

    def fresh(self, surface: str) -> str:
        self.counter += 1
        name = f"{surface}#{self.counter}"
        self.map.setdefault(surface, name)
        return name

    def lookup(self, surface: str) -> str | None:
        return self.map.get(surface)


def _freshen(t, ren: _Renamer, env: dict, reuse: bool):
    """Rename pattern binders to rule-unique names.  On the rhs (reuse=True)
    a binder with a surface name already bound on the lhs reuses that unique
    name, so that instantiation re-captures metavariable dependencies."""
    if isinstance(t, Meta):
        pend = tuple(
            (
                k,
                env.get(n, ren.lookup(n) or n),
                _freshen(v, ren, env, reuse),
            )
            for k, n, v in t.pend
        )
        return Meta(t.name, _freshen(t.ty, ren, env, reuse), t.deps, pend)
    if isinstance(t, TMeta):
        pend = tuple(
            (env.get(n, ren.lookup(n) or n), _freshen(v, ren, env, reuse))
            for n, v in t.pend
        )
        return TMeta(t.name, t.kind, t.deps, pend)
    if isinstance(t, Free):
        return Free(env.get(t.name, t.name), _freshen(t.ty, ren, env, reuse))
    if isinstance(t, TFree):
        return TFree(env.get(t.name, t.name), t.kind)
    if isinstance(t, PatAbs):
        new = (ren.lookup(t.name) if reuse else None) or ren.fresh(t.name)
        env2 = dict(env)
        env2[t.name] = new
        return PatAbs(new, _freshen(t.ty, ren, env, reuse), _freshen(t.body, ren, env2, reuse))
    if isinstance(t, PatTyAbs):
        new = (ren.lookup(t.name) if reuse else None) or ren.fresh(t.name)
        env2 = dict(env)
        env2[t.name] = new
        return PatTyAbs(new, t.kind, _freshen(t.body, ren, env2, reuse))
    if isinstance(t, (PatTLam, PatTAll)):
        new = (ren.lookup(t.name) if reuse else None) or ren.fresh(t.name)
        env2 = dict(env)
        env2[t.name] = new
        return type(t)(new, t.kind, _freshen(t.body, ren, env2, reuse))
    if isinstance(t, App):
        return App(_freshen(t.fn, ren, env, reuse), _freshen(t.arg, ren, env, reuse))
    if isinstance(t, TyApp):
        return TyApp(_freshen(t.fn, ren, env, reuse), _freshen(t.ty, ren, env, reuse))
    if isinstance(t, Abs):
        return Abs(_freshen(t.ty, ren, env, reuse), _freshen(t.body, ren, env, reuse), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, _freshen(t.body, ren, env, reuse), t.hint)
    if isinstance(t, TArrow):
        return TArrow(_freshen(t.lhs, ren, env, reuse), _freshen(t.rhs, ren, env, reuse))
    if isinstance(t, TApp):
        return TApp(_freshen(t.fn, ren, env, reuse), _freshen(t.arg, ren, env, reuse))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, _freshen(t.body, ren, env, reuse), t.hint)
    return t


def _merge_scope(prev: tuple | None, new: tuple) -> tuple:
    """A hole may only mention binders in scope at every occurrence."""
    if prev is None:
        return new
    keep = set(e[1] for e in new)
    return tuple(e for e in prev if e[1] in keep)


def _scan_deps(t, scope: tuple, decls: dict, out: dict, side: str):
    """Record, for every metavariable occurrence, the pattern binders in
    scope; on the lhs this *defines* the hole's dependencies."""
    if isinstance(t, Meta):
        if t.name not in decls:
            raise ScopeError(f"metavariable '{t.name}' was never declared")
        if side == "lhs":
            out[t.name] = _merge_scope(out.get(t.name), scope)
        else:
            if t.name not in out:
                raise ScopeError(
                    f"metavariable '{t.name}' does not occur on the left-hand side"
                )
        for k, n, v in t.pend:
            _scan_deps(v, scope, decls, out, side)
        _scan_deps(t.ty, scope, decls, out, side)
        return
    if isinstance(t, TMeta):
        if t.name not in decls:
            raise ScopeError(f"type metavariable '{t.name}' was never declared")
        if side == "lhs":
            tscope = tuple(e for e in scope if e[0] == "T")
            out[t.name] = _merge_scope(out.get(t.name), tscope)
        else:
            if t.name not in out:
                raise ScopeError(
                    f"type metavariable '{t.name}' does not occur on the left-hand side"
                )
        for n, v in t.pend:
            _scan_deps(v, scope, decls, out, side)
        return
    if isinstance(t, PatAbs):
        _scan_deps(t.ty, scope, decls, out, side)
        _scan_deps(t.body, scope + (("v", t.name, t.ty),), decls, out, side)
        return
    if isinstance(t, PatTyAbs):
        _scan_deps(t.body, scope + (("T", t.name, t.kind),), decls, out, side)
        return
    if isinstance(t, (PatTLam, PatTAll)):
        _scan_deps(t.body, scope + (("T", t.name, t.kind),), decls, out, side)
        return
    if isinstance(t, App):
        _scan_deps(t.fn, scope, decls, out, side)
        _scan_deps(t.arg, scope, decls, out, side)
    elif isinstance(t, TyApp):
        _scan_deps(t.fn, scope, decls, out, side)
        _scan_deps(t.ty, scope, decls, out, side)
    elif isinstance(t, (Abs,)):
        _scan_deps(t.ty, scope, decls, out, side)
        _scan_deps(t.body, scope, decls, out, side)
    elif isinstance(t, TyAbs):
        _scan_deps(t.body, scope, decls, out, side)
    elif isinstance(t, Free):
        _scan_deps(t.ty, scope, decls, out, side)
    elif isinstance(t, TArrow):
        _scan_deps(t.lhs, scope, decls, out, side)
        _scan_deps(t.rhs, scope, decls, out, side)
    elif isinstance(t, TApp):
        _scan_deps(t.fn, scope, decls, out, side)
        _scan_deps(t.arg, scope, decls, out, side)
    elif isinstance(t, (TAll, TLam)):
        _scan_deps(t.body, scope, decls, out, side)


def _apply_deps(t, deps: dict):
    """Rewrite Meta/TMeta nodes with their inferred dependency lists."""
    if isinstance(t, Meta):
        pend = tuple((k, n, _apply_deps(v, deps)) for k, n, v in t.pend)
        dnames = tuple(d[1] for d in deps[t.name])
        for k, n, v in pend:
            if n not in dnames:
                raise ScopeError(
                    f"substitution for '{n}' on hole '{t.name}' names a binder "
                    f"it cannot mention"
                )
        ty = _apply_deps(t.ty, deps)
        for k, n, v in pend:
            if k == "T":
                ty = tsubst_tfree(ty, n, v)
        return Meta(t.name, ty, deps[t.name], pend)
    if isinstance(t, TMeta):
        pend = tuple((n, _apply_deps(v, deps)) for n, v in t.pend)
        tdeps = tuple((n, k) for _, n, k in deps[t.name])
        return TMeta(t.name, t.kind, tdeps, pend)
    if isinstance(t, App):
        return App(_apply_deps(t.fn, deps), _apply_deps(t.arg, deps))
    if isinstance(t, TyApp):
        return TyApp(_apply_deps(t.fn, deps), _apply_deps(t.ty, deps))
    if isinstance(t, Abs):
        return Abs(_apply_deps(t.ty, deps), _apply_deps(t.body, deps), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, _apply_deps(t.body, deps), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, _apply_deps(t.ty, deps), _apply_deps(t.body, deps))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, _apply_deps(t.body, deps))
    if isinstance(t, (PatTLam, PatTAll)):
        return type(t)(t.name, t.kind, _apply_deps(t.body, deps))
    if isinstance(t, Free):
        return Free(t.name, _apply_deps(t.ty, deps))
    if isinstance(t, TArrow):
        return TArrow(_apply_deps(t.lhs, deps), _apply_deps(t.rhs, deps))
    if isinstance(t, TApp):
        return TApp(_apply_deps(t.fn, deps), _apply_deps(t.arg, deps))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, _apply_deps(t.body, deps), t.hint)
    return t


def _resolve_decl_types(decls: dict, deps: dict):
    """Fill each term metavariable's declared type with the deps' view;
    declared types may mention type metavariables and pattern binders."""
    resolved = {}
    for name, d in decls.items():
        entry = MetaDecl(name, d.sort, d.ty, d.kind, deps.get(name, ()))
        resolved[name] = entry
    return resolved


def make_rule(name: str, decls: dict, lhs_raw: Tm, rhs_raw: Tm, sig: Signature) -> RuleSchema:
    """Build and validate a rule schema from parsed pattern terms.

    Pattern binders with one surface name share one identity throughout
    the rule (the type-level and term-level binders of a type-application
    pattern are linked that way, and right-hand sides re-bind the names
    their holes depend on)."""
    ren = _Renamer()
    lhs = _freshen(lhs_raw, ren, {}, reuse=True)
    rhs = _freshen(rhs_raw, ren, {}, reuse=True)

    deps: dict[str, tuple] = {}
    _scan_deps(lhs, (), decls, deps, "lhs")
    _scan_deps(rhs, (), decls, deps, "rhs")
    lhs = _apply_deps(lhs, deps)
    rhs = _apply_deps(rhs, deps)
    rdecls = _resolve_decl_types(decls, deps)

    validate_pfs_term(lhs, sig)
    validate_pfs_term(rhs, sig)
    head, _ = spine(lhs)
    if not isinstance(head, Sym):
        raise HeadViolation(f"rule '{name}': left-hand side must be symbol-headed")

    try:
        lty = typecheck(lhs, sig)
        rty = typecheck(rhs, sig)
    except TypeCheckError as e:
        raise TypeCheckError(f"rule '{name}': {e.msg}", e.path) from None
    if lty != rty:
        raise TypeMismatch(
            f"rule '{name}': sides have different types "
            f"({lty.ckey()} vs {rty.ckey()})"
        )
    return RuleSchema(name, rdecls, lhs, rhs, lty)


def check_rule_wellformed(rule: RuleSchema, sig: Signature) -> None:
    """Re-verify scoping and type agreement of an existing schema."""
    deps: dict[str, tuple] = {}
    _scan_deps(rule.lhs, (), rule.decls, deps, "lhs")
    _scan_deps(rule.rhs, (), rule.decls, deps, "rhs")
    lty = typecheck(rule.lhs, sig)
    rty = typecheck(rule.rhs, sig)
    if lty != rty:
        raise TypeMismatch(f"rule '{rule.name}': sides have different types")


# ---------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------


class Replacement:
    """Bindings produced by matching: metavariable name -> term or type."""

    def __init__(self):
        self.map: dict[str, object] = {}

    def bind(self, name: str, value) -> bool:
        prev = self.map.get(name)
        if prev is None:
            self.map[name] = value
            return True
        return prev == value

    def __repr__(self):
        items = ", ".join(f"{k} -> {v!r}" for k, v in self.map.items())
        return f"{{{items}}}"


def _match_ty(pat: Ty, sub: Ty, b: Replacement) -> bool:
    if isinstance(pat, TMeta):
        if pat.pend:
            return False  # substitution forms may not occur in patterns
        return b.bind(pat.name, sub)
    if isinstance(pat, PatTLam):
        if not isinstance(sub, TLam) or sub.kind != pat.kind:
            return False
        opened = tsubst(sub.body, 0, TFree(pat.name, pat.kind))
        return _match_ty(pat.body, opened, b)
    if isinstance(pat, PatTAll):
        if not isinstance(sub, TAll) or sub.kind != pat.kind:
            return False
        opened = tsubst(sub.body, 0, TFree(pat.name, pat.kind))
        return _match_ty(pat.body, opened, b)
    if isinstance(pat, TArrow):
        return (
            isinstance(sub, TArrow)
            and _match_ty(pat.lhs, sub.lhs, b)
            and _match_ty(pat.rhs, sub.rhs, b)
        )
    if isinstance(pat, TApp):
        return (
            isinstance(sub, TApp)
            and _match_ty(pat.fn, sub.fn, b)
            and _match_ty(pat.arg, sub.arg, b)
        )
    if isinstance(pat, (TAll, TLam)):
        return (
            type(sub) is type(pat)
            and sub.kind == pat.kind
            and _match_ty(pat.body, sub.body, b)
        )
    return pat == sub


def _match_tm(pat: Tm, sub: Tm, b: Replacement) -> bool:
    if isinstance(pat, Meta):
        if pat.pend:
            return False
        return b.bind(pat.name, sub)
    if isinstance(pat, PatAbs):
        if not isinstance(sub, Abs):
            return False
        if not _match_ty(pat.ty, sub.ty, b):
            return False
        opened = subst_v(sub.body, 0, Free(pat.name, sub.ty))
        return _match_tm(pat.body, opened, b)
    if isinstance(pat, PatTyAbs):
        if not isinstance(sub, TyAbs) or sub.kind != pat.kind:
            return False
        opened = subst_tv(sub.body, 0, TFree(pat.name, pat.kind))
        return _match_tm(pat.body, opened, b)
    if isinstance(pat, App):
        return (
            isinstance(sub, App)
            and _match_tm(pat.fn, sub.fn, b)
            and _match_tm(pat.arg, sub.arg, b)
        )
    if isinstance(pat, TyApp):
        return (
            isinstance(sub, TyApp)
            and _match_tm(pat.fn, sub.fn, b)
            and _match_ty(pat.ty, sub.ty, b)
        )
    if isinstance(pat, Abs):
        return (
            isinstance(sub, Abs)
            and _match_ty(pat.ty, sub.ty, b)
            and _match_tm(pat.body, sub.body, b)
        )
    if isinstance(pat, TyAbs):
        return (
            isinstance(sub, TyAbs)
            and sub.kind == pat.kind
            and _match_tm(pat.body, sub.body, b)
        )
    return pat == sub


def match_schema(pattern: Tm, subject: Tm) -> Replacement | None:
    """First-order matching on the rigid symbol skeleton; binders in the
    pattern open the subject.  The reproduction property (instantiating the
    pattern with the result yields the subject) is verified before the
    bindings are returned."""
    b = Replacement()
    if not _match_tm(pattern, subject, b):
        return None
    if inst_tm(pattern, b.map) != subject:
        return None
    return b


# ---------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------

_TERM_CHILDREN = {
    App: ("fn", "arg"),
    TyApp: ("fn",),
    Abs: ("body",),
    TyAbs: ("body",),
    PatAbs: ("body",),
    PatTyAbs: ("body",),
}


def _positions(t: Tm, path: tuple = ()):
    yield path, t
    attrs = _TERM_CHILDREN.get(type(t))
    if attrs:
        for i, a in enumerate(attrs):
            yield from _positions(getattr(t, a), path + (i,))


def _rebuild(t: Tm, path: tuple, new: Tm) -> Tm:
    if not path:
        return new
    attrs = _TERM_CHILDREN[type(t)]
    ix = path[0]
    child = getattr(t, attrs[ix])
    rebuilt = _rebuild(child, path[1:], new)
    if isinstance(t, App):
        return App(rebuilt, t.arg) if ix == 0 else App(t.fn, rebuilt)
    if isinstance(t, TyApp):
        return TyApp(rebuilt, t.ty)
    if isinstance(t, Abs):
        return Abs(t.ty, rebuilt, t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, rebuilt, t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, t.ty, rebuilt)
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, rebuilt)
    raise AssertionError


class Context:
    """A term with a single hole, as (whole term, path to the hole)."""

    def __init__(self, term: Tm, path: tuple):
        self.term = term
        self.path = path

    def plug(self, t: Tm) -> Tm:
        return _rebuild(self.term, self.path, t)

    def __repr__(self):
        return f"<context @ {'.'.join(map(str, self.path)) or 'root'}>"


def rewrite_step(t: Tm, rules: list[RuleSchema]):
    """All one-step reducts, leftmost-outermost position order, rule order
    as declared: a list of (rule name, Context, reduct)."""
    out = []
    for path, sub in _positions(t):
        for rule in rules:
            b = match_schema(rule.lhs, sub)
            if b is not None:
                ctx = Context(t, path)
                out.append((rule.name, ctx, ctx.plug(inst_tm(rule.rhs, b.map))))
    return out


class System:
    """A parsed PFS: signature plus rule schemas in declaration order."""

    def __init__(self, sig: Signature, rules: list[RuleSchema]):
        self.sig = sig
        self.rules = list(rules)

    def rule(self, name: str) -> RuleSchema:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)
