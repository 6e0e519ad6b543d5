"""Text formats: the system file, the interpretation file, and the term
and type syntax shared with the command line.

Surface syntax (ASCII; a Unicode pretty-print flag exists for output only):

    kinds         *        k1 => k2
    types         nat      a -> b      !a:*. t       \\a:*. t      f a
    terms         \\x:T. t   /\\a:K. t    f t u    t[T]    7
                  t (+) u    t (*) u      lift[T] t    flatten[T] t
    explicit substitution on rule right-hand sides:   S[x := t]
    macros        #prod[T1,T2]   #ex[\\a:K. T]           (types)
                  #pair[T1,T2](t,u)  #pi1[T1,T2](t)  #pi2[T1,T2](t)
                  #expair[\\a:K. T ; T2](t)              (terms)
    comments      -- to end of line

Multiline statements are joined until the next line that starts with a
top-level keyword.  Binder annotations that themselves contain binders
need parentheses: ``\\x:(!a:*. a -> a). x``.
"""

from __future__ import annotations

import re

from .errors import ParseError, SignatureError
from .interp import FLATTEN, INTERP_SIG, LIFT, PLUS, TIMES
from .pfs import MetaDecl, RuleSchema, System, make_rule
from .prover import Interpretation, validate_interpretation
from .syntax import (
    NAT,
    STAR,
    Abs,
    App,
    Free,
    KArrow,
    Kind,
    Meta,
    Num,
    PatAbs,
    PatTAll,
    PatTLam,
    PatTyAbs,
    Signature,
    Star,
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
    tshift,
    shift_t,
    shift_v,
    typecheck,
)

KEYWORDS = (
    "kind", "chi", "symbol", "rule", "meta",
    "typemap", "map", "hint", "cover", "qed", "beta", "approx",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<oplus>\(\+\))
  | (?P<otimes>\(\*\))
  | (?P<tylam>/\\)
  | (?P<arrow>->)
  | (?P<karrow>=>)
  | (?P<assign>:=)
  | (?P<takefrom><-)
  | (?P<num>\d+)
  | (?P<macro>\#[a-z][a-z0-9]*)
  | (?P<ident>(?:[A-Za-z](?:[A-Za-z0-9_']|-(?=[A-Za-z0-9]))*)|@)
  | (?P<punct>[()\[\]{}.,:;=!\\*])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.text!r}@{self.line}:{self.col}"


def tokenize(src: str):
    tokens = []
    line = 1
    col = 1
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Token | None:
        j = self.i + ahead
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else None
            raise ParseError(
                "unexpected end of input",
                last.line if last else 0,
                last.col if last else 0,
            )
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def done(self) -> bool:
        return self.i >= len(self.toks)


# =====================================================================
# Kinds and types
# =====================================================================


def parse_kind(ts: TokenStream) -> Kind:
    left = _parse_kind_atom(ts)
    if ts.eat("=>"):
        return KArrow(left, parse_kind(ts))
    return left


def _parse_kind_atom(ts: TokenStream) -> Kind:
    t = ts.next()
    if t.text == "*":
        return STAR
    if t.text == "(":
        k = parse_kind(ts)
        ts.expect(")")
        return k
    raise ParseError(f"expected a kind, found {t.text!r}", t.line, t.col)


class Ctx:
    """Parsing context: signature, metavariable declarations, binder
    stacks, free-variable pool, and whether pattern syntax is allowed."""

    def __init__(self, sig: Signature, metas: dict | None = None,
                 frees: dict | None = None, pattern: bool = False,
                 tycon_alias: dict | None = None):
        self.sig = sig
        self.metas = metas or {}
        self.frees = frees or {}
        self.pattern = pattern
        self.tycon_alias = tycon_alias or {}
        # binder stacks, innermost last: ('db', name, ty/kind) or ('pat', ...)
        self.tm_binders: list[tuple] = []
        self.ty_binders: list[tuple] = []
        self.subst_sorts: dict[str, str] = {}

    def tdepth(self) -> int:
        return sum(1 for b in self.ty_binders if b[0] == "db")

    def venv(self) -> tuple:
        return tuple((b[2], b[3]) for b in self.tm_binders if b[0] == "db")

    def kenv(self) -> tuple:
        return tuple(b[2] for b in reversed(self.ty_binders) if b[0] == "db")


def parse_type(ts: TokenStream, ctx: Ctx, toplevel: bool = True) -> Ty:
    t = ts.peek()
    if t is not None and toplevel:
        if t.text == "!":
            ts.next()
            name = ts.next()
            ts.expect(":")
            kind = parse_kind(ts)
            ts.expect(".")
            return _ty_binder(ts, ctx, TAll, PatTAll, name.text, kind)
        if t.text == "\\":
            ts.next()
            name = ts.next()
            ts.expect(":")
            kind = parse_kind(ts)
            ts.expect(".")
            return _ty_binder(ts, ctx, TLam, PatTLam, name.text, kind)
    left = _parse_type_app(ts, ctx)
    if ts.eat("->"):
        return TArrow(left, parse_type(ts, ctx, toplevel))
    return left


def _ty_binder(ts, ctx, plain_cls, pat_cls, name, kind):
    if ctx.pattern:
        ctx.ty_binders.append(("pat", name, kind))
        ctx.subst_sorts.setdefault(name, "T")
        body = parse_type(ts, ctx, True)
        ctx.ty_binders.pop()
        return pat_cls(name, kind, body)
    ctx.ty_binders.append(("db", name, kind))
    body = parse_type(ts, ctx, True)
    ctx.ty_binders.pop()
    return plain_cls(kind, body, name)


def _parse_type_app(ts: TokenStream, ctx: Ctx) -> Ty:
    out = _parse_type_atom(ts, ctx)
    while True:
        t = ts.peek()
        if t is None:
            return out
        if t.kind in ("ident", "num") or t.text == "(" or t.kind == "macro":
            if t.kind == "num":
                raise ParseError("numbers cannot appear in types", t.line, t.col)
            out = TApp(out, _parse_type_atom(ts, ctx))
        else:
            return out


def _parse_type_atom(ts: TokenStream, ctx: Ctx) -> Ty:
    t = ts.next()
    if t.text == "(":
        inner = parse_type(ts, ctx, True)
        ts.expect(")")
        return inner
    if t.kind == "macro":
        return _parse_type_macro(ts, ctx, t)
    if t.kind != "ident":
        raise ParseError(f"expected a type, found {t.text!r}", t.line, t.col)
    name = t.text
    for i, b in enumerate(reversed(ctx.ty_binders)):
        if b[1] == name:
            if b[0] == "pat":
                return TFree(name, b[2])
            ix = sum(
                1
                for bb in list(reversed(ctx.ty_binders))[:i]
                if bb[0] == "db"
            )
            return TVar(ix)
    decl = ctx.metas.get(name)
    if decl is not None:
        if decl.sort != "T":
            raise ParseError(
                f"'{name}' is a term metavariable, not a type", t.line, t.col
            )
        return TMeta(name, decl.kind)
    if name in ctx.tycon_alias:
        return ctx.tycon_alias[name]  # closed image
    if name in ctx.sig.tycons:
        return TCon(name, ctx.sig.tycons[name])
    raise ParseError(f"unknown type name '{name}'", t.line, t.col)


def _parse_type_macro(ts: TokenStream, ctx: Ctx, tok: Token) -> Ty:
    if tok.text == "#prod":
        ts.expect("[")
        t1 = parse_type(ts, ctx, True)
        ts.expect(",")
        t2 = parse_type(ts, ctx, True)
        ts.expect("]")
        # !p:*. (T1 -> T2 -> p) -> p
        return TAll(
            STAR,
            TArrow(
                TArrow(tshift(t1, 1), TArrow(tshift(t2, 1), TVar(0))), TVar(0)
            ),
            "p",
        )
    if tok.text == "#ex":
        ts.expect("[")
        ts.expect("\\")
        name = ts.next()
        ts.expect(":")
        kind = parse_kind(ts)
        ts.expect(".")
        ctx.ty_binders.append(("db", name.text, kind))
        body = parse_type(ts, ctx, True)
        ctx.ty_binders.pop()
        ts.expect("]")
        # !p:*. (!a:K. T -> p) -> p
        inner = TAll(kind, TArrow(tshift(body, 1, 1), TVar(1)), name.text)
        return TAll(STAR, TArrow(inner, TVar(0)), "p")
    raise ParseError(f"unknown type macro {tok.text!r}", tok.line, tok.col)


# =====================================================================
# Terms
# =====================================================================


def parse_term(ts: TokenStream, ctx: Ctx) -> Tm:
    t = ts.peek()
    if t is not None and t.text == "\\":
        ts.next()
        name = ts.next()
        ts.expect(":")
        ty = _parse_annotation(ts, ctx)
        ts.expect(".")
        if ctx.pattern:
            ctx.tm_binders.append(("pat", name.text, ty))
            ctx.subst_sorts.setdefault(name.text, "v")
            body = parse_term(ts, ctx)
            ctx.tm_binders.pop()
            return PatAbs(name.text, ty, body)
        ctx.tm_binders.append(("db", name.text, ty, ctx.tdepth()))
        body = parse_term(ts, ctx)
        ctx.tm_binders.pop()
        return Abs(ty, body, name.text)
    if t is not None and t.kind == "tylam":
        ts.next()
        name = ts.next()
        ts.expect(":")
        kind = parse_kind(ts)
        ts.expect(".")
        if ctx.pattern:
            ctx.ty_binders.append(("pat", name.text, kind))
            ctx.subst_sorts.setdefault(name.text, "T")
            body = parse_term(ts, ctx)
            ctx.ty_binders.pop()
            return PatTyAbs(name.text, kind, body)
        ctx.ty_binders.append(("db", name.text, kind))
        body = parse_term(ts, ctx)
        ctx.ty_binders.pop()
        return TyAbs(kind, body, name.text)
    return _parse_sum(ts, ctx)


def _parse_annotation(ts: TokenStream, ctx: Ctx) -> Ty:
    """Binder annotation: no top-level binders without parentheses."""
    return parse_type(ts, ctx, toplevel=False)


def _operand_type(term: Tm, ctx: Ctx, tok: Token) -> Ty:
    try:
        return typecheck(term, ctx.sig, ctx.venv(), ctx.kenv())
    except Exception as e:
        raise ParseError(
            f"cannot infer the type instantiating the infix operator: {e}",
            tok.line,
            tok.col,
        )


def _parse_sum(ts: TokenStream, ctx: Ctx) -> Tm:
    out = _parse_product(ts, ctx)
    while ts.peek() is not None and ts.peek().kind == "oplus":
        tok = ts.next()
        ty = _operand_type(out, ctx, tok)
        rhs = _parse_product(ts, ctx)
        out = App(App(TyApp(Sym(PLUS), ty), out), rhs)
    return out


def _parse_product(ts: TokenStream, ctx: Ctx) -> Tm:
    out = _parse_appseq(ts, ctx)
    while ts.peek() is not None and ts.peek().kind == "otimes":
        tok = ts.next()
        ty = _operand_type(out, ctx, tok)
        rhs = _parse_appseq(ts, ctx)
        out = App(App(TyApp(Sym(TIMES), ty), out), rhs)
    return out


_TYPE_MACROS = ("#prod", "#ex")


def _is_type_name(name: str, ctx: Ctx) -> bool:
    for b in reversed(ctx.ty_binders):
        if b[1] == name:
            return True
    for b in reversed(ctx.tm_binders):
        if b[1] == name:
            return False
    decl = ctx.metas.get(name)
    if decl is not None:
        return decl.sort == "T"
    return name in ctx.sig.tycons or name in ctx.tycon_alias


def _parse_appseq(ts: TokenStream, ctx: Ctx) -> Tm:
    out = _parse_prim(ts, ctx)
    while True:
        t = ts.peek()
        if t is None:
            return out
        if t.text == "[":
            nxt = ts.peek(1)
            nxt2 = ts.peek(2)
            if (
                nxt is not None
                and nxt.kind == "ident"
                and nxt2 is not None
                and nxt2.kind == "assign"
            ):
                out = _parse_subst_suffix(ts, ctx, out)
            else:
                ts.next()
                ty = parse_type(ts, ctx, True)
                ts.expect("]")
                out = TyApp(out, ty)
            continue
        if t.text == ".":
            ts.next()
            out = App(out, _parse_prim(ts, ctx))
            continue
        if t.kind == "ident":
            if _is_type_name(t.text, ctx):
                out = TyApp(out, _parse_type_atom(ts, ctx))
            else:
                out = App(out, _parse_prim(ts, ctx))
            continue
        if t.kind == "num":
            out = App(out, _parse_prim(ts, ctx))
            continue
        if t.kind == "macro":
            if t.text in _TYPE_MACROS:
                out = TyApp(out, _parse_type_atom(ts, ctx))
            else:
                out = App(out, _parse_prim(ts, ctx))
            continue
        if t.text == "(":
            # a parenthesized argument may be a term or a type; the two
            # namespaces are disjoint, so try the term reading first
            save = ts.i
            try:
                out = App(out, _parse_prim(ts, ctx))
            except ParseError:
                ts.i = save
                out = TyApp(out, _parse_type_atom(ts, ctx))
            continue
        return out


def _parse_subst_suffix(ts: TokenStream, ctx: Ctx, out: Tm) -> Tm:
    open_tok = ts.next()  # '['
    name = ts.next().text
    ts.next()  # ':='
    sort = ctx.subst_sorts.get(name)
    if sort is None:
        raise ParseError(
            f"substitution names '{name}', which is not a pattern binder",
            open_tok.line,
            open_tok.col,
        )
    if not isinstance(out, Meta):
        raise ParseError(
            "explicit substitution may only follow a metavariable",
            open_tok.line,
            open_tok.col,
        )
    if sort == "v":
        value = parse_term(ts, ctx)
        entry = ("v", name, value)
    else:
        value = parse_type(ts, ctx, True)
        entry = ("T", name, value)
    ts.expect("]")
    return Meta(out.name, out.ty, out.deps, out.pend + (entry,))


def _parse_prim(ts: TokenStream, ctx: Ctx) -> Tm:
    t = ts.next()
    if t.text == "(":
        inner = parse_term(ts, ctx)
        ts.expect(")")
        return inner
    if t.kind == "num":
        if not ctx.sig.numerals:
            raise ParseError("numerals only exist in interpretation terms", t.line, t.col)
        return Num(int(t.text))
    if t.kind == "macro":
        return _parse_term_macro(ts, ctx, t)
    if t.kind != "ident":
        raise ParseError(f"expected a term, found {t.text!r}", t.line, t.col)
    name = t.text
    db_ix = 0
    for b in reversed(ctx.tm_binders):
        if b[1] == name:
            if b[0] == "pat":
                return Free(name, b[2])
            return Var(db_ix)
        if b[0] == "db":
            db_ix += 1
    decl = ctx.metas.get(name)
    if decl is not None:
        if decl.sort != "v":
            raise ParseError(
                f"'{name}' is a type metavariable, not a term", t.line, t.col
            )
        return Meta(name, decl.ty)
    if name in ctx.sig.funs:
        return Sym(name)
    if name in ctx.frees:
        return Free(name, ctx.frees[name])
    raise ParseError(f"unknown name '{name}'", t.line, t.col)


def _parse_term_macro(ts: TokenStream, ctx: Ctx, tok: Token) -> Tm:
    if tok.text in ("#pair", "#pi1", "#pi2"):
        ts.expect("[")
        t1 = parse_type(ts, ctx, True)
        ts.expect(",")
        t2 = parse_type(ts, ctx, True)
        ts.expect("]")
        ts.expect("(")
        u1 = parse_term(ts, ctx)
        if tok.text == "#pair":
            ts.expect(",")
            u2 = parse_term(ts, ctx)
            ts.expect(")")
            # /\p. \f:T1->T2->p. f u1 u2
            body = App(
                App(Var(0), shift_v(shift_t(u1, 1), 1)),
                shift_v(shift_t(u2, 1), 1),
            )
            fnty = TArrow(tshift(t1, 1), TArrow(tshift(t2, 1), TVar(0)))
            return TyAbs(STAR, Abs(fnty, body, "f"), "p")
        ts.expect(")")
        if tok.text == "#pi1":
            # u1[T1] (\x:T1.\y:T2.x)
            sel = Abs(t1, Abs(t2, Var(1), "y"), "x")
            return App(TyApp(u1, t1), sel)
        sel = Abs(t1, Abs(t2, Var(0), "y"), "x")
        return App(TyApp(u1, t2), sel)
    if tok.text == "#expair":
        ts.expect("[")
        ts.expect("\\")
        name = ts.next()
        ts.expect(":")
        kind = parse_kind(ts)
        ts.expect(".")
        ctx.ty_binders.append(("db", name.text, kind))
        body_ty = parse_type(ts, ctx, True)
        ctx.ty_binders.pop()
        ts.expect(";")
        wit = parse_type(ts, ctx, True)
        ts.expect("]")
        ts.expect("(")
        u = parse_term(ts, ctx)
        ts.expect(")")
        # /\p. \f:(!a:K. T -> p). f[T2] u
        fnty = TAll(kind, TArrow(tshift(body_ty, 1, 1), TVar(1)), name.text)
        body = App(TyApp(Var(0), tshift(wit, 1)), shift_v(shift_t(u, 1), 1))
        return TyAbs(STAR, Abs(fnty, body, "f"), "p")
    raise ParseError(f"unknown term macro {tok.text!r}", tok.line, tok.col)


# =====================================================================
# Printing
# =====================================================================

_UNI = {
    "->": "→", "=>": "⇒", "!": "∀", "\\": "λ",
    "/\\": "Λ", "(+)": "⊕", "(*)": "⊗",
}


def _tok(sym: str, unicode: bool) -> str:
    return _UNI[sym] if unicode else sym


def print_kind(k: Kind, unicode: bool = False) -> str:
    if isinstance(k, Star):
        return "*"
    left = print_kind(k.left, unicode)
    if isinstance(k.left, KArrow):
        left = f"({left})"
    return f"{left} {_tok('=>', unicode)} {print_kind(k.right, unicode)}"


def _fresh_name(hint: str, used: set) -> str:
    base = hint.split("#")[0] or "a"
    if base not in used:
        return base
    i = 1
    while f"{base}{i}" in used:
        i += 1
    return f"{base}{i}"


def print_type(ty: Ty, unicode: bool = False, env: tuple = ()) -> str:
    return _pt(ty, env, set(env), 0, unicode)


def _pt(ty: Ty, env: tuple, used: set, prec: int, uni: bool) -> str:
    # prec: 0 = top (binders ok), 1 = arrow operand, 2 = application operand
    if isinstance(ty, TVar):
        return env[ty.ix] if ty.ix < len(env) else f"?!{ty.ix}"
    if isinstance(ty, TFree):
        return ty.name.split("#")[0] if "#" in ty.name else ty.name
    if isinstance(ty, TCon):
        return ty.name
    if isinstance(ty, TMeta):
        s = ty.name
        for n, v in ty.pend:
            nm = n.split("#")[0]
            s += f"[{nm}:={_pt(v, env, used, 0, uni)}]"
        return s
    if isinstance(ty, TArrow):
        lhs = _pt(ty.lhs, env, used, 1, uni)
        rhs = _pt(ty.rhs, env, used, 0, uni)
        s = f"{lhs} {_tok('->', uni)} {rhs}"
        return f"({s})" if prec >= 1 else s
    if isinstance(ty, (TAll, TLam)):
        name = _fresh_name(ty.hint, used)
        head = _tok("!" if isinstance(ty, TAll) else "\\", uni)
        body = _pt(ty.body, (name,) + env, used | {name}, 0, uni)
        s = f"{head}{name}:{print_kind(ty.kind, uni)}. {body}"
        return f"({s})" if prec >= 1 else s
    if isinstance(ty, (PatTAll, PatTLam)):
        name = ty.name.split("#")[0]
        head = _tok("!" if isinstance(ty, PatTAll) else "\\", uni)
        body = _pt(ty.body, env, used | {name}, 0, uni)
        s = f"{head}{name}:{print_kind(ty.kind, uni)}. {body}"
        return f"({s})" if prec >= 1 else s
    if isinstance(ty, TApp):
        fn = _pt(ty.fn, env, used, 1, uni)
        arg = _pt(ty.arg, env, used, 2, uni)
        s = f"{fn} {arg}"
        return f"({s})" if prec >= 2 else s
    return "?"


def print_term(t: Tm, unicode: bool = False, env: tuple = (),
               tyenv: tuple = ()) -> str:
    used = set(env) | set(tyenv)
    return _pm(t, env, tyenv, used, 0, unicode)


def _binop_view(t: Tm):
    if (
        isinstance(t, App)
        and isinstance(t.fn, App)
        and isinstance(t.fn.fn, TyApp)
        and isinstance(t.fn.fn.fn, Sym)
        and t.fn.fn.fn.name in (PLUS, TIMES)
    ):
        return t.fn.fn.fn.name, t.fn.arg, t.arg
    return None


def _pm(t: Tm, env: tuple, tyenv: tuple, used: set, prec: int, uni: bool) -> str:
    # prec: 0 top/binders, 1 sum operand, 2 product operand, 3 application
    #       operand
    if isinstance(t, Var):
        return env[t.ix] if t.ix < len(env) else f"?#{t.ix}"
    if isinstance(t, Free):
        return t.name.split("#")[0] if "#" in t.name else t.name
    if isinstance(t, Sym):
        return t.name
    if isinstance(t, Num):
        return str(t.val)
    if isinstance(t, Meta):
        s = t.name
        for k, n, v in t.pend:
            nm = n.split("#")[0]
            if k == "v":
                s += f"[{nm}:={_pm(v, env, tyenv, used, 0, uni)}]"
            else:
                s += f"[{nm}:={_pt(v, tyenv, used, 0, uni)}]"
        return s
    view = _binop_view(t)
    if view is not None:
        name, a, b = view
        if name == PLUS:
            s = (
                f"{_pm(a, env, tyenv, used, 1, uni)} {_tok('(+)', uni)} "
                f"{_pm(b, env, tyenv, used, 2, uni)}"
            )
            return f"({s})" if prec >= 2 else s
        s = (
            f"{_pm(a, env, tyenv, used, 2, uni)} {_tok('(*)', uni)} "
            f"{_pm(b, env, tyenv, used, 3, uni)}"
        )
        return f"({s})" if prec >= 3 else s
    if isinstance(t, (Abs, PatAbs)):
        if isinstance(t, Abs):
            name = _fresh_name(t.hint, used)
            benv, btyenv = (name,) + env, tyenv
        else:
            name = t.name.split("#")[0]
            benv, btyenv = env, tyenv
        ann = _pt(t.ty, tyenv, used, 1, uni)
        body = _pm(t.body, benv, btyenv, used | {name}, 0, uni)
        s = f"{_tok(chr(92), uni)}{name}:{ann}. {body}"
        return f"({s})" if prec >= 1 else s
    if isinstance(t, (TyAbs, PatTyAbs)):
        if isinstance(t, TyAbs):
            name = _fresh_name(t.hint, used)
            btyenv = (name,) + tyenv
        else:
            name = t.name.split("#")[0]
            btyenv = tyenv
        body = _pm(t.body, env, btyenv, used | {name}, 0, uni)
        s = f"{_tok('/' + chr(92), uni)}{name}:{print_kind(t.kind, uni)}. {body}"
        return f"({s})" if prec >= 1 else s
    if isinstance(t, App):
        fn = _pm(t.fn, env, tyenv, used, 2, uni)
        arg = _pm(t.arg, env, tyenv, used, 3, uni)
        s = f"{fn} {arg}"
        return f"({s})" if prec >= 3 else s
    if isinstance(t, TyApp):
        fn = _pm(t.fn, env, tyenv, used, 2, uni)
        s = f"{fn}[{_pt(t.ty, tyenv, used, 0, uni)}]"
        return f"({s})" if prec >= 3 else s
    return "?"


# =====================================================================
# Logical lines
# =====================================================================


def _logical_lines(src: str):
    """Statements start at column zero; indented lines continue the
    statement above.  Yields (first line number, joined text)."""
    out = []
    current: list[str] = []
    start = 0
    for no, raw in enumerate(src.splitlines(), 1):
        stripped = raw.split("--", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indented = stripped[0].isspace()
        if indented and current:
            current.append(stripped.strip())
        else:
            if current:
                out.append((start, " ".join(current)))
            current = [stripped.strip()]
            start = no
    if current:
        out.append((start, " ".join(current)))
    return out


def _line_stream(text: str, line_no: int) -> TokenStream:
    toks = tokenize(text)
    for t in toks:
        t.line = line_no
    return TokenStream(toks)


# =====================================================================
# System files
# =====================================================================


def parse_system(src: str) -> System:
    lines = _logical_lines(src)
    tycons: dict[str, Kind] = {}
    chi_name = None
    for no, text in lines:
        head = text.split(None, 1)[0]
        if head == "kind":
            ts = _line_stream(text, no)
            ts.expect("kind")
            name = ts.next().text
            ts.expect(":")
            kind = parse_kind(ts)
            if not ts.done():
                raise ParseError("trailing input after kind declaration", no, 0)
            if name in tycons:
                raise SignatureError(f"type constant '{name}' declared twice")
            tycons[name] = kind
        elif head == "chi":
            ts = _line_stream(text, no)
            ts.expect("chi")
            chi_name = ts.next().text

    funs: dict[str, Ty] = {}
    sigless = Signature(tycons, {}, None, pfs_shape=False)
    for no, text in lines:
        if text.split(None, 1)[0] != "symbol":
            continue
        ts = _line_stream(text, no)
        ts.expect("symbol")
        name = ts.next().text
        ts.expect(":")
        ctx = Ctx(sigless)
        ty = parse_type(ts, ctx, True)
        if not ts.done():
            t = ts.peek()
            raise ParseError("trailing input after symbol type", t.line, t.col)
        funs[name] = beta_normalize_type(ty)

    sig = Signature(tycons, funs, chi_name, pfs_shape=True)

    rules: list[RuleSchema] = []
    i = 0
    while i < len(lines):
        no, text = lines[i]
        head = text.split(None, 1)[0]
        if head != "rule":
            i += 1
            continue
        ts = _line_stream(text, no)
        ts.expect("rule")
        rname = ts.next().text
        if not ts.done():
            raise ParseError("rule name line takes no further input", no, 0)
        i += 1
        decls: dict[str, MetaDecl] = {}
        while i < len(lines) and lines[i][1].split(None, 1)[0] == "meta":
            mno, mtext = lines[i]
            mts = _line_stream(mtext, mno)
            mts.expect("meta")
            mname = mts.next().text
            mts.expect(":")
            # a kind starts with '*' or '(' followed by kind text; a type
            # otherwise.  Try the kind reading first.
            save = mts.i
            try:
                kd = parse_kind(mts)
                if not mts.done():
                    raise ParseError("trailing", mno, 0)
                decls[mname] = MetaDecl(mname, "T", kind=kd)
            except ParseError:
                mts.i = save
                ctx = Ctx(sig, metas=decls, pattern=True)
                ty = parse_type(mts, ctx, True)
                if not mts.done():
                    t = mts.peek()
                    raise ParseError(
                        "trailing input after metavariable type", t.line, t.col
                    )
                decls[mname] = MetaDecl(mname, "v", ty=ty)
            i += 1
        if i >= len(lines):
            raise ParseError(f"rule '{rname}' has no rule line", no, 0)
        rno, rtext = lines[i]
        if rtext.split(None, 1)[0] in KEYWORDS:
            raise ParseError(f"rule '{rname}' has no rule line", rno, 0)
        rts = _line_stream(rtext, rno)
        ctx = Ctx(sig, metas=decls, pattern=True)
        lhs = parse_term(rts, ctx)
        rts.expect("=>")
        rhs = parse_term(rts, ctx)
        if not rts.done():
            t = rts.peek()
            raise ParseError("trailing input after rule", t.line, t.col)
        rules.append(make_rule(rname, decls, lhs, rhs, sig))
        i += 1

    return System(sig, rules)


# =====================================================================
# Interpretation files
# =====================================================================


def parse_hint_steps(ts: TokenStream, line: int) -> list:
    steps = []
    while not ts.done():
        t = ts.next()
        if t.text == ";":
            continue
        if t.text in ("beta", "approx"):
            steps.append((t.text,))
            continue
        if t.text == "cover":
            r = ts.next()
            if r.kind != "ident" or not r.text.startswith("R"):
                raise ParseError("expected R<index>", r.line, r.col)
            ts.expect("<-")
            l = ts.next()
            if l.kind != "ident" or not l.text.startswith("L"):
                raise ParseError("expected L<index>", l.line, l.col)
            amt = 1
            if ts.at("x"):
                ts.next()
                amt_t = ts.next()
                amt = int(amt_t.text)
            elif ts.peek() is not None and ts.peek().kind == "ident" and \
                    ts.peek().text.startswith("x") and ts.peek().text[1:].isdigit():
                amt = int(ts.next().text[1:])
            mode_t = ts.next()
            if mode_t.text not in ("match", "congruence"):
                raise ParseError(
                    f"expected match or congruence, found {mode_t.text!r}",
                    mode_t.line, mode_t.col,
                )
            steps.append(("cover", int(r.text[1:]), int(l.text[1:]), amt, mode_t.text))
            continue
        if t.text == "qed":
            claim = ts.next()
            if claim.text not in ("strict", "weak"):
                raise ParseError(
                    f"expected strict or weak, found {claim.text!r}",
                    claim.line, claim.col,
                )
            steps.append(("qed", claim.text))
            continue
        raise ParseError(f"unknown hint step {t.text!r}", t.line, t.col)
    return steps


def format_hint_steps(steps: list) -> str:
    parts = []
    for s in steps:
        if s[0] == "cover":
            _, ri, li, amt, mode = s
            parts.append(f"cover R{ri} <- L{li} x{amt} {mode}")
        elif s[0] == "qed":
            parts.append(f"qed {s[1]}")
        else:
            parts.append(s[0])
    return "; ".join(parts)


def parse_interp(src: str, system: System, label: str = "interpretation") -> Interpretation:
    tmap: dict[str, Ty] = {}
    jmap: dict[str, Tm] = {}
    hints: dict[str, list] = {}
    isig = INTERP_SIG
    for no, text in _logical_lines(src):
        head = text.split(None, 1)[0]
        ts = _line_stream(text, no)
        if head == "typemap":
            ts.expect("typemap")
            name = ts.next().text
            ts.expect("=")
            ctx = Ctx(isig)
            ty = parse_type(ts, ctx, True)
            if not ts.done():
                t = ts.peek()
                raise ParseError("trailing input after typemap", t.line, t.col)
            tmap[name] = beta_normalize_type(ty)
        elif head == "map":
            ts.expect("map")
            name = ts.next().text
            ts.expect("=")
            ctx = Ctx(isig, tycon_alias=tmap)
            tm = parse_term(ts, ctx)
            if not ts.done():
                t = ts.peek()
                raise ParseError("trailing input after map", t.line, t.col)
            jmap[name] = tm
        elif head == "hint":
            ts.expect("hint")
            rname = ts.next().text
            if ts.at(":"):
                ts.next()
            hints[rname] = parse_hint_steps(ts, no)
        else:
            raise ParseError(f"unknown statement '{head}'", no, 1)
    interp = Interpretation(label, tmap, jmap, hints)
    validate_interpretation(interp, system.sig)
    for rname in hints:
        system.rule(rname)  # raises KeyError for unknown rules
    return interp


# =====================================================================
# Entry points for single terms/types (CLI, tests)
# =====================================================================


def parse_interp_term(text: str, frees: dict | None = None) -> Tm:
    ts = TokenStream(tokenize(text))
    ctx = Ctx(INTERP_SIG, frees=frees or {})
    t = parse_term(ts, ctx)
    if not ts.done():
        tok = ts.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return t


def parse_interp_type(text: str) -> Ty:
    ts = TokenStream(tokenize(text))
    ctx = Ctx(INTERP_SIG)
    ty = parse_type(ts, ctx, True)
    if not ts.done():
        tok = ts.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return beta_normalize_type(ty)
