"""The interpretation-term calculus.

Terms over the single type constant ``nat``, numerals, and the polymorphic
symbols ``plus``, ``times``, ``flatten`` and ``lift``.  The reduction
relation has thirteen clauses; 1-3 are the congruence closure and 4-13 are
the contractions, numbered as in the definition:

   4  beta (term and type)
   5  plus/times on numerals at nat
   6  plus/times pointwise at arrow types
   7  plus/times pointwise at quantified types
   8  flatten at nat          11  lift at nat
   9  flatten at arrow types  12  lift at arrow types
  10  flatten at quantified   13  lift at quantified types

Whether a symbol application is a redex depends on the (always beta-normal)
type it is instantiated at, so instantiating a type variable can create new
redexes.  The relation is confluent and terminating on well-typed terms;
normal forms are therefore unique and strategy-independent, which the test
suite checks empirically.
"""

from __future__ import annotations

from .errors import FuelExhausted, NotFinal, NotNat
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
    PatTyAbs,
    Signature,
    Sym,
    TAll,
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
    chi,
    shift_t,
    shift_v,
    subst_free,
    subst_tfree_tm,
    subst_tv,
    subst_v,
    term_size,
    tsubst,
    typecheck,
)

PLUS = "plus"
TIMES = "times"
FLATTEN = "flatten"
LIFT = "lift"

_BINOP_TY = TAll(STAR, TArrow(TVar(0), TArrow(TVar(0), TVar(0))))

INTERP_SIG = Signature(
    tycons={"nat": STAR},
    funs={
        PLUS: _BINOP_TY,
        TIMES: _BINOP_TY,
        FLATTEN: TAll(STAR, TArrow(TVar(0), NAT)),
        LIFT: TAll(STAR, TArrow(NAT, TVar(0))),
    },
    chi_name="nat",
    numerals=True,
)


def op(name: str, ty: Ty, a: Tm, b: Tm) -> Tm:
    return App(App(TyApp(Sym(name), ty), a), b)


def oplus(ty: Ty, a: Tm, b: Tm) -> Tm:
    return op(PLUS, ty, a, b)


def otimes(ty: Ty, a: Tm, b: Tm) -> Tm:
    return op(TIMES, ty, a, b)


def lift(ty: Ty, a: Tm) -> Tm:
    return App(TyApp(Sym(LIFT), ty), a)


def flatten(ty: Ty, a: Tm) -> Tm:
    return App(TyApp(Sym(FLATTEN), ty), a)


def typecheck_interp(t: Tm, venv: tuple = (), kenv: tuple = ()) -> Ty:
    return typecheck(t, INTERP_SIG, venv, kenv)


# ---------------------------------------------------------------------
# Root contraction
# ---------------------------------------------------------------------


def _binop_parts(t: Tm):
    """Match  op[ty] a b  for op in {plus, times}; None otherwise."""
    if not isinstance(t, App):
        return None
    f1 = t.fn
    if not isinstance(f1, App):
        return None
    f2 = f1.fn
    if not isinstance(f2, TyApp) or not isinstance(f2.fn, Sym):
        return None
    name = f2.fn.name
    if name != PLUS and name != TIMES:
        return None
    return name, f2.ty, f1.arg, t.arg


def _unop_parts(t: Tm):
    """Match  op[ty] a  for op in {flatten, lift}; None otherwise."""
    if not isinstance(t, App):
        return None
    f1 = t.fn
    if not isinstance(f1, TyApp) or not isinstance(f1.fn, Sym):
        return None
    name = f1.fn.name
    if name != FLATTEN and name != LIFT:
        return None
    return name, f1.ty, t.arg


def root_contract(t: Tm):
    """One contraction at the root; returns (rule number, reduct) or None."""
    if isinstance(t, App):
        fn = t.fn
        if isinstance(fn, Abs):
            return 4, subst_v(fn.body, 0, t.arg)
        if isinstance(fn, PatAbs):
            return 4, subst_free(fn.body, fn.name, t.arg)
        bi = _binop_parts(t)
        if bi is not None:
            name, ty, a, b = bi
            if isinstance(ty, TCon):  # the only constant is nat
                if isinstance(a, Num) and isinstance(b, Num):
                    val = a.val + b.val if name == PLUS else a.val * b.val
                    return 5, Num(val)
                return None
            if isinstance(ty, TArrow):
                body = op(
                    name,
                    ty.rhs,
                    App(shift_v(a, 1), Var(0)),
                    App(shift_v(b, 1), Var(0)),
                )
                return 6, Abs(ty.lhs, body)
            if isinstance(ty, TAll):
                body = op(
                    name,
                    ty.body,
                    TyApp(shift_t(a, 1), TVar(0)),
                    TyApp(shift_t(b, 1), TVar(0)),
                )
                return 7, TyAbs(ty.kind, body, ty.hint)
            return None
        un = _unop_parts(t)
        if un is not None:
            name, ty, a = un
            if name == FLATTEN:
                if isinstance(ty, TCon):
                    return 8, a
                if isinstance(ty, TArrow):
                    return 9, flatten(ty.rhs, App(a, lift(ty.lhs, Num(0))))
                if isinstance(ty, TAll):
                    x = chi(ty.kind)
                    return 10, flatten(tsubst(ty.body, 0, x), TyApp(a, x))
                return None
            else:
                if isinstance(ty, TCon):
                    return 11, a
                if isinstance(ty, TArrow):
                    return 12, Abs(ty.lhs, lift(ty.rhs, shift_v(a, 1)))
                if isinstance(ty, TAll):
                    return 13, TyAbs(ty.kind, lift(ty.body, shift_t(a, 1)), ty.hint)
                return None
        return None
    if isinstance(t, TyApp):
        fn = t.fn
        if isinstance(fn, TyAbs):
            return 4, subst_tv(fn.body, 0, t.ty)
        if isinstance(fn, PatTyAbs):
            return 4, subst_tfree_tm(fn.body, fn.name, t.ty)
        return None
    return None


# ---------------------------------------------------------------------
# Fast normalization (innermost, memoized)
# ---------------------------------------------------------------------


class Budget:
    """Mutable step counter; exhaustion signals an implementation bug."""

    __slots__ = ("left",)

    def __init__(self, steps: int):
        self.left = steps

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise FuelExhausted("normalization step budget exhausted")


_NF_CACHE: dict[Tm, Tm] = {}
_NF_CACHE_LIMIT = 400_000


def clear_caches():
    _NF_CACHE.clear()


def default_fuel(t: Tm) -> int:
    n = term_size(t)
    return max(10 * n * n, 1000)


def nf(t: Tm, budget: Budget | None = None) -> Tm:
    """The unique normal form, computed innermost with memoization."""
    if budget is None:
        budget = Budget(default_fuel(t))
    if len(_NF_CACHE) > _NF_CACHE_LIMIT:
        _NF_CACHE.clear()
    return _nf(t, budget)


def _nf(t: Tm, budget: Budget) -> Tm:
    hit = _NF_CACHE.get(t)
    if hit is not None:
        return hit
    orig = t
    t = _nf_children(t, budget)
    while True:
        r = root_contract(t)
        if r is None:
            break
        budget.spend()
        t = _nf_children(r[1], budget)
    _NF_CACHE[orig] = t
    _NF_CACHE[t] = t
    return t


def _nf_children(t: Tm, budget: Budget) -> Tm:
    if isinstance(t, App):
        fn = _nf(t.fn, budget)
        arg = _nf(t.arg, budget)
        return t if fn is t.fn and arg is t.arg else App(fn, arg)
    if isinstance(t, TyApp):
        fn = _nf(t.fn, budget)
        return t if fn is t.fn else TyApp(fn, t.ty)
    if isinstance(t, Abs):
        b = _nf(t.body, budget)
        return t if b is t.body else Abs(t.ty, b, t.hint)
    if isinstance(t, TyAbs):
        b = _nf(t.body, budget)
        return t if b is t.body else TyAbs(t.kind, b, t.hint)
    if isinstance(t, PatAbs):
        b = _nf(t.body, budget)
        return t if b is t.body else PatAbs(t.name, t.ty, b)
    if isinstance(t, PatTyAbs):
        b = _nf(t.body, budget)
        return t if b is t.body else PatTyAbs(t.name, t.kind, b)
    if isinstance(t, Meta):
        pend = tuple(
            (k, n, _nf(v, budget) if k == "v" else v) for k, n, v in t.pend
        )
        if pend == t.pend:
            return t
        return Meta(t.name, t.ty, t.deps, pend)
    return t


# ---------------------------------------------------------------------
# Single-step strategies, redex enumeration, traces
# ---------------------------------------------------------------------

_CHILD_ATTRS = {
    App: (("fn", 0), ("arg", 1)),
    TyApp: (("fn", 0),),
    Abs: (("body", 0),),
    TyAbs: (("body", 0),),
    PatAbs: (("body", 0),),
    PatTyAbs: (("body", 0),),
}


def _children(t: Tm):
    spec = _CHILD_ATTRS.get(type(t))
    if spec is None:
        return ()
    return tuple((ix, getattr(t, attr)) for attr, ix in spec)


def _replace_child(t: Tm, ix: int, new: Tm) -> Tm:
    if isinstance(t, App):
        return App(new, t.arg) if ix == 0 else App(t.fn, new)
    if isinstance(t, TyApp):
        return TyApp(new, t.ty)
    if isinstance(t, Abs):
        return Abs(t.ty, new, t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, new, t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, t.ty, new)
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, new)
    raise AssertionError


def subterm_at(t: Tm, path: tuple) -> Tm:
    for ix in path:
        kids = dict(_children(t))
        t = kids[ix]
    return t


def replace_at(t: Tm, path: tuple, new: Tm) -> Tm:
    if not path:
        return new
    kids = dict(_children(t))
    return _replace_child(t, path[0], replace_at(kids[path[0]], path[1:], new))


def redex_positions(t: Tm, path: tuple = ()):
    """All redex positions in preorder (a position before its subterms,
    function child before argument child)."""
    out = []
    if root_contract(t) is not None:
        out.append(path)
    for ix, c in _children(t):
        out.extend(redex_positions(c, path + (ix,)))
    return out


def reduce_step(t: Tm):
    """All one-step reducts: a list of (rule number, position, reduct)."""
    out = []
    for pos in redex_positions(t):
        rule, contractum = root_contract(subterm_at(t, pos))
        out.append((rule, pos, replace_at(t, pos, contractum)))
    return out


def _first_redex_outermost(t: Tm, path: tuple):
    r = root_contract(t)
    if r is not None:
        return path, r
    for ix, c in _children(t):
        found = _first_redex_outermost(c, path + (ix,))
        if found is not None:
            return found
    return None


def _first_redex_innermost(t: Tm, path: tuple):
    for ix, c in _children(t):
        found = _first_redex_innermost(c, path + (ix,))
        if found is not None:
            return found
    r = root_contract(t)
    if r is not None:
        return path, r
    return None


class TraceEntry:
    """One contraction: rule number, position, and the contracted subterm
    before and after."""

    __slots__ = ("rule", "pos", "before", "after")

    def __init__(self, rule: int, pos: tuple, before: Tm, after: Tm):
        self.rule = rule
        self.pos = pos
        self.before = before
        self.after = after


def normalize(
    t: Tm,
    fuel: int | None = None,
    strategy: str = "outermost",
    trace: bool = False,
):
    """Normalize step by step with the given strategy.

    Returns (normal form, list of TraceEntry); the list is empty unless
    trace is requested.  Raises FuelExhausted when the step budget runs
    out, which for well-typed terms indicates a bug, not a proof failure.
    """
    if fuel is None:
        fuel = default_fuel(t)
    pick = (
        _first_redex_outermost if strategy == "outermost" else _first_redex_innermost
    )
    entries: list[TraceEntry] = []
    steps = 0
    while True:
        found = pick(t, ())
        if found is None:
            return t, entries
        steps += 1
        if steps > fuel:
            raise FuelExhausted(
                f"no normal form within {fuel} steps ({strategy} strategy)"
            )
        pos, (rule, contractum) = found
        if trace:
            entries.append(TraceEntry(rule, pos, subterm_at(t, pos), contractum))
        t = replace_at(t, pos, contractum)


def is_normal(t: Tm) -> bool:
    if root_contract(t) is not None:
        return False
    return all(is_normal(c) for _, c in _children(t))


def is_closed(t: Tm) -> bool:
    return t.v_open == 0 and t.t_open == 0 and not t.names


def is_final(t: Tm) -> bool:
    """Closed and in normal form."""
    return is_closed(t) and is_normal(t)


def nat_value(t: Tm) -> int:
    """The value of a final term of type nat (a numeral)."""
    if isinstance(t, Num):
        return t.val
    if not is_final(t):
        raise NotFinal(f"term is not final: {t.ckey()}")
    raise NotNat(f"final term is not a numeral: {t.ckey()}")
