"""Kinds, type constructors and typed terms of the underlying calculus.

Binders are de Bruijn indices internally, so alpha-equivalence is plain
structural equality; every binder keeps a display name hint for printing.
Two extra node families support rule schemas:

* metavariables (``Meta`` / ``TMeta``) stand for arbitrary well-typed
  subterms.  A metavariable records the pattern binders it may mention
  (its *deps*) and carries a list of *pending substitutions*: substituting
  into an opaque hole cannot be executed, so ``S[x:=t]`` is recorded on the
  node and replayed once the hole is instantiated.
* pattern binders (``PatAbs`` and friends) bind by *name* rather than by
  index.  Their bodies refer to the binder through ``Free``/``TFree``
  nodes, which is what lets pending substitutions name their variable.

Types embedded in terms are kept beta-normal at all times (the canonical
representative of a term); all construction helpers maintain this.
"""

from __future__ import annotations

import sys

from .errors import (
    KindMismatch,
    SignatureError,
    TypeCheckError,
)

sys.setrecursionlimit(200_000)


# =====================================================================
# Kinds
# =====================================================================


class Kind:
    __slots__ = ("_hash",)

    def __hash__(self):
        return self._hash


class Star(Kind):
    __slots__ = ()

    def __init__(self):
        self._hash = hash("*")

    def __eq__(self, other):
        return isinstance(other, Star)

    def __repr__(self):
        return "*"


class KArrow(Kind):
    __slots__ = ("left", "right")

    def __init__(self, left: Kind, right: Kind):
        self.left = left
        self.right = right
        self._hash = hash(("K=>", left._hash, right._hash))

    def __eq__(self, other):
        return (
            isinstance(other, KArrow)
            and self._hash == other._hash
            and self.left == other.left
            and self.right == other.right
        )

    def __repr__(self):
        l = f"({self.left!r})" if isinstance(self.left, KArrow) else repr(self.left)
        return f"{l} => {self.right!r}"


STAR = Star()

EMPTY: frozenset = frozenset()


# =====================================================================
# Type constructors
# =====================================================================


class Ty:
    """Base class of type-constructor nodes."""

    __slots__ = ("_hash", "t_open", "names", "_ckey")

    def __hash__(self):
        return self._hash

    def ckey(self) -> str:
        """Canonical sort key; computed lazily."""
        k = self._ckey
        if k is None:
            k = self._mkckey()
            self._ckey = k
        return k

    def __repr__(self):  # debugging only; surface printing lives in textform
        return self.ckey()


class TVar(Ty):
    __slots__ = ("ix",)

    def __init__(self, ix: int):
        self.ix = ix
        self._hash = hash(("tv", ix))
        self.t_open = ix + 1
        self.names = EMPTY
        self._ckey = None

    def __eq__(self, o):
        return isinstance(o, TVar) and o.ix == self.ix

    def _mkckey(self):
        return f"!{self.ix}"


class TFree(Ty):
    __slots__ = ("name", "kind")

    def __init__(self, name: str, kind: Kind = STAR):
        self.name = name
        self.kind = kind
        self._hash = hash(("tf", name, kind._hash))
        self.t_open = 0
        self.names = frozenset((name,))
        self._ckey = None

    def __eq__(self, o):
        return isinstance(o, TFree) and o.name == self.name and o.kind == self.kind

    def _mkckey(self):
        return f"'{self.name}"


class TCon(Ty):
    __slots__ = ("name", "kind")

    def __init__(self, name: str, kind: Kind = STAR):
        self.name = name
        self.kind = kind
        self._hash = hash(("tc", name, kind._hash))
        self.t_open = 0
        self.names = EMPTY
        self._ckey = None

    def __eq__(self, o):
        return isinstance(o, TCon) and o.name == self.name and o.kind == self.kind

    def _mkckey(self):
        return self.name


class TMeta(Ty):
    """Type-constructor metavariable with pending type substitutions.

    ``deps`` lists the pattern type variables the hole may mention, as
    ``(name, kind)`` pairs; ``pend`` is a tuple of ``(name, Ty)`` recording
    substitutions awaiting instantiation, applied left to right.
    """

    __slots__ = ("name", "kind", "deps", "pend")

    def __init__(self, name: str, kind: Kind, deps: tuple = (), pend: tuple = ()):
        self.name = name
        self.kind = kind
        self.deps = deps
        self.pend = pend
        self._hash = hash(
            ("tm", name, kind._hash, tuple(d[0] for d in deps),
             tuple((n, v._hash) for n, v in pend))
        )
        self.t_open = max((v.t_open for _, v in pend), default=0)
        nm = {name}
        for d, _ in deps:
            nm.add(d)
        for _, v in pend:
            nm |= v.names
        self.names = frozenset(nm)
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, TMeta)
            and o._hash == self._hash
            and o.name == self.name
            and o.kind == self.kind
            and tuple(d[0] for d in o.deps) == tuple(d[0] for d in self.deps)
            and o.pend == self.pend
        )

    def _mkckey(self):
        p = "".join(f"[{n}:={v.ckey()}]" for n, v in self.pend)
        return f"?{self.name}{p}"


class TArrow(Ty):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs: Ty, rhs: Ty):
        self.lhs = lhs
        self.rhs = rhs
        self._hash = hash(("t->", lhs._hash, rhs._hash))
        self.t_open = max(lhs.t_open, rhs.t_open)
        self.names = lhs.names | rhs.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, TArrow)
            and o._hash == self._hash
            and o.lhs == self.lhs
            and o.rhs == self.rhs
        )

    def _mkckey(self):
        return f"({self.lhs.ckey()}->{self.rhs.ckey()})"


class _TyBinder(Ty):
    __slots__ = ("kind", "body", "hint")

    def __init__(self, kind: Kind, body: Ty, hint: str = "a"):
        self.kind = kind
        self.body = body
        self.hint = hint  # display only; not part of identity
        self._hash = hash((self._tag, kind._hash, body._hash))
        self.t_open = max(body.t_open - 1, 0)
        self.names = body.names
        self._ckey = None

    def __eq__(self, o):
        return (
            type(o) is type(self)
            and o._hash == self._hash
            and o.kind == self.kind
            and o.body == self.body
        )

    def _mkckey(self):
        return f"({self._tag}{self.kind!r}.{self.body.ckey()})"


class TAll(_TyBinder):
    __slots__ = ()
    _tag = "A"


class TLam(_TyBinder):
    __slots__ = ()
    _tag = "L"


class TApp(Ty):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: Ty, arg: Ty):
        self.fn = fn
        self.arg = arg
        self._hash = hash(("t@", fn._hash, arg._hash))
        self.t_open = max(fn.t_open, arg.t_open)
        self.names = fn.names | arg.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, TApp)
            and o._hash == self._hash
            and o.fn == self.fn
            and o.arg == self.arg
        )

    def _mkckey(self):
        return f"({self.fn.ckey()} {self.arg.ckey()})"


class _PatTyBinder(Ty):
    """Named type-level pattern binder; the body refers to it via TFree."""

    __slots__ = ("name", "kind", "body")

    def __init__(self, name: str, kind: Kind, body: Ty):
        self.name = name
        self.kind = kind
        self.body = body
        self._hash = hash((self._tag, name, kind._hash, body._hash))
        self.t_open = body.t_open
        self.names = body.names - {name}
        self._ckey = None

    def __eq__(self, o):
        return (
            type(o) is type(self)
            and o._hash == self._hash
            and o.name == self.name
            and o.kind == self.kind
            and o.body == self.body
        )

    def _mkckey(self):
        return f"({self._tag}{self.name}:{self.kind!r}.{self.body.ckey()})"


class PatTLam(_PatTyBinder):
    __slots__ = ()
    _tag = "pL"


class PatTAll(_PatTyBinder):
    __slots__ = ()
    _tag = "pA"


# defining __eq__ clears the inherited __hash__; restore the cached one
for _cls in (Star, KArrow):
    _cls.__hash__ = Kind.__hash__
for _cls in (TVar, TFree, TCon, TMeta, TArrow, TAll, TLam, TApp, PatTLam, PatTAll):
    _cls.__hash__ = Ty.__hash__

NAT = TCon("nat", STAR)


# ---------------------------------------------------------------------
# Type-level operations
# ---------------------------------------------------------------------


def tshift(t: Ty, d: int, cutoff: int = 0) -> Ty:
    """Shift dangling type variables >= cutoff by d."""
    if t.t_open <= cutoff or d == 0:
        return t
    if isinstance(t, TVar):
        return TVar(t.ix + d) if t.ix >= cutoff else t
    if isinstance(t, TArrow):
        return TArrow(tshift(t.lhs, d, cutoff), tshift(t.rhs, d, cutoff))
    if isinstance(t, TApp):
        return TApp(tshift(t.fn, d, cutoff), tshift(t.arg, d, cutoff))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, tshift(t.body, d, cutoff + 1), t.hint)
    if isinstance(t, (PatTLam, PatTAll)):
        return type(t)(t.name, t.kind, tshift(t.body, d, cutoff))
    if isinstance(t, TMeta):
        pend = tuple((n, tshift(v, d, cutoff)) for n, v in t.pend)
        return TMeta(t.name, t.kind, t.deps, pend)
    return t


def mk_tapp(fn: Ty, arg: Ty) -> Ty:
    """Application node; contracts the redex when fn is a lambda."""
    if isinstance(fn, TLam):
        return tsubst(fn.body, 0, arg)
    if isinstance(fn, PatTLam):
        return tsubst_tfree(fn.body, fn.name, arg)
    return TApp(fn, arg)


def tsubst(t: Ty, j: int, val: Ty) -> Ty:
    """Substitute TVar j := val and decrement the variables above j."""
    if t.t_open <= j:
        return t
    if isinstance(t, TVar):
        if t.ix == j:
            return val
        return TVar(t.ix - 1) if t.ix > j else t
    if isinstance(t, TArrow):
        return TArrow(tsubst(t.lhs, j, val), tsubst(t.rhs, j, val))
    if isinstance(t, TApp):
        return mk_tapp(tsubst(t.fn, j, val), tsubst(t.arg, j, val))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, tsubst(t.body, j + 1, tshift(val, 1)), t.hint)
    if isinstance(t, (PatTLam, PatTAll)):
        return type(t)(t.name, t.kind, tsubst(t.body, j, val))
    if isinstance(t, TMeta):
        pend = tuple((n, tsubst(v, j, val)) for n, v in t.pend)
        return TMeta(t.name, t.kind, t.deps, pend)
    return t


def tsubst_tfree(t: Ty, name: str, val: Ty) -> Ty:
    """Substitute the free named type variable; appends a pending
    substitution when it hits an opaque type hole that may mention it."""
    if name not in t.names:
        return t
    if isinstance(t, TFree):
        return val if t.name == name else t
    if isinstance(t, TArrow):
        return TArrow(tsubst_tfree(t.lhs, name, val), tsubst_tfree(t.rhs, name, val))
    if isinstance(t, TApp):
        return mk_tapp(tsubst_tfree(t.fn, name, val), tsubst_tfree(t.arg, name, val))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, tsubst_tfree(t.body, name, tshift(val, 1)), t.hint)
    if isinstance(t, (PatTLam, PatTAll)):
        if t.name == name:  # shadowed; cannot happen with fresh pattern names
            return t
        return type(t)(t.name, t.kind, tsubst_tfree(t.body, name, val))
    if isinstance(t, TMeta):
        hit = t.name == name
        if hit:
            raise TypeCheckError(f"cannot substitute for metavariable '{name}' directly")
        pend = tuple((n, tsubst_tfree(v, name, val)) for n, v in t.pend)
        m = TMeta(t.name, t.kind, t.deps, pend)
        if name in tuple(d[0] for d in t.deps):
            return TMeta(m.name, m.kind, m.deps, m.pend + ((name, val),))
        return m
    return t


def close_tfree(t: Ty, name: str, depth: int = 0) -> Ty:
    """Abstract the named type variable: Free name -> TVar(depth), shifting
    the existing dangling variables up to make room for the new binder."""
    if name not in t.names and t.t_open <= depth:
        return t
    if isinstance(t, TVar):
        return TVar(t.ix + 1) if t.ix >= depth else t
    if isinstance(t, TFree):
        return TVar(depth) if t.name == name else t
    if isinstance(t, TArrow):
        return TArrow(close_tfree(t.lhs, name, depth), close_tfree(t.rhs, name, depth))
    if isinstance(t, TApp):
        return TApp(close_tfree(t.fn, name, depth), close_tfree(t.arg, name, depth))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, close_tfree(t.body, name, depth + 1), t.hint)
    if isinstance(t, (PatTLam, PatTAll)):
        return type(t)(t.name, t.kind, close_tfree(t.body, name, depth))
    if isinstance(t, TMeta):
        pend = tuple((n, close_tfree(v, name, depth)) for n, v in t.pend)
        m = TMeta(t.name, t.kind, t.deps, pend)
        # closing over a hole that may mention the name is a substitution
        if name in tuple(d[0] for d in t.deps):
            return TMeta(m.name, m.kind, m.deps, m.pend + ((name, TVar(depth)),))
        return m
    return t


def kind_of(t: Ty, env: tuple = ()) -> Kind:
    """Kind of a type constructor; env lists binder kinds, innermost first."""
    return _kind_of(t, env, ())


def _kind_of(t: Ty, env: tuple, path: tuple) -> Kind:
    if isinstance(t, TVar):
        if t.ix >= len(env):
            raise KindMismatch(f"unbound type variable {t.ix}", path)
        return env[t.ix]
    if isinstance(t, (TFree, TCon, TMeta)):
        return t.kind
    if isinstance(t, TArrow):
        for i, side in enumerate((t.lhs, t.rhs)):
            if _kind_of(side, env, path + (i,)) != STAR:
                raise KindMismatch("arrow sides must be types", path + (i,))
        return STAR
    if isinstance(t, TAll):
        if _kind_of(t.body, (t.kind,) + env, path + (0,)) != STAR:
            raise KindMismatch("quantified body must be a type", path + (0,))
        return STAR
    if isinstance(t, TLam):
        return KArrow(t.kind, _kind_of(t.body, (t.kind,) + env, path + (0,)))
    if isinstance(t, PatTAll):
        if _kind_of(t.body, env, path + (0,)) != STAR:
            raise KindMismatch("quantified body must be a type", path + (0,))
        return STAR
    if isinstance(t, PatTLam):
        return KArrow(t.kind, _kind_of(t.body, env, path + (0,)))
    if isinstance(t, TApp):
        kf = _kind_of(t.fn, env, path + (0,))
        ka = _kind_of(t.arg, env, path + (1,))
        if not isinstance(kf, KArrow):
            raise KindMismatch("application of a type of base kind", path)
        if kf.left != ka:
            raise KindMismatch(
                f"kind mismatch in type application: expected {kf.left!r}, got {ka!r}",
                path + (1,),
            )
        return kf.right
    raise KindMismatch(f"unknown type node {type(t).__name__}", path)


def beta_normalize_type(t: Ty) -> Ty:
    """Unique beta-normal form of a type constructor."""
    if isinstance(t, (TVar, TFree, TCon)):
        return t
    if isinstance(t, TArrow):
        return TArrow(beta_normalize_type(t.lhs), beta_normalize_type(t.rhs))
    if isinstance(t, TApp):
        return mk_tapp(beta_normalize_type(t.fn), beta_normalize_type(t.arg))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, beta_normalize_type(t.body), t.hint)
    if isinstance(t, (PatTLam, PatTAll)):
        return type(t)(t.name, t.kind, beta_normalize_type(t.body))
    if isinstance(t, TMeta):
        pend = tuple((n, beta_normalize_type(v)) for n, v in t.pend)
        return TMeta(t.name, t.kind, t.deps, pend)
    raise KindMismatch(f"unknown type node {type(t).__name__}")


def canon_ty(t: Ty) -> Ty:
    """Convert named pattern binders into de Bruijn binders, so that types
    compare structurally."""
    if isinstance(t, (TVar, TFree, TCon)):
        return t
    if isinstance(t, TArrow):
        return TArrow(canon_ty(t.lhs), canon_ty(t.rhs))
    if isinstance(t, TApp):
        return mk_tapp(canon_ty(t.fn), canon_ty(t.arg))
    if isinstance(t, (TAll, TLam)):
        return type(t)(t.kind, canon_ty(t.body), t.hint)
    if isinstance(t, PatTLam):
        return TLam(t.kind, close_tfree(canon_ty(t.body), t.name), t.name)
    if isinstance(t, PatTAll):
        return TAll(t.kind, close_tfree(canon_ty(t.body), t.name), t.name)
    if isinstance(t, TMeta):
        pend = tuple((n, canon_ty(v)) for n, v in t.pend)
        return TMeta(t.name, t.kind, t.deps, pend)
    return t


def chi(kind: Kind, base: Ty = NAT) -> Ty:
    """Canonical closed constructor of the given kind: the base type symbol
    under constant lambdas."""
    if isinstance(kind, Star):
        return base
    assert isinstance(kind, KArrow)
    return TLam(kind.left, chi(kind.right, base))


def strip_forall(t: Ty) -> tuple[list[Kind], Ty]:
    kinds = []
    while isinstance(t, TAll):
        kinds.append(t.kind)
        t = t.body
    return kinds, t


def strip_arrows(t: Ty) -> tuple[list[Ty], Ty]:
    args = []
    while isinstance(t, TArrow):
        args.append(t.lhs)
        t = t.rhs
    return args, t


def is_type_atom(t: Ty) -> bool:
    """Beta-normal type that is neither an arrow nor a quantification."""
    return not isinstance(t, (TArrow, TAll))


# =====================================================================
# Terms
# =====================================================================


class Tm:
    __slots__ = ("_hash", "v_open", "t_open", "names", "_ckey")

    def __hash__(self):
        return self._hash

    def ckey(self) -> str:
        k = self._ckey
        if k is None:
            k = self._mkckey()
            self._ckey = k
        return k

    def __repr__(self):
        return self.ckey()


class Var(Tm):
    __slots__ = ("ix",)

    def __init__(self, ix: int):
        self.ix = ix
        self._hash = hash(("v", ix))
        self.v_open = ix + 1
        self.t_open = 0
        self.names = EMPTY
        self._ckey = None

    def __eq__(self, o):
        return isinstance(o, Var) and o.ix == self.ix

    def _mkckey(self):
        return f"#{self.ix}"


class Free(Tm):
    __slots__ = ("name", "ty")

    def __init__(self, name: str, ty: Ty):
        self.name = name
        self.ty = ty
        self._hash = hash(("fr", name, ty._hash))
        self.v_open = 0
        self.t_open = ty.t_open
        self.names = frozenset((name,)) | ty.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, Free)
            and o._hash == self._hash
            and o.name == self.name
            and o.ty == self.ty
        )

    def _mkckey(self):
        return self.name


class Sym(Tm):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("sym", name))
        self.v_open = 0
        self.t_open = 0
        self.names = EMPTY
        self._ckey = None

    def __eq__(self, o):
        return isinstance(o, Sym) and o.name == self.name

    def _mkckey(self):
        return f"${self.name}"


class Num(Tm):
    __slots__ = ("val",)

    def __init__(self, val: int):
        self.val = val
        self._hash = hash(("num", val))
        self.v_open = 0
        self.t_open = 0
        self.names = EMPTY
        self._ckey = None

    def __eq__(self, o):
        return isinstance(o, Num) and o.val == self.val

    def _mkckey(self):
        return str(self.val)


class Abs(Tm):
    __slots__ = ("ty", "body", "hint")

    def __init__(self, ty: Ty, body: Tm, hint: str = "x"):
        self.ty = ty
        self.body = body
        self.hint = hint
        self._hash = hash(("abs", ty._hash, body._hash))
        self.v_open = max(body.v_open - 1, 0)
        self.t_open = max(ty.t_open, body.t_open)
        self.names = ty.names | body.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, Abs)
            and o._hash == self._hash
            and o.ty == self.ty
            and o.body == self.body
        )

    def _mkckey(self):
        return f"(\\{self.ty.ckey()}.{self.body.ckey()})"


class TyAbs(Tm):
    __slots__ = ("kind", "body", "hint")

    def __init__(self, kind: Kind, body: Tm, hint: str = "a"):
        self.kind = kind
        self.body = body
        self.hint = hint
        self._hash = hash(("tabs", kind._hash, body._hash))
        self.v_open = body.v_open
        self.t_open = max(body.t_open - 1, 0)
        self.names = body.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, TyAbs)
            and o._hash == self._hash
            and o.kind == self.kind
            and o.body == self.body
        )

    def _mkckey(self):
        return f"(/\\{self.kind!r}.{self.body.ckey()})"


class App(Tm):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: Tm, arg: Tm):
        self.fn = fn
        self.arg = arg
        self._hash = hash(("app", fn._hash, arg._hash))
        self.v_open = max(fn.v_open, arg.v_open)
        self.t_open = max(fn.t_open, arg.t_open)
        self.names = fn.names | arg.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, App)
            and o._hash == self._hash
            and o.fn == self.fn
            and o.arg == self.arg
        )

    def _mkckey(self):
        return f"({self.fn.ckey()} {self.arg.ckey()})"


class TyApp(Tm):
    __slots__ = ("fn", "ty")

    def __init__(self, fn: Tm, ty: Ty):
        self.fn = fn
        self.ty = ty
        self._hash = hash(("tapp", fn._hash, ty._hash))
        self.v_open = fn.v_open
        self.t_open = max(fn.t_open, ty.t_open)
        self.names = fn.names | ty.names
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, TyApp)
            and o._hash == self._hash
            and o.fn == self.fn
            and o.ty == self.ty
        )

    def _mkckey(self):
        return f"({self.fn.ckey()} [{self.ty.ckey()}])"


class Meta(Tm):
    """Term metavariable (a typed hole) with pending substitutions.

    ``deps``: tuple of ``('v', name, Ty)`` / ``('T', name, Kind)`` entries
    naming the pattern binders the hole may mention.  ``pend``: tuple of
    ``('v', name, Tm)`` / ``('T', name, Ty)`` substitutions recorded against
    the hole, applied left to right on instantiation.
    """

    __slots__ = ("name", "ty", "deps", "pend")

    def __init__(self, name: str, ty: Ty, deps: tuple = (), pend: tuple = ()):
        self.name = name
        self.ty = ty
        self.deps = deps
        self.pend = pend
        self._hash = hash(
            ("meta", name, ty._hash, tuple(d[1] for d in deps),
             tuple((k, n, v._hash) for k, n, v in pend))
        )
        vo = 0
        to = ty.t_open
        nm = {name}
        nm |= ty.names
        for kindflag, dname, dty in deps:
            nm.add(dname)
            if kindflag == "v":
                nm |= dty.names
                to = max(to, dty.t_open)
        for _, n, v in pend:
            vo = max(vo, getattr(v, "v_open", 0))
            to = max(to, v.t_open)
            nm |= v.names
        self.v_open = vo
        self.t_open = to
        self.names = frozenset(nm)
        self._ckey = None

    def dep_names(self):
        return tuple(d[1] for d in self.deps)

    def __eq__(self, o):
        return (
            isinstance(o, Meta)
            and o._hash == self._hash
            and o.name == self.name
            and o.pend == self.pend
            and o.ty == self.ty
        )

    def _mkckey(self):
        p = "".join(f"[{n}:={v.ckey()}]" for _, n, v in self.pend)
        return f"?{self.name}{p}"


class PatAbs(Tm):
    """Named pattern lambda: the body mentions the binder as Free(name)."""

    __slots__ = ("name", "ty", "body")

    def __init__(self, name: str, ty: Ty, body: Tm):
        self.name = name
        self.ty = ty
        self.body = body
        self._hash = hash(("pabs", name, ty._hash, body._hash))
        self.v_open = body.v_open
        self.t_open = max(ty.t_open, body.t_open)
        self.names = ty.names | (body.names - {name})
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, PatAbs)
            and o._hash == self._hash
            and o.name == self.name
            and o.ty == self.ty
            and o.body == self.body
        )

    def _mkckey(self):
        return f"(\\{self.name}:{self.ty.ckey()}.{self.body.ckey()})"


class PatTyAbs(Tm):
    """Named pattern type abstraction; body mentions the binder as TFree."""

    __slots__ = ("name", "kind", "body")

    def __init__(self, name: str, kind: Kind, body: Tm):
        self.name = name
        self.kind = kind
        self.body = body
        self._hash = hash(("ptabs", name, kind._hash, body._hash))
        self.v_open = body.v_open
        self.t_open = body.t_open
        self.names = body.names - {name}
        self._ckey = None

    def __eq__(self, o):
        return (
            isinstance(o, PatTyAbs)
            and o._hash == self._hash
            and o.name == self.name
            and o.kind == self.kind
            and o.body == self.body
        )

    def _mkckey(self):
        return f"(/\\{self.name}:{self.kind!r}.{self.body.ckey()})"


for _cls in (Var, Free, Sym, Num, Abs, TyAbs, App, TyApp, Meta, PatAbs, PatTyAbs):
    _cls.__hash__ = Tm.__hash__


# ---------------------------------------------------------------------
# Term-level operations
# ---------------------------------------------------------------------


def shift_v(t: Tm, d: int, cutoff: int = 0) -> Tm:
    """Shift dangling term variables >= cutoff by d."""
    if t.v_open <= cutoff or d == 0:
        return t
    if isinstance(t, Var):
        return Var(t.ix + d) if t.ix >= cutoff else t
    if isinstance(t, App):
        return App(shift_v(t.fn, d, cutoff), shift_v(t.arg, d, cutoff))
    if isinstance(t, TyApp):
        return TyApp(shift_v(t.fn, d, cutoff), t.ty)
    if isinstance(t, Abs):
        return Abs(t.ty, shift_v(t.body, d, cutoff + 1), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, shift_v(t.body, d, cutoff), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, t.ty, shift_v(t.body, d, cutoff))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, shift_v(t.body, d, cutoff))
    if isinstance(t, Meta):
        pend = tuple(
            (k, n, shift_v(v, d, cutoff) if k == "v" else v) for k, n, v in t.pend
        )
        return Meta(t.name, t.ty, t.deps, pend)
    return t


def shift_t(t: Tm, d: int, cutoff: int = 0) -> Tm:
    """Shift dangling type variables >= cutoff by d, everywhere in a term."""
    if t.t_open <= cutoff or d == 0:
        return t
    if isinstance(t, Free):
        return Free(t.name, tshift(t.ty, d, cutoff))
    if isinstance(t, App):
        return App(shift_t(t.fn, d, cutoff), shift_t(t.arg, d, cutoff))
    if isinstance(t, TyApp):
        return TyApp(shift_t(t.fn, d, cutoff), tshift(t.ty, d, cutoff))
    if isinstance(t, Abs):
        return Abs(tshift(t.ty, d, cutoff), shift_t(t.body, d, cutoff), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, shift_t(t.body, d, cutoff + 1), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, tshift(t.ty, d, cutoff), shift_t(t.body, d, cutoff))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, shift_t(t.body, d, cutoff))
    if isinstance(t, Meta):
        ty = tshift(t.ty, d, cutoff)
        deps = tuple(
            (k, n, tshift(dt, d, cutoff) if k == "v" else dt) for k, n, dt in t.deps
        )
        pend = tuple(
            (k, n, shift_t(v, d, cutoff) if k == "v" else tshift(v, d, cutoff))
            for k, n, v in t.pend
        )
        return Meta(t.name, ty, deps, pend)
    return t


def subst_v(t: Tm, j: int, val: Tm) -> Tm:
    """Substitute Var j := val, decrementing the variables above j."""
    if t.v_open <= j:
        return t
    if isinstance(t, Var):
        if t.ix == j:
            return val
        return Var(t.ix - 1) if t.ix > j else t
    if isinstance(t, App):
        return App(subst_v(t.fn, j, val), subst_v(t.arg, j, val))
    if isinstance(t, TyApp):
        return TyApp(subst_v(t.fn, j, val), t.ty)
    if isinstance(t, Abs):
        return Abs(t.ty, subst_v(t.body, j + 1, shift_v(val, 1)), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, subst_v(t.body, j, shift_t(val, 1)), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, t.ty, subst_v(t.body, j, val))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, subst_v(t.body, j, val))
    if isinstance(t, Meta):
        pend = tuple(
            (k, n, subst_v(v, j, val) if k == "v" else v) for k, n, v in t.pend
        )
        return Meta(t.name, t.ty, t.deps, pend)
    return t


def subst_tv(t: Tm, j: int, tyval: Ty) -> Tm:
    """Substitute type variable j := tyval throughout a term; retypes the
    free variables it passes over."""
    if t.t_open <= j:
        return t
    if isinstance(t, Free):
        return Free(t.name, tsubst(t.ty, j, tyval))
    if isinstance(t, App):
        return App(subst_tv(t.fn, j, tyval), subst_tv(t.arg, j, tyval))
    if isinstance(t, TyApp):
        return TyApp(subst_tv(t.fn, j, tyval), tsubst(t.ty, j, tyval))
    if isinstance(t, Abs):
        return Abs(tsubst(t.ty, j, tyval), subst_tv(t.body, j, tyval), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, subst_tv(t.body, j + 1, tshift(tyval, 1)), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, tsubst(t.ty, j, tyval), subst_tv(t.body, j, tyval))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, subst_tv(t.body, j, tyval))
    if isinstance(t, Meta):
        ty = tsubst(t.ty, j, tyval)
        deps = tuple(
            (k, n, tsubst(dt, j, tyval) if k == "v" else dt) for k, n, dt in t.deps
        )
        pend = tuple(
            (k, n, subst_tv(v, j, tyval) if k == "v" else tsubst(v, j, tyval))
            for k, n, v in t.pend
        )
        return Meta(t.name, ty, deps, pend)
    return t


def _meta_wants(t: Meta, name: str) -> bool:
    """Substituting for `name` must be recorded on the hole itself exactly
    when the hole's own instantiation may mention it.  Occurrences inside
    already-pending values are rewritten in place instead, keeping the
    representation canonical (the two are equivalent: later substitutions
    reach earlier values either way, and substitution is idempotent here
    because a substituted value never mentions its own variable)."""
    return name in t.dep_names()


def subst_free(t: Tm, name: str, val: Tm) -> Tm:
    """Substitute the free named term variable; records a pending
    substitution on holes that may mention it."""
    if name not in t.names:
        return t
    if isinstance(t, Free):
        return val if t.name == name else t
    if isinstance(t, App):
        return App(subst_free(t.fn, name, val), subst_free(t.arg, name, val))
    if isinstance(t, TyApp):
        return TyApp(subst_free(t.fn, name, val), t.ty)
    if isinstance(t, Abs):
        return Abs(t.ty, subst_free(t.body, name, shift_v(val, 1)), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, subst_free(t.body, name, shift_t(val, 1)), t.hint)
    if isinstance(t, PatAbs):
        if t.name == name:
            return t
        return PatAbs(t.name, t.ty, subst_free(t.body, name, val))
    if isinstance(t, PatTyAbs):
        if t.name == name:
            return t
        return PatTyAbs(t.name, t.kind, subst_free(t.body, name, val))
    if isinstance(t, Meta):
        pend = tuple(
            (k, n, subst_free(v, name, val) if k == "v" else v) for k, n, v in t.pend
        )
        m = Meta(t.name, t.ty, t.deps, pend)
        if _meta_wants(t, name):
            return Meta(m.name, m.ty, m.deps, m.pend + (("v", name, val),))
        return m
    return t


def subst_tfree_tm(t: Tm, name: str, tyval: Ty) -> Tm:
    """Substitute the free named type variable throughout a term."""
    if name not in t.names:
        return t
    if isinstance(t, Free):
        return Free(t.name, tsubst_tfree(t.ty, name, tyval))
    if isinstance(t, App):
        return App(subst_tfree_tm(t.fn, name, tyval), subst_tfree_tm(t.arg, name, tyval))
    if isinstance(t, TyApp):
        return TyApp(subst_tfree_tm(t.fn, name, tyval), tsubst_tfree(t.ty, name, tyval))
    if isinstance(t, Abs):
        return Abs(
            tsubst_tfree(t.ty, name, tyval),
            subst_tfree_tm(t.body, name, tyval),
            t.hint,
        )
    if isinstance(t, TyAbs):
        return TyAbs(
            t.kind, subst_tfree_tm(t.body, name, tshift(tyval, 1)), t.hint
        )
    if isinstance(t, PatAbs):
        if t.name == name:
            return t
        return PatAbs(
            t.name, tsubst_tfree(t.ty, name, tyval), subst_tfree_tm(t.body, name, tyval)
        )
    if isinstance(t, PatTyAbs):
        if t.name == name:
            return t
        return PatTyAbs(t.name, t.kind, subst_tfree_tm(t.body, name, tyval))
    if isinstance(t, Meta):
        ty = tsubst_tfree(t.ty, name, tyval)
        pend = tuple(
            (
                k,
                n,
                subst_tfree_tm(v, name, tyval)
                if k == "v"
                else tsubst_tfree(v, name, tyval),
            )
            for k, n, v in t.pend
        )
        m = Meta(t.name, ty, t.deps, pend)
        if _meta_wants(t, name):
            return Meta(m.name, m.ty, m.deps, m.pend + (("T", name, tyval),))
        return m
    return t


def close_free(t: Tm, name: str, depth: int = 0) -> Tm:
    """Abstract the free named term variable into de Bruijn index `depth`,
    shifting the existing dangling term variables to make room."""
    if name not in t.names and t.v_open <= depth:
        return t
    if isinstance(t, Var):
        return Var(t.ix + 1) if t.ix >= depth else t
    if isinstance(t, Free):
        return Var(depth) if t.name == name else t
    if isinstance(t, App):
        return App(close_free(t.fn, name, depth), close_free(t.arg, name, depth))
    if isinstance(t, TyApp):
        return TyApp(close_free(t.fn, name, depth), t.ty)
    if isinstance(t, Abs):
        return Abs(t.ty, close_free(t.body, name, depth + 1), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, close_free(t.body, name, depth), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(t.name, t.ty, close_free(t.body, name, depth))
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, close_free(t.body, name, depth))
    if isinstance(t, Meta):
        pend = tuple(
            (k, n, close_free(v, name, depth) if k == "v" else v) for k, n, v in t.pend
        )
        m = Meta(t.name, t.ty, t.deps, pend)
        if _meta_wants(t, name):
            return Meta(m.name, m.ty, m.deps, m.pend + (("v", name, Var(depth)),))
        return m
    return t


def close_tfree_tm(t: Tm, name: str, depth: int = 0) -> Tm:
    """Abstract the free named type variable into de Bruijn index `depth`."""
    if name not in t.names and t.t_open <= depth:
        return t
    if isinstance(t, Free):
        return Free(t.name, close_tfree(t.ty, name, depth))
    if isinstance(t, App):
        return App(close_tfree_tm(t.fn, name, depth), close_tfree_tm(t.arg, name, depth))
    if isinstance(t, TyApp):
        return TyApp(close_tfree_tm(t.fn, name, depth), close_tfree(t.ty, name, depth))
    if isinstance(t, Abs):
        return Abs(
            close_tfree(t.ty, name, depth), close_tfree_tm(t.body, name, depth), t.hint
        )
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, close_tfree_tm(t.body, name, depth + 1), t.hint)
    if isinstance(t, PatAbs):
        return PatAbs(
            t.name, close_tfree(t.ty, name, depth), close_tfree_tm(t.body, name, depth)
        )
    if isinstance(t, PatTyAbs):
        return PatTyAbs(t.name, t.kind, close_tfree_tm(t.body, name, depth))
    if isinstance(t, Meta):
        ty = close_tfree(t.ty, name, depth)
        deps = tuple(
            (k, n, close_tfree(dt, name, depth) if k == "v" else dt)
            for k, n, dt in t.deps
        )
        pend = tuple(
            (
                k,
                n,
                close_tfree_tm(v, name, depth)
                if k == "v"
                else close_tfree(v, name, depth),
            )
            for k, n, v in t.pend
        )
        m = Meta(t.name, ty, deps, pend)
        if _meta_wants(t, name):
            return Meta(m.name, m.ty, m.deps, m.pend + (("T", name, TVar(depth)),))
        return m
    return t


def subst_type(target, var: str, replacement: Ty):
    """Capture-avoiding substitution of a named type variable, in either a
    type constructor or a term; the result stays canonical."""
    if isinstance(target, Ty):
        return tsubst_tfree(target, var, replacement)
    return subst_tfree_tm(target, var, replacement)


def term_size(t: Tm) -> int:
    if isinstance(t, (App,)):
        return 1 + term_size(t.fn) + term_size(t.arg)
    if isinstance(t, TyApp):
        return 1 + term_size(t.fn)
    if isinstance(t, (Abs, TyAbs)):
        return 1 + term_size(t.body)
    if isinstance(t, (PatAbs, PatTyAbs)):
        return 1 + term_size(t.body)
    if isinstance(t, Meta):
        return 1 + sum(term_size(v) for k, _, v in t.pend if k == "v")
    return 1


def spine(t: Tm) -> tuple[Tm, list]:
    """Decompose nested applications: returns (head, args) where each arg is
    ('v', Tm) or ('T', Ty), outermost last."""
    args = []
    while True:
        if isinstance(t, App):
            args.append(("v", t.arg))
            t = t.fn
        elif isinstance(t, TyApp):
            args.append(("T", t.ty))
            t = t.fn
        else:
            args.reverse()
            return t, args


def build_spine(head: Tm, args) -> Tm:
    t = head
    for k, a in args:
        t = App(t, a) if k == "v" else TyApp(t, a)
    return t


# =====================================================================
# Signatures
# =====================================================================


class Signature:
    """Type constructor constants, function symbols and the designated
    base type symbol used to close types."""

    def __init__(
        self,
        tycons: dict[str, Kind],
        funs: dict[str, Ty],
        chi_name: str | None = None,
        numerals: bool = False,
        pfs_shape: bool = True,
    ):
        self.tycons = dict(tycons)
        self.funs = dict(funs)
        self.chi_name = chi_name
        self.numerals = numerals
        self.pfs_shape = pfs_shape
        self._arity: dict[str, tuple[int, int, list, Ty]] = {}
        self._validate()

    def _validate(self):
        seen = set()
        for name in list(self.tycons) + list(self.funs):
            if name in seen:
                raise SignatureError(f"name '{name}' declared more than once")
            seen.add(name)
        if self.chi_name is not None and self.chi_name not in self.tycons:
            raise SignatureError(f"chi symbol '{self.chi_name}' is not a declared type constant")
        if self.chi_name is not None and self.tycons[self.chi_name] != STAR:
            raise SignatureError(f"chi symbol '{self.chi_name}' must have kind *")
        for f, ty in self.funs.items():
            if ty.t_open != 0 or ty.names:
                raise SignatureError(f"type of function symbol '{f}' is not closed")
            nty = beta_normalize_type(ty)
            if kind_of(nty) != STAR:
                raise SignatureError(f"type of function symbol '{f}' is not a type")
            self.funs[f] = nty
            kinds, rest = strip_forall(nty)
            args, result = strip_arrows(rest)
            if self.pfs_shape and not is_type_atom(result):
                raise SignatureError(
                    f"function symbol '{f}' must end in a type atom after its "
                    f"quantifier prefix and argument types"
                )
            self._arity[f] = (len(kinds), len(args), args, result)

    def chi_type(self) -> Ty:
        if self.chi_name is None:
            raise SignatureError("no chi symbol designated in this signature")
        return TCon(self.chi_name, STAR)

    def arity(self, f: str):
        """(number of type arguments, number of term arguments)."""
        n, k, _, _ = self._arity[f]
        return n, k

    def fun_type(self, f: str) -> Ty:
        return self.funs[f]


# =====================================================================
# Typing (syntax-directed, one case per generation-lemma clause)
# =====================================================================


def typecheck(t: Tm, sig: Signature, venv: tuple = (), kenv: tuple = ()) -> Ty:
    """Type of a term, beta-normal; raises TypeCheckError on failure.

    venv holds the types of de-Bruijn-bound term variables as
    (type, type-depth-at-binding) pairs, innermost last; kenv the kinds of
    enclosing type binders, innermost first.
    """
    return _tc(t, sig, venv, kenv, ())


def _tc(t: Tm, sig: Signature, venv: tuple, kenv: tuple, path: tuple) -> Ty:
    tdepth = len(kenv)
    if isinstance(t, Var):
        if t.ix >= len(venv):
            raise TypeCheckError(f"unbound variable index {t.ix}", path)
        ty, d0 = venv[-1 - t.ix]
        return tshift(ty, tdepth - d0)
    if isinstance(t, Free):
        if kind_of(t.ty, kenv) != STAR:
            raise TypeCheckError(f"variable '{t.name}' annotated with a non-type", path)
        return canon_ty(t.ty)
    if isinstance(t, Sym):
        if t.name not in sig.funs:
            raise TypeCheckError(f"unknown function symbol '{t.name}'", path)
        return sig.funs[t.name]
    if isinstance(t, Num):
        if not sig.numerals:
            raise TypeCheckError("numerals are not part of this signature", path)
        return NAT
    if isinstance(t, Meta):
        if kind_of(t.ty, kenv) != STAR:
            raise TypeCheckError(f"metavariable '{t.name}' with a non-type schema", path)
        return canon_ty(t.ty)
    if isinstance(t, Abs):
        if kind_of(t.ty, kenv) != STAR:
            raise TypeCheckError("lambda binder annotated with a non-type", path)
        body = _tc(t.body, sig, venv + ((t.ty, tdepth),), kenv, path + (0,))
        return TArrow(canon_ty(t.ty), body)
    if isinstance(t, PatAbs):
        if kind_of(t.ty, kenv) != STAR:
            raise TypeCheckError("lambda binder annotated with a non-type", path)
        body = _tc(t.body, sig, venv, kenv, path + (0,))
        return TArrow(canon_ty(t.ty), body)
    if isinstance(t, TyAbs):
        body = _tc(t.body, sig, venv, (t.kind,) + kenv, path + (0,))
        _check_tyabs_side(t.body, 0, path)
        return TAll(t.kind, body, t.hint)
    if isinstance(t, PatTyAbs):
        body = _tc(t.body, sig, venv, kenv, path + (0,))
        _check_pat_tyabs_side(t.body, t.name, set(), path)
        return TAll(t.kind, close_tfree(body, t.name), t.name)
    if isinstance(t, App):
        fty = _tc(t.fn, sig, venv, kenv, path + (0,))
        aty = _tc(t.arg, sig, venv, kenv, path + (1,))
        if not isinstance(fty, TArrow):
            raise TypeCheckError("application of a term of non-arrow type", path)
        if fty.lhs != aty:
            raise TypeCheckError(
                f"argument type mismatch: expected {fty.lhs.ckey()}, got {aty.ckey()}",
                path + (1,),
            )
        return fty.rhs
    if isinstance(t, TyApp):
        fty = _tc(t.fn, sig, venv, kenv, path + (0,))
        if not isinstance(fty, TAll):
            raise TypeCheckError("type application of a term of non-forall type", path)
        ka = kind_of(t.ty, kenv)
        if ka != fty.kind:
            raise TypeCheckError(
                f"kind mismatch in type application: expected {fty.kind!r}, got {ka!r}",
                path,
            )
        return tsubst(fty.body, 0, canon_ty(t.ty))
    raise TypeCheckError(f"unknown term node {type(t).__name__}", path)


def _check_tyabs_side(t: Tm, depth: int, path: tuple):
    """The bound type variable may not occur free in the type of a free
    variable of the body (paper side condition on type abstraction)."""
    if t.t_open <= depth:
        return
    if isinstance(t, Free):
        if _ty_mentions(t.ty, depth):
            raise TypeCheckError(
                f"type abstraction captures the type of free variable '{t.name}'",
                path,
            )
        return
    if isinstance(t, Meta):
        for k, n, dty in t.deps:
            if k == "v" and _ty_mentions(dty, depth):
                raise TypeCheckError(
                    f"type abstraction captures a dependency type of hole '{t.name}'",
                    path,
                )
        for k, _, v in t.pend:
            if k == "v":
                _check_tyabs_side(v, depth, path)
        return
    if isinstance(t, (App,)):
        _check_tyabs_side(t.fn, depth, path)
        _check_tyabs_side(t.arg, depth, path)
    elif isinstance(t, TyApp):
        _check_tyabs_side(t.fn, depth, path)
    elif isinstance(t, (Abs, PatAbs)):
        _check_tyabs_side(t.body, depth, path)
    elif isinstance(t, TyAbs):
        _check_tyabs_side(t.body, depth + 1, path)
    elif isinstance(t, PatTyAbs):
        _check_tyabs_side(t.body, depth, path)


def _ty_mentions(ty: Ty, ix: int) -> bool:
    if ty.t_open <= ix:
        return False
    if isinstance(ty, TVar):
        return ty.ix == ix
    if isinstance(ty, TArrow):
        return _ty_mentions(ty.lhs, ix) or _ty_mentions(ty.rhs, ix)
    if isinstance(ty, TApp):
        return _ty_mentions(ty.fn, ix) or _ty_mentions(ty.arg, ix)
    if isinstance(ty, (TAll, TLam)):
        return _ty_mentions(ty.body, ix + 1)
    if isinstance(ty, (PatTLam, PatTAll)):
        return _ty_mentions(ty.body, ix)
    if isinstance(ty, TMeta):
        return any(_ty_mentions(v, ix) for _, v in ty.pend)
    return False


def _check_pat_tyabs_side(t: Tm, name: str, bound: set, path: tuple):
    """Side condition for a named pattern type binder."""
    if name not in t.names:
        return
    if isinstance(t, Free):
        if t.name not in bound and name in t.ty.names:
            raise TypeCheckError(
                f"type abstraction captures the type of free variable '{t.name}'", path
            )
        return
    if isinstance(t, Meta):
        for k, n, dty in t.deps:
            if k == "v" and n not in bound and name in dty.names:
                raise TypeCheckError(
                    f"type abstraction captures a dependency type of hole '{t.name}'",
                    path,
                )
        for k, _, v in t.pend:
            if k == "v":
                _check_pat_tyabs_side(v, name, bound, path)
        return
    if isinstance(t, App):
        _check_pat_tyabs_side(t.fn, name, bound, path)
        _check_pat_tyabs_side(t.arg, name, bound, path)
    elif isinstance(t, TyApp):
        _check_pat_tyabs_side(t.fn, name, bound, path)
    elif isinstance(t, (Abs, TyAbs)):
        _check_pat_tyabs_side(t.body, name, bound, path)
    elif isinstance(t, PatAbs):
        _check_pat_tyabs_side(t.body, name, bound | {t.name}, path)
    elif isinstance(t, PatTyAbs):
        _check_pat_tyabs_side(t.body, name, bound, path)


# =====================================================================
# Instantiation of schemas into concrete syntax
# =====================================================================


def inst_ty(ty: Ty, bind: dict) -> Ty:
    """Replace type metavariables (and free type variables present in the
    binding) by their bindings, executing pending substitutions; converts
    pattern binders into de Bruijn binders."""
    if isinstance(ty, TFree):
        return bind.get(ty.name, ty)
    if isinstance(ty, TMeta):
        if ty.name not in bind:
            raise TypeCheckError(f"no binding for type metavariable '{ty.name}'")
        out = bind[ty.name]
        for n, v in ty.pend:
            out = tsubst_tfree(out, n, inst_ty(v, bind))
        return out
    if isinstance(ty, TArrow):
        return TArrow(inst_ty(ty.lhs, bind), inst_ty(ty.rhs, bind))
    if isinstance(ty, TApp):
        return mk_tapp(inst_ty(ty.fn, bind), inst_ty(ty.arg, bind))
    if isinstance(ty, (TAll, TLam)):
        return type(ty)(ty.kind, inst_ty(ty.body, bind), ty.hint)
    if isinstance(ty, PatTLam):
        return TLam(ty.kind, close_tfree(inst_ty(ty.body, bind), ty.name), ty.name)
    if isinstance(ty, PatTAll):
        return TAll(ty.kind, close_tfree(inst_ty(ty.body, bind), ty.name), ty.name)
    return ty


def inst_tm(t: Tm, bind: dict) -> Tm:
    """Replace metavariables by their bindings, executing pending
    substitutions; converts pattern binders into de Bruijn binders."""
    if isinstance(t, Meta):
        if t.name not in bind:
            raise TypeCheckError(f"no binding for metavariable '{t.name}'")
        out = bind[t.name]
        for k, n, v in t.pend:
            if k == "v":
                out = subst_free(out, n, inst_tm(v, bind))
            else:
                out = subst_tfree_tm(out, n, inst_ty(v, bind))
        return out
    if isinstance(t, App):
        return App(inst_tm(t.fn, bind), inst_tm(t.arg, bind))
    if isinstance(t, TyApp):
        return TyApp(inst_tm(t.fn, bind), inst_ty(t.ty, bind))
    if isinstance(t, Abs):
        return Abs(inst_ty(t.ty, bind), inst_tm(t.body, bind), t.hint)
    if isinstance(t, TyAbs):
        return TyAbs(t.kind, inst_tm(t.body, bind), t.hint)
    if isinstance(t, PatAbs):
        return Abs(
            inst_ty(t.ty, bind),
            close_free(inst_tm(t.body, bind), t.name),
            t.name.split("#")[0],
        )
    if isinstance(t, PatTyAbs):
        return TyAbs(
            t.kind,
            close_tfree_tm(inst_tm(t.body, bind), t.name),
            t.name.split("#")[0],
        )
    if isinstance(t, Free):
        hit = bind.get(t.name)
        if hit is not None:
            return hit
        return Free(t.name, inst_ty(t.ty, bind))
    return t
