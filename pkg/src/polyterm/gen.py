"""Seeded random generation of interpretation types and terms.

Used by the ground-instance oracle (closure images, argument vectors) and
by the property tests (random well-typed terms).  Everything is driven by
an explicit ``random.Random`` so runs are reproducible.
"""

from __future__ import annotations

import random

from .interp import FLATTEN, LIFT, flatten, lift, oplus, otimes
from .syntax import (
    NAT,
    STAR,
    Abs,
    App,
    Free,
    KArrow,
    Kind,
    Num,
    TAll,
    TArrow,
    TFree,
    TLam,
    Tm,
    Ty,
    TyAbs,
    TyApp,
    TVar,
    Var,
    chi,
    shift_t,
    tshift,
)

TYPE_DEPTH = 2
TERM_SIZE = 8


def gen_type(rng: random.Random, kind: Kind = STAR, depth: int = TYPE_DEPTH,
             scope: tuple = ()) -> Ty:
    """Random closed type constructor of the given kind, over the grammar
    {nat, ->, forall, chi};  `scope` lists kinds of usable bound variables."""
    if isinstance(kind, KArrow):
        if depth <= 0 or rng.random() < 0.5:
            return chi(kind)
        return TLam(kind.left, gen_type(rng, kind.right, depth - 1, scope + (kind.left,)))
    usable = [i for i, k in enumerate(reversed(scope)) if k == STAR]
    choices = ["nat", "nat"]
    if depth > 0:
        choices += ["arrow", "arrow", "forall"]
    if usable:
        choices += ["var", "var"]
    pick = rng.choice(choices)
    if pick == "nat":
        return NAT
    if pick == "var":
        return TVar(rng.choice(usable))
    if pick == "arrow":
        return TArrow(
            gen_type(rng, STAR, depth - 1, scope),
            gen_type(rng, STAR, depth - 1, scope),
        )
    inner_kind = STAR if rng.random() < 0.8 else KArrow(STAR, STAR)
    return TAll(inner_kind, gen_type(rng, STAR, depth - 1, scope + (inner_kind,)))


def _nat_leaf(rng: random.Random, env: tuple) -> Tm:
    """A small term of type nat over the environment of bound variables."""
    if env and rng.random() < 0.55:
        ix = rng.randrange(len(env))
        ty = tshift(env[-1 - ix][0], env[-1 - ix][1])
        return flatten(ty, Var(ix))
    return Num(rng.randrange(0, 4))


def gen_value(rng: random.Random, ty: Ty, size: int = TERM_SIZE,
              env: tuple = ()) -> Tm:
    """A term of the given closed-in-context type built from numerals,
    plus/times, lift, and flatten projections of the bound variables.

    env entries are (type, type-shift) pairs; the shift records how many
    type binders were crossed since the entry's type was recorded.
    """
    if isinstance(ty, TArrow):
        inner = tuple((t, s) for t, s in env) + ((ty.lhs, 0),)
        body = gen_value(rng, ty.rhs, size - 1, inner)
        return Abs(ty.lhs, body)
    if isinstance(ty, TAll):
        inner = tuple((t, s + 1) for t, s in env)
        body = gen_value(rng, ty.body, size - 1, inner)
        return TyAbs(ty.kind, body)
    if ty == NAT:
        if size <= 1:
            return _nat_leaf(rng, env)
        r = rng.random()
        if r < 0.35:
            return oplus(NAT, _nat_leaf(rng, env), gen_value(rng, NAT, size - 2, env))
        if r < 0.5:
            return otimes(NAT, _nat_leaf(rng, env), gen_value(rng, NAT, size - 2, env))
        return _nat_leaf(rng, env)
    # atom type that is not nat: variables of that exact type, or lift
    matching = [
        i for i in range(len(env))
        if tshift(env[-1 - i][0], env[-1 - i][1]) == ty
    ]
    if matching and rng.random() < 0.5:
        return Var(rng.choice(matching))
    if size > 2 and rng.random() < 0.3:
        return oplus(ty, lift(ty, _nat_leaf(rng, env)),
                     gen_value(rng, ty, size - 2, env))
    return lift(ty, gen_value(rng, NAT, size - 1, env))


def gen_typed_term(rng: random.Random, size: int, ty: Ty | None = None,
                   env: tuple = (), free_pool: tuple = ()) -> Tm:
    """An arbitrary well-typed interpretation term of the given type,
    including redexes of every reduction rule; may use the free variables
    in free_pool (name, closed type) when their type fits."""
    if ty is None:
        ty = gen_type(rng, STAR, TYPE_DEPTH)
    if size <= 1:
        return _base_term(rng, ty, env, free_pool)
    r = rng.random()
    if r < 0.15:
        # beta redex at this type
        aty = gen_type(rng, STAR, 1)
        inner = env + ((aty, 0),)
        body = gen_typed_term(rng, size // 2, ty, inner, free_pool)
        arg = gen_typed_term(rng, size - size // 2 - 1, aty, env, free_pool)
        return App(Abs(aty, body), arg)
    if r < 0.25:
        # type-beta redex; the bound variable is unused in the body
        kd = STAR if rng.random() < 0.8 else KArrow(STAR, STAR)
        inner = tuple((t, s + 1) for t, s in env)
        body = gen_typed_term(rng, size - 2, tshift(ty, 1), inner, free_pool)
        return TyApp(TyAbs(kd, body), gen_type(rng, kd, 1))
    if r < 0.45:
        return oplus(ty, gen_typed_term(rng, size // 2, ty, env, free_pool),
                     gen_typed_term(rng, size - size // 2, ty, env, free_pool))
    if r < 0.55:
        return otimes(ty, gen_typed_term(rng, size // 2, ty, env, free_pool),
                      gen_typed_term(rng, size - size // 2, ty, env, free_pool))
    if r < 0.65:
        return lift(ty, gen_typed_term(rng, size - 1, NAT, env, free_pool))
    if r < 0.72 and ty == NAT:
        aty = gen_type(rng, STAR, 1)
        return flatten(aty, gen_typed_term(rng, size - 1, aty, env, free_pool))
    if isinstance(ty, TArrow):
        inner = env + ((ty.lhs, 0),)
        return Abs(ty.lhs, gen_typed_term(rng, size - 1, ty.rhs, inner, free_pool))
    if isinstance(ty, TAll):
        inner = tuple((t, s + 1) for t, s in env)
        return TyAbs(ty.kind, gen_typed_term(rng, size - 1, ty.body, inner, free_pool))
    return _base_term(rng, ty, env, free_pool)


def _base_term(rng: random.Random, ty: Ty, env: tuple, free_pool: tuple) -> Tm:
    matching = [
        i for i in range(len(env))
        if tshift(env[-1 - i][0], env[-1 - i][1]) == ty
    ]
    if matching and rng.random() < 0.5:
        return Var(rng.choice(matching))
    if ty.t_open == 0 and free_pool and rng.random() < 0.35:
        name, fty = rng.choice(free_pool)
        if fty == ty:
            return Free(name, fty)
    if ty == NAT:
        return Num(rng.randrange(0, 4))
    if isinstance(ty, TArrow):
        inner = env + ((ty.lhs, 0),)
        return Abs(ty.lhs, _base_term(rng, ty.rhs, inner, free_pool))
    if isinstance(ty, TAll):
        inner = tuple((t, s + 1) for t, s in env)
        return TyAbs(ty.kind, _base_term(rng, ty.body, inner, free_pool))
    return lift(ty, Num(rng.randrange(0, 3)))
