"""The ordering pair: a symbolic comparator and a ground-instance oracle.

The quasi-order and its strict companion are defined by comparing natural
numbers after closing all free variables and applying enough arguments to
reach the base type.  That definition quantifies over all closed instances,
so it is not decidable directly; this module splits it into

* a *symbolic prover* (``to_polynomial`` + ``symbolic_compare``): terms are
  normalized into a canonical sum-of-monomials form using the calculation
  identities (commutativity/associativity/distributivity, lift/flatten
  fusion, which are type-uniform even where the reduction relation cannot
  fire), and compared by absolute positiveness: every right-hand monomial
  must be covered by a left-hand monomial with at least its coefficient,
  atom by atom.  Atoms match by canonical key or through the weak-
  monotonicity congruence (equal skeleton, recursively weakly-compared
  arguments).  Strictness comes only from a spare constant summand.
  Sound but incomplete: the answer Unknown carries no information.

* a *refutation oracle* (``ground_compare``): sample closures and argument
  vectors, normalize both sides to numerals and compare.  A single failed
  comparison refutes the queried relation with a replayable witness; any
  number of successes proves nothing.

The symbolic search records its monomial-cover derivation as a list of
certificate steps; hint scripts supply the same steps externally and are
verified by the same checker.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import HintReplayError
from .gen import TERM_SIZE, TYPE_DEPTH, gen_type, gen_value
from .interp import (
    FLATTEN,
    LIFT,
    PLUS,
    TIMES,
    _binop_parts,
    _unop_parts,
    flatten,
    lift,
    nat_value,
    nf,
    oplus,
    otimes,
    typecheck_interp,
)
from .syntax import (
    NAT,
    Abs,
    App,
    Free,
    Meta,
    Num,
    PatAbs,
    PatTyAbs,
    TAll,
    TApp,
    TArrow,
    TFree,
    TLam,
    TMeta,
    Tm,
    Ty,
    TyAbs,
    TyApp,
    beta_normalize_type,
    close_tfree,
    inst_tm,
    inst_ty,
    subst_tv,
    subst_v,
    tsubst,
)

CLOSURE_BUDGET = 200
ARG_VECTORS = 5
SEARCH_NODES = 10_000


# =====================================================================
# Verdicts
# =====================================================================


@dataclass
class Verdict:
    """Outcome of a comparison query.

    kind is one of 'strict', 'weak', 'refuted', 'unknown'.  A refutation
    carries a replayable witness; strict implies weak.
    """

    kind: str
    checks: int = 0
    witness: object = None
    steps: list = field(default_factory=list)
    note: str = ""

    @property
    def is_strict(self):
        return self.kind == "strict"

    @property
    def is_weak(self):
        return self.kind in ("strict", "weak")

    def describe(self) -> str:
        if self.kind == "refuted":
            return f"refuted: {self.note}"
        if self.kind == "unknown" and self.checks:
            return f"consistent after {self.checks} checks"
        return self.kind


# =====================================================================
# Polynomials
# =====================================================================

CONST_KEY = ((), ())


def _merge_sorted(a: tuple, b: tuple) -> tuple:
    return tuple(sorted(a + b, key=lambda t: t.ckey()))


def poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0) + c
    return out


def poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for (ta, na), c in p.items():
        for (tb, nb), d in q.items():
            key = (_merge_sorted(ta, tb), _merge_sorted(na, nb))
            out[key] = out.get(key, 0) + c * d
    return out


def to_polynomial(t: Tm, at_nat: bool | None = None) -> dict:
    """Canonical polynomial of a normalized interpretation-term schema at an
    atom type: {(typed atoms, nat atoms) -> coefficient}.

    A monomial with no atoms and coefficient c denotes lift(c); one with
    only nat atoms denotes the lift of their product.  When at_nat is not
    given it is derived from the term's type.
    """
    if at_nat is None:
        at_nat = typecheck_interp(t) == NAT
    return _poly(t, at_nat)


def _poly(t: Tm, at_nat: bool) -> dict:
    bi = _binop_parts(t)
    if bi is not None:
        name, _, a, b = bi
        pa, pb = _poly(a, at_nat), _poly(b, at_nat)
        return poly_add(pa, pb) if name == PLUS else poly_mul(pa, pb)
    un = _unop_parts(t)
    if un is not None:
        name, ty, a = un
        if name == LIFT:
            return _poly(a, True)
        inner = _poly(a, False)
        out: dict = {}
        for (ta, na), c in inner.items():
            key = ((), _merge_sorted(na, tuple(flatten(ty, x) for x in ta)))
            out[key] = out.get(key, 0) + c
        return out
    if isinstance(t, Num):
        return {CONST_KEY: t.val} if t.val else {}
    if at_nat:
        return {((), (t,)): 1}
    return {((t,), ()): 1}


def denote_polynomial(p: dict, ty: Ty) -> Tm:
    """The interpretation-term schema a polynomial stands for, built in
    canonical monomial order."""
    at_nat = ty == NAT

    def mono_term(key, c):
        ta, na = key
        natpart: Tm | None = None
        for a in na:
            natpart = a if natpart is None else otimes(NAT, natpart, a)
        if c != 1 or natpart is None:
            cn = Num(c)
            natpart = cn if natpart is None else otimes(NAT, cn, natpart)
        factors = list(ta)
        if at_nat:
            factors.append(natpart)
        elif natpart is not None and (not isinstance(natpart, Num) or natpart.val != 1 or not factors):
            factors.append(lift(ty, natpart))
        out = None
        for f in factors:
            out = f if out is None else otimes(ty, out, f)
        return out

    items = sorted(p.items(), key=lambda kv: _mono_sort_key(kv[0]))
    acc = None
    for key, c in items:
        if c <= 0:
            continue
        m = mono_term(key, c)
        acc = m if acc is None else oplus(ty, acc, m)
    if acc is None:
        return Num(0) if at_nat else lift(ty, Num(0))
    return acc


def _mono_sort_key(key):
    ta, na = key
    return (
        tuple(a.ckey() for a in ta),
        tuple(a.ckey() for a in na),
    )


def canonical_monomials(p: dict) -> list:
    """Deterministic monomial order used by certificates and transcripts."""
    return sorted(
        ((k, c) for k, c in p.items() if c > 0), key=lambda kv: _mono_sort_key(kv[0])
    )


# =====================================================================
# Atom-level comparison (weak-monotonicity congruence)
# =====================================================================


class _SearchBudget:
    __slots__ = ("nodes", "fresh_count")

    def __init__(self, nodes: int = SEARCH_NODES):
        self.nodes = nodes
        self.fresh_count = 0

    def spend(self) -> bool:
        self.nodes -= 1
        return self.nodes >= 0

    def fresh(self) -> str:
        self.fresh_count += 1
        return f"~cmp{self.fresh_count}"


def _atom_ge(a: Tm, b: Tm, budget: _SearchBudget) -> bool:
    """a is at least b: key equality, or equal skeleton with weakly-compared
    arguments (sound by application/abstraction congruence and weak
    monotonicity of substitution; never establishes strictness)."""
    if a == b:
        return True
    if not budget.spend():
        return False
    if type(a) is not type(b):
        return False
    if isinstance(a, App):
        return _atom_ge(a.fn, b.fn, budget) and _term_ge(a.arg, b.arg, budget)
    if isinstance(a, TyApp):
        return a.ty == b.ty and _atom_ge(a.fn, b.fn, budget)
    if isinstance(a, Meta):
        if a.name != b.name or len(a.pend) != len(b.pend):
            return False
        for (k1, n1, v1), (k2, n2, v2) in zip(a.pend, b.pend):
            if k1 != k2 or n1 != n2:
                return False
            if k1 == "T":
                if v1 != v2:
                    return False
            elif not _term_ge(v1, v2, budget):
                return False
        return True
    return False


def _term_ge(x: Tm, y: Tm, budget: _SearchBudget) -> bool:
    """x weakly at least y, for arbitrary normalized schema terms of one
    common type."""
    if x == y:
        return True
    if not budget.spend():
        return False
    if isinstance(x, Abs) and isinstance(y, Abs) and x.ty == y.ty:
        q = Free(budget.fresh(), x.ty)
        return _term_ge(subst_v(x.body, 0, q), subst_v(y.body, 0, q), budget)
    if isinstance(x, TyAbs) and isinstance(y, TyAbs) and x.kind == y.kind:
        q = TFree(budget.fresh(), x.kind)
        return _term_ge(subst_tv(x.body, 0, q), subst_tv(y.body, 0, q), budget)
    return _poly_ge(_poly(x, False), _poly(y, False), budget)


def _multiset_ge(left: tuple, right: tuple, budget: _SearchBudget) -> bool:
    """Perfect matching of equal-length atom multisets under _atom_ge."""
    if len(left) != len(right):
        return False
    la = list(left)
    ra = []
    for b in right:  # strip exact multiset matches first
        try:
            la.remove(b)
        except ValueError:
            ra.append(b)
    if not ra:
        return True

    def assign(rs, ls):
        if not rs:
            return True
        if not budget.spend():
            return False
        b0 = rs[0]
        for i, a0 in enumerate(ls):
            if _atom_ge(a0, b0, budget) and assign(rs[1:], ls[:i] + ls[i + 1:]):
                return True
        return False

    return assign(ra, la)


def _mono_ge(lkey, rkey, budget: _SearchBudget) -> bool:
    lta, lna = lkey
    rta, rna = rkey
    return _multiset_ge(lta, rta, budget) and _multiset_ge(lna, rna, budget)


def _poly_ge(p: dict, q: dict, budget: _SearchBudget) -> bool:
    """Every monomial of q covered by p (coefficients included)."""
    avail = {k: c for k, c in p.items()}
    for rkey, rc in canonical_monomials(q):
        need = rc
        have = avail.get(rkey, 0)
        if have:
            take = min(have, need)
            avail[rkey] = have - take
            need -= take
        if need:
            for lkey, _ in canonical_monomials({k: c for k, c in avail.items()}):
                if lkey == rkey or avail[lkey] <= 0:
                    continue
                if _mono_ge(lkey, rkey, budget):
                    take = min(avail[lkey], need)
                    avail[lkey] -= take
                    need -= take
                    if not need:
                        break
        if need:
            return False
    return True


# =====================================================================
# Absolute positiveness with certificates
# =====================================================================


def symbolic_compare(lhs_poly: dict, rhs_poly: dict) -> Verdict:
    """Compare two canonical polynomials at one shared type schema.

    Weak when every rhs monomial is covered by lhs monomials with enough
    coefficient and atom-wise weak matches; Strict when additionally a
    constant summand of the lhs is left over.  Unknown otherwise (including
    search-budget exhaustion); Unknown is not a refutation.
    """
    budget = _SearchBudget()
    lmonos = canonical_monomials(lhs_poly)
    rmonos = canonical_monomials(rhs_poly)
    avail = [c for _, c in lmonos]
    steps: list[tuple] = []
    for ri, (rkey, rc) in enumerate(rmonos):
        need = rc
        for li, (lkey, _) in enumerate(lmonos):
            if avail[li] > 0 and lkey == rkey:
                take = min(avail[li], need)
                avail[li] -= take
                need -= take
                steps.append(("cover", ri, li, take, "match"))
                if not need:
                    break
        if need:
            for li, (lkey, _) in enumerate(lmonos):
                if avail[li] <= 0 or lkey == rkey:
                    continue
                if _mono_ge(lkey, rkey, budget):
                    take = min(avail[li], need)
                    avail[li] -= take
                    need -= take
                    steps.append(("cover", ri, li, take, "congruence"))
                    if not need:
                        break
        if need:
            return Verdict("unknown", steps=steps,
                           note=f"monomial {ri} not covered")
    strict = any(
        avail[li] > 0 and lmonos[li][0] == CONST_KEY for li in range(len(lmonos))
    )
    kind = "strict" if strict else "weak"
    steps.append(("qed", kind))
    return Verdict(kind, steps=steps)


def verify_certificate(lhs_poly: dict, rhs_poly: dict, steps: list,
                       rule: str = "?") -> Verdict:
    """Re-check a monomial-cover derivation step by step; raises
    HintReplayError on the first step that does not hold."""
    lmonos = canonical_monomials(lhs_poly)
    rmonos = canonical_monomials(rhs_poly)
    avail = [c for _, c in lmonos]
    need = [c for _, c in rmonos]
    budget = _SearchBudget()
    claimed: str | None = None
    for step in steps:
        tag = step[0]
        if tag in ("beta", "approx"):
            continue  # normalization markers; polynomials are already canonical
        if tag == "cover":
            _, ri, li, amount, mode = step
            sname = f"cover R{ri} <- L{li} x{amount} {mode}"
            if not (0 <= ri < len(rmonos)) or not (0 <= li < len(lmonos)):
                raise HintReplayError(rule, sname, "monomial index out of range")
            if amount <= 0 or avail[li] < amount:
                raise HintReplayError(rule, sname, "not enough coefficient available")
            if need[ri] < amount:
                raise HintReplayError(rule, sname, "covering more than required")
            lkey, rkey = lmonos[li][0], rmonos[ri][0]
            if mode == "match":
                if lkey != rkey:
                    raise HintReplayError(rule, sname, "monomials are not identical")
            elif mode == "congruence":
                if not _mono_ge(lkey, rkey, budget):
                    raise HintReplayError(
                        rule, sname, "congruence comparison does not hold"
                    )
            else:
                raise HintReplayError(rule, sname, f"unknown mode '{mode}'")
            avail[li] -= amount
            need[ri] -= amount
            continue
        if tag == "qed":
            claimed = step[1]
            break
        raise HintReplayError(rule, str(step), "unknown step kind")
    if claimed is None:
        raise HintReplayError(rule, "qed", "derivation does not conclude")
    if any(need):
        ri = next(i for i, n in enumerate(need) if n)
        raise HintReplayError(rule, "qed", f"rhs monomial {ri} is not fully covered")
    if claimed == "strict":
        spare = any(
            avail[li] > 0 and lmonos[li][0] == CONST_KEY for li in range(len(lmonos))
        )
        if not spare:
            raise HintReplayError(
                rule, "qed strict", "no spare constant summand remains on the lhs"
            )
        return Verdict("strict", steps=list(steps))
    if claimed == "weak":
        return Verdict("weak", steps=list(steps))
    raise HintReplayError(rule, f"qed {claimed}", "unknown claim")


# =====================================================================
# Closures and the ground-instance oracle
# =====================================================================


@dataclass
class Closure:
    """Closed images for every free type-constructor variable and every
    free term variable / hole; hole images may mention their declared
    dependencies, which are substituted out when pendings execute."""

    omega: dict
    gamma: dict

    def bindings(self) -> dict:
        out = dict(self.omega)
        out.update(self.gamma)
        return out


def free_profile(items) -> tuple[dict, dict]:
    """Free type-level and term-level names of terms/types, with their
    kinds/types and dependency signatures.  Pattern-binder names and hole
    dependency names are binders, not frees."""
    tyvars: dict[str, tuple] = {}
    tmvars: dict[str, tuple] = {}

    def walk_ty(ty: Ty, bound: frozenset):
        if isinstance(ty, TFree):
            if ty.name not in bound:
                tyvars.setdefault(ty.name, (ty.kind, ()))
        elif isinstance(ty, TMeta):
            tyvars.setdefault(ty.name, (ty.kind, ()))
            for _, v in ty.pend:
                walk_ty(v, bound)
        elif isinstance(ty, TArrow):
            walk_ty(ty.lhs, bound)
            walk_ty(ty.rhs, bound)
        elif isinstance(ty, TApp):
            walk_ty(ty.fn, bound)
            walk_ty(ty.arg, bound)
        elif isinstance(ty, (TAll, TLam)):
            walk_ty(ty.body, bound)

    def walk(t: Tm, bound: frozenset):
        if isinstance(t, Free):
            if t.name not in bound:
                tmvars.setdefault(t.name, (t.ty, ()))
            walk_ty(t.ty, bound)
        elif isinstance(t, Meta):
            dep_names = frozenset(n for _, n, _ in t.deps)
            if t.name not in bound:
                tmvars.setdefault(t.name, (t.ty, t.deps))
            walk_ty(t.ty, bound | dep_names)
            for k, n, dty in t.deps:
                if k == "v":
                    walk_ty(dty, bound | dep_names)
            for k, _, v in t.pend:
                if k == "v":
                    walk(v, bound)
                else:
                    walk_ty(v, bound)
        elif isinstance(t, App):
            walk(t.fn, bound)
            walk(t.arg, bound)
        elif isinstance(t, TyApp):
            walk(t.fn, bound)
            walk_ty(t.ty, bound)
        elif isinstance(t, Abs):
            walk_ty(t.ty, bound)
            walk(t.body, bound)
        elif isinstance(t, TyAbs):
            walk(t.body, bound)
        elif isinstance(t, PatAbs):
            walk_ty(t.ty, bound)
            walk(t.body, bound | {t.name})
        elif isinstance(t, PatTyAbs):
            walk(t.body, bound | {t.name})

    for item in items:
        if isinstance(item, Ty):
            walk_ty(item, frozenset())
        else:
            walk(item, frozenset())
    return tyvars, tmvars


def _image_for(rng: random.Random, ty: Ty, deps: tuple, omega: dict,
               size: int) -> Tm:
    """A term image for a hole: generated as a closed function of the
    declared dependencies, then applied to them.  A dependency's type may
    mention earlier type dependencies; closing in reverse order keeps the
    function type well-scoped."""
    ty_c = beta_normalize_type(inst_ty(ty, omega))
    if not deps:
        return nf(gen_value(rng, ty_c, size))
    inst_deps = []
    for k, n, d in deps:
        if k == "v":
            inst_deps.append(("v", n, beta_normalize_type(inst_ty(d, omega))))
        else:
            inst_deps.append(("T", n, d))
    fnty = ty_c
    for k, n, d in reversed(inst_deps):
        if k == "v":
            fnty = TArrow(d, fnty)
        else:
            fnty = TAll(d, close_tfree(fnty, n))
    f = gen_value(rng, beta_normalize_type(fnty), size)
    out = f
    for k, n, d in inst_deps:
        if k == "T":
            out = TyApp(out, TFree(n, d))
        else:
            out = App(out, Free(n, d))
    return nf(out)


def sample_closures(ftv: dict, fv: dict, budget: int, seed: int,
                    type_depth: int = TYPE_DEPTH,
                    term_size: int = TERM_SIZE) -> list[Closure]:
    """Deterministic stream of closures.  ftv maps type-level names to
    (kind, deps); fv maps term-level names to (type, deps)."""
    rng = random.Random(seed)
    out = []
    for _ in range(budget):
        omega: dict = {}
        for name in sorted(ftv):
            kind, _deps = ftv[name]
            omega[name] = gen_type(rng, kind, type_depth)
        gamma: dict = {}
        for name in sorted(fv):
            ty, deps = fv[name]
            gamma[name] = _image_for(rng, ty, deps, omega, term_size)
        out.append(Closure(omega, gamma))
    return out


def ground_compare(s: Tm, t: Tm, ty: Ty, relation: str = "ge",
                   budget: int = CLOSURE_BUDGET, seed: int = 0,
                   vectors: int = ARG_VECTORS) -> Verdict:
    """Refutation oracle for the queried relation ('gt' or 'ge').

    Samples closures and argument vectors, reduces both sides to numerals
    and compares; returns Refuted with a replayable witness on the first
    violation, otherwise an Unknown verdict counting the checks performed.
    The oracle never proves: only the refutation side is exact.
    """
    tyvars, tmvars = free_profile([s, t, ty])
    closures = sample_closures(tyvars, tmvars, budget, seed)
    rng = random.Random(seed ^ 0x5EED)
    checks = 0
    for closure in closures:
        bind = closure.bindings()
        ty_c = beta_normalize_type(inst_ty(ty, bind))
        s_c = nf(inst_tm(s, bind))
        t_c = nf(inst_tm(t, bind))
        n_vec = 1 if ty_c == NAT else vectors
        for _ in range(n_vec):
            args = []
            tv, ls, rs = ty_c, s_c, t_c
            while tv != NAT:
                if isinstance(tv, TArrow):
                    q = nf(gen_value(rng, tv.lhs))
                    args.append(("v", q))
                    ls, rs = App(ls, q), App(rs, q)
                    tv = tv.rhs
                elif isinstance(tv, TAll):
                    tau = gen_type(rng, tv.kind, 1)
                    args.append(("T", tau))
                    ls, rs = TyApp(ls, tau), TyApp(rs, tau)
                    tv = beta_normalize_type(tsubst(tv.body, 0, tau))
                else:  # closed beta-normal interpretation atoms are nat
                    break
            nl = nat_value(nf(ls))
            nr = nat_value(nf(rs))
            checks += 1
            ok = nl > nr if relation == "gt" else nl >= nr
            if not ok:
                rel = ">" if relation == "gt" else ">="
                return Verdict(
                    "refuted",
                    checks=checks,
                    witness=(closure, tuple(args), nl, nr),
                    note=f"{nl} {rel} {nr} fails",
                )
    return Verdict("unknown", checks=checks)


def replay_witness(s: Tm, t: Tm, witness) -> tuple[int, int]:
    """Re-run a refutation witness; returns the two numerals."""
    closure, args, _, _ = witness
    bind = closure.bindings()
    ls = nf(inst_tm(s, bind))
    rs = nf(inst_tm(t, bind))
    for k, a in args:
        if k == "v":
            ls, rs = App(ls, a), App(rs, a)
        else:
            ls, rs = TyApp(ls, a), TyApp(rs, a)
    return nat_value(nf(ls)), nat_value(nf(rs))


# =====================================================================
# Comparison of terms at a type schema (eta expansion to an atom type)
# =====================================================================


def eta_expand_to_atom(sides: list[Tm], ty: Ty):
    """Apply all sides to shared fresh variables until the common type is an
    atom; returns (new sides, atom type, introduced frees)."""
    ty = beta_normalize_type(ty)
    count = 0
    intro = []
    while True:
        if isinstance(ty, TArrow):
            count += 1
            q = Free(f"~arg{count}", ty.lhs)
            intro.append(q)
            sides = [nf(App(s, q)) for s in sides]
            ty = ty.rhs
        elif isinstance(ty, TAll):
            count += 1
            q = TFree(f"~targ{count}", ty.kind)
            intro.append(q)
            sides = [nf(TyApp(s, q)) for s in sides]
            ty = beta_normalize_type(tsubst(ty.body, 0, q))
        else:
            return sides, ty, intro


def compare_terms(lhs: Tm, rhs: Tm, ty: Ty) -> tuple[Verdict, dict, dict, Ty]:
    """Symbolically compare two interpretation-term schemas of a common
    type; returns the verdict plus the polynomials and atom type used."""
    (l2, r2), aty, _ = eta_expand_to_atom([nf(lhs), nf(rhs)], ty)
    at_nat = aty == NAT
    lp = _poly(l2, at_nat)
    rp = _poly(r2, at_nat)
    return symbolic_compare(lp, rp), lp, rp, aty
