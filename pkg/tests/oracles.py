"""Brute-force reference implementations used to cross-check the library.

Nothing here calls the library's decision procedures: ground evaluation,
normal forms, freshness and permutation action are re-implemented
directly from their definitions.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Optional

from nomau.terms import (
    Abs,
    App,
    Atom,
    AtomSusp,
    AtomVar,
    Eqr,
    Fresh,
    FunSymbol,
    Theory,
    VarSusp,
)

# ---------------------------------------------------------------------------
# Ground terms


def count_nodes(t) -> int:
    if isinstance(t, App):
        return 1 + sum(count_nodes(a) for a in t.args)
    if isinstance(t, Abs):
        return 1 + count_nodes(t.body)
    return 1


def g_swap(a: Atom, b: Atom, t):
    """Swap two atoms everywhere in a ground term, binders included."""
    if isinstance(t, Atom):
        return b if t == a else a if t == b else t
    if isinstance(t, App):
        return App(t.sym, tuple(g_swap(a, b, x) for x in t.args))
    if isinstance(t, Abs):
        return Abs(g_swap(a, b, t.binder), g_swap(a, b, t.body))
    raise TypeError(t)


def g_free(t) -> frozenset:
    if isinstance(t, Atom):
        return frozenset({t})
    if isinstance(t, App):
        return frozenset().union(*(g_free(x) for x in t.args)) if t.args else frozenset()
    if isinstance(t, Abs):
        return g_free(t.body) - {t.binder}
    raise TypeError(t)


def _flat_args(sym: FunSymbol, args) -> list:
    out = []
    for a in args:
        if isinstance(a, App) and a.sym.name == sym.name and sym.theory in (Theory.A, Theory.AC):
            out.extend(_flat_args(sym, a.args))
        else:
            out.append(a)
    return out


def nf(t, bound: tuple = ()):
    """Normal form modulo α (de Bruijn indices) and A/C/AC (flattening and sorting)."""
    if isinstance(t, Atom):
        return ("b", bound.index(t)) if t in bound else ("a", t.name)
    if isinstance(t, Abs):
        return ("lam", nf(t.body, (t.binder,) + bound))
    if isinstance(t, App):
        args = [nf(a, bound) for a in _flat_args(t.sym, t.args)]
        if t.sym.theory in (Theory.C, Theory.AC):
            args.sort(key=repr)
        return ("app", t.sym.name, tuple(args))
    raise TypeError(t)


def brute_eq(s, t) -> bool:
    """Ground equality modulo α and E by trying every argument permutation."""
    if isinstance(s, Atom) or isinstance(t, Atom):
        return s == t
    if isinstance(s, Abs) and isinstance(t, Abs):
        a, b = s.binder, t.binder
        if a == b:
            return brute_eq(s.body, t.body)
        return a not in g_free(t) and brute_eq(s.body, g_swap(a, b, t.body))
    if isinstance(s, App) and isinstance(t, App):
        if s.sym.name != t.sym.name:
            return False
        xs, ys = _flat_args(s.sym, s.args), _flat_args(t.sym, t.args)
        if len(xs) != len(ys):
            return False
        th = s.sym.theory
        if th in (Theory.C, Theory.AC):
            return any(all(brute_eq(x, y) for x, y in zip(xs, p)) for p in itertools.permutations(ys))
        return all(brute_eq(x, y) for x, y in zip(xs, ys))
    return False


# ---------------------------------------------------------------------------
# Ground instantiation of nominal terms


def g_elem(e, env) -> Atom:
    if isinstance(e, Atom):
        return e
    if isinstance(e, AtomVar):
        return env[e]
    return g_perm_atom(e.perm, env, env[e.var])


def g_perm_atom(perm, env, c: Atom) -> Atom:
    for x, y in reversed(perm.swaps):
        a, b = g_elem(x, env), g_elem(y, env)
        c = b if c == a else a if c == b else c
    return c


def g_inst(t, env, tmap):
    if isinstance(t, Atom):
        return t
    if isinstance(t, AtomSusp):
        return g_elem(t, env)
    if isinstance(t, VarSusp):
        v = tmap[t.var]
        for x, y in reversed(t.perm.swaps):
            v = g_swap(g_elem(x, env), g_elem(y, env), v)
        return v
    if isinstance(t, App):
        return App(t.sym, tuple(g_inst(a, env, tmap) for a in t.args))
    if isinstance(t, Abs):
        return Abs(g_elem(t.binder, env), g_inst(t.body, env, tmap))
    raise TypeError(t)


def g_holds(c, env, tmap) -> bool:
    if isinstance(c, Fresh):
        return g_elem(c.subject, env) not in g_free(g_inst(c.target, env, tmap))
    assert isinstance(c, Eqr)
    vals = [[g_elem(e, env) for e in cl] for cl in c.classes]
    same = all(len(set(v)) == 1 for v in vals)
    distinct = len({v[0] for v in vals}) == len(vals)
    if not (same and distinct):
        return True
    if c.facts is None:
        return False
    return all(g_elem(s, env) not in g_free(g_inst(r, env, tmap)) for s, r in c.facts)


def _vars(objs) -> tuple:
    av, tv = set(), set()

    def go(x):
        if isinstance(x, AtomSusp):
            av.add(x.var)
            for a, b in x.perm.swaps:
                go(a)
                go(b)
        elif isinstance(x, VarSusp):
            tv.add(x.var)
            for a, b in x.perm.swaps:
                go(a)
                go(b)
        elif isinstance(x, App):
            for a in x.args:
                go(a)
        elif isinstance(x, Abs):
            go(x.binder)
            go(x.body)
        elif isinstance(x, Fresh):
            go(x.subject)
            go(x.target)
        elif isinstance(x, Eqr):
            for cl in x.classes:
                for e in cl:
                    go(e)
            for s, r in x.facts or ():
                go(s)
                go(r)
        elif isinstance(x, (list, tuple, set, frozenset)):
            for y in x:
                go(y)

    go(objs)
    return sorted(av, key=lambda v: v.name), sorted(tv, key=lambda v: v.name)


def pool(n: int) -> list:
    return [Atom(f"p{i}") for i in range(n)]


def rg_envs(avs: list, atoms: list):
    """Atom assignments up to renaming of atoms (restricted growth strings)."""

    def rec(i, used, acc):
        if i == len(avs):
            yield dict(zip(avs, acc))
            return
        for k in range(min(used + 1, len(atoms))):
            yield from rec(i + 1, max(used, k + 1), acc + [atoms[k]])

    yield from rec(0, 0, [])


def ground_terms(atoms: list, syms: Iterable, depth: int) -> list:
    """Ground terms of nesting depth at most ``depth`` (binary symbols only on the first level)."""
    syms = list(syms)
    consts = [App(s) for s in syms if s.arity == 0]
    level = list(atoms) + consts
    out = list(level)
    for d in range(depth):
        nxt = []
        for t in level:
            for s in syms:
                if s.arity == 1:
                    nxt.append(App(s, (t,)))
            for a in atoms:
                nxt.append(Abs(a, t))
        if d == 0:
            for s in syms:
                if s.arity == 2:
                    for x, y in itertools.product(level, repeat=2):
                        nxt.append(App(s, (x, y)))
        out.extend(nxt)
        level = nxt
    return out


def symbols(objs) -> set:
    out = set()

    def go(x):
        if isinstance(x, App):
            out.add(x.sym)
            for a in x.args:
                go(a)
        elif isinstance(x, Abs):
            go(x.body)
        elif isinstance(x, Fresh):
            go(x.target)
        elif isinstance(x, (list, tuple, set, frozenset)):
            for y in x:
                go(y)

    go(objs)
    return out


# ---------------------------------------------------------------------------
# Judgement oracle


def find_counterexample(ctx, kind: str, left, right, depth: int = 2) -> Optional[tuple]:
    """Search a bounded ground instance satisfying ``ctx`` that violates the judgement."""
    avs, tvs = _vars([ctx, left, right])
    atoms = pool(len(avs) + 1)
    syms = symbols([ctx, left, right]) | {FunSymbol("g", 1), FunSymbol("k", 0)}
    gts = ground_terms(atoms, syms, depth) if tvs else [None]
    for env in rg_envs(avs, atoms):
        for vals in itertools.product(gts, repeat=len(tvs)):
            tmap = dict(zip(tvs, vals))
            if not all(g_holds(c, env, tmap) for c in ctx):
                continue
            if kind == "fresh":
                ok = g_elem(left, env) not in g_free(g_inst(right, env, tmap))
            else:
                ok = nf(g_inst(left, env, tmap)) == nf(g_inst(right, env, tmap))
            if not ok:
                return env, tmap
    return None


# ---------------------------------------------------------------------------
# Constraint entailment by free-atom abstraction


def phi_free(t, phi_a, phi_t) -> frozenset:
    if isinstance(t, AtomSusp):
        return frozenset({g_elem(t, phi_a)})
    if isinstance(t, VarSusp):
        out = set()
        for c in phi_t[t.var]:
            for x, y in reversed(t.perm.swaps):
                a, b = g_elem(x, phi_a), g_elem(y, phi_a)
                c = b if c == a else a if c == b else c
            out.add(c)
        return frozenset(out)
    if isinstance(t, App):
        return frozenset().union(*(phi_free(a, phi_a, phi_t) for a in t.args)) if t.args else frozenset()
    if isinstance(t, Abs):
        return phi_free(t.body, phi_a, phi_t) - {g_elem(t.binder, phi_a)}
    if isinstance(t, Atom):
        return frozenset({t})
    raise TypeError(t)


def phi_holds(c, phi_a, phi_t) -> bool:
    if isinstance(c, Fresh):
        return g_elem(c.subject, phi_a) not in phi_free(c.target, phi_a, phi_t)
    vals = [[g_elem(e, phi_a) for e in cl] for cl in c.classes]
    if not (all(len(set(v)) == 1 for v in vals) and len({v[0] for v in vals}) == len(vals)):
        return True
    if c.facts is None:
        return False
    return all(g_elem(s, phi_a) not in phi_free(r, phi_a, phi_t) for s, r in c.facts)


def phi_entails(ctx, c) -> bool:
    """``ctx ⊢ c`` by enumerating atom maps into an n-atom pool and free-atom subsets for term-variables."""
    avs, tvs = _vars([ctx, c])
    atoms = pool(max(1, len(avs)))
    subsets = [frozenset(s) for r in range(len(atoms) + 1) for s in itertools.combinations(atoms, r)]
    for vals in itertools.product(atoms, repeat=len(avs)):
        phi_a = dict(zip(avs, vals))
        for tv in itertools.product(subsets, repeat=len(tvs)):
            phi_t = dict(zip(tvs, tv))
            if all(phi_holds(d, phi_a, phi_t) for d in ctx) and not phi_holds(c, phi_a, phi_t):
                return False
    return True


# ---------------------------------------------------------------------------
# Generalization witnesses


def witness_inclusion(result, nabla, inp, side: int, n_atoms: int = 4, depth: int = 2) -> Optional[tuple]:
    """Check every bounded instance of ``(nabla, inp)`` is an instance of the result.

    The witness for store variables is the store's ``side`` component under
    the input interpretation; the remaining atom-variables of the result
    are searched over the pool plus fresh atoms. Returns a failing
    instance or None.
    """
    store = {e.genvar: (e.left if side == 0 else e.right) for e in result.store}
    avs_in, tvs_in = _vars([nabla, inp])
    avs_r, tvs_r = _vars([result.context, result.term])
    atoms = pool(n_atoms)
    syms = symbols([inp]) | {FunSymbol("g", 1)}
    gts = ground_terms(atoms[:2], syms, depth) if tvs_in else [None]
    rest = [v for v in avs_r if v not in store and v not in avs_in]
    extra = atoms + [Atom(f"q{i}") for i in range(len(rest))]
    # term-variables of the other input are existential in the result as well
    rest_t = [x for x in tvs_r if x not in store and x not in tvs_in]
    t_cands = [App(FunSymbol("w0", 0))] + ground_terms(atoms[:2], syms, 1)
    for env in rg_envs(avs_in, atoms):
        for vals in itertools.product(gts, repeat=len(tvs_in)):
            tmap = dict(zip(tvs_in, vals))
            if not all(g_holds(c, env, tmap) for c in nabla):
                continue
            target = nf(g_inst(inp, env, tmap))
            found = False
            for combo, tcombo in itertools.product(
                itertools.product(extra, repeat=len(rest)), itertools.product(t_cands, repeat=len(rest_t))
            ):
                # store sides may mention binder variables, so they are read after those are fixed
                ea = {v: env[v] for v in avs_in}
                ea.update(zip(rest, combo))
                et = {x: tmap[x] for x in tvs_r if x in tmap}
                et.update(zip(rest_t, tcombo))
                for v, side_term in store.items():
                    if isinstance(v, AtomVar):
                        ea[v] = g_elem(side_term, ea)
                    else:
                        et[v] = g_inst(side_term, ea, tmap)
                if all(g_holds(c, ea, et) for c in result.context) and nf(g_inst(result.term, ea, et)) == target:
                    found = True
                    break
            if not found:
                return env, tmap
    return None


# ---------------------------------------------------------------------------
# First-order instance test modulo C


def _subterms(t) -> list:
    out = [t]
    if isinstance(t, App):
        for a in t.args:
            out.extend(_subterms(a))
    return out


def fo_instance(specific, general) -> bool:
    """⟦specific⟧ ⊆ ⟦general⟧ for first-order terms: match ``general`` onto ``specific`` with its variables frozen."""
    _, tvs_s = _vars(specific)
    skolem = {x: App(FunSymbol(f"sk_{x.name}", 0)) for x in tvs_s}
    frozen = g_inst(specific, {}, skolem)
    _, tvs_g = _vars(general)
    cands = {nf(u): u for u in _subterms(frozen)}
    target = nf(frozen)
    for vals in itertools.product(list(cands.values()), repeat=len(tvs_g)):
        if nf(g_inst(general, {}, dict(zip(tvs_g, vals)))) == target:
            return True
    return False


__all__ = [
    "brute_eq",
    "count_nodes",
    "find_counterexample",
    "fo_instance",
    "g_free",
    "g_inst",
    "nf",
    "phi_entails",
    "pool",
    "witness_inclusion",
]


def sorted_form(t):
    """Syntactic normal form modulo C/AC: arguments of such symbols sorted, binders kept."""
    from nomau.terms import Abs, App, Theory, term_key

    if isinstance(t, App):
        args = [sorted_form(a) for a in t.args]
        if t.sym.theory in (Theory.C, Theory.AC):
            args.sort(key=term_key)
        return App(t.sym, tuple(args))
    if isinstance(t, Abs):
        return Abs(t.binder, sorted_form(t.body))
    return t
