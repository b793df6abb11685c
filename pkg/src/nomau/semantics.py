"""Interpretations and semantic judgements over freshness contexts.

A judgement ``∇ ⊨ J`` quantifies over all interpretations satisfying ``∇``.
Only the equality pattern of atom-variables matters, so the decision
procedure enumerates partitions of the atom-variables, gives each class its
own atom, and keeps term-variables symbolic: a constraint then reduces to
facts ``(atom, X)`` and term comparisons use those facts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional

from .equality import canonical, eq_modulo, eq_modulo_symbolic, fresh_requirements
from .terms import (
    ID,
    Abs,
    App,
    Atom,
    AtomSusp,
    AtomVar,
    Eqr,
    Fresh,
    Perm,
    Term,
    TermInContext,
    TermVar,
    VarSusp,
    apply_permutation_ground,
    atom_vars,
    mk_app,
    susp,
    term_vars,
)

POOL_PREFIX = "_a"


def pool_atom(i: int) -> Atom:
    return Atom(f"{POOL_PREFIX}{i}")


# ---------------------------------------------------------------------------
# Interpretations


@dataclass
class Interpretation:
    atom_map: dict = field(default_factory=dict)
    term_map: dict = field(default_factory=dict)


class MissingBinding(KeyError):
    pass


def eval_elem(e, env: Mapping) -> Atom:
    if isinstance(e, Atom):
        return e
    try:
        a = env[e.var]
    except KeyError:
        raise MissingBinding(e.var) from None
    for x, y in reversed(e.perm.swaps):
        ax, ay = eval_elem(x, env), eval_elem(y, env)
        if a == ax:
            a = ay
        elif a == ay:
            a = ax
    return a


def eval_perm(p: Perm, env: Mapping) -> Perm:
    return Perm(tuple((eval_elem(x, env), eval_elem(y, env)) for x, y in p.swaps))


def instantiate(t: Term, env: Mapping, term_map: Optional[Mapping] = None) -> Term:
    """Replace atom-variables by atoms; replace term-variables too when ``term_map`` is given."""
    if isinstance(t, Atom):
        return t
    if isinstance(t, AtomSusp):
        return eval_elem(t, env)
    if isinstance(t, VarSusp):
        p = eval_perm(t.perm, env)
        if term_map is not None:
            try:
                g = term_map[t.var]
            except KeyError:
                raise MissingBinding(t.var) from None
            return apply_permutation_ground(p, g)
        return VarSusp(p, t.var)
    if isinstance(t, App):
        return mk_app(t.sym, (instantiate(a, env, term_map) for a in t.args))
    if isinstance(t, Abs):
        b = t.binder if isinstance(t.binder, Atom) else eval_elem(t.binder, env)
        return Abs(b, instantiate(t.body, env, term_map))
    raise TypeError(f"not a term: {t!r}")


def interpret(t: Term, rho: Interpretation) -> Term:
    """Homomorphic action of an interpretation; the result is a ground term."""
    return instantiate(t, rho.atom_map, rho.term_map)


def constraint_requirements(c, env: Mapping) -> Optional[frozenset]:
    """Facts ``(atom, X)`` a constraint needs under an atom assignment, or None if violated."""
    if isinstance(c, Fresh):
        return fresh_requirements(eval_elem(c.subject, env), instantiate(c.target, env))
    values = [[eval_elem(e, env) for e in cl] for cl in c.classes]
    reps = []
    for cl in values:
        if any(a != cl[0] for a in cl):
            return frozenset()
        reps.append(cl[0])
    if len(set(reps)) != len(reps):
        return frozenset()
    if c.facts is None:
        return None
    out: set = set()
    for s, r in c.facts:
        req = fresh_requirements(eval_elem(s, env), instantiate(r, env))
        if req is None:
            return None
        out |= req
    return frozenset(out)


def ground_holds(c, env: Mapping, term_map: Mapping) -> bool:
    """Check a constraint under a full interpretation (ground check)."""
    from .equality import fresh_ground

    if isinstance(c, Fresh):
        return fresh_ground(eval_elem(c.subject, env), instantiate(c.target, env, term_map))
    values = [[eval_elem(e, env) for e in cl] for cl in c.classes]
    reps = []
    for cl in values:
        if any(a != cl[0] for a in cl):
            return True
        reps.append(cl[0])
    if len(set(reps)) != len(reps):
        return True
    if c.facts is None:
        return False
    return all(fresh_ground(eval_elem(s, env), instantiate(r, env, term_map)) for s, r in c.facts)


# ---------------------------------------------------------------------------
# Partitions and models


def set_partitions(items: list) -> Iterator[list]:
    """All partitions of a list, as lists of blocks (restricted growth order)."""
    n = len(items)
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i, k):
        if i == n:
            blocks = [[] for _ in range(k)]
            for it, lab in zip(items, labels):
                blocks[lab].append(it)
            yield blocks
            return
        for lab in range(k + 1):
            labels[i] = lab
            yield from rec(i + 1, max(k, lab + 1))

    yield from rec(0, 0)


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


@dataclass(frozen=True)
class Model:
    """An atom assignment (one atom per class) with the induced facts on term-variables."""

    env: Mapping
    facts: frozenset

    def classes(self) -> list:
        by_atom: dict = {}
        for v, a in self.env.items():
            by_atom.setdefault(a, []).append(v)
        return sorted((sorted(vs) for vs in by_atom.values()))


def _sorted_vars(vs) -> list:
    return sorted(vs, key=lambda v: v.name)


@lru_cache(maxsize=20000)
def _models_cached(ctx: frozenset, avars: tuple) -> tuple:
    order = list(avars)
    index = {v: i for i, v in enumerate(order)}
    buckets: list = [[] for _ in range(len(order) + 1)]
    for c in ctx:
        vs = atom_vars(c)
        pos = max((index[v] for v in vs), default=-1)
        buckets[pos + 1].append(c)
    base: set = set()
    for c in buckets[0]:
        r = constraint_requirements(c, {})
        if r is None:
            return ()
        base |= r
    out = []
    env: dict = {}

    def rec(i, k, facts):
        if i == len(order):
            out.append(Model(dict(env), frozenset(facts)))
            return
        v = order[i]
        for lab in range(k + 1):
            env[v] = pool_atom(lab)
            new = set(facts)
            ok = True
            for c in buckets[i + 1]:
                r = constraint_requirements(c, env)
                if r is None:
                    ok = False
                    break
                new |= r
            if ok:
                rec(i + 1, max(k, lab + 1), new)
        env.pop(v, None)

    rec(0, 0, base)
    return tuple(out)


def models(ctx: Iterable, extra_vars: Iterable = ()) -> tuple:
    """All consistent atom partitions of the variables of ``ctx`` and ``extra_vars``."""
    ctx = frozenset(ctx)
    vs = atom_vars(ctx) | set(extra_vars)
    return _models_cached(ctx, tuple(_sorted_vars(vs)))


def _components(ctx: frozenset, query_vars: set):
    """Split a context into constraints connected to the query and the rest."""
    parent: dict = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    info = []
    for c in ctx:
        vs = atom_vars(c)
        info.append((c, vs))
        vs = list(vs)
        for v in vs[1:]:
            union(vs[0], v)
    roots = {find(v) for v in query_vars}
    near, far = [], []
    for c, vs in info:
        if vs and find(next(iter(vs))) in roots:
            near.append(c)
        elif not vs:
            near.append(c)
        else:
            far.append(c)
    return frozenset(near), frozenset(far)


@lru_cache(maxsize=20000)
def is_consistent(ctx: frozenset) -> bool:
    """True iff some interpretation satisfies the context."""
    ctx = frozenset(ctx)
    if not ctx:
        return True
    return bool(models(ctx))


def relevant_models(ctx: Iterable, query_vars: Iterable):
    """Models restricted to constraints connected with the query variables.

    Constraints sharing no atom-variable (transitively) with the query can be
    satisfied by atoms disjoint from the query's, so they only matter through
    their own consistency. Returns None when the whole context is inconsistent.
    """
    ctx = frozenset(ctx)
    qv = set(query_vars)
    near, far = _components(ctx, qv)
    if far and not is_consistent(far):
        return None
    ms = models(near, qv)
    if not ms:
        return None
    return ms


# ---------------------------------------------------------------------------
# Judgements


def holds_freshness(ctx: Iterable, c) -> bool:
    """Decide ``ctx ⊨ c`` for a freshness constraint ``c`` (vacuously true if ctx is inconsistent)."""
    ms = relevant_models(ctx, atom_vars(c))
    if ms is None:
        return True
    for m in ms:
        req = constraint_requirements(c, m.env)
        if req is None or not req <= m.facts:
            return False
    return True


def holds_eq(ctx: Iterable, s: Term, t: Term, theory_override=None) -> bool:
    """Decide ``ctx ⊨ s ≈_E t``."""
    ms = relevant_models(ctx, atom_vars(s) | atom_vars(t))
    if ms is None:
        return True
    for m in ms:
        if not eq_modulo_symbolic(instantiate(s, m.env), instantiate(t, m.env), m.facts, theory_override):
            return False
    return True


def holds_all(ctx: Iterable, constraints: Iterable) -> bool:
    return all(holds_freshness(ctx, c) if isinstance(c, Fresh) else holds_constraint(ctx, c) for c in constraints)


def holds_constraint(ctx: Iterable, c) -> bool:
    """Decide ``ctx ⊨ c`` for any constraint (freshness or conditional)."""
    ms = relevant_models(ctx, atom_vars(c))
    if ms is None:
        return True
    for m in ms:
        req = constraint_requirements(c, m.env)
        if req is None or not req <= m.facts:
            return False
    return True


def perm_equiv(ctx: Iterable, p1: Perm, p2: Perm) -> bool:
    """Decide whether two permutations denote the same function under every model."""
    vs = atom_vars(p1) | atom_vars(p2)
    ms = relevant_models(ctx, vs)
    if ms is None:
        return True
    for m in ms:
        g1, g2 = _eval_perm(p1, m.env), _eval_perm(p2, m.env)
        for a in set(m.env.values()):
            if g1.apply_atom(a) != g2.apply_atom(a):
                return False
    return True


def _eval_perm(p: Perm, env) -> Perm:
    return Perm(tuple((eval_elem(x, env), eval_elem(y, env)) for x, y in p.swaps))


def entails_context(ctx: Iterable, other: Iterable) -> bool:
    return all(holds_constraint(ctx, c) for c in other)


# ---------------------------------------------------------------------------
# Simple contexts


@dataclass(frozen=True)
class SimpleContext:
    """Constraints of the forms ``A = B``, ``A # B`` and ``A # X``."""

    eqs: frozenset = frozenset()
    neqs: frozenset = frozenset()
    fresh: frozenset = frozenset()

    def literals(self) -> frozenset:
        return (
            frozenset(("=",) + p for p in self.eqs)
            | frozenset(("#",) + p for p in self.neqs)
            | frozenset(("#X",) + p for p in self.fresh)
        )

    def add_eq(self, a: AtomVar, b: AtomVar) -> "SimpleContext":
        if a == b:
            return self
        return SimpleContext(self.eqs | {_pair(a, b)}, self.neqs, self.fresh)

    def add_neq(self, a: AtomVar, b: AtomVar) -> "SimpleContext":
        return SimpleContext(self.eqs, self.neqs | {_pair(a, b)}, self.fresh)

    def add_fresh(self, a: AtomVar, x: TermVar) -> "SimpleContext":
        return SimpleContext(self.eqs, self.neqs, self.fresh | {(a, x)})

    def union(self, other: "SimpleContext") -> "SimpleContext":
        return SimpleContext(self.eqs | other.eqs, self.neqs | other.neqs, self.fresh | other.fresh)

    # union-find view
    def _find_map(self) -> dict:
        cached = self.__dict__.get("_uf")
        if cached is not None:
            return cached
        parent: dict = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for a, b in sorted(self.eqs, key=lambda p: (p[0].name, p[1].name)):
            ra, rb = find(a), find(b)
            if ra != rb:
                if ra.name < rb.name:
                    parent[rb] = ra
                else:
                    parent[ra] = rb
        rep = {}
        for x in list(parent):
            rep[x] = find(x)
        object.__setattr__(self, "_uf", rep)
        return rep

    def rep(self, a: AtomVar) -> AtomVar:
        return self._find_map().get(a, a)

    def entails_eq(self, a: AtomVar, b: AtomVar) -> bool:
        return self.rep(a) == self.rep(b)

    def entails_neq(self, a: AtomVar, b: AtomVar) -> bool:
        ra, rb = self.rep(a), self.rep(b)
        if ra == rb:
            return False
        return any({self.rep(x), self.rep(y)} == {ra, rb} for x, y in self.neqs)

    def entails_fresh(self, a: AtomVar, x: TermVar) -> bool:
        ra = self.rep(a)
        return any(self.rep(b) == ra and y == x for b, y in self.fresh)

    def consistent(self) -> bool:
        return not any(self.rep(a) == self.rep(b) for a, b in self.neqs)

    def to_context(self) -> frozenset:
        out = set()
        for a, b in self.eqs:
            out.add(Fresh(susp(a), Abs(susp(b), susp(a))))
        for a, b in self.neqs:
            out.add(Fresh(susp(a), susp(b)))
        for a, x in self.fresh:
            out.add(Fresh(susp(a), VarSusp(ID, x)))
        return frozenset(out)

    def sort_key(self):
        return sorted((lit[0],) + tuple(v.name for v in lit[1:]) for lit in self.literals())

    def __str__(self) -> str:
        parts = []
        for a, b in sorted(self.eqs):
            parts.append(f"{a}={b}")
        for a, b in sorted(self.neqs):
            parts.append(f"{a}#{b}")
        for a, x in sorted(self.fresh):
            parts.append(f"{a}#{x}")
        return "{" + ", ".join(parts) + "}"


def _pair(a, b):
    return (a, b) if a.name <= b.name else (b, a)


def eval_cases(e, delta: SimpleContext) -> list:
    """Evaluate a suspension to an atom-variable by case distinction over ``delta``.

    Returns ``(var, delta')`` pairs; each ``delta'`` extends ``delta`` with the
    equalities and disequalities assumed on that branch.
    """
    if isinstance(e, AtomVar):
        return [(e, delta)]
    branches = [(e.var, delta)]
    for x, y in reversed(e.perm.swaps):
        nxt = []
        for cur, d in branches:
            for u1, d1 in eval_cases(x, d):
                for u2, d2 in eval_cases(y, d1):
                    nxt.extend(_swap_cases(cur, u1, u2, d2))
        branches = nxt
    return branches


def _swap_cases(cur, u1, u2, d: SimpleContext) -> list:
    if d.entails_eq(cur, u1):
        return [(u2, d)]
    if d.entails_eq(cur, u2):
        return [(u1, d)]
    if d.entails_neq(cur, u1) and d.entails_neq(cur, u2):
        return [(cur, d)]
    out = []
    for val, dd in (
        (u2, d.add_eq(cur, u1)),
        (u1, d.add_neq(cur, u1).add_eq(cur, u2)),
        (cur, d.add_neq(cur, u1).add_neq(cur, u2)),
    ):
        if dd.consistent():
            out.append((val, dd))
    return out


def _expand_fresh(a: AtomVar, t: Term, delta: SimpleContext) -> list:
    """Disjuncts (as simple contexts) equivalent to ``a # t`` within ``delta``."""
    if isinstance(t, AtomSusp):
        out = []
        for b, d in eval_cases(t, delta):
            if b == a:
                continue
            d2 = d.add_neq(a, b)
            if d2.consistent():
                out.append(d2)
        return out
    if isinstance(t, VarSusp):
        out = []
        for b, d in eval_cases(AtomSusp(t.perm.inverse(), a), delta):
            out.append(d.add_fresh(b, t.var))
        return out
    if isinstance(t, App):
        current = [delta]
        for arg in t.args:
            nxt = []
            for d in current:
                nxt.extend(_expand_fresh(a, arg, d))
            current = _prune(nxt)
        return current
    if isinstance(t, Abs):
        out = []
        for b, d in eval_cases(t.binder, delta):
            if b == a:
                out.append(d)
                continue
            de = d.add_eq(a, b)
            if de.consistent():
                out.append(de)
            out.extend(_expand_fresh(a, t.body, d))
        return _prune(out)
    if isinstance(t, Atom):
        raise TypeError("ground atoms cannot appear in contexts over atom-variables")
    raise TypeError(f"not a term: {t!r}")


def _prune(ds: list) -> list:
    """Drop inconsistent and subsumed disjuncts, keep a deterministic order."""
    uniq = {}
    for d in ds:
        if d.consistent():
            uniq[d.literals()] = d
    items = sorted(uniq.items(), key=lambda kv: (len(kv[0]), sorted(map(str, kv[0]))))
    kept: list = []
    for lits, d in items:
        if any(k <= lits for k, _ in kept):
            continue
        kept.append((lits, d))
    return [d for _, d in kept]


def simplify_context(ctx: Iterable) -> list:
    """Equivalent disjunction of simple contexts (inconsistent disjuncts removed)."""
    current = [SimpleContext()]
    for c in sorted(ctx, key=lambda c: str(c)):
        if isinstance(c, Eqr):
            raise TypeError("conditional constraints have no simple-context form")
        nxt = []
        for d in current:
            for a, d1 in eval_cases(c.subject, d):
                nxt.extend(_expand_fresh(a, c.target, d1))
        current = _prune(nxt)
        if not current:
            return []
    return current


# ---------------------------------------------------------------------------
# Partitions consistent with simple contexts and EQR contexts


@dataclass(frozen=True)
class AtomPartition:
    classes: tuple
    fresh: frozenset

    def __str__(self) -> str:
        cls = " | ".join(" ".join(v.name for v in c) for c in self.classes)
        fr = ", ".join(f"{a}#{x}" for a, x in sorted(self.fresh))
        return f"[{cls}]" + (f" with {fr}" if fr else "")


def enumerate_partitions(avars: Iterable, disjuncts: Iterable) -> list:
    """Partitions of ``avars`` consistent with at least one disjunct, with induced ``A # X`` facts."""
    avars = _sorted_vars(set(avars))
    disjuncts = list(disjuncts)
    out = []
    for blocks in set_partitions(avars):
        label = {v: i for i, b in enumerate(blocks) for v in b}
        facts: set = set()
        ok = False
        for d in disjuncts:
            if _partition_satisfies(label, d):
                ok = True
                for a, x in d.fresh:
                    if a in label:
                        for v in blocks[label[a]]:
                            facts.add((v, x))
        if ok:
            out.append(AtomPartition(tuple(tuple(b) for b in blocks), frozenset(facts)))
    return out


def _partition_satisfies(label: dict, d: SimpleContext) -> bool:
    for a, b in d.eqs:
        if a in label and b in label and label[a] != label[b]:
            return False
    for a, b in d.neqs:
        if a == b:
            return False
        if a in label and b in label and label[a] == label[b]:
            return False
    return True


def to_eqr(ctx: Iterable, avars: Iterable = ()) -> list:
    """Standardized EQR form: one ``(partition, facts or None)`` pair per equivalence relation.

    ``facts`` is a frozenset of ``(AtomVar, TermVar)`` pairs, or None when the
    partition makes the context false.
    """
    ctx = frozenset(ctx)
    vs = _sorted_vars(atom_vars(ctx) | set(avars))
    out = []
    for blocks in set_partitions(vs):
        env = {v: pool_atom(i) for i, b in enumerate(blocks) for v in b}
        facts: Optional[set] = set()
        for c in ctx:
            r = constraint_requirements(c, env)
            if r is None:
                facts = None
                break
            facts |= r
        if facts is not None:
            back = {}
            for i, b in enumerate(blocks):
                back[pool_atom(i)] = b
            lifted = set()
            for a, x in facts:
                for v in back.get(a, ()):
                    lifted.add((v, x))
            facts = frozenset(lifted)
        out.append((tuple(tuple(b) for b in blocks), facts))
    return out


# ---------------------------------------------------------------------------
# Bounded semantics


def ground_terms(symbols: Iterable, atoms: Iterable, depth: int, with_abs: bool = True) -> list:
    """All ground terms up to ``depth`` over the given symbols and atoms."""
    symbols = sorted(set(symbols), key=lambda f: (f.name, f.arity))
    atoms = sorted(set(atoms))
    levels = [list(atoms) + [App(f, ()) for f in symbols if f.arity == 0]]
    seen = set(levels[0])
    for _ in range(depth):
        prev = [t for lvl in levels for t in lvl]
        new = []
        for f in symbols:
            if f.arity == 0:
                continue
            for args in itertools.product(prev, repeat=f.arity):
                t = mk_app(f, args)
                if t not in seen:
                    seen.add(t)
                    new.append(t)
        if with_abs:
            for a in atoms:
                for b in prev:
                    t = Abs(a, b)
                    if t not in seen:
                        seen.add(t)
                        new.append(t)
        levels.append(new)
    return [t for lvl in levels for t in lvl]


def interpretations(tc: TermInContext, pool: Iterable, depth: int, symbols: Iterable = ()) -> Iterator[Interpretation]:
    """Interpretations of the variables of ``tc`` over a finite pool that satisfy its context."""
    pool = sorted(set(pool))
    avs = _sorted_vars(atom_vars(tc))
    tvs = sorted(term_vars(tc), key=lambda x: x.name)
    from .terms import symbols_of

    syms = set(symbols) | symbols_of(tc.term)
    for c in tc.context:
        if isinstance(c, Fresh):
            syms |= symbols_of(c.target)
    gts = ground_terms(syms, pool, depth) if tvs else []
    for atoms in itertools.product(pool, repeat=len(avs)):
        env = dict(zip(avs, atoms))
        for gs in itertools.product(gts, repeat=len(tvs)):
            tm = dict(zip(tvs, gs))
            if all(ground_holds(c, env, tm) for c in tc.context):
                yield Interpretation(env, tm)


def sem_representatives(tc: TermInContext, pool: Iterable, depth: int, symbols: Iterable = ()) -> set:
    """Canonical ground terms denoted by ``tc`` over a finite pool and bounded term depth."""
    out = set()
    for rho in interpretations(tc, pool, depth, symbols):
        out.add(canonical(interpret(tc.term, rho)))
    return out


__all__ = [
    "AtomPartition",
    "Interpretation",
    "Model",
    "SimpleContext",
    "bell",
    "canonical",
    "enumerate_partitions",
    "eq_modulo",
    "eval_cases",
    "ground_holds",
    "ground_terms",
    "holds_constraint",
    "holds_eq",
    "holds_freshness",
    "instantiate",
    "interpret",
    "interpretations",
    "is_consistent",
    "models",
    "perm_equiv",
    "relevant_models",
    "sem_representatives",
    "set_partitions",
    "simplify_context",
    "to_eqr",
]
