"""Equivariance matching modulo A, C and AC.

Given equations ``t ⋖ s`` and a freshness context, find an injective mapping
``Π`` of atom-variables such that ``Π·t ≈_E s`` holds under the context. The
context is first split into simple disjuncts; equations are then decomposed
structurally and the remaining suspension equations are solved by building
the mapping with backtracking guesses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .semantics import SimpleContext, eval_cases, holds_eq, simplify_context
from .terms import (
    ID,
    Abs,
    App,
    Atom,
    AtomSusp,
    NameSupply,
    Perm,
    Term,
    Theory,
    VarSusp,
    apply_perm,
    apply_substitution,
    atom_vars,
    mk_app,
    susp,
    term_vars,
)


@dataclass(frozen=True)
class EquivEquation:
    left: Term
    right: Term


@dataclass
class AtomMapping:
    """An injective atom-variable mapping together with the context it was found under."""

    mapping: dict = field(default_factory=dict)
    context: frozenset = frozenset()
    disjunct: Optional[SimpleContext] = None

    def __getitem__(self, k):
        return self.mapping[k]

    def __len__(self) -> int:
        return len(self.mapping)

    def __iter__(self):
        return iter(self.mapping)

    def items(self):
        return self.mapping.items()

    def as_names(self) -> dict:
        """Plain ``{name: name}`` view for identity-suspension targets (handy in tests)."""
        from .syntax import show_term

        return {k.name: show_term(v) for k, v in self.mapping.items()}

    def __str__(self) -> str:
        from .syntax import show_term

        return "{" + ", ".join(f"{k} -> {show_term(v)}" for k, v in sorted(self.mapping.items())) + "}"


def _as_pairs(eqs) -> list:
    out = []
    for e in eqs:
        if isinstance(e, EquivEquation):
            out.append((e.left, e.right))
        else:
            out.append(tuple(e))
    return out


# ---------------------------------------------------------------------------
# Decomposition


@dataclass(frozen=True)
class Branch:
    leaves: tuple
    delta: SimpleContext
    introduced: frozenset


def decompose(
    equations: Iterable,
    delta: SimpleContext,
    scope_avars: Iterable = (),
    scope_tvars: Iterable = (),
    supply: Optional[NameSupply] = None,
) -> list:
    """All branches of exhaustive structural decomposition.

    Abstraction pairs introduce a new atom-variable distinct from every
    atom-variable in scope and fresh for every term-variable in scope.
    Leaves are suspension-versus-suspension equations. Head clashes close a
    branch.
    """
    pairs = _as_pairs(equations)
    scope_a = set(scope_avars) | atom_vars(pairs)
    scope_t = set(scope_tvars) | term_vars(pairs)
    supply = supply or NameSupply(v.name for v in scope_a | scope_t)
    out: list = []

    def rec(todo: list, leaves: list, d: SimpleContext, intro: frozenset, sa: frozenset):
        if not todo:
            out.append(Branch(tuple(leaves), d, intro))
            return
        (l, r), rest = todo[0], todo[1:]
        if isinstance(l, (AtomSusp, VarSusp)) and isinstance(r, (AtomSusp, VarSusp)):
            if type(l) is not type(r):
                return
            rec(rest, leaves + [(l, r)], d, intro, sa)
            return
        if isinstance(l, Atom) and isinstance(r, Atom):
            if l == r:
                rec(rest, leaves, d, intro, sa)
            return
        if isinstance(l, Abs) and isinstance(r, Abs):
            a = supply.atom_var("D")
            nd = d
            for b in sorted(sa):
                nd = nd.add_neq(a, b)
            for x in sorted(scope_t):
                nd = nd.add_fresh(a, x)
            sw1 = Perm(((l.binder, susp(a)),))
            sw2 = Perm(((r.binder, susp(a)),))
            body = (apply_perm(sw1, l.body), apply_perm(sw2, r.body))
            rec([body] + rest, leaves + [(susp(a), susp(a))], nd, intro | {a}, sa | {a})
            return
        if isinstance(l, App) and isinstance(r, App):
            if l.sym.name != r.sym.name or len(l.args) != len(r.args):
                return
            th = l.sym.theory
            if th is Theory.C:
                (t1, t2), (s1, s2) = l.args, r.args
                rec([(t1, s1), (t2, s2)] + rest, leaves, d, intro, sa)
                rec([(t1, s2), (t2, s1)] + rest, leaves, d, intro, sa)
                return
            if th is Theory.AC:
                t0, trest = l.args[0], l.args[1:]
                seen = set()
                for i, si in enumerate(r.args):
                    if si in seen:
                        continue
                    seen.add(si)
                    srest = r.args[:i] + r.args[i + 1 :]
                    rec([(t0, si), (mk_app(l.sym, trest), mk_app(r.sym, srest))] + rest, leaves, d, intro, sa)
                return
            rec(list(zip(l.args, r.args)) + rest, leaves, d, intro, sa)
            return

    rec(pairs, [], delta, frozenset(), frozenset(scope_a))
    return out


def resolve_leaf(e: AtomSusp, delta: SimpleContext) -> AtomSusp:
    """Evaluate a suspension to a class representative when ``delta`` determines it."""
    if not isinstance(e, AtomSusp):
        return e
    values = {delta.rep(v) for v, _ in eval_cases(e, delta)}
    if len(values) == 1:
        return susp(values.pop())
    return e


# ---------------------------------------------------------------------------
# Mapping construction


def build_mapping(leaves: Iterable, delta: SimpleContext, introduced: Iterable = (), all_solutions: bool = False):
    """Construct an injective mapping from reduced suspension equations.

    Returns the first mapping found (or None); with ``all_solutions`` a list
    of every mapping is returned instead. Variables introduced during
    decomposition are excluded from the injectivity test and from the
    output, and identity entries are elided.
    """
    sols = list(_iter_mappings(list(leaves), delta, frozenset(introduced))) if all_solutions else None
    if all_solutions:
        return sols
    for m in _iter_mappings(list(leaves), delta, frozenset(introduced)):
        return m
    return None


def _iter_mappings(leaves: list, delta: SimpleContext, introduced: frozenset) -> Iterator[dict]:
    ctx = delta.to_context()
    atom_eqs = []
    var_eqs = []
    for l, r in leaves:
        if isinstance(l, VarSusp):
            if not isinstance(r, VarSusp) or l.var != r.var:
                return
            var_eqs.append((l, r))
        elif isinstance(l, AtomSusp) and isinstance(r, AtomSusp):
            atom_eqs.append((resolve_leaf(l, delta), resolve_leaf(r, delta)))
        else:
            return
    rhs_vars = sorted(atom_vars([r for _, r in atom_eqs]))
    seen_outputs = set()

    def needed(pi: dict) -> list:
        out = set()
        for l, _ in atom_eqs:
            out |= atom_vars(l)
        for l, _ in var_eqs:
            out |= atom_vars(l.perm)
        return sorted(v for v in out if v not in pi)

    def rec(pi: dict):
        progress = True
        pi = dict(pi)
        while progress:
            progress = False
            for l, r in atom_eqs:
                if l.var in pi:
                    continue
                if all(v in pi for v in atom_vars(l.perm)):
                    inv = _map_perm(l.perm.inverse(), pi)
                    pi[l.var] = apply_perm(inv, r)
                    progress = True
        missing = needed(pi)
        if missing:
            v = missing[0]
            cands = [susp(v)] + [susp(b) for b in rhs_vars if b != v]
            for c in cands:
                yield from rec({**pi, v: c})
            return
        if _verify(pi, atom_eqs, var_eqs, ctx) and _injective(pi, introduced, ctx):
            out = {k: v for k, v in pi.items() if k not in introduced and v != susp(k)}
            key = frozenset(out.items())
            if key not in seen_outputs:
                seen_outputs.add(key)
                yield out

    yield from rec({})


def _map_perm(p: Perm, pi: dict) -> Perm:
    sub = {k: v for k, v in pi.items()}
    return Perm(tuple((apply_substitution(x, sub), apply_substitution(y, sub)) for x, y in p.swaps))


def _verify(pi: dict, atom_eqs, var_eqs, ctx) -> bool:
    for l, r in list(atom_eqs) + list(var_eqs):
        if not holds_eq(ctx, apply_substitution(l, pi), r):
            return False
    return True


def _injective(pi: dict, introduced: frozenset, ctx) -> bool:
    items = sorted((k, v) for k, v in pi.items() if k not in introduced)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            (a1, r1), (a2, r2) = items[i], items[j]
            if holds_eq(ctx, susp(a1), susp(a2)) != holds_eq(ctx, r1, r2):
                return False
    return True


# ---------------------------------------------------------------------------
# Top level


def mapping_to_permutation(pi) -> Perm:
    """Realise a mapping as a swap sequence.

    Each chain ``a1 ↦ a2 ↦ … ↦ ak`` (or cycle) becomes ``(a1 a2)(a2 a3)…(a_{k-1} a_k)``.
    The result is faithful when the atoms involved are pairwise distinct.
    """
    m = dict(pi.mapping if isinstance(pi, AtomMapping) else pi)
    m = {susp(k): v for k, v in m.items() if v != susp(k)}
    if not m:
        return ID
    targets = set(m.values())
    done: set = set()
    swaps: list = []

    def chain(start):
        path = [start]
        cur = start
        while cur in m and m[cur] not in path:
            cur = m[cur]
            path.append(cur)
        return path

    starts = sorted((k for k in m if k not in targets), key=lambda e: e.var.name)
    cyc = sorted((k for k in m if k in targets), key=lambda e: e.var.name)
    for s in starts + cyc:
        if s in done:
            continue
        path = chain(s)
        done.update(path)
        for a, b in zip(path, path[1:]):
            swaps.append((a, b))
    return Perm(tuple(swaps))


def eqvm(
    equations: Iterable,
    ctx: Iterable = (),
    strict: bool = False,
    all_mappings: bool = False,
    supply: Optional[NameSupply] = None,
):
    """Solve an equivariance problem; returns an ``AtomMapping`` or None.

    With ``strict`` the permutation obtained from the mapping is re-checked
    against every input equation under the full context. With
    ``all_mappings`` a list of every distinct mapping is returned.
    """
    pairs = _as_pairs(equations)
    ctx = frozenset(ctx)
    disjuncts = simplify_context(ctx)
    found: list = []
    keys = set()
    if not disjuncts:
        m = AtomMapping({}, ctx, None)
        return [m] if all_mappings else m
    scope_a = atom_vars(pairs) | atom_vars(ctx)
    scope_t = term_vars(pairs) | term_vars(ctx)
    supply = supply or NameSupply(v.name for v in scope_a | scope_t)
    for d in disjuncts:
        for br in decompose(pairs, d, scope_a, scope_t, supply):
            for m in _iter_mappings(list(br.leaves), br.delta, br.introduced):
                if strict and not _check_permutation(m, pairs, ctx):
                    continue
                key = frozenset(m.items())
                if key in keys:
                    continue
                keys.add(key)
                am = AtomMapping(m, br.delta.to_context(), d)
                if not all_mappings:
                    return am
                found.append(am)
    return found if all_mappings else None


def _check_permutation(m: dict, pairs, ctx) -> bool:
    p = mapping_to_permutation(m)
    return all(holds_eq(ctx, apply_perm(p, l), r) for l, r in pairs)


__all__ = [
    "AtomMapping",
    "Branch",
    "EquivEquation",
    "build_mapping",
    "decompose",
    "eqvm",
    "mapping_to_permutation",
    "resolve_leaf",
]
