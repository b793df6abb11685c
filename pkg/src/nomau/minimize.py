"""Generality order, result minimisation, constraint refinement and unique-lgg criteria.

``tic_subset(c, r)`` decides whether every ground instance of the
term-in-context ``c`` is an instance of ``r``. It renames ``r`` apart,
matches ``r``'s term onto ``c``'s term modulo the equational theory, and
then checks that ``c``'s context entails ``r``'s instantiated context.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .equality import eq_modulo
from .semantics import holds_constraint, holds_eq, is_consistent, models, set_partitions
from .terms import (
    ID,
    Abs,
    App,
    Atom,
    AtomSusp,
    AtomVar,
    Eqr,
    Fresh,
    FunSymbol,
    Perm,
    Term,
    TermInContext,
    TermVar,
    Theory,
    VarSusp,
    apply_perm,
    apply_substitution,
    atom_vars,
    mk_app,
    rename_vars,
    subst_constraint,
    susp,
    term_key,
    term_vars,
)

# ---------------------------------------------------------------------------
# Matching modulo E


def _rename_apart(tc: TermInContext, avoid: set, prefix: str = "_r"):
    amap, tmap = {}, {}
    i = 0
    for v in sorted(atom_vars(tc), key=lambda v: v.name):
        while f"{prefix}{i}" in avoid:
            i += 1
        amap[v] = AtomVar(f"{prefix}{i}")
        i += 1
    for x in sorted(term_vars(tc), key=lambda v: v.name):
        while f"{prefix}{i}" in avoid:
            i += 1
        tmap[x] = TermVar(f"{prefix}{i}")
        i += 1
    return TermInContext(rename_vars(tc.context, amap, tmap), rename_vars(tc.term, amap, tmap))


class _Matcher:
    """Backtracking E-matching of a pattern onto a subject whose variables are rigid."""

    def __init__(self, pvars_a: set, pvars_t: set, subj_ctx: frozenset, subj_atoms: list):
        self.pa = pvars_a
        self.pt = pvars_t
        self.ctx = subj_ctx
        self.subj_atoms = subj_atoms

    def unbound_in(self, x, sub) -> list:
        return sorted((v for v in atom_vars(x) if v in self.pa and v not in sub), key=lambda v: v.name)

    def run(self, pattern: Term, subject: Term) -> Iterator[dict]:
        yield from self._solve([(pattern, subject)], {})

    def _solve(self, todo: list, sub: dict) -> Iterator[dict]:
        if not todo:
            yield sub
            return
        # prefer a pair whose pattern permutations are fully bound
        idx = 0
        for i, (p, _) in enumerate(todo):
            if not self._blocked(p, sub):
                idx = i
                break
        else:
            p, _ = todo[0]
            v = self._blocking_var(p, sub)
            for cand in self._atom_candidates(sub):
                yield from self._solve(todo, {**sub, v: cand})
            return
        p, s = todo[idx]
        rest = todo[:idx] + todo[idx + 1 :]
        yield from self._step(p, s, rest, sub)

    def _blocked(self, p, sub) -> bool:
        return self._blocking_var(p, sub) is not None

    def _blocking_var(self, p, sub):
        if isinstance(p, (AtomSusp, VarSusp)):
            vs = self.unbound_in(p.perm, sub)
            return vs[0] if vs else None
        if isinstance(p, Abs) and isinstance(p.binder, AtomSusp):
            vs = self.unbound_in(p.binder.perm, sub)
            return vs[0] if vs else None
        return None

    def _atom_candidates(self, sub) -> list:
        out = [susp(a) for a in self.subj_atoms]
        return out + [susp(AtomVar(f"_fresh{len(sub)}"))]

    def _step(self, p, s, rest, sub) -> Iterator[dict]:
        if isinstance(p, VarSusp) and p.var in self.pt:
            pi = _subst_perm(p.perm, sub)
            if p.var in sub:
                if holds_eq(self.ctx, apply_perm(pi, sub[p.var]), s):
                    yield from self._solve(rest, sub)
                return
            yield from self._solve(rest, {**sub, p.var: apply_perm(pi.inverse(), s)})
            return
        if isinstance(p, AtomSusp) and p.var in self.pa:
            if not isinstance(s, (AtomSusp, Atom)):
                return
            pi = _subst_perm(p.perm, sub)
            if p.var in sub:
                if holds_eq(self.ctx, apply_perm(pi, sub[p.var]), s):
                    yield from self._solve(rest, sub)
                return
            val = apply_perm(pi.inverse(), s)
            if isinstance(val, Atom):
                return
            yield from self._solve(rest, {**sub, p.var: val})
            return
        if isinstance(p, (AtomSusp, VarSusp, Atom)):
            # rigid leaf (no pattern variable): compare directly
            inst = apply_substitution(p, sub)
            if isinstance(s, type(inst)) and holds_eq(self.ctx, inst, s):
                yield from self._solve(rest, sub)
            return
        if isinstance(p, Abs):
            if not isinstance(s, Abs):
                return
            b = p.binder
            if isinstance(b, AtomSusp) and b.var in self.pa and b.var not in sub and not b.perm:
                if isinstance(s.binder, AtomSusp):
                    yield from self._solve([(p.body, s.body)] + rest, {**sub, b.var: s.binder})
                # binder may also be bound elsewhere; fall through to the swapping route
            bb = apply_substitution(b, sub) if isinstance(b, AtomSusp) else b
            if isinstance(b, AtomSusp) and atom_vars(bb) & (self.pa - set(sub)):
                return
            if bb == s.binder:
                yield from self._solve([(p.body, s.body)] + rest, sub)
                return
            # λB'.t ≈ λV.u  iff  B' # λV.u  and  t ≈ (B' V)·u
            if not holds_constraint(self.ctx, Fresh(bb, s)):
                return
            yield from self._solve([(p.body, apply_perm(Perm(((bb, s.binder),)), s.body))] + rest, sub)
            return
        if isinstance(p, App):
            if not isinstance(s, App) or p.sym.name != s.sym.name:
                return
            th = p.sym.theory
            if th is Theory.FREE:
                if len(p.args) != len(s.args):
                    return
                yield from self._solve(list(zip(p.args, s.args)) + rest, sub)
            elif th is Theory.C:
                (p1, p2), (s1, s2) = p.args, s.args
                yield from self._solve([(p1, s1), (p2, s2)] + rest, sub)
                if s1 != s2:
                    yield from self._solve([(p1, s2), (p2, s1)] + rest, sub)
            elif th is Theory.A:
                for blocks in self._a_blocks(p.args, s.args):
                    pairs = [(pa, mk_app(s.sym, blk)) for pa, blk in zip(p.args, blocks)]
                    yield from self._solve(pairs + rest, sub)
            else:
                for blocks in self._ac_blocks(p.args, s.args):
                    pairs = [(pa, mk_app(s.sym, blk)) for pa, blk in zip(p.args, blocks)]
                    yield from self._solve(pairs + rest, sub)
            return

    def _absorbs(self, p) -> bool:
        return isinstance(p, VarSusp) and p.var in self.pt

    def _a_blocks(self, ps, ss) -> Iterator[list]:
        """Split ``ss`` into contiguous non-empty blocks, singletons for non-variable patterns."""
        n, m = len(ps), len(ss)

        def rec(i, j, acc):
            if i == n:
                if j == m:
                    yield list(acc)
                return
            remaining = n - i - 1
            if self._absorbs(ps[i]):
                for k in range(1, m - j - remaining + 1):
                    yield from rec(i + 1, j + k, acc + [ss[j : j + k]])
            elif j < m:
                yield from rec(i + 1, j + 1, acc + [ss[j : j + 1]])

        yield from rec(0, 0, [])

    def _ac_blocks(self, ps, ss) -> Iterator[list]:
        """Distribute the multiset ``ss`` over the patterns; variables take non-empty sub-multisets."""
        order = sorted(range(len(ps)), key=lambda i: self._absorbs(ps[i]))
        seen = set()

        def rec(k, remaining: tuple, acc: dict):
            if k == len(order):
                if not remaining:
                    key = tuple(tuple(sorted(term_key(x) for x in acc[i])) for i in range(len(ps)))
                    if key not in seen:
                        seen.add(key)
                        yield [list(acc[i]) for i in range(len(ps))]
                return
            i = order[k]
            left = len(order) - k - 1
            if self._absorbs(ps[i]):
                idxs = range(len(remaining))
                if left == 0:
                    choices = [tuple(idxs)] if remaining else []
                else:
                    choices = [c for r in range(1, len(remaining) - left + 1) for c in itertools.combinations(idxs, r)]
                for c in choices:
                    blk = tuple(remaining[x] for x in c)
                    rem = tuple(remaining[x] for x in idxs if x not in c)
                    yield from rec(k + 1, rem, {**acc, i: blk})
            else:
                tried = set()
                for x in range(len(remaining)):
                    if remaining[x] in tried:
                        continue
                    tried.add(remaining[x])
                    rem = remaining[:x] + remaining[x + 1 :]
                    yield from rec(k + 1, rem, {**acc, i: (remaining[x],)})

        yield from rec(0, tuple(ss), {})


def _subst_perm(p: Perm, sub: dict) -> Perm:
    if not p:
        return p
    return Perm(tuple((apply_substitution(x, sub), apply_substitution(y, sub)) for x, y in p.swaps))


def e_match(pattern: TermInContext, subject: TermInContext) -> Iterator[dict]:
    """Substitutions ``σ`` on ``pattern``'s variables with ``subject ⊨ pattern.term σ ≈_E subject.term``.

    ``pattern`` must already be variable-disjoint from ``subject``.
    """
    m = _Matcher(atom_vars(pattern), term_vars(pattern), subject.context, sorted(atom_vars(subject), key=lambda v: v.name))
    for sub in m.run(pattern.term, subject.term):
        if holds_eq(subject.context, apply_substitution(pattern.term, sub), subject.term):
            yield sub


# ---------------------------------------------------------------------------
# Subset test


def entails_constraint(ctx: Iterable, c) -> bool:
    """Decide ``ctx ⊢ c`` for a freshness or conditional constraint."""
    return holds_constraint(frozenset(ctx), c)


def tic_subset(candidate: TermInContext, reference: TermInContext) -> bool:
    """True iff every ground instance of ``candidate`` is an instance of ``reference``."""
    cctx = frozenset(candidate.context)
    if not is_consistent(cctx):
        return True
    avoid = {v.name for v in atom_vars(candidate) | term_vars(candidate)}
    ref = _rename_apart(reference, avoid)
    subj = TermInContext(cctx, candidate.term)
    for sub in e_match(ref, subj):
        if _context_ok(ref, sub, cctx, subj):
            return True
    return False


def _context_ok(ref: TermInContext, sub: dict, cctx: frozenset, subj: TermInContext) -> bool:
    open_vars = sorted((v for v in atom_vars(ref.context) if v not in sub), key=lambda v: v.name)
    # atom-variables that only occur in the reference context are existential
    cands = [susp(a) for a in sorted(atom_vars(subj), key=lambda v: v.name)]
    fresh = [susp(AtomVar(f"_x{i}")) for i in range(len(open_vars))]
    options = cands + fresh
    for combo in itertools.product(options, repeat=len(open_vars)):
        full = dict(sub)
        full.update(zip(open_vars, combo))
        if all(entails_constraint(cctx, subst_constraint(c, full)) for c in ref.context):
            return True
        if not open_vars:
            break
    return False


def tic_equivalent(a: TermInContext, b: TermInContext) -> bool:
    return tic_subset(a, b) and tic_subset(b, a)


def is_generalization(g: TermInContext, inputs: Iterable) -> bool:
    return all(tic_subset(i, g) for i in inputs)


# ---------------------------------------------------------------------------
# Minimisation


def minimize_set(results: Iterable, key=None) -> list:
    """Keep only the most specific results, one per equivalence class.

    ``results`` may hold ``TermInContext`` values or objects with a
    ``term_in_context`` attribute.
    """
    items = list(results)
    tics = [r.term_in_context if hasattr(r, "term_in_context") else r for r in items]
    n = len(items)
    removed = [False] * n
    for i in range(n):
        if removed[i]:
            continue
        for j in range(n):
            if i == j or removed[j] or removed[i]:
                continue
            # j makes i redundant when j is at least as specific
            if tic_subset(tics[j], tics[i]):
                if tic_subset(tics[i], tics[j]):
                    if j < i:
                        removed[i] = True
                    else:
                        removed[j] = True
                else:
                    removed[i] = True
    return [it for it, r in zip(items, removed) if not r]


# ---------------------------------------------------------------------------
# Post-processing


@dataclass
class PostProcessResult:
    term_in_context: TermInContext
    complete: bool = True
    tested: int = 0
    accepted: list = field(default_factory=list)


def _eqr_for(classes: list, facts) -> Eqr:
    cls = tuple(tuple(susp(v) for v in c) for c in classes)
    if facts is None:
        return Eqr(cls, None)
    return Eqr(cls, tuple((susp(a), VarSusp(ID, x)) for a, x in facts))


def post_process(
    result: TermInContext,
    input1: TermInContext,
    input2: TermInContext,
    M: Optional[Iterable] = None,
    budget: int = 10_000,
    jobs: int = 1,
) -> PostProcessResult:
    """Strengthen a generalization's context while it still generalizes both inputs.

    For every partition of ``M`` (default: atom-variables of the result
    term) the refinement first tries to exclude that partition outright,
    and otherwise accumulates freshness facts ``A # X`` greedily. Accepted
    conditional constraints are turned back into plain freshness
    constraints where that is an equivalent rewrite.
    """
    M = sorted(set(M) if M is not None else atom_vars(result.term), key=lambda v: v.name)
    X = sorted(term_vars(result.term), key=lambda v: v.name)
    ctx = frozenset(result.context)
    inputs = (input1, input2)
    tested = 0
    accepted = []
    complete = True

    def ok(c: frozenset) -> bool:
        nonlocal tested
        tested += 1
        cand = TermInContext(c, result.term)
        return all(tic_subset(i, cand) for i in inputs)

    for blocks in set_partitions(M):
        if tested >= budget:
            complete = False
            break
        excl = _eqr_for(blocks, None)
        if ok(ctx | {excl}):
            ctx = ctx | {excl}
            accepted.append(excl)
            continue
        facts: list = []
        for blk in blocks:
            rep = blk[0]
            for x in X:
                if tested >= budget:
                    complete = False
                    break
                trial = facts + [(rep, x)]
                if ok(ctx | {_eqr_for(blocks, trial)}):
                    facts = trial
        if facts:
            e = _eqr_for(blocks, facts)
            ctx = ctx | {e}
            accepted.append(e)
    ctx = nominalize(ctx, M)
    return PostProcessResult(TermInContext(ctx, result.term), complete, tested, accepted)


def _semantic_key(ctx: frozenset, avars: list) -> frozenset:
    out = set()
    for m in models(ctx, avars):
        cls = frozenset(frozenset(c) for c in m.classes())
        facts = frozenset((frozenset(v for v, a in m.env.items() if a == b), x) for b, x in m.facts)
        out.add((cls, facts))
    return frozenset(out)


def nominalize(ctx: frozenset, M: Iterable = ()) -> frozenset:
    """Replace conditional constraints by plain freshness constraints when equivalent."""
    eqrs = [c for c in ctx if isinstance(c, Eqr)]
    if not eqrs:
        return ctx
    base = frozenset(c for c in ctx if not isinstance(c, Eqr))
    avars = sorted(atom_vars(ctx) | set(M), key=lambda v: v.name)
    target = _semantic_key(ctx, avars)
    repl = set()
    for e in eqrs:
        if e.facts is None:
            return ctx
        allv = [x for cl in e.classes for x in cl]
        for s, r in e.facts:
            others = [x for x in allv if x.var != s.var and not _same_class(e, s, x)]
            t = r
            for b in sorted(others, key=lambda x: x.var.name, reverse=True):
                t = Abs(b, t)
            repl.add(Fresh(s, t))
    cand = base | repl
    if _semantic_key(cand, avars) == target:
        return cand
    return ctx


def _same_class(e: Eqr, a, b) -> bool:
    return any(a in cl and b in cl for cl in e.classes)


# ---------------------------------------------------------------------------
# Unique-lgg criteria


class ShapeError(ValueError):
    pass


def _constant_args(t: Term, theory: Theory) -> tuple:
    if not isinstance(t, App) or t.sym.theory is not theory:
        raise ShapeError(f"expected an application of a {theory.value}-symbol")
    return t.args


def _is_const(t) -> bool:
    return isinstance(t, App) and not t.args


def _vars(n: int, stem: str = "X") -> list:
    return [VarSusp(ID, TermVar(f"{stem}{i}")) for i in range(1, n + 1)]


def unique_lgg_ac(s: Term, t: Term) -> Optional[Term]:
    """The unique AC-lgg of two flat AC-applications over constants, when the criterion applies."""
    sa, ta = _constant_args(s, Theory.AC), _constant_args(t, Theory.AC)
    if s.sym != t.sym or not all(_is_const(a) for a in sa + ta):
        raise ShapeError("both terms must be applications of the same AC-symbol to constants")
    if eq_modulo(s, t):
        return s
    cs, ct = Counter(sa), Counter(ta)
    m1 = cs & ct
    m2 = cs - m1
    m3 = ct - m1
    if not m2 or not m3:
        return None
    if any(c > 1 for c in list(m1.values()) + list(m2.values()) + list(m3.values())):
        return None
    if set(m1) & set(m2) or set(m1) & set(m3):
        return None
    common = [a for a in sa if a in m1]
    l = min(sum(m2.values()), sum(m3.values()))
    return mk_app(s.sym, common + _vars(l))


def depth_multiset(s: Term) -> Counter:
    """Multiset of ``(constant, depth)`` pairs; arguments of the root have depth 1."""
    out: Counter = Counter()

    def go(u, d):
        if _is_const(u):
            out[(u.sym.name, d)] += 1
        elif isinstance(u, App):
            for a in u.args:
                go(a, d + 1)
        else:
            raise ShapeError("only applications and constants are allowed")

    go(s, 0)
    return out


STAR = FunSymbol("*", 0)


def _star(u: Term, d: int, keep: set) -> Term:
    if _is_const(u):
        return u if (u.sym.name, d) in keep else App(STAR)
    if not any(k in keep for k in depth_multiset_at(u, d)):
        return App(STAR)
    return App(u.sym, tuple(_star(a, d + 1, keep) for a in u.args))


def depth_multiset_at(u: Term, d: int) -> Counter:
    out: Counter = Counter()
    for (c, i), n in depth_multiset(u).items():
        out[(c, i + d)] += n
    return out


def unique_lgg_c(s: Term, t: Term) -> Optional[Term]:
    """The unique C-lgg of two terms over one C-symbol and constants, when the criterion applies."""
    _constant_args(s, Theory.C)
    _constant_args(t, Theory.C)
    if eq_modulo(s, t):
        return s
    ms, mt = depth_multiset(s), depth_multiset(t)
    if any(n > 1 for n in ms.values()) or any(n > 1 for n in mt.values()):
        return None
    mst = set(ms) & set(mt)
    ss, ts = _star(s, 0, mst), _star(t, 0, mst)
    if not eq_modulo(ss, ts):
        return None
    counter = itertools.count(1)

    def fill(u):
        if isinstance(u, App) and u.sym == STAR:
            return VarSusp(ID, TermVar(f"X{next(counter)}"))
        if isinstance(u, App):
            return App(u.sym, tuple(fill(a) for a in u.args))
        return u

    return fill(ss)


def _runs(xs: list, common: set) -> tuple:
    """Split a string into alternating runs: (Q runs, gap runs); Q runs may be empty at the ends."""
    qs, gaps = [[]], []
    for x in xs:
        if x in common:
            if len(qs) == len(gaps):
                qs.append([])
            qs[-1].append(x)
        else:
            if len(gaps) < len(qs):
                gaps.append([])
            gaps[-1].append(x)
    if len(qs) == len(gaps):
        qs.append([])
    return qs, gaps


def unique_lgg_a(s: Term, t: Term) -> Optional[Term]:
    """The unique A-lgg of two strings over one A-symbol, when the criterion applies."""
    sa, ta = _constant_args(s, Theory.A), _constant_args(t, Theory.A)
    if s.sym != t.sym or not all(_is_const(a) for a in sa + ta):
        raise ShapeError("both terms must be applications of the same A-symbol to constants")
    if sa == ta:
        return s
    common = set(sa) & set(ta)
    qs, gs = _runs(list(sa), common)
    qt, gt = _runs(list(ta), common)
    if qs != qt or len(gs) != len(gt):
        return None
    for seq in ([x for q in qs for x in q], [x for g in gs for x in g], [x for g in gt for x in g]):
        if len(seq) != len(set(seq)):
            return None
    items: list = []
    n = itertools.count(1)
    for j, q in enumerate(qs):
        items.extend(q)
        if j < len(gs):
            k = min(len(gs[j]), len(gt[j]))
            items.extend(VarSusp(ID, TermVar(f"Y{next(n)}")) for _ in range(k))
    return mk_app(s.sym, items)


def is_variant(a: Term, b: Term, theory_override=None) -> bool:
    """Equality modulo E up to a bijective renaming of term-variables."""
    from .equality import eq_modulo_symbolic

    va = sorted(term_vars(a), key=lambda v: v.name)
    vb = sorted(term_vars(b), key=lambda v: v.name)
    if len(va) != len(vb) or atom_vars(a) != atom_vars(b):
        return False
    if len(va) > 7:
        return tic_equivalent(TermInContext((), a), TermInContext((), b))
    for perm in itertools.permutations(vb):
        ren = rename_vars(a, {}, dict(zip(va, perm)))
        if eq_modulo_symbolic(ren, b, (), theory_override):
            return True
    return False


__all__ = [
    "PostProcessResult",
    "ShapeError",
    "depth_multiset",
    "e_match",
    "entails_constraint",
    "is_generalization",
    "is_variant",
    "minimize_set",
    "nominalize",
    "post_process",
    "tic_equivalent",
    "tic_subset",
    "unique_lgg_a",
    "unique_lgg_ac",
    "unique_lgg_c",
]
