"""Freshness, alpha-equivalence and equality modulo A, C and AC on ground terms.

The same procedures accept semi-ground terms: terms whose atom-variables have
already been replaced by atoms but which may still contain term-variable
suspensions ``π·X`` with ground ``π``. Such leaves are compared symbolically
using a set of known facts ``(a, X)`` meaning "atom a is fresh for X".
"""

from __future__ import annotations

from typing import Iterable, Optional

from .terms import Abs, App, Atom, AtomSusp, Perm, Term, Theory, VarSusp, apply_permutation_ground


def free_atoms(t: Term) -> set:
    """Free atoms of a ground term (term-variable leaves contribute nothing)."""
    if isinstance(t, Atom):
        return {t}
    if isinstance(t, App):
        out: set = set()
        for a in t.args:
            out |= free_atoms(a)
        return out
    if isinstance(t, Abs):
        return free_atoms(t.body) - {t.binder}
    if isinstance(t, VarSusp):
        return set()
    raise TypeError(f"expected a ground term, got {t!r}")


def fresh_requirements(a: Atom, t: Term) -> Optional[frozenset]:
    """Facts ``(atom, X)`` needed for ``a # t``; None if ``a # t`` cannot hold."""
    if isinstance(t, Atom):
        return None if a == t else frozenset()
    if isinstance(t, VarSusp):
        return frozenset({(t.perm.inverse().apply_atom(a), t.var)})
    if isinstance(t, App):
        out: set = set()
        for arg in t.args:
            r = fresh_requirements(a, arg)
            if r is None:
                return None
            out |= r
        return frozenset(out)
    if isinstance(t, Abs):
        if t.binder == a:
            return frozenset()
        return fresh_requirements(a, t.body)
    raise TypeError(f"expected a semi-ground term, got {t!r}")


def fresh_ground(a: Atom, t: Term, facts: frozenset = frozenset()) -> bool:
    r = fresh_requirements(a, t)
    return r is not None and r <= facts


def disagreement(p1: Perm, p2: Perm) -> set:
    """Atoms on which two ground permutations differ."""
    support = set()
    for x, y in p1.swaps + p2.swaps:
        support.add(x)
        support.add(y)
    return {a for a in support if p1.apply_atom(a) != p2.apply_atom(a)}


def eq_modulo_symbolic(s: Term, t: Term, facts: Iterable = frozenset(), theory_override=None) -> bool:
    """Decide ``s ≈_E t`` for semi-ground terms given freshness facts for term-variables.

    ``π1·X`` equals ``π2·X`` iff every atom where the permutations disagree is
    known to be fresh for ``X``; distinct term-variables never match.
    """
    return _eq(s, t, frozenset(facts), theory_override or {})


def eq_modulo(s: Term, t: Term, theory_override=None) -> bool:
    """Decide ``s ≈_E t`` on ground terms."""
    return _eq(s, t, frozenset(), theory_override or {})


def alpha_eq(s: Term, t: Term) -> bool:
    """Alpha-equivalence ignoring all equational axioms."""
    return _eq(s, t, frozenset(), _AllFree())


class _AllFree(dict):
    def get(self, key, default=None):
        return Theory.FREE

    def __bool__(self):
        return True


def _theory(sym, override) -> Theory:
    return override.get(sym.name, sym.theory)


def _eq(s: Term, t: Term, facts: frozenset, override) -> bool:
    if isinstance(s, Atom) or isinstance(t, Atom):
        return s == t
    if isinstance(s, VarSusp):
        if not isinstance(t, VarSusp) or s.var != t.var:
            return False
        return all((a, s.var) in facts for a in disagreement(s.perm, t.perm))
    if isinstance(s, App):
        if not isinstance(t, App) or s.sym.name != t.sym.name or len(s.args) != len(t.args):
            return False
        th = _theory(s.sym, override)
        if th is Theory.AC:
            return _eq_multiset(s.args, t.args, facts, override)
        if th is Theory.C:
            (s1, s2), (t1, t2) = s.args, t.args
            return (_eq(s1, t1, facts, override) and _eq(s2, t2, facts, override)) or (
                _eq(s1, t2, facts, override) and _eq(s2, t1, facts, override)
            )
        return all(_eq(a, b, facts, override) for a, b in zip(s.args, t.args))
    if isinstance(s, Abs):
        if not isinstance(t, Abs):
            return False
        a, b = s.binder, t.binder
        if a == b:
            return _eq(s.body, t.body, facts, override)
        if not fresh_ground(a, t.body, facts):
            return False
        return _eq(s.body, apply_permutation_ground(Perm(((a, b),)), t.body), facts, override)
    if isinstance(s, AtomSusp) or isinstance(t, AtomSusp):
        raise TypeError("atom-variables must be instantiated before comparison")
    return False


def _eq_multiset(xs, ys, facts, override) -> bool:
    # ≈ is an equivalence relation, so greedy pairing is complete.
    remaining = list(ys)
    for x in xs:
        for i, y in enumerate(remaining):
            if _eq(x, y, facts, override):
                del remaining[i]
                break
        else:
            return False
    return not remaining


# ---------------------------------------------------------------------------
# Canonical forms


BOUND_PREFIX = "_b"


def canonical(t: Term, _level: int = 0) -> Term:
    """Canonical representative of the ≈_E class of a ground term.

    Bound atoms are renamed by binding depth and arguments of C and AC
    symbols are sorted, so two ground terms are ≈_E iff their canonical
    forms are identical.
    """
    from .terms import term_key

    if isinstance(t, Atom) or isinstance(t, VarSusp):
        return t
    if isinstance(t, App):
        args = [canonical(a, _level) for a in t.args]
        if t.sym.theory.commutative:
            args.sort(key=term_key)
        return App(t.sym, tuple(args))
    if isinstance(t, Abs):
        fresh = Atom(f"{BOUND_PREFIX}{_level}")
        body = apply_permutation_ground(Perm(((t.binder, fresh),)), t.body) if t.binder != fresh else t.body
        return Abs(fresh, canonical(body, _level + 1))
    raise TypeError(f"expected a ground term, got {t!r}")
