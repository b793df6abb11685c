"""Term languages, permutations, substitutions and flattening.

A single algebraic datatype covers both languages. Ground terms are built
from ``Atom``, ``App`` and ``Abs`` with an atom binder. Terms with
atom-variables additionally use ``AtomSusp`` (a permutation suspended on an
atom-variable) and ``VarSusp`` (a permutation suspended on a term-variable).

Permutations are swap sequences written left to right and applied right to
left: ``Perm(((a, b), (c, d)))`` denotes ``(a b)(c d)``, so ``(c d)`` acts
first. Swap elements are ``Atom`` values for ground permutations and
``AtomSusp`` values otherwise.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union


class Theory(Enum):
    """Equational theory attached to a function symbol."""

    FREE = ""
    A = "A"
    C = "C"
    AC = "AC"

    @property
    def associative(self) -> bool:
        return self in (Theory.A, Theory.AC)

    @property
    def commutative(self) -> bool:
        return self in (Theory.C, Theory.AC)

    @classmethod
    def parse(cls, text: str) -> "Theory":
        text = text.strip()
        if text in ("", "0"):
            return cls.FREE
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown theory {text!r}") from None


def _cached_hash(cls):
    """Give a frozen dataclass a memoised structural hash."""
    base = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = base(self)
            object.__setattr__(self, "_hash", h)
            return h

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_hash", None)
        return state

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)

    cls.__hash__ = __hash__
    cls.__getstate__ = __getstate__
    cls.__setstate__ = __setstate__
    return cls


@dataclass(frozen=True, order=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class AtomVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class TermVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FunSymbol:
    name: str
    arity: int
    theory: Theory = Theory.FREE

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError("arity must be non-negative")
        if self.theory is not Theory.FREE and self.arity != 2:
            raise ValueError(f"{self.theory.value}-symbol {self.name} must have arity 2")

    def __str__(self) -> str:
        return self.name


@_cached_hash
@dataclass(frozen=True)
class Perm:
    """A finite sequence of swappings, applied right to left."""

    swaps: tuple = ()

    def __bool__(self) -> bool:
        return bool(self.swaps)

    def __len__(self) -> int:
        return len(self.swaps)

    def inverse(self) -> "Perm":
        return Perm(tuple(reversed(self.swaps)))

    def compose(self, inner: "Perm") -> "Perm":
        """Return ``self ∘ inner`` (``inner`` acts first), cancelling adjacent equal swaps."""
        out = list(self.swaps)
        for sw in inner.swaps:
            if out and _same_swap(out[-1], sw):
                out.pop()
            else:
                out.append(sw)
        return Perm(tuple(out))

    def apply_atom(self, a: Atom) -> Atom:
        """Apply a ground permutation to an atom."""
        for x, y in reversed(self.swaps):
            if a == x:
                a = y
            elif a == y:
                a = x
        return a

    def is_ground(self) -> bool:
        return all(isinstance(x, Atom) and isinstance(y, Atom) for x, y in self.swaps)


ID = Perm()


def _same_swap(s1, s2) -> bool:
    return (s1[0] == s2[0] and s1[1] == s2[1]) or (s1[0] == s2[1] and s1[1] == s2[0])


@_cached_hash
@dataclass(frozen=True)
class AtomSusp:
    """The suspension ``perm · var`` over an atom-variable."""

    perm: Perm
    var: AtomVar


@_cached_hash
@dataclass(frozen=True)
class VarSusp:
    """The suspension ``perm · var`` over a term-variable."""

    perm: Perm
    var: TermVar


@_cached_hash
@dataclass(frozen=True)
class App:
    sym: FunSymbol
    args: tuple = ()


@_cached_hash
@dataclass(frozen=True)
class Abs:
    """Abstraction; the binder is an ``Atom`` in ground terms, an ``AtomSusp`` otherwise."""

    binder: Union[Atom, AtomSusp]
    body: "Term"


Term = Union[Atom, AtomSusp, VarSusp, App, Abs]
GroundTerm = Union[Atom, App, Abs]


def susp(v: Union[AtomVar, str]) -> AtomSusp:
    """Identity suspension on an atom-variable."""
    return AtomSusp(ID, v if isinstance(v, AtomVar) else AtomVar(v))


def var(x: Union[TermVar, str]) -> VarSusp:
    """Identity suspension on a term-variable."""
    return VarSusp(ID, x if isinstance(x, TermVar) else TermVar(x))


def swap(x, y) -> Perm:
    """One-swap permutation; strings become identity atom-variable suspensions."""
    if isinstance(x, str):
        x = susp(x)
    if isinstance(y, str):
        y = susp(y)
    return Perm(((x, y),))


def perm_of(*pairs) -> Perm:
    """Build ``(x1 y1)(x2 y2)...`` from pairs (strings become atom-variables)."""
    out = ID
    for x, y in reversed(pairs):
        out = swap(x, y).compose(out)
    return out


# ---------------------------------------------------------------------------
# Freshness constraints and terms-in-context


@_cached_hash
@dataclass(frozen=True)
class Fresh:
    """The constraint ``subject # target``."""

    subject: AtomSusp
    target: Term


@_cached_hash
@dataclass(frozen=True)
class Eqr:
    """Conditional freshness: if the values of ``classes`` form exactly this partition,
    every fact ``subject # target`` holds (or the situation is excluded when
    ``facts`` is None).

    ``classes`` is a tuple of tuples of suspensions; atoms in one class are equal,
    atoms in different classes are distinct.
    """

    classes: tuple
    facts: Union[tuple, None]


Constraint = Union[Fresh, Eqr]


@dataclass(frozen=True)
class TermInContext:
    context: frozenset
    term: Term

    def __init__(self, context: Iterable = (), term: Term = None):
        object.__setattr__(self, "context", frozenset(context))
        object.__setattr__(self, "term", term)


# ---------------------------------------------------------------------------
# Signatures


@dataclass
class Signature:
    symbols: dict = field(default_factory=dict)

    def add(self, name: str, arity: int, theory: Union[Theory, str] = Theory.FREE) -> FunSymbol:
        if isinstance(theory, str):
            theory = Theory.parse(theory)
        sym = FunSymbol(name, arity, theory)
        self.symbols[name] = sym
        return sym

    def __getitem__(self, name: str) -> FunSymbol:
        return self.symbols[name]

    def __contains__(self, name: str) -> bool:
        return name in self.symbols

    def __iter__(self):
        return iter(self.symbols.values())


# ---------------------------------------------------------------------------
# Permutation action


def swap_elem(sw, e: AtomSusp) -> AtomSusp:
    """Apply one swapping to an atom-variable suspension, simplifying where sound."""
    x, y = sw
    if e == x:
        return y
    if e == y:
        return x
    return AtomSusp(Perm((sw,)).compose(e.perm), e.var)


def apply_perm_susp(p: Perm, e: AtomSusp) -> AtomSusp:
    for sw in reversed(p.swaps):
        e = swap_elem(sw, e)
    return e


def apply_permutation_ground(p: Perm, t: GroundTerm) -> GroundTerm:
    """Apply a ground permutation; the result contains no permutations."""
    if not p:
        return t
    if isinstance(t, Atom):
        return p.apply_atom(t)
    if isinstance(t, App):
        return App(t.sym, tuple(apply_permutation_ground(p, a) for a in t.args))
    if isinstance(t, Abs):
        return Abs(p.apply_atom(t.binder), apply_permutation_ground(p, t.body))
    if isinstance(t, VarSusp):
        return VarSusp(p.compose(t.perm), t.var)
    raise TypeError(f"not a ground term: {t!r}")


def apply_perm(p: Perm, t: Term) -> Term:
    """Push a permutation to the leaves of a term.

    Ground parts are evaluated; atom-variable suspensions absorb the swaps,
    dropping a swap that syntactically hits its own element.
    """
    if not p:
        return t
    if isinstance(t, Atom):
        return p.apply_atom(t)
    if isinstance(t, AtomSusp):
        return apply_perm_susp(p, t)
    if isinstance(t, VarSusp):
        return VarSusp(p.compose(t.perm), t.var)
    if isinstance(t, App):
        return App(t.sym, tuple(apply_perm(p, a) for a in t.args))
    if isinstance(t, Abs):
        b = p.apply_atom(t.binder) if isinstance(t.binder, Atom) else apply_perm_susp(p, t.binder)
        return Abs(b, apply_perm(p, t.body))
    raise TypeError(f"not a term: {t!r}")


apply_permutation_nla = apply_perm


def invert(p: Perm) -> Perm:
    return p.inverse()


# ---------------------------------------------------------------------------
# Flattening


def mk_app(sym: FunSymbol, args) -> Term:
    """Build an application, merging same-symbol children of associative symbols."""
    args = tuple(args)
    if sym.theory.associative:
        if len(args) == 1:
            return args[0]
        flat = []
        for a in args:
            if isinstance(a, App) and a.sym == sym:
                flat.extend(a.args)
            else:
                flat.append(a)
        args = tuple(flat)
    return App(sym, args)


def flatten(t: Term) -> Term:
    if isinstance(t, App):
        return mk_app(t.sym, (flatten(a) for a in t.args))
    if isinstance(t, Abs):
        return Abs(t.binder, flatten(t.body))
    return t


# ---------------------------------------------------------------------------
# Substitutions


@dataclass(frozen=True)
class Substitution:
    """Finite map from term-variables to terms and from atom-variables to suspensions."""

    mapping: Mapping = field(default_factory=dict)

    def __init__(self, mapping: Mapping = None):
        object.__setattr__(self, "mapping", dict(mapping or {}))

    def __getitem__(self, k):
        return self.mapping[k]

    def __contains__(self, k) -> bool:
        return k in self.mapping

    def __len__(self) -> int:
        return len(self.mapping)

    def items(self):
        return self.mapping.items()

    def get(self, k, default=None):
        return self.mapping.get(k, default)

    def extend(self, other: Mapping) -> "Substitution":
        """Compose ``self`` followed by ``other``."""
        out = {k: apply_substitution(v, other) for k, v in self.mapping.items()}
        for k, v in dict(other).items():
            out.setdefault(k, v)
        return Substitution(out)

    def __str__(self) -> str:
        from .syntax import show_term

        parts = [f"{k} -> {show_term(v)}" for k, v in sorted(self.mapping.items(), key=lambda kv: str(kv[0]))]
        return "{" + ", ".join(parts) + "}"


def _subst_perm(p: Perm, sub) -> Perm:
    if not p:
        return p
    return Perm(tuple((_subst_elem(x, sub), _subst_elem(y, sub)) for x, y in p.swaps))


def _subst_elem(e, sub):
    if isinstance(e, AtomSusp):
        return _subst_atomsusp(e, sub)
    return e


def _subst_atomsusp(e: AtomSusp, sub) -> AtomSusp:
    p = _subst_perm(e.perm, sub)
    if e.var in sub:
        target = sub[e.var]
        if isinstance(target, AtomVar):
            target = susp(target)
        return apply_perm_susp(p, target)
    return AtomSusp(p, e.var)


def apply_substitution(t: Term, sub) -> Term:
    """Apply a substitution homomorphically, discharging suspensions and re-flattening."""
    if isinstance(sub, Substitution):
        sub = sub.mapping
    if not sub:
        return t
    if isinstance(t, Atom):
        return t
    if isinstance(t, AtomSusp):
        return _subst_atomsusp(t, sub)
    if isinstance(t, VarSusp):
        p = _subst_perm(t.perm, sub)
        if t.var in sub:
            return apply_perm(p, sub[t.var])
        return VarSusp(p, t.var)
    if isinstance(t, App):
        return mk_app(t.sym, (apply_substitution(a, sub) for a in t.args))
    if isinstance(t, Abs):
        b = t.binder if isinstance(t.binder, Atom) else _subst_atomsusp(t.binder, sub)
        return Abs(b, apply_substitution(t.body, sub))
    raise TypeError(f"not a term: {t!r}")


def subst_constraint(c: Constraint, sub) -> Constraint:
    if isinstance(sub, Substitution):
        sub = sub.mapping
    if isinstance(c, Fresh):
        return Fresh(_subst_atomsusp(c.subject, sub), apply_substitution(c.target, sub))
    classes = tuple(tuple(_subst_atomsusp(e, sub) for e in cl) for cl in c.classes)
    facts = None
    if c.facts is not None:
        facts = tuple((_subst_atomsusp(s, sub), apply_substitution(r, sub)) for s, r in c.facts)
    return Eqr(classes, facts)


def subst_context(ctx: Iterable[Constraint], sub) -> frozenset:
    return frozenset(subst_constraint(c, sub) for c in ctx)


# ---------------------------------------------------------------------------
# Variable collection


def _walk_perm(p: Perm) -> Iterator:
    for x, y in p.swaps:
        yield x
        yield y


def atom_vars(x) -> set:
    """All atom-variables occurring anywhere, including inside permutations."""
    out: set = set()
    _collect(x, out, None)
    return out


def term_vars(x) -> set:
    out: set = set()
    _collect(x, None, out)
    return out


def _collect(x, avs, tvs) -> None:
    if isinstance(x, AtomSusp):
        if avs is not None:
            avs.add(x.var)
        for e in _walk_perm(x.perm):
            _collect(e, avs, tvs)
    elif isinstance(x, VarSusp):
        if tvs is not None:
            tvs.add(x.var)
        for e in _walk_perm(x.perm):
            _collect(e, avs, tvs)
    elif isinstance(x, App):
        for a in x.args:
            _collect(a, avs, tvs)
    elif isinstance(x, Abs):
        _collect(x.binder, avs, tvs)
        _collect(x.body, avs, tvs)
    elif isinstance(x, Perm):
        for e in _walk_perm(x):
            _collect(e, avs, tvs)
    elif isinstance(x, Fresh):
        _collect(x.subject, avs, tvs)
        _collect(x.target, avs, tvs)
    elif isinstance(x, Eqr):
        for cl in x.classes:
            for e in cl:
                _collect(e, avs, tvs)
        for s, r in x.facts or ():
            _collect(s, avs, tvs)
            _collect(r, avs, tvs)
    elif isinstance(x, TermInContext):
        _collect(x.context, avs, tvs)
        _collect(x.term, avs, tvs)
    elif isinstance(x, AtomVar):
        if avs is not None:
            avs.add(x)
    elif isinstance(x, TermVar):
        if tvs is not None:
            tvs.add(x)
    elif isinstance(x, (Atom, FunSymbol)) or x is None:
        return
    elif isinstance(x, (set, frozenset, list, tuple)):
        for y in x:
            _collect(y, avs, tvs)
    else:
        raise TypeError(f"cannot collect variables of {type(x).__name__}")


def atoms_of(t) -> set:
    """Concrete atoms occurring in a (possibly semi-ground) term."""
    out: set = set()

    def go(u):
        if isinstance(u, Atom):
            out.add(u)
        elif isinstance(u, App):
            for a in u.args:
                go(a)
        elif isinstance(u, Abs):
            go(u.binder)
            go(u.body)
        elif isinstance(u, VarSusp):
            for x, y in u.perm.swaps:
                go(x)
                go(y)

    go(t)
    return out


def symbols_of(t) -> set:
    out: set = set()

    def go(u):
        if isinstance(u, App):
            out.add(u.sym)
            for a in u.args:
                go(a)
        elif isinstance(u, Abs):
            go(u.body)

    go(t)
    return out


def is_ground(t: Term) -> bool:
    if isinstance(t, Atom):
        return True
    if isinstance(t, App):
        return all(is_ground(a) for a in t.args)
    if isinstance(t, Abs):
        return isinstance(t.binder, Atom) and is_ground(t.body)
    return False


def size(t: Term) -> int:
    """Node count where an n-ary flattened application counts as n-1 binary nodes."""
    if isinstance(t, App):
        inner = sum(size(a) for a in t.args)
        if t.sym.theory.associative:
            return inner + max(len(t.args) - 1, 1)
        return inner + 1
    if isinstance(t, Abs):
        return 1 + size(t.body)
    return 1


def depth(t: Term) -> int:
    if isinstance(t, App):
        return 1 + max((depth(a) for a in t.args), default=0)
    if isinstance(t, Abs):
        return 1 + depth(t.body)
    return 0


# ---------------------------------------------------------------------------
# Fresh names

RESERVED_PREFIX = "_"


class NameSupply:
    """Generates names with a reserved prefix that the parser never accepts.

    Counting is guarded by a lock so concurrent callers never receive the
    same name.
    """

    def __init__(self, avoid: Iterable[str] = ()):
        self._counter = itertools.count(1)
        self._lock = threading.Lock()
        self._avoid = set(avoid)

    def _next(self, stem: str) -> str:
        with self._lock:
            while True:
                name = f"{RESERVED_PREFIX}{stem}{next(self._counter)}"
                if name not in self._avoid:
                    self._avoid.add(name)
                    return name

    def atom_var(self, stem: str = "C") -> AtomVar:
        return AtomVar(self._next(stem))

    def term_var(self, stem: str = "Y") -> TermVar:
        return TermVar(self._next(stem))


# ---------------------------------------------------------------------------
# Ordering


def term_key(t) -> tuple:
    """A total structural order on terms, used for deterministic output."""
    if isinstance(t, Atom):
        return (0, t.name)
    if isinstance(t, AtomSusp):
        return (1, t.var.name, perm_key(t.perm))
    if isinstance(t, VarSusp):
        return (2, t.var.name, perm_key(t.perm))
    if isinstance(t, App):
        return (3, t.sym.name, len(t.args), tuple(term_key(a) for a in t.args))
    if isinstance(t, Abs):
        return (4, term_key(t.binder), term_key(t.body))
    raise TypeError(f"not a term: {t!r}")


def perm_key(p: Perm) -> tuple:
    return tuple((term_key(x), term_key(y)) for x, y in p.swaps)


def constraint_key(c: Constraint) -> tuple:
    if isinstance(c, Fresh):
        return (0, term_key(c.subject), term_key(c.target))
    facts = None if c.facts is None else tuple((term_key(s), term_key(r)) for s, r in c.facts)
    return (1, tuple(tuple(term_key(e) for e in cl) for cl in c.classes), facts is None, facts or ())


def rename_vars(x, amap: Mapping, tmap: Mapping):
    """Rename atom- and term-variables by plain name maps (no suspension discharge)."""
    sub = {k: susp(v) for k, v in amap.items()}
    sub.update({k: VarSusp(ID, v) for k, v in tmap.items()})
    if isinstance(x, (frozenset, set, list, tuple)):
        return subst_context(x, sub)
    if isinstance(x, (Fresh, Eqr)):
        return subst_constraint(x, sub)
    return apply_substitution(x, sub)
