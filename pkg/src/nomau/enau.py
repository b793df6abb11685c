"""Rule-based anti-unification of terms-in-context modulo A, C and AC.

A state ``(P; S; Γ; σ)`` holds unsolved equations ``P``, the store ``S`` of
solved differences, the accumulated freshness context ``Γ`` and a
triangular substitution ``σ``. The engine always works on the first
equation of ``P``; equational decompositions branch, everything else is
deterministic. Once ``P`` is empty, store entries that are renamings of
each other are merged until no pair merges any more.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .eqvm import eqvm, mapping_to_permutation
from .semantics import holds_eq, models
from .terms import (
    ID,
    Abs,
    App,
    AtomSusp,
    AtomVar,
    Fresh,
    NameSupply,
    Perm,
    Substitution,
    Term,
    TermInContext,
    TermVar,
    Theory,
    VarSusp,
    apply_perm,
    apply_perm_susp,
    apply_substitution,
    atom_vars,
    mk_app,
    size,
    subst_context,
    susp,
    term_key,
    term_vars,
)


class LimitExceeded(RuntimeError):
    pass


class ReconstructionError(AssertionError):
    """Raised when a result cannot be instantiated back to an input (an engine bug)."""


@dataclass(frozen=True)
class AUEquation:
    genvar: object
    left: Term
    right: Term

    def __str__(self) -> str:
        from .syntax import show_term

        return f"{self.genvar}: {show_term(self.left)} =^= {show_term(self.right)}"


@dataclass(frozen=True)
class State:
    P: tuple
    S: tuple
    gamma: frozenset
    sigma: tuple
    trace: tuple = ()

    def measure(self) -> tuple:
        return measure(self)

    def sigma_map(self) -> dict:
        return dict(self.sigma)


def measure(state: State) -> tuple:
    """Lexicographic measure: total size of unsolved equations, then store size."""
    return (sum(size(e.left) + size(e.right) for e in state.P), len(state.S))


@dataclass
class GeneralizationResult:
    term_in_context: TermInContext
    store: tuple
    substitution: Substitution
    trace: tuple = ()
    root: Optional[TermVar] = None

    @property
    def context(self) -> frozenset:
        return self.term_in_context.context

    @property
    def term(self) -> Term:
        return self.term_in_context.term


@dataclass
class RunResult:
    results: list
    complete: bool = True
    states: int = 0
    steps: int = 0

    def __iter__(self):
        return iter(self.results)

    def __len__(self) -> int:
        return len(self.results)


def resolve(t: Term, sigma: dict, limit: int = 10000) -> Term:
    """Apply a triangular substitution until no variable of its domain remains."""
    for _ in range(limit):
        vs = term_vars(t) | atom_vars(t)
        if not any(v in sigma for v in vs):
            return t
        t = apply_substitution(t, sigma)
    raise RuntimeError("substitution does not terminate")


def init_state(nabla: Iterable, s: Term, t: Term, supply: NameSupply) -> tuple:
    nabla = frozenset(nabla)
    x = supply.term_var("X")
    used = term_vars([s, t]) | term_vars(nabla)
    if x in used:
        raise ValueError(f"generalization variable {x} clashes with the input")
    return x, State((AUEquation(x, s, t),), (), nabla, ())


class Engine:
    """Successor generation for states; one engine per run (it owns the name supply)."""

    def __init__(self, supply: NameSupply):
        self.supply = supply

    def successors(self, st: State) -> list:
        return [ri.state for ri in self.rule_instances(st)]

    def rule_instances(self, st: State) -> list:
        """Every applicable rule instance together with the state it produces."""
        if st.P:
            return self._step_p(st)
        merged = self._merge(st)
        return [merged] if merged is not None else []

    # -- helpers
    def _extend(self, st: State, P, S=None, gamma=None, bind=None, rule="", params=()) -> "RuleInstance":
        sigma = st.sigma + ((bind,) if bind else ())
        nxt = State(
            tuple(P),
            st.S if S is None else tuple(S),
            st.gamma if gamma is None else frozenset(gamma),
            sigma,
            st.trace + (rule,),
        )
        return RuleInstance(rule, params, nxt)

    def _step_p(self, st: State) -> list:
        eq, rest = st.P[0], st.P[1:]
        x, l, r = eq.genvar, eq.left, eq.right
        if isinstance(l, App) and isinstance(r, App) and l.sym.name == r.sym.name:
            th = l.sym.theory
            if th is Theory.FREE and len(l.args) == len(r.args):
                ys = [self.supply.term_var() for _ in l.args]
                new = [AUEquation(y, a, b) for y, a, b in zip(ys, l.args, r.args)]
                return [self._extend(st, new + list(rest), bind=(x, App(l.sym, tuple(VarSusp(ID, y) for y in ys))), rule="Dec")]
            if th is Theory.C:
                return self._dec_c(st, x, l, r, rest)
            if th is Theory.A:
                return self._dec_a(st, x, l, r, rest)
            if th is Theory.AC:
                return self._dec_ac(st, x, l, r, rest)
        if isinstance(l, Abs) and isinstance(r, Abs):
            c = self.supply.atom_var("C")
            y = self.supply.term_var()
            cs = susp(c)
            nl = apply_perm(Perm(((l.binder, cs),)), l.body)
            nr = apply_perm(Perm(((r.binder, cs),)), r.body)
            gamma = st.gamma | {Fresh(cs, l), Fresh(cs, r)}
            return [self._extend(st, [AUEquation(y, nl, nr)] + list(rest), gamma=gamma, bind=(x, Abs(cs, VarSusp(ID, y))), rule="Abs")]
        if isinstance(l, AtomSusp) and isinstance(r, AtomSusp):
            if holds_eq(st.gamma, l, r):
                return [self._extend(st, rest, bind=(x, l), rule="SusAA")]
            c = self.supply.atom_var("C")
            cs = susp(c)
            S = st.S + (AUEquation(c, l, r),)
            gamma = st.gamma | {Fresh(cs, Abs(l, Abs(r, cs)))}
            return [self._extend(st, rest, S=S, gamma=gamma, bind=(x, cs), rule="SolAB")]
        if isinstance(l, VarSusp) and isinstance(r, VarSusp) and l.var == r.var and holds_eq(st.gamma, l, r):
            return [self._extend(st, rest, bind=(x, l), rule="SusYY")]
        return [self._extend(st, rest, S=st.S + (eq,), rule="Sol")]

    def _dec_c(self, st, x, l, r, rest) -> list:
        out = []
        (t1, t2), (s1, s2) = l.args, r.args
        orders = [(s1, s2), (s2, s1)] if s1 != s2 else [(s1, s2)]
        for k, (a, b) in enumerate(orders):
            y1, y2 = self.supply.term_var(), self.supply.term_var()
            new = [AUEquation(y1, t1, a), AUEquation(y2, t2, b)]
            bind = (x, App(l.sym, (VarSusp(ID, y1), VarSusp(ID, y2))))
            out.append(self._extend(st, new + list(rest), bind=bind, rule="DecC", params=(k,)))
        return out

    def _dec_a(self, st, x, l, r, rest) -> list:
        out = []
        n, m = len(l.args), len(r.args)
        for k in range(1, n):
            for j in range(1, m):
                y1, y2 = self.supply.term_var(), self.supply.term_var()
                new = [
                    AUEquation(y1, mk_app(l.sym, l.args[:k]), mk_app(r.sym, r.args[:j])),
                    AUEquation(y2, mk_app(l.sym, l.args[k:]), mk_app(r.sym, r.args[j:])),
                ]
                bind = (x, App(l.sym, (VarSusp(ID, y1), VarSusp(ID, y2))))
                out.append(self._extend(st, new + list(rest), bind=bind, rule="DecA", params=(k, j)))
        return out

    def _dec_ac(self, st, x, l, r, rest) -> list:
        out = []
        n, m = len(l.args), len(r.args)
        seen = set()
        for ks in range(1, n):
            for tail in itertools.combinations(range(1, n), ks - 1):
                I = (0,) + tail
                left1 = [l.args[i] for i in I]
                left2 = [l.args[i] for i in range(n) if i not in I]
                for js in range(1, m):
                    for J in itertools.combinations(range(m), js):
                        right1 = [r.args[j] for j in J]
                        right2 = [r.args[j] for j in range(m) if j not in J]
                        key = (_ms_key(left1), _ms_key(right1))
                        if key in seen:
                            continue
                        seen.add(key)
                        y1, y2 = self.supply.term_var(), self.supply.term_var()
                        new = [
                            AUEquation(y1, mk_app(l.sym, left1), mk_app(r.sym, right1)),
                            AUEquation(y2, mk_app(l.sym, left2), mk_app(r.sym, right2)),
                        ]
                        bind = (x, App(l.sym, (VarSusp(ID, y1), VarSusp(ID, y2))))
                        out.append(self._extend(st, new + list(rest), bind=bind, rule="DecAC", params=(I, J)))
        return out

    def _merge(self, st: State) -> Optional["RuleInstance"]:
        S = st.S
        for i in range(len(S)):
            for j in range(i + 1, len(S)):
                e1, e2 = S[i], S[j]
                if type(e1.genvar) is not type(e2.genvar):
                    continue
                m = eqvm([(e1.left, e2.left), (e1.right, e2.right)], st.gamma, strict=True, supply=self.supply)
                if m is None:
                    continue
                pi = mapping_to_permutation(m)
                if isinstance(e1.genvar, AtomVar):
                    img = apply_perm_susp(pi, susp(e1.genvar))
                else:
                    img = VarSusp(pi, e1.genvar)
                sub = {e2.genvar: img}
                gamma = subst_context(st.gamma, sub)
                newS = S[:j] + S[j + 1 :]
                nxt = State((), newS, gamma, st.sigma + ((e2.genvar, img),), st.trace + ("Mer",))
                return RuleInstance("Mer", (i, j), nxt)
        return None


@dataclass(frozen=True)
class RuleInstance:
    name: str
    params: tuple
    state: State


def applicable_rules(st: State, engine: "Engine") -> list:
    """Rule instances applicable to ``st`` (names with their parameters and results)."""
    return engine.rule_instances(st)


def apply_rule(st: State, inst: RuleInstance) -> State:
    if inst.state.trace[: len(st.trace)] != st.trace:
        raise ValueError("rule instance does not belong to this state")
    return inst.state


def _ms_key(ts) -> tuple:
    return tuple(sorted(term_key(t) for t in ts))


def finalize(st: State, root: TermVar) -> GeneralizationResult:
    sigma = st.sigma_map()
    term = resolve(VarSusp(ID, root), sigma)
    return GeneralizationResult(TermInContext(st.gamma, term), st.S, Substitution(sigma), st.trace, root)


def result_key(res: GeneralizationResult) -> tuple:
    """Syntactic key invariant under renaming of generated variables."""
    from .syntax import show_term
    from .terms import RESERVED_PREFIX, rename_vars

    order_a: list = []
    order_t: list = []

    def visit(t):
        for v in _vars_in_order(t):
            if v.name.startswith(RESERVED_PREFIX):
                lst = order_a if isinstance(v, AtomVar) else order_t
                if v not in lst:
                    lst.append(v)

    visit(res.term)
    for c in sorted(res.context, key=lambda c: len(str(c))):
        visit(c.subject)
        visit(c.target)
    amap = {v: AtomVar(f"_g{i}") for i, v in enumerate(order_a)}
    tmap = {v: TermVar(f"_h{i}") for i, v in enumerate(order_t)}
    term = rename_vars(res.term, amap, tmap)
    ctx = rename_vars(res.context, amap, tmap)
    return (show_term(term), tuple(sorted(map(repr, ctx))))


def _vars_in_order(t) -> list:
    out = []

    def go(u):
        if isinstance(u, AtomSusp):
            for x, y in u.perm.swaps:
                go(x)
                go(y)
            out.append(u.var)
        elif isinstance(u, VarSusp):
            for x, y in u.perm.swaps:
                go(x)
                go(y)
            out.append(u.var)
        elif isinstance(u, App):
            for a in u.args:
                go(a)
        elif isinstance(u, Abs):
            go(u.binder)
            go(u.body)

    go(t)
    return out


def run_enau(
    nabla: Iterable,
    s: Term,
    t: Term,
    max_states: int = 10_000,
    on_step: Optional[Callable] = None,
    raise_on_limit: bool = False,
) -> RunResult:
    """Collect all final states reachable from the initial state.

    ``on_step(before, after)`` is called for every rule application. When
    more than ``max_states`` states are generated the search stops and the
    run is marked incomplete.
    """
    nabla = frozenset(nabla)
    names = {v.name for v in atom_vars([s, t, nabla]) | term_vars([s, t, nabla])}
    supply = NameSupply(names)
    root, start = init_state(nabla, s, t, supply)
    engine = Engine(supply)
    stack = [start]
    results = []
    keys = set()
    states = 1
    steps = 0
    complete = True
    while stack:
        st = stack.pop()
        succ = engine.successors(st)
        if not succ:
            if st.P:
                raise AssertionError("stuck state with unsolved equations")
            res = finalize(st, root)
            k = result_key(res)
            if k not in keys:
                keys.add(k)
                results.append(res)
            continue
        for nxt in succ:
            steps += 1
            if on_step is not None:
                on_step(st, nxt)
        states += len(succ)
        if states > max_states:
            complete = False
            if raise_on_limit:
                raise LimitExceeded(f"more than {max_states} states")
            break
        stack.extend(reversed(succ))
    results.sort(key=lambda r: result_key(r))
    return RunResult(results, complete, states, steps)


# ---------------------------------------------------------------------------
# Reversal


def reversal_substitutions(res: GeneralizationResult) -> tuple:
    """Substitutions mapping each store variable to its left, respectively right, side."""
    s1 = {e.genvar: e.left for e in res.store}
    s2 = {e.genvar: e.right for e in res.store}
    return Substitution(s1), Substitution(s2)


def check_reversal(res: GeneralizationResult, nabla: Iterable, s: Term, t: Term) -> bool:
    """Check that the result instantiates back to both inputs under ``nabla``.

    Atom-variables introduced by the engine and not removed by the reversal
    substitution are existential: every model of ``nabla`` must extend to
    a model of the instantiated result context.
    """
    nabla = frozenset(nabla)
    s1, s2 = reversal_substitutions(res)
    for sub, target in ((s1, s), (s2, t)):
        ctx = subst_context(res.context, sub) | nabla
        inst = apply_substitution(res.term, sub)
        if not extends_models(nabla, ctx, atom_vars([s, t, nabla])):
            return False
        if not holds_eq(ctx, inst, target):
            return False
    return True


def extends_models(base: frozenset, ext: frozenset, base_vars: Iterable) -> bool:
    """Every model of ``base`` (on ``base_vars``) extends to a model of ``ext``."""
    base_vars = set(base_vars) | atom_vars(base)
    base_models = models(base, base_vars)
    ext_models = models(ext, base_vars)

    def project(m):
        cls = frozenset(frozenset(v for v in c if v in base_vars) for c in m.classes())
        cls = frozenset(c for c in cls if c)
        facts = set()
        for a, x in m.facts:
            owners = frozenset(v for v, b in m.env.items() if b == a and v in base_vars)
            if owners:
                facts.add((owners, x))
        return cls, frozenset(facts)

    ext_proj: dict = {}
    for m in ext_models:
        cls, facts = project(m)
        ext_proj.setdefault(cls, []).append(facts)
    for m in base_models:
        cls, facts = project(m)
        if not any(f <= facts for f in ext_proj.get(cls, [])):
            return False
    return True


__all__ = [
    "AUEquation",
    "Engine",
    "GeneralizationResult",
    "LimitExceeded",
    "ReconstructionError",
    "RuleInstance",
    "apply_rule",
    "applicable_rules",
    "RunResult",
    "State",
    "check_reversal",
    "extends_models",
    "finalize",
    "init_state",
    "measure",
    "resolve",
    "result_key",
    "reversal_substitutions",
    "run_enau",
]
