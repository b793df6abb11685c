"""Concrete syntax: tokenizer, parser and printer for problems and results.

Problem files are sequences of ``;``-terminated statements::

    sig: f:AC/2, g:/1, c:/0;
    atomvars: A B C;
    termvars: X Y;
    fresh: A#B, C # lam A. lam B. C;
    generalize lam A. f(A,A,B) =?= lam B. f(A,B,A);

Swap sequences are written left to right and act right to left, so
``(A B)(B C)*X`` first swaps ``B`` and ``C`` and then ``A`` and ``B``.
A swap element may itself be a suspension: ``((A B)*C D)``. Lines starting
with ``%`` are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    ID,
    RESERVED_PREFIX,
    Abs,
    App,
    Atom,
    AtomSusp,
    AtomVar,
    Eqr,
    Fresh,
    FunSymbol,
    Perm,
    Signature,
    Term,
    TermInContext,
    TermVar,
    Theory,
    VarSusp,
    constraint_key,
    mk_app,
)


class ParseError(ValueError):
    def __init__(self, msg: str, text: str = "", pos: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.column = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<op>=\?=|=\^=|=>|<~|<=|->|[(),;:/*\#.|~{}\[\]])
  | (?P<num>\d+(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", text, i)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind, m.group(), i))
        i = m.end()
    out.append(Tok("eof", "", len(text)))
    return out


# ---------------------------------------------------------------------------
# Problem files


@dataclass
class Command:
    name: str
    args: tuple
    pos: int = 0


@dataclass
class ProblemFile:
    sig: Signature = field(default_factory=Signature)
    atomvars: dict = field(default_factory=dict)
    termvars: dict = field(default_factory=dict)
    fresh: frozenset = frozenset()
    commands: list = field(default_factory=list)


class Parser:
    def __init__(self, text: str, sig: Optional[Signature] = None, atomvars=(), termvars=(), allow_reserved=False):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig if sig is not None else Signature()
        self.atomvars = {v if isinstance(v, str) else v.name: AtomVar(v if isinstance(v, str) else v.name) for v in atomvars}
        self.termvars = {v if isinstance(v, str) else v.name: TermVar(v if isinstance(v, str) else v.name) for v in termvars}
        self.allow_reserved = allow_reserved

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Tok] = None):
        tok = tok or self.tok
        raise ParseError(msg, self.text, tok.pos)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        t = self.tok
        if not self.accept(text):
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return t

    def ident(self) -> Tok:
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected an identifier, found {t.text or 'end of input'!r}")
        if t.text.startswith(RESERVED_PREFIX) and not self.allow_reserved:
            self.error(f"identifier {t.text!r} uses the reserved prefix {RESERVED_PREFIX!r}")
        self.i += 1
        return t

    # declarations
    def declare_atomvar(self, name: str, tok: Tok):
        if name in self.termvars:
            self.error(f"{name} is already a term-variable", tok)
        self.atomvars[name] = AtomVar(name)

    def declare_termvar(self, name: str, tok: Tok):
        if name in self.atomvars:
            self.error(f"{name} is already an atom-variable", tok)
        self.termvars[name] = TermVar(name)

    def sig_decls(self):
        while True:
            name = self.ident()
            self.expect(":")
            th = ""
            if self.tok.kind in ("ident", "num") and self.tok.text != "/":
                th = self.tok.text
                self.i += 1
            self.expect("/")
            if self.tok.kind != "num":
                self.error("expected an arity")
            arity = int(self.tok.text)
            self.i += 1
            try:
                self.sig.add(name.text, arity, Theory.parse(th))
            except ValueError as e:
                self.error(str(e), name)
            if not self.accept(","):
                break

    # terms
    def term(self) -> Term:
        t = self.tok
        if t.kind == "ident" and t.text == "lam":
            self.i += 1
            binder = self.atom_elem()
            self.expect(".")
            return Abs(binder, self.term())
        if t.text == "(":
            perm = self.perm()
            self.expect("*")
            return self.var_leaf(perm)
        if t.kind == "ident":
            if t.text in self.atomvars or t.text in self.termvars:
                return self.var_leaf(ID)
            name = self.ident()
            if name.text in self.sig:
                sym = self.sig[name.text]
                args = []
                if self.accept("("):
                    if not self.accept(")"):
                        args.append(self.term())
                        while self.accept(","):
                            args.append(self.term())
                        self.expect(")")
                if sym.theory.associative:
                    if len(args) < 2:
                        self.error(f"{sym.name} needs at least 2 arguments", name)
                elif len(args) != sym.arity:
                    self.error(f"{sym.name} expects {sym.arity} arguments, got {len(args)}", name)
                return mk_app(sym, args)
            if self.tok.text == "(":
                self.error(f"undeclared function symbol {name.text!r}", name)
            if name.text[0].islower():
                return Atom(name.text)
            self.error(f"undeclared variable {name.text!r}", name)
        self.error(f"expected a term, found {t.text or 'end of input'!r}")

    def var_leaf(self, perm: Perm):
        name = self.ident()
        if name.text in self.atomvars:
            return AtomSusp(perm, self.atomvars[name.text])
        if name.text in self.termvars:
            return VarSusp(perm, self.termvars[name.text])
        self.error(f"undeclared variable {name.text!r}", name)

    def perm(self) -> Perm:
        swaps = []
        while self.tok.text == "(":
            self.expect("(")
            x = self.atom_elem()
            y = self.atom_elem()
            self.expect(")")
            swaps.append((x, y))
        return Perm(tuple(swaps))

    def atom_elem(self):
        """An atom-variable suspension or a concrete atom."""
        if self.tok.text == "(":
            p = self.perm()
            self.expect("*")
            name = self.ident()
            if name.text not in self.atomvars:
                self.error(f"{name.text!r} is not an atom-variable", name)
            return AtomSusp(p, self.atomvars[name.text])
        name = self.ident()
        if name.text in self.atomvars:
            return AtomSusp(ID, self.atomvars[name.text])
        if name.text in self.termvars:
            self.error(f"term-variable {name.text!r} where an atom-variable is required", name)
        if name.text[0].islower() and name.text not in self.sig:
            return Atom(name.text)
        self.error(f"undeclared atom-variable {name.text!r}", name)

    def constraint(self):
        if self.accept("["):
            classes = [[]]
            while not self.accept("]"):
                if self.accept("|"):
                    classes.append([])
                else:
                    classes[-1].append(self.atom_elem())
            self.expect("=>")
            if self.accept("false"):
                return Eqr(tuple(tuple(c) for c in classes), None)
            self.expect("{")
            facts = []
            if not self.accept("}"):
                while True:
                    subj = self.atom_elem()
                    self.expect("#")
                    facts.append((subj, self.term()))
                    if not self.accept(","):
                        break
                self.expect("}")
            return Eqr(tuple(tuple(c) for c in classes), tuple(facts))
        subj = self.atom_elem()
        self.expect("#")
        return Fresh(subj, self.term())

    def context(self, stop=(";", "|", ")", "}", "eof")) -> frozenset:
        out = []
        if self.tok.text in stop or self.tok.kind == "eof":
            return frozenset()
        out.append(self.constraint())
        while self.accept(","):
            out.append(self.constraint())
        return frozenset(out)

    def tic(self) -> TermInContext:
        self.expect("(")
        if self.accept("{"):
            ctx = self.context(stop=("}",))
            self.expect("}")
        else:
            ctx = self.context(stop=("|",))
        self.expect("|")
        t = self.term()
        self.expect(")")
        return TermInContext(ctx, t)

    # statements
    def problem(self) -> ProblemFile:
        pf = ProblemFile(sig=self.sig)
        fresh = set()
        while self.tok.kind != "eof":
            head = self.tok
            if self.accept(";"):
                continue
            if head.kind != "ident":
                self.error(f"expected a statement, found {head.text!r}")
            kw = head.text
            if kw in ("sig", "atomvars", "termvars", "fresh") and self.peek().text == ":":
                self.i += 2
                if kw == "sig":
                    if self.tok.text != ";":
                        self.sig_decls()
                elif kw == "atomvars":
                    while self.tok.kind == "ident":
                        t = self.ident()
                        self.declare_atomvar(t.text, t)
                elif kw == "termvars":
                    while self.tok.kind == "ident":
                        t = self.ident()
                        self.declare_termvar(t.text, t)
                else:
                    fresh |= self.context()
            elif kw in ("generalize", "unique"):
                self.i += 1
                s = self.term()
                self.expect("=?=")
                pf.commands.append(Command(kw, (s, self.term()), head.pos))
            elif kw == "check":
                self.i += 1
                s = self.term()
                self.expect("~")
                pf.commands.append(Command(kw, (s, self.term()), head.pos))
            elif kw == "checkfresh":
                self.i += 1
                pf.commands.append(Command(kw, (self.constraint(),), head.pos))
            elif kw == "equiv":
                self.i += 1
                eqs = []
                while True:
                    s = self.term()
                    self.expect("<~")
                    eqs.append((s, self.term()))
                    if not self.accept(","):
                        break
                pf.commands.append(Command(kw, tuple(eqs), head.pos))
            elif kw == "subsumes":
                self.i += 1
                a = self.tic()
                self.expect("<=")
                pf.commands.append(Command(kw, (a, self.tic()), head.pos))
            elif kw == "result":
                self.i += 1
                tc = self.tic()
                store = []
                if self.accept("store"):
                    while True:
                        g = self.ident()
                        v = self.atomvars.get(g.text) or self.termvars.get(g.text)
                        if v is None:
                            self.error(f"undeclared store variable {g.text!r}", g)
                        self.expect(":")
                        l = self.term()
                        self.expect("=^=")
                        store.append((v, l, self.term()))
                        if not self.accept(","):
                            break
                pf.commands.append(Command(kw, (tc, tuple(store)), head.pos))
            else:
                self.error(f"unknown statement {kw!r}")
            if self.tok.kind != "eof":
                self.expect(";")
        pf.atomvars = dict(self.atomvars)
        pf.termvars = dict(self.termvars)
        pf.fresh = frozenset(fresh)
        return pf


def parse_problem(text: str, allow_reserved: bool = False) -> ProblemFile:
    return Parser(text, allow_reserved=allow_reserved).problem()


def _finish(p: Parser, value):
    if p.tok.kind != "eof":
        p.error(f"unexpected trailing input {p.tok.text!r}")
    return value


def parse_term(text: str, sig: Optional[Signature] = None, atomvars=(), termvars=(), allow_reserved=False) -> Term:
    p = Parser(text, sig, atomvars, termvars, allow_reserved)
    return _finish(p, p.term())


def parse_context(text: str, sig: Optional[Signature] = None, atomvars=(), termvars=(), allow_reserved=False) -> frozenset:
    p = Parser(text, sig, atomvars, termvars, allow_reserved)
    if p.accept("{"):
        ctx = p.context(stop=("}",))
        p.expect("}")
    else:
        ctx = p.context()
    return _finish(p, ctx)


def parse_perm(text: str, atomvars=(), allow_reserved=False) -> Perm:
    p = Parser(text, None, atomvars, (), allow_reserved)
    return _finish(p, p.perm())


# ---------------------------------------------------------------------------
# Printing


def show_elem(e) -> str:
    if isinstance(e, Atom):
        return e.name
    if isinstance(e, AtomVar):
        return e.name
    if e.perm:
        return f"{show_perm(e.perm)}*{e.var.name}"
    return e.var.name


def show_perm(p: Perm) -> str:
    return "".join(f"({show_elem(x)} {show_elem(y)})" for x, y in p.swaps)


def show_term(t) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, (AtomSusp, AtomVar)):
        return show_elem(t)
    if isinstance(t, VarSusp):
        return f"{show_perm(t.perm)}*{t.var.name}" if t.perm else t.var.name
    if isinstance(t, TermVar):
        return t.name
    if isinstance(t, App):
        if not t.args:
            return t.sym.name
        return f"{t.sym.name}({','.join(show_term(a) for a in t.args)})"
    if isinstance(t, Abs):
        return f"lam {show_elem(t.binder)}. {show_term(t.body)}"
    raise TypeError(f"not a term: {t!r}")


def show_constraint(c) -> str:
    if isinstance(c, Fresh):
        return f"{show_elem(c.subject)}#{show_term(c.target)}"
    cls = " | ".join(" ".join(show_elem(e) for e in cl) for cl in c.classes)
    if c.facts is None:
        return f"[{cls}] => false"
    facts = ", ".join(f"{show_elem(s)}#{show_term(r)}" for s, r in c.facts)
    return f"[{cls}] => {{{facts}}}"


def show_context(ctx) -> str:
    return "{" + ", ".join(show_constraint(c) for c in sorted(ctx, key=constraint_key)) + "}"


def show_sig(sig: Signature) -> str:
    parts = [f"{f.name}:{f.theory.value}/{f.arity}" for f in sorted(sig, key=lambda f: f.name)]
    return "sig: " + ", ".join(parts) + ";"


# ---------------------------------------------------------------------------
# Machine format: explicit node kinds


def term_to_json(t):
    if isinstance(t, Atom):
        return {"kind": "atom", "name": t.name}
    if isinstance(t, AtomSusp):
        return {"kind": "atomsusp", "perm": perm_to_json(t.perm), "var": t.var.name}
    if isinstance(t, VarSusp):
        return {"kind": "varsusp", "perm": perm_to_json(t.perm), "var": t.var.name}
    if isinstance(t, App):
        return {
            "kind": "app",
            "symbol": t.sym.name,
            "theory": t.sym.theory.value,
            "arity": t.sym.arity,
            "args": [term_to_json(a) for a in t.args],
        }
    if isinstance(t, Abs):
        return {"kind": "abs", "binder": term_to_json(t.binder), "body": term_to_json(t.body)}
    raise TypeError(f"not a term: {t!r}")


def perm_to_json(p: Perm):
    return [[term_to_json(x), term_to_json(y)] for x, y in p.swaps]


def term_from_json(d):
    k = d["kind"]
    if k == "atom":
        return Atom(d["name"])
    if k == "atomsusp":
        return AtomSusp(perm_from_json(d["perm"]), AtomVar(d["var"]))
    if k == "varsusp":
        return VarSusp(perm_from_json(d["perm"]), TermVar(d["var"]))
    if k == "app":
        sym = FunSymbol(d["symbol"], d["arity"], Theory.parse(d["theory"]))
        return App(sym, tuple(term_from_json(a) for a in d["args"]))
    if k == "abs":
        return Abs(term_from_json(d["binder"]), term_from_json(d["body"]))
    raise ValueError(f"unknown node kind {k!r}")


def perm_from_json(lst):
    return Perm(tuple((term_from_json(x), term_from_json(y)) for x, y in lst))


def constraint_to_json(c):
    if isinstance(c, Fresh):
        return {"kind": "fresh", "subject": term_to_json(c.subject), "target": term_to_json(c.target)}
    return {
        "kind": "eqr",
        "classes": [[term_to_json(e) for e in cl] for cl in c.classes],
        "facts": None if c.facts is None else [[term_to_json(s), term_to_json(r)] for s, r in c.facts],
    }


def constraint_from_json(d):
    if d["kind"] == "fresh":
        return Fresh(term_from_json(d["subject"]), term_from_json(d["target"]))
    facts = None if d["facts"] is None else tuple((term_from_json(s), term_from_json(r)) for s, r in d["facts"])
    return Eqr(tuple(tuple(term_from_json(e) for e in cl) for cl in d["classes"]), facts)


def context_to_json(ctx):
    return [constraint_to_json(c) for c in sorted(ctx, key=constraint_key)]


def context_from_json(lst):
    return frozenset(constraint_from_json(d) for d in lst)


__all__ = [
    "Command",
    "ParseError",
    "Parser",
    "ProblemFile",
    "context_from_json",
    "context_to_json",
    "parse_context",
    "parse_perm",
    "parse_problem",
    "parse_term",
    "show_constraint",
    "show_context",
    "show_perm",
    "show_sig",
    "show_term",
    "term_from_json",
    "term_to_json",
]
