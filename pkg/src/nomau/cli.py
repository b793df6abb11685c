"""Command-line front end: parse a problem file, run its commands, render the results.

Exit codes: 0 success, 1 no result or a false judgement, 2 parse or input
error, 3 state limit exceeded.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .enau import GeneralizationResult, check_reversal, reversal_substitutions, run_enau
from .equality import canonical
from .eqvm import eqvm, mapping_to_permutation
from .minimize import ShapeError, minimize_set, post_process, tic_subset, unique_lgg_a, unique_lgg_ac, unique_lgg_c
from .semantics import ground_holds, holds_constraint, holds_eq, instantiate, interpret, interpretations, pool_atom
from .syntax import (
    Command,
    ParseError,
    ProblemFile,
    constraint_to_json,
    context_from_json,
    context_to_json,
    parse_problem,
    perm_to_json,
    show_constraint,
    show_context,
    show_perm,
    show_sig,
    show_term,
    term_from_json,
    term_to_json,
)
from .terms import (
    Abs,
    App,
    AtomVar,
    FunSymbol,
    Signature,
    TermInContext,
    TermVar,
    Theory,
    apply_substitution,
    atom_vars,
    mk_app,
    subst_context,
    symbols_of,
    term_vars,
)

EXIT_OK, EXIT_FALSE, EXIT_PARSE, EXIT_LIMIT = 0, 1, 2, 3
MACHINE_FORMAT = "nomau-result/1"


@dataclass
class Options:
    minimize: bool = False
    post_process: bool = False
    max_states: int = 10_000
    pool_size: int = 4
    oracle_depth: int = 2
    jobs: int = 1
    all_mappings: bool = False
    verify: bool = False
    theory_override: dict = field(default_factory=dict)


@dataclass
class CommandResult:
    """Outcome of one command; ``payload`` depends on ``command``."""

    command: str
    ok: bool
    payload: object = None
    complete: bool = True
    minimized: bool = False
    post_processed: bool = False
    notes: list = field(default_factory=list)


@dataclass
class ResultDocument:
    signature: Signature
    results: list

    @property
    def exit_code(self) -> int:
        if any(not r.complete for r in self.results):
            return EXIT_LIMIT
        if any(not r.ok for r in self.results):
            return EXIT_FALSE
        return EXIT_OK


# ---------------------------------------------------------------------------
# Theory overrides


def parse_override(spec: str) -> tuple:
    name, _, th = spec.partition("=")
    if not name:
        raise ValueError(f"bad theory override {spec!r}; expected name=THEORY")
    return name.strip(), Theory.parse(th)


def retheory(t, overrides: dict):
    """Rebuild ``t`` with the theories of the named symbols replaced."""
    if not overrides:
        return t
    if isinstance(t, App):
        args = [retheory(a, overrides) for a in t.args]
        if t.sym.name not in overrides:
            return App(t.sym, tuple(args))
        th = overrides[t.sym.name]
        sym = FunSymbol(t.sym.name, t.sym.arity, th)
        if th in (Theory.A, Theory.AC) or len(args) <= sym.arity:
            return mk_app(sym, args)
        # un-flatten into right-nested binary applications
        acc = args[-1]
        for a in reversed(args[:-1]):
            acc = App(sym, (a, acc))
        return acc
    if isinstance(t, Abs):
        return Abs(t.binder, retheory(t.body, overrides))
    return t


def _override_problem(pf: ProblemFile, overrides: dict) -> ProblemFile:
    if not overrides:
        return pf
    sig = Signature()
    for f in pf.sig:
        sig.add(f.name, f.arity, overrides.get(f.name, f.theory))

    def conv(x):
        if isinstance(x, TermInContext):
            return TermInContext(x.context, retheory(x.term, overrides))
        if isinstance(x, tuple):
            return tuple(conv(y) for y in x)
        if isinstance(x, (App, Abs)):
            return retheory(x, overrides)
        return x

    cmds = [Command(c.name, conv(c.args), c.pos) for c in pf.commands]
    return ProblemFile(sig, pf.atomvars, pf.termvars, pf.fresh, cmds)


# ---------------------------------------------------------------------------
# Running


def _post_process_one(args):
    res, i1, i2 = args
    return post_process(res.term_in_context, i1, i2)


def run_generalize(pf: ProblemFile, s, t, opts: Options) -> CommandResult:
    run = run_enau(pf.fresh, s, t, max_states=opts.max_states)
    results = list(run.results)
    out = CommandResult("generalize", bool(results), results, run.complete)
    if opts.minimize and results:
        results = minimize_set(results)
        out.minimized = True
    if opts.post_process and results:
        i1, i2 = TermInContext(pf.fresh, s), TermInContext(pf.fresh, t)
        jobs = [(r, i1, i2) for r in results]
        if opts.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=opts.jobs) as ex:
                pps = list(ex.map(_post_process_one, jobs))
        else:
            pps = [_post_process_one(j) for j in jobs]
        results = [
            GeneralizationResult(pp.term_in_context, r.store, r.substitution, r.trace + ("post-process",), r.root)
            for r, pp in zip(results, pps)
        ]
        out.post_processed = True
        if not all(pp.complete for pp in pps):
            out.notes.append("post-processing budget exhausted")
        if opts.minimize:
            results = minimize_set(results)
    if opts.verify:
        for r in results:
            if not check_reversal(r, pf.fresh, s, t):
                out.notes.append(f"reversal check failed for {show_term(r.term)}")
            if not _sem_check(pf, r, s, t, opts):
                out.notes.append(f"bounded semantic check failed for {show_term(r.term)}")
    out.payload = results
    return out


def _sem_check(pf: ProblemFile, r, s, t, opts: Options) -> bool:
    """Every bounded ground instance of each input is an instance of ``r``.

    The witness for the result's term-variables comes from the store;
    leftover atom-variables are searched over the pool plus fresh atoms.
    """
    pool = [pool_atom(i) for i in range(opts.pool_size)]
    syms = symbols_of(s) | symbols_of(t)
    for sub, inp in zip(reversal_substitutions(r), (s, t)):
        inst = apply_substitution(r.term, sub)
        ctx = subst_context(r.context, sub)
        rest = sorted(atom_vars([inst, ctx]) - atom_vars([inp, pf.fresh]), key=lambda v: v.name)
        extra = pool + [pool_atom(opts.pool_size + i) for i in range(len(rest))]
        for rho in interpretations(TermInContext(pf.fresh, inp), pool, opts.oracle_depth, syms):
            target = canonical(interpret(inp, rho))
            found = False
            for atoms in itertools.product(extra, repeat=len(rest)):
                env = {**rho.atom_map, **dict(zip(rest, atoms))}
                if all(ground_holds(c, env, rho.term_map) for c in ctx) and canonical(
                    instantiate(inst, env, rho.term_map)
                ) == target:
                    found = True
                    break
            if not found:
                return False
    return True


def run_command(pf: ProblemFile, cmd: Command, opts: Options) -> CommandResult:
    name = cmd.name
    if name == "generalize":
        return run_generalize(pf, *cmd.args, opts)
    if name == "check":
        s, t = cmd.args
        return CommandResult(name, holds_eq(pf.fresh, s, t))
    if name == "checkfresh":
        (c,) = cmd.args
        return CommandResult(name, holds_constraint(pf.fresh, c))
    if name == "equiv":
        m = eqvm(cmd.args, pf.fresh, all_mappings=opts.all_mappings)
        ok = bool(m) if opts.all_mappings else m is not None
        return CommandResult(name, ok, m)
    if name == "subsumes":
        a, b = cmd.args
        a = TermInContext(a.context | pf.fresh, a.term)
        b = TermInContext(b.context | pf.fresh, b.term)
        return CommandResult(name, tic_subset(a, b))
    if name == "unique":
        s, t = cmd.args
        if not isinstance(s, App) or not isinstance(t, App):
            raise ShapeError("unique expects two applications")
        fn = {Theory.AC: unique_lgg_ac, Theory.C: unique_lgg_c, Theory.A: unique_lgg_a}.get(s.sym.theory)
        if fn is None:
            raise ShapeError(f"symbol {s.sym.name!r} has no A, C or AC theory")
        r = fn(s, t)
        return CommandResult(name, r is not None, r)
    if name == "result":
        return CommandResult(name, True, cmd.args)
    raise ValueError(f"unknown command {name!r}")


def run_problem(pf: ProblemFile, opts: Options) -> ResultDocument:
    pf = _override_problem(pf, opts.theory_override)
    return ResultDocument(pf.sig, [run_command(pf, c, opts) for c in pf.commands])


# ---------------------------------------------------------------------------
# Rendering


def _names(xs) -> str:
    return " ".join(sorted(v.name for v in xs))


def _store_text(store) -> str:
    return ", ".join(f"{e.genvar.name}: {show_term(e.left)} =^= {show_term(e.right)}" for e in store)


def _result_line(r: GeneralizationResult) -> str:
    line = f"result ( {show_context(r.context)} | {show_term(r.term)} )"
    if r.store:
        line += " store " + _store_text(r.store)
    return line + ";"


def render_text(doc: ResultDocument) -> str:
    out = []
    for cr in doc.results:
        if cr.command == "generalize":
            flags = (
                f"minimized={'yes' if cr.minimized else 'no'} "
                f"post-processed={'yes' if cr.post_processed else 'no'} "
                f"limit-hit={'no' if cr.complete else 'yes'}"
            )
            out.append(f"% generalize: {len(cr.payload)} result(s); {flags}")
            for n in cr.notes:
                out.append(f"% note: {n}")
            if not cr.payload:
                out.append(f"% no-results ({flags})")
                continue
            objs = [r.term_in_context for r in cr.payload] + [
                x for r in cr.payload for e in r.store for x in (e.left, e.right)
            ]
            avs = atom_vars(objs) | {e.genvar for r in cr.payload for e in r.store if isinstance(e.genvar, AtomVar)}
            tvs = term_vars(objs) | {e.genvar for r in cr.payload for e in r.store if isinstance(e.genvar, TermVar)}
            out.append(show_sig(doc.signature))
            out.append(f"atomvars: {_names(avs)};")
            out.append(f"termvars: {_names(tvs)};")
            out.extend(_result_line(r) for r in cr.payload)
        elif cr.command in ("check", "checkfresh", "subsumes"):
            out.append(f"% {cr.command}: {'true' if cr.ok else 'false'}")
        elif cr.command == "equiv":
            ms = cr.payload if isinstance(cr.payload, list) else ([cr.payload] if cr.payload is not None else [])
            if not ms:
                out.append("% equiv: no-mapping")
            for m in ms:
                p = mapping_to_permutation(m)
                out.append(f"% equiv: mapping {m}; permutation {show_perm(p) or 'id'}")
        elif cr.command == "unique":
            if cr.payload is None:
                out.append("% unique: inapplicable")
            else:
                out.append(f"% unique: {show_term(cr.payload)}")
        elif cr.command == "result":
            tc, _ = cr.payload
            out.append(f"% result: ( {show_context(tc.context)} | {show_term(tc.term)} )")
    return "\n".join(out) + "\n"


def _var_json(v) -> dict:
    return {"kind": "atomvar" if isinstance(v, AtomVar) else "termvar", "name": v.name}


def _var_from_json(d):
    return AtomVar(d["name"]) if d["kind"] == "atomvar" else TermVar(d["name"])


def result_to_json(r: GeneralizationResult) -> dict:
    return {
        "context": context_to_json(r.context),
        "term": term_to_json(r.term),
        "store": [
            {"genvar": _var_json(e.genvar), "left": term_to_json(e.left), "right": term_to_json(e.right)}
            for e in r.store
        ],
        "substitution": [
            {"var": _var_json(k), "value": term_to_json(v)}
            for k, v in sorted(r.substitution.mapping.items(), key=lambda kv: kv[0].name)
        ],
        "trace": list(r.trace),
    }


def result_from_json(d: dict) -> GeneralizationResult:
    from .enau import AUEquation
    from .terms import Substitution

    store = tuple(AUEquation(_var_from_json(e["genvar"]), term_from_json(e["left"]), term_from_json(e["right"])) for e in d["store"])
    sub = Substitution({_var_from_json(e["var"]): term_from_json(e["value"]) for e in d.get("substitution", [])})
    tc = TermInContext(context_from_json(d["context"]), term_from_json(d["term"]))
    return GeneralizationResult(tc, store, sub, tuple(d.get("trace", ())))


def render_machine(doc: ResultDocument) -> str:
    items = []
    for cr in doc.results:
        item = {"command": cr.command, "ok": cr.ok, "complete": cr.complete}
        if cr.command == "generalize":
            item.update(
                minimized=cr.minimized,
                post_processed=cr.post_processed,
                notes=cr.notes,
                results=[result_to_json(r) for r in cr.payload],
            )
        elif cr.command == "equiv":
            ms = cr.payload if isinstance(cr.payload, list) else ([cr.payload] if cr.payload is not None else [])
            item["mappings"] = [
                {
                    "mapping": [{"var": k.name, "value": term_to_json(v)} for k, v in sorted(m.items())],
                    "permutation": perm_to_json(mapping_to_permutation(m)),
                }
                for m in ms
            ]
        elif cr.command == "unique":
            item["term"] = None if cr.payload is None else term_to_json(cr.payload)
        elif cr.command == "result":
            tc, _ = cr.payload
            item["context"] = [constraint_to_json(c) for c in sorted(tc.context, key=show_constraint)]
            item["term"] = term_to_json(tc.term)
        items.append(item)
    sig = [{"name": f.name, "theory": f.theory.value, "arity": f.arity} for f in sorted(doc.signature, key=lambda f: f.name)]
    return json.dumps({"format": MACHINE_FORMAT, "signature": sig, "commands": items}, indent=2, sort_keys=True) + "\n"


def parse_machine(text: str) -> list:
    """Generalization results of every ``generalize`` command in a machine document."""
    doc = json.loads(text)
    if doc.get("format") != MACHINE_FORMAT:
        raise ValueError("not a result document")
    return [[result_from_json(r) for r in c["results"]] for c in doc["commands"] if c["command"] == "generalize"]


def parse_text_results(text: str) -> list:
    """``(term-in-context, store)`` pairs of the ``result`` statements in a text document."""
    pf = parse_problem(text, allow_reserved=True)
    return [c.args for c in pf.commands if c.name == "result"]


def render(doc: ResultDocument, fmt: str = "text") -> str:
    return render_machine(doc) if fmt == "machine" else render_text(doc)


def render_problem(pf: ProblemFile) -> str:
    """Text of a problem file; parsing it back yields an identical problem."""
    lines = [show_sig(pf.sig)]
    if pf.atomvars:
        lines.append(f"atomvars: {' '.join(sorted(pf.atomvars))};")
    if pf.termvars:
        lines.append(f"termvars: {' '.join(sorted(pf.termvars))};")
    if pf.fresh:
        lines.append(f"fresh: {show_context(pf.fresh)[1:-1]};")
    for c in pf.commands:
        if c.name in ("generalize", "unique"):
            lines.append(f"{c.name} {show_term(c.args[0])} =?= {show_term(c.args[1])};")
        elif c.name == "check":
            lines.append(f"check {show_term(c.args[0])} ~ {show_term(c.args[1])};")
        elif c.name == "checkfresh":
            lines.append(f"checkfresh {show_constraint(c.args[0])};")
        elif c.name == "equiv":
            lines.append("equiv " + ", ".join(f"{show_term(l)} <~ {show_term(r)}" for l, r in c.args) + ";")
        elif c.name == "subsumes":
            a, b = c.args
            lines.append(
                f"subsumes ( {show_context(a.context)[1:-1]} | {show_term(a.term)} ) <= "
                f"( {show_context(b.context)[1:-1]} | {show_term(b.term)} );"
            )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nomau", description="Nominal anti-unification modulo A, C and AC.")
    p.add_argument("problem", help="problem file (.naup), or - for standard input")
    p.add_argument("--theory-override", action="append", default=[], metavar="NAME=THEORY",
                   help="change a symbol's theory (A, C, AC, or empty/0 for free)")
    p.add_argument("--minimize", action="store_true", help="keep only the most specific generalizations")
    p.add_argument("--post-process", action="store_true", help="strengthen result contexts toward lggs")
    p.add_argument("--max-states", type=int, default=10_000, help="state budget for the search (default 10000)")
    p.add_argument("--pool-size", type=int, default=4, help="atom pool size for --verify")
    p.add_argument("--oracle-depth", type=int, default=2, help="ground term depth for --verify")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for post-processing")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.add_argument("--all-mappings", action="store_true", help="report every equivariance mapping")
    p.add_argument("--verify", action="store_true", help="re-check results by reversal and a bounded semantic oracle")
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(parse_override(o) for o in args.theory_override)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    opts = Options(
        minimize=args.minimize,
        post_process=args.post_process,
        max_states=args.max_states,
        pool_size=args.pool_size,
        oracle_depth=args.oracle_depth,
        jobs=args.jobs,
        all_mappings=args.all_mappings,
        verify=args.verify,
        theory_override=overrides,
    )
    try:
        if args.problem == "-":
            text = sys.stdin.read()
        else:
            with open(args.problem, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        pf = parse_problem(text)
        doc = run_problem(pf, opts)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ShapeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    sys.stdout.write(render(doc, args.format))
    return doc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
