"""List the least general generalizations of two nested commutative terms.

Runs the engine on the problem in problems/two_c_lggs.naup, minimizes the
result set and reports, for every survivor, whether it generalizes both
inputs and whether any other survivor is strictly more specific.

Usage: python3 scripts/two_c_lggs.py [problem-file]
"""

import argparse
import itertools
from pathlib import Path

from nomau.enau import run_enau
from nomau.minimize import minimize_set, tic_subset
from nomau.syntax import parse_problem, show_term
from nomau.terms import TermInContext

DEFAULT = Path(__file__).resolve().parent.parent / "problems" / "two_c_lggs.naup"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem", nargs="?", default=str(DEFAULT))
    args = ap.parse_args()
    pf = parse_problem(Path(args.problem).read_text())
    cmd = next(c for c in pf.commands if c.name == "generalize")
    s, t = cmd.args[:2]
    out = run_enau(pf.fresh, s, t)
    kept = minimize_set(out.results)
    print(f"states {out.states}, raw results {len(out.results)}, survivors {len(kept)}")
    inputs = [TermInContext(pf.fresh, s), TermInContext(pf.fresh, t)]
    for i, r in enumerate(kept):
        tc = r.term_in_context
        both = all(tic_subset(x, tc) for x in inputs)
        print(f"  [{i}] {show_term(r.term)}  generalizes both: {both}")
    below = [(i, j) for i, j in itertools.permutations(range(len(kept)), 2)
             if tic_subset(kept[i].term_in_context, kept[j].term_in_context)]
    print("comparable pairs:", below or "none")


if __name__ == "__main__":
    main()
