"""Time the unique-lgg shortcuts on growing inputs and fit a power law.

Usage: python3 scripts/unique_lgg_scaling.py [--sizes 64 128 256 512 1000]
"""

import argparse
import math
import statistics
import time

from nomau.minimize import unique_lgg_a, unique_lgg_ac, unique_lgg_c
from nomau.terms import App, FunSymbol, Theory

FAC = FunSymbol("f", 2, Theory.AC)
FC = FunSymbol("fc", 2, Theory.C)
FA = FunSymbol("fa", 2, Theory.A)


def consts(stem, n):
    return [App(FunSymbol(f"{stem}{i}", 0)) for i in range(n)]


def balanced(sym, leaves):
    if len(leaves) == 1:
        return leaves[0]
    h = len(leaves) // 2
    return App(sym, (balanced(sym, leaves[:h]), balanced(sym, leaves[h:])))


def instance(kind, n):
    k = n // 2
    if kind == "AC":
        p, q, r = consts("p", k), consts("q", n - k), consts("r", n - k)
        return App(FAC, tuple(p + q)), App(FAC, tuple(r + p))
    if kind == "C":
        p, q, r = consts("p", n), consts("q", n), consts("r", n)
        s = [p[i] if i % 2 else q[i] for i in range(n)]
        t = [p[i] if i % 2 else r[i] for i in range(n)]
        return balanced(FC, s), balanced(FC, t)
    p, q, r = consts("p", k), consts("q", n - k), consts("r", n - k - 1)
    half = k // 2
    return App(FA, tuple(p[:half] + q + p[half:])), App(FA, tuple(p[:half] + r + p[half:]))


def best_time(fn, s, t, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(s, t)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512, 1000])
    args = ap.parse_args()
    for kind, fn in (("AC", unique_lgg_ac), ("C", unique_lgg_c), ("A", unique_lgg_a)):
        times = []
        for n in args.sizes:
            s, t = instance(kind, n)
            times.append(best_time(fn, s, t))
            print(f"{kind:>2} n={n:<5} {times[-1] * 1000:9.2f} ms")
        fit = statistics.linear_regression([math.log(n) for n in args.sizes], [math.log(x) for x in times])
        print(f"{kind:>2} fitted exponent {fit.slope:.2f}\n")


if __name__ == "__main__":
    main()
