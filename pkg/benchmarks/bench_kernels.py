"""Time the compiled and pure-numpy kernel backends on simulation-sized inputs.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Shapes match
one replicate of the default simulation: about 1,200 sampled rows, four
predictors and roughly 400 missing outcomes.
"""

import argparse
import timeit

import numpy as np

from mirs._kernels import backends


def _problem(seed=0, n=1200, p=4, n_missing=400, m=50):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
    y = (rng.random(n) < 1 / (1 + np.exp(-X @ rng.normal(scale=0.7, size=p)))).astype(float)
    w = rng.uniform(10, 50, n)
    penalty = np.zeros(p)
    Z = X[:n_missing]
    betas = rng.normal(scale=0.7, size=(m, p))
    U = rng.random((m, n_missing))
    return X, y, w, penalty, Z, betas, U, w[:n_missing]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200, help="calls per timing")
    args = parser.parse_args(argv)
    X, y, w, penalty, Z, betas, U, wz = _problem()
    b1, U1 = betas[:1], U[:1]
    cases = {
        "irls": lambda k: k.irls(X, y, w, penalty, 1e-8, 50),
        "draws m=1": lambda k: k.impute_draws(Z, b1, U1),
        "draws m=50": lambda k: k.impute_draws(Z, betas, U),
        "totals m=1": lambda k: k.impute_totals(Z, b1, U1, wz),
        "totals m=50": lambda k: k.impute_totals(Z, betas, U, wz),
    }
    impls = backends()
    if "cython" not in impls:
        print("compiled backend not built; timing the python backend only")
    print(f"{'kernel':<15}" + "".join(f"{name:>14}" for name in impls) + ("     speedup" if len(impls) > 1 else ""))
    for label, call in cases.items():
        per_call = {}
        for name, mod in impls.items():
            call(mod)  # warm up
            per_call[name] = min(timeit.repeat(lambda: call(mod), number=args.repeat, repeat=3)) / args.repeat
        row = f"{label:<15}" + "".join(f"{per_call[n] * 1e6:>11.1f} us" for n in impls)
        if len(impls) > 1:
            row += f"{per_call['python'] / per_call['cython']:>11.2f}x"
        print(row)


if __name__ == "__main__":
    main()
