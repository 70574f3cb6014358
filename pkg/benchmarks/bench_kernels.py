"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the counts-only dynamics (a seed sweep of the 70/20/10 scenario),
a reward-curve sweep, and one full-protocol run for scale.
"""

import argparse
import random
import time
from fractions import Fraction

from clientdiv import _kernels_py
from clientdiv.sim import Simulation, _initial_layout, scenario_70_20_10

try:
    from clientdiv import _kernels as _compiled
except ImportError:
    _compiled = None


def dynamics_args(seed, max_blocks):
    cfg = scenario_70_20_10(seed=seed, max_blocks=max_blocks)
    ids, assignment, order, strategies = _initial_layout(cfg)
    index = {impl: k for k, impl in enumerate(ids)}
    n = cfg.n_validators
    p = cfg.params
    return ([index[i] for i in assignment], order, [True] * n, [0] * n, len(ids),
            p.epsilon, p.r_min, p.r_max, n, cfg.effective_treasury, max_blocks, 1)


def bench(label, fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    print(f"  {label:<10s} {best * 1e3:10.2f} ms")
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--blocks", type=int, default=2000)
    args = ap.parse_args()

    impls = [("python", _kernels_py)]
    if _compiled is not None:
        impls.append(("cython", _compiled))
    else:
        print("compiled extension not built; timing the Python kernels only")

    sweep = [dynamics_args(s, args.blocks) for s in range(args.seeds)]
    print(f"run_dynamics: {args.seeds} seeds x {args.blocks} blocks x 20 validators")
    times = {name: bench(name, lambda m=mod: [m.run_dynamics(*a) for a in sweep], args.repeat)
             for name, mod in impls}
    if len(times) == 2:
        assert [_compiled.run_dynamics(*a) for a in sweep[:3]] == \
            [_kernels_py.run_dynamics(*a) for a in sweep[:3]]
        print(f"  speedup    {times['python'] / times['cython']:10.1f}x")

    rng = random.Random(0)
    shares = [Fraction(rng.randint(0, 999), 999) for _ in range(200_000)]
    pairs = [(s.numerator, s.denominator) for s in shares]
    print(f"reward_units: {len(pairs)} evaluations")
    times = {name: bench(name, lambda m=mod: [m.reward_units(a, b, 3, 1, 2, 10) for a, b in pairs],
                         args.repeat)
             for name, mod in impls}
    if len(times) == 2:
        print(f"  speedup    {times['python'] / times['cython']:10.1f}x")

    print("full protocol (attested proofs), 200 blocks x 20 validators")
    bench("simulation", lambda: Simulation(scenario_70_20_10(max_blocks=200)).run(), 1)


if __name__ == "__main__":
    main()
