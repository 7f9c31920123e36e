"""Compare the numba kernels with their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once untimed so JIT compilation is excluded, then the best of
``--repeat`` wall-clock runs is reported together with the max deviation
between the two backends.
"""
import argparse
import time

import numpy as np

from wcop import _kernels
from wcop._accel import NUMBA_AVAILABLE
from wcop.dynamics import ComponentwiseInverse, _compiled, census_grid
from wcop.series import PolyMap, addition_table
from wcop.spaces import DomainSpec


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    table = addition_table(2, 30)
    D = table.shape[0]
    a = rng.normal(size=D) + 1j * rng.normal(size=D)
    b = rng.normal(size=D) + 1j * rng.normal(size=D)
    yield ("conv  n=2 N=30", _kernels.conv_numba, _kernels.conv_numpy, (a, b, table))

    phi = PolyMap.from_terms(3, [
        {(1, 0, 0): 0.3, (0, 1, 1): 0.2, (2, 0, 0): -0.1j},
        {(0, 1, 0): 0.4, (1, 1, 0): 0.1},
        {(0, 0, 1): 0.5, (0, 0, 0): 0.05}])
    exps, coeffs = phi.compiled()
    pts = 0.5 * (rng.normal(size=(200_000, 3)) + 1j * rng.normal(size=(200_000, 3))) / 3
    yield ("map_eval  200k points", _kernels.map_eval_numba, _kernels.map_eval_numpy,
           (pts, _kernels.KIND_POLY, exps, coeffs))

    dom = DomainSpec("ball", 3)
    starts = census_grid(dom, 7)
    args = (starts, *_compiled(phi), dom.code, 0.0, 1e-12, 200, 40)
    yield (f"newton  ball n=3 ({len(starts)} starts)", _kernels.newton_batch_numba,
           _kernels.newton_batch_numpy, args)

    ann = DomainSpec("annulus_product", 3, 0.5)
    starts = census_grid(ann, 9)
    args = (starts, *_compiled(ComponentwiseInverse(3)), ann.code, 0.5, 1e-12, 200, 40)
    yield (f"newton  annulus n=3 ({len(starts)} starts)", _kernels.newton_batch_numba,
           _kernels.newton_batch_numpy, args)


def deviation(x, y):
    if isinstance(x, tuple):
        x, y = x[0], y[0]
    return float(np.max(np.abs(x - y)))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<38}{'numba':>11}{'numpy':>11}{'speedup':>9}{'max dev':>11}")
    for name, fast, slow, call_args in cases(rng):
        tf, of = best_of(lambda: fast(*call_args), args.repeat)
        ts, os_ = best_of(lambda: slow(*call_args), args.repeat)
        print(f"{name:<38}{tf * 1e3:>9.2f}ms{ts * 1e3:>9.2f}ms{ts / tf:>8.1f}x{deviation(of, os_):>11.1e}")


if __name__ == "__main__":
    main()
