"""Time the compiled and pure-Python integration kernels on the same problems.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``

Each case evolves a driven atom-cavity density matrix with both backends,
checks that the trajectories agree, and reports wall time per accepted step.
"""
import argparse
import time

import numpy as np

from cavsim import cqed_full as F
from cavsim import params as P
from cavsim.integrate import AVAILABLE, evolve_linear
from cavsim.superop import vec


def case(n_max, n_in=1.0):
    p = P.table_set(1)
    d = P.resonant_drive(p, n_in)
    L = F.build_liouvillian(p, d, n_max)
    rho0 = F.basis_state(L)
    return L.matrix, vec(rho0), np.linspace(0.0, 20.0, 41)


def timed(gen, y0, t, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out, info = evolve_linear(gen, y0, t, rtol=1e-9, backend=backend, return_info=True)
        best = min(best, time.perf_counter() - t0)
    return out, info, best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nmax", type=int, nargs="*", default=[1, 4, 10, 20])
    args = ap.parse_args(argv)
    print(f"backends available: {', '.join(AVAILABLE)}")
    print(f"{'n_max':>5} {'dim':>6} {'steps':>6} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>10}")
    for n in args.nmax:
        gen, y0, t = case(n)
        ref, info, tp = timed(gen, y0, t, "python", args.repeat)
        if "cython" in AVAILABLE:
            out, _, tc = timed(gen, y0, t, "cython", args.repeat)
            diff = np.abs(out - ref).max()
            print(f"{n:>5} {gen.shape[0]:>6} {info['accepted']:>6} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f} {diff:>10.2e}")
        else:
            print(f"{n:>5} {gen.shape[0]:>6} {info['accepted']:>6} {tp:>10.4f} {'n/a':>10} {'n/a':>8} {'n/a':>10}")


if __name__ == "__main__":
    main()
