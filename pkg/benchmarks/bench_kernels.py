"""Time the numba kernels against their pure-numpy fallbacks.

Usage:  python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on inputs taken from a representative calculation
(square pulse, Omega/gamma = 1); the first numba call is excluded so JIT
compilation does not count.
"""

import argparse
import time

import numpy as np

from atomic_bs import _kernels, amplitude, moments
from atomic_bs.core import Grid1D, Pulse


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    pulse = Pulse.square(1.0)
    hier = moments.build_hierarchy(moments.TWO_PHOTON_TARGETS + moments.SINGLE_PHOTON_TARGETS)
    mats = hier.matrices(1.0)
    times = moments._time_grid(0.0, 17.0, 0.02, pulse.breakpoints)
    sa = moments.stage_samples(pulse, times)
    steps = np.diff(times)
    y0 = hier.initial_state()
    yield "rk4_linear", lambda b: _kernels.rk4_linear(*mats, sa, sa, steps, y0, 1, backend=b)

    n = 20000
    decay = np.exp(-np.full(n, 1e-3))
    incr = np.full(n, 1e-3 + 0j)
    yield "exp_recursion", lambda b: _kernels.exp_recursion(decay, incr, backend=b)

    axis = Grid1D.cells(-1.0, 14.0, 512)
    resp = amplitude.atom_response(pulse, axis)
    tau, xi, ca = resp.tau, resp.xi, resp.linear
    yield "coincidence_grid", lambda b: _kernels.coincidence_grid(
        tau, xi, ca, tau, xi, ca, np.inf, 1.0, backend=b)

    axis = Grid1D.cells(-0.5, 8.0, 128)
    yield "jump_propagate", lambda b: amplitude.jump_ode_oracle(pulse, axis, backend=b)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}")
    for name, fn in cases():
        fn("numba")  # compile
        fast = _best(lambda: fn("numba"), args.repeat)
        slow = _best(lambda: fn("numpy"), args.repeat)
        print(f"{name:<18}{fast:>12.4g}{slow:>12.4g}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
