"""Time the compiled and numpy fine-step kernels on the same bins.

    python benchmarks/bench_kernels.py [--steps 20000] [--repeat 3]

Prints steps per second for each backend and the largest state difference
between them.
"""

import argparse
import time

import numpy as np

from qtraj import kernels
from qtraj.presets import EXAMPLE_IDS, example_setup
from qtraj.records import RngStream
from qtraj.trajectory import FineStepper


def time_backend(mod, stepper, psi, xi, repeat):
    args = (psi, stepper.c, stepper.a0, stepper.a1, stepper.a2, xi, stepper.dt, 1e-30)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = mod.evolve_fine_bin(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    backends = kernels.backends()
    print(f"default backend: {kernels.BACKEND}")
    header = f"{'example':<20}{'dim':>4}" + "".join(f"{name + ' steps/s':>20}" for name in backends)
    print(header + f"{'speedup':>10}{'max |dpsi|':>14}")
    for ex in EXAMPLE_IDS:
        setup = example_setup(ex)
        stepper = FineStepper(setup, 1e-4)
        xi = RngStream(0, 0).normal(args.steps)
        psi = np.ascontiguousarray(setup.initial_state, dtype=np.complex128)
        times, states = {}, {}
        for name, mod in backends.items():
            times[name], (states[name], _, _) = time_backend(mod, stepper, psi, xi, args.repeat)
        rates = "".join(f"{args.steps / times[n]:>20.3e}" for n in backends)
        if len(backends) > 1:
            speedup = times["python"] / times["cython"]
            diff = float(np.max(np.abs(states["python"] - states["cython"])))
            tail = f"{speedup:>10.1f}{diff:>14.2e}"
        else:
            tail = f"{'n/a':>10}{'n/a':>14}"
        print(f"{ex:<20}{setup.dim:>4}{rates}{tail}")


if __name__ == "__main__":
    main()
