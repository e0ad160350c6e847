"""Per-step cost of the compiled and pure-Python closed-loop kernels.

    python benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mgaps import kernels
from mgaps import quad_env as qe
from mgaps import reference as rf
from mgaps.expert import quad_expert
from mgaps.optimizers import Mgaps, MgapsConfig, StepDerivs
from mgaps.plant import QuadPlant


def time_backend(name: str, steps: int, repeat: int, learn: bool) -> float:
    env = qe.EnvConfig()
    table = rf.sample_grid(rf.Figure8Diagonal(ramp=2.0), steps, env.dt)
    best = np.inf
    for _ in range(repeat):
        plant = QuadPlant(env, table, backend=name)
        opt = Mgaps(quad_expert(), plant.n, MgapsConfig(eta=0.0))
        d = StepDerivs.zeros(plant.n, plant.m, plant.d) if learn else None
        x = plant.initial_state()
        t0 = time.perf_counter()
        for k in range(steps):
            x, _, c = plant.step(k, x, opt.current(), d)
            if learn:
                opt.observe(c, d)
        best = min(best, time.perf_counter() - t0)
    return best / steps


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    print(f"{'backend':<8} {'mode':<14} {'us/step':>10} {'sim s per wall s':>17}")
    rows = {}
    for learn in (False, True):
        mode = "with M-GAPS" if learn else "rollout only"
        for name in kernels.available():
            per = time_backend(name, args.steps, args.repeat, learn)
            rows[name, learn] = per
            print(f"{name:<8} {mode:<14} {per * 1e6:>10.1f} {qe.EnvConfig().dt / per:>17.1f}")
    if "cython" in kernels.available():
        for learn in (False, True):
            print(f"speedup ({'with M-GAPS' if learn else 'rollout only'}): "
                  f"{rows['python', learn] / rows['cython', learn]:.1f}x")


if __name__ == "__main__":
    main()
