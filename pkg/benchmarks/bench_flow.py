"""Compare the compiled and pure-Python integration kernels.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``HZC_NUMBA``.  Usage: ``python benchmarks/bench_flow.py [--steps N]``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from hzc import _kernels
from hzc.corpus import load
from hzc.flow import SolverConfig, integrate
from hzc.interp import global_values

steps = int(sys.argv[1])
prog = load("bouncing_ball")
h = prog.main
d = dict(zip(h.binder, h.deriv_items))
g = global_values(prog).current()
cfg = SolverConfig(h=1e-3, t_max=steps * 1e-3)
integrate(d, (1e6, 0.0), [], g, SolverConfig(h=1e-3, t_max=0.01))  # warm-up / compile
best = float("inf")
for _ in range(3):
    t0 = time.perf_counter()
    res = integrate(d, (1e6, 0.0), list(h.guards), g, cfg)
    best = min(best, time.perf_counter() - t0)
print(json.dumps({"numba": _kernels.USE_NUMBA, "steps": res.stats.steps, "seconds": best,
                  "final": [float(v) for v in res.states[-1]]}))
"""


def measure(flag: str, steps: int) -> dict:
    env = dict(os.environ, HZC_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", CHILD, str(steps)], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200_000)
    args = ap.parse_args(argv)
    pure = measure("0", args.steps)
    fast = measure("1", args.steps)
    same = pure["final"] == fast["final"]
    print(f"steps per run        : {fast['steps']}")
    print(f"pure python kernels  : {pure['seconds']:.3f} s")
    print(f"numba kernels        : {fast['seconds']:.3f} s (numba active: {fast['numba']})")
    print(f"speed-up             : {pure['seconds'] / fast['seconds']:.1f}x")
    print(f"identical end state  : {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
