"""Time the hot kernels under both backends.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``NLSVAR_DISABLE_NUMBA``. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from nlsvar import _accel, presets
from nlsvar.dynamics import GaussianShocks, simulate
from nlsvar.jsr import jsr_bounds
from nlsvar.longrun import TransitoryConfig, transitory_direction_curve

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
# upper triangular: every product survives pruning, so the full tree is searched
mats = [0.5 * np.eye(4) + np.triu(rng.standard_normal((4, 4)), 1) for _ in range(3)]
model = presets.threshold_example()
cfg = TransitoryConfig([-1.0, -0.5], [-1.0, -0.25], [1.0, -1.0])

cases = {
    "simulate threshold, T=100000": lambda: simulate(model, np.zeros((1, 2)), GaussianShocks(np.eye(2), 1, 100_000)),
    "jsr bounds, 3 x 4x4, depth 9 (numpy in both)": lambda: jsr_bounds(mats, depth=9, precondition=False, node_budget=10**6),
    "transitory curve, 20 sizes": lambda: transitory_direction_curve(cfg, np.linspace(0, 10, 20)),
}
out = {"backend": _accel.backend(), "times": {}}
for name, fn in cases.items():
    fn()  # warm-up, includes compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(disable_numba: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("NLSVAR_DISABLE_NUMBA", None)
    if disable_numba:
        env["NLSVAR_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True)
    if res.returncode != 0:
        raise RuntimeError(res.stderr)
    return json.loads(res.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    width = max(len(k) for k in slow["times"])
    print(f"{'kernel':<{width}}  {slow['backend']:>10}  {fast['backend']:>10}  speedup")
    for name, t_slow in slow["times"].items():
        t_fast = fast["times"][name]
        print(f"{name:<{width}}  {t_slow:>9.4f}s  {t_fast:>9.4f}s  {t_slow / t_fast:6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
