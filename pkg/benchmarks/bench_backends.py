"""Time the numba and pure-numpy backends on the same runs and compare their output.

Usage: python3 benchmarks/bench_backends.py [n ...]   (default: 64 128)
"""

import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

WORKER = r"""
import json, sys, time
import numpy as np
from layerlab import _accel
from layerlab.analysis import build_profiles
from layerlab.interval import solve_full
from layerlab.model import ModelParams

n = int(sys.argv[1])
p = ModelParams(epsilon=(8.0 / n) ** 2, T=float(sys.argv[3]))
warm = ModelParams(epsilon=p.epsilon, T=1e-4)
wp = build_profiles(warm, 16)  # compile outside the clock
solve_full(warm, wp.data, wp.stepper)
t0 = time.perf_counter()
ps = build_profiles(p, n)
t1 = time.perf_counter()
tr = solve_full(p, ps.data, ps.stepper)
t2 = time.perf_counter()
np.savez(sys.argv[2], u=tr.u, v=tr.v, ov=ps.outer.v, lv0=ps.left.v0)
print(json.dumps({"backend": _accel.BACKEND, "steps": ps.stepper.n_steps, "profiles_s": t1 - t0, "full_s": t2 - t1}))
"""


def run(backend, n, path, T):
    env = dict(os.environ, LAYERLAB_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", WORKER, str(n), str(path), str(T)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1]), np.load(path)


def main(argv):
    sizes = [int(a) for a in argv] or [64, 128]
    T = 0.05
    print(f"{'n':>6} {'steps':>8} {'backend':>8} {'profiles s':>11} {'full s':>9} {'vs numba':>8} {'max rel diff':>13}")
    with tempfile.TemporaryDirectory() as tmp:
        for n in sizes:
            res = {}
            for b in ("numba", "numpy"):
                res[b] = run(b, n, Path(tmp) / f"{b}{n}.npz", T)
            diff = max(np.abs(res["numba"][1][k] - res["numpy"][1][k]).max() / max(np.abs(res["numba"][1][k]).max(), 1e-300)
                       for k in ("u", "v", "ov", "lv0"))
            base = res["numba"][0]["profiles_s"] + res["numba"][0]["full_s"]
            for b in ("numba", "numpy"):
                info = res[b][0]
                tot = info["profiles_s"] + info["full_s"]
                print(f"{n:>6} {info['steps']:>8} {b:>8} {info['profiles_s']:>11.3f} {info['full_s']:>9.3f} "
                      f"{tot / base:>8.1f} {diff:>13.2e}")


if __name__ == "__main__":
    main(sys.argv[1:])
