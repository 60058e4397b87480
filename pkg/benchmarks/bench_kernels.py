"""Time the hot kernels with numba and with the numpy fallback.

The backend is chosen when ``minvset`` is imported, so each one runs in its own
interpreter.  Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 20000]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from minvset._accel import BACKEND
from minvset._kernels import KeySet, build_grid, nearest_distances, roots_batch

size, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
cubics = rng.normal(size=(size, 4)) + 1j * rng.normal(size=(size, 4))
quintics = rng.normal(size=(size // 4, 6)) + 1j * rng.normal(size=(size // 4, 6))
cloud = rng.random(size) + 1j * rng.random(size)
probe = rng.random(size) + 1j * rng.random(size)
keys = rng.integers(0, size, 4 * size)

def roots3():
    roots_batch(cubics)

def roots5():
    roots_batch(quintics)

def nearest():
    nearest_distances(probe, build_grid(cloud))

def keyset():
    KeySet().insert(keys)

out = {"backend": BACKEND}
for name, fn in [("roots_deg3", roots3), ("roots_deg5", roots5),
                 ("nearest", nearest), ("keyset", keyset)]:
    fn()  # compile / warm caches
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps(out))
"""


def run(disable_jit: bool, size: int, repeat: int) -> dict:
    env = dict(os.environ)
    env["MINVSET_DISABLE_JIT"] = "1" if disable_jit else "0"
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(size), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    t0 = time.perf_counter()
    jit = run(False, args.size, args.repeat)
    ref = run(True, args.size, args.repeat)
    print(f"{'kernel':<12}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name in ("roots_deg3", "roots_deg5", "nearest", "keyset"):
        a, b = jit[name], ref[name]
        print(f"{name:<12}{a:>12.4f}{b:>12.4f}{b / a:>9.1f}x")
    print(f"backends: {jit['backend']} vs {ref['backend']}; total {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
