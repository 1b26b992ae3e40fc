"""Time the integrator kernels with and without numba.

Each backend runs in its own subprocess because the switch is read at
import time.  Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = {
    "integrate_momentum(C=0.5, t=20)": "integrate_momentum(initial_momentum(0.5), 20.0)",
    "geodesic_flow(C=3, t=10)": "geodesic_flow(PhaseState(Psl2Element.identity(), initial_momentum(3.0)), 10.0)",
    "t_geod_ode(C=-0.5)": "t_geod_ode(-0.5)",
    "rotation_number(C=3)": "rotation_number(3.0, math.e)",
}

SETUP = """
import math
from srgeodesics.euler import initial_momentum, integrate_momentum, t_geod_ode
from srgeodesics.phase_flow import PhaseState, geodesic_flow, rotation_number
from srgeodesics.sl2 import Psl2Element
"""


def child(repeat):
    import srgeodesics

    ns = {}
    exec(SETUP, ns)
    out = {"backend": srgeodesics.backend(), "times": {}}
    for name, stmt in WORKLOADS.items():
        code = compile(stmt, name, "eval")
        eval(code, ns)  # warm-up, includes JIT compilation
        best = float("inf")
        for _ in range(repeat):
            t = time.perf_counter()
            eval(code, ns)
            best = min(best, time.perf_counter() - t)
        out["times"][name] = best
    print(json.dumps(out))


def run_backend(disable, repeat):
    env = dict(os.environ, SRGEODESICS_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true")
    args = ap.parse_args()
    if args.child:
        child(args.repeat)
        return
    jit = run_backend(False, args.repeat)
    py = run_backend(True, args.repeat)
    print(f"{'workload':36s} {jit['backend']:>10s} {py['backend']:>10s} {'speedup':>9s}")
    for name in WORKLOADS:
        a, b = jit["times"][name], py["times"][name]
        print(f"{name:36s} {a:10.4f} {b:10.4f} {b / a:8.1f}x")


if __name__ == "__main__":
    main()
