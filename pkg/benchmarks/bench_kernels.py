"""Time MCMC sweeps with the numba kernels against the pure-Python fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by MULTISRM_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--nodes 30] [--sweeps 20]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from multisrm import BACKEND
from multisrm.engine import init_state, step_chain
from multisrm.model import ChainSettings, ModelConfig, build_model
from multisrm.simulate import TrueParameters, simulate_dataset

n_nodes, sweeps = int(sys.argv[1]), int(sys.argv[2])
out = {"backend": BACKEND}
for fam in ("binary", "count", "continuous"):
    p = TrueParameters.from_variances(
        fam, (0.2, 0.4), 0.4, 0.3, 0.3, dyad_var=1.0 if fam == "binary" else 0.5,
        dyad_corr=0.5, n_nodes=n_nodes, n_groups=2, group_var=0.2,
        offset_range=(-0.3, 0.3) if fam == "count" else None)
    ds = simulate_dataset(p, 0)
    cfg = ModelConfig(fam, ("cons", "x1"), True, "log_offset" if fam == "count" else None,
                      chains=ChainSettings(1, 1, 0, 10, 1))
    plan = build_model(cfg, ds)
    cs = init_state(plan, 0)
    step_chain(cs, plan, adapt_gain=0.1)  # compiles on the numba path
    t0 = time.perf_counter()
    for _ in range(sweeps):
        step_chain(cs, plan)
    out[fam] = (time.perf_counter() - t0) / sweeps
    out[fam + "_rows"] = ds.n_rows
print(json.dumps(out))
"""


def run(flag, nodes, sweeps):
    env = dict(os.environ, MULTISRM_DISABLE_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", WORKER, str(nodes), str(sweeps)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=30, help="nodes per group (two groups)")
    ap.add_argument("--sweeps", type=int, default=20)
    args = ap.parse_args()
    fast, slow = run("0", args.nodes, args.sweeps), run("1", args.nodes, args.sweeps)
    print(f"{'family':<12}{'rows':>7}{'numba ms':>12}{'python ms':>12}{'speedup':>10}")
    for fam in ("binary", "count", "continuous"):
        a, b = fast[fam] * 1e3, slow[fam] * 1e3
        print(f"{fam:<12}{fast[fam + '_rows']:>7}{a:>12.2f}{b:>12.2f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
