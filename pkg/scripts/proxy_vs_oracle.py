"""Spearman correlation between the convexity proxy and the finite-difference
last-layer Hessian norm, repeated over seeds.

    python3 scripts/proxy_vs_oracle.py --seeds 0 1 2 --n 20
"""
import argparse
import json
import subprocess
import sys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--synthetic", default="blobs:m=100,k=3,dim=4,sep=2,seed=0")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--col-norm", action="store_true")
    args = ap.parse_args()

    for seed in args.seeds:
        cmd = [sys.executable, "-m", "ahsc", "oracle-validate", "--synthetic", args.synthetic,
               "--n", str(args.n), "--seed", str(seed)]
        if args.col_norm:
            cmd.append("--col-norm")
        out = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
        tail = json.loads(out.splitlines()[-1])
        print(f"seed {seed}: n={tail['n']} spearman={tail['spearman']:.3f}")


if __name__ == "__main__":
    main()
