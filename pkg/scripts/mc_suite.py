"""Monte Carlo check of the three concentration steps across seeds."""

import argparse

import numpy as np

from qkd_mismatch.mc import verify_inflation, verify_serfling, verify_thinning


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10**5)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--eps-sq", type=float, default=0.01)
    args = ap.parse_args()

    pattern = np.zeros(1000, dtype=np.int8)
    pattern[:300] = 1
    failed = 0
    for seed in range(args.seeds):
        for rep in (
            verify_serfling(1000, 500, pattern, args.trials, args.eps_sq, seed),
            verify_thinning(1000, 0.1, 0.1, args.trials, args.eps_sq, seed),
            verify_inflation(1000, 0.05, 0.1, 0.1, args.trials, args.eps_sq, seed),
        ):
            print(f"seed {seed} {rep.name:<10} {rep.summary()}")
            failed += not rep.passed
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
