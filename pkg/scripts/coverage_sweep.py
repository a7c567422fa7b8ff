"""Empirical coverage of the screened set against the nominal confidence level."""

import argparse

from mole2d.oracle import TrialConfig, monte_carlo_coverage


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 0.8, 0.9, 0.99])
    ap.add_argument("--sigma-max", type=float, default=0.3)
    ap.add_argument("--basis", default="mcb")
    args = ap.parse_args()

    config = TrialConfig(sigma=(0.05, args.sigma_max))
    print("alpha  coverage  ci_low  ci_high  flagged")
    for alpha in args.alphas:
        r = monte_carlo_coverage(config, alpha, args.trials, args.seed, args.basis)
        print(f"{alpha:5.2f}  {r.fraction:8.3f}  {r.ci_low:6.3f}  {r.ci_high:7.3f}  {r.flagged:7d}")


if __name__ == "__main__":
    main()
