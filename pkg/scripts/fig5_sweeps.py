"""MountainCar parameter sweeps: input bias (kappa fixed) or feedback strength (bias fixed).

    python scripts/fig5_sweeps.py bias --values 0.2 0.5 0.7 0.85 1.0 --kappa 0.9
    python scripts/fig5_sweeps.py kappa --values 0 0.5 0.9 1.2 1.5 --bias 0.9
"""

import argparse
from pathlib import Path

from photonic_rl.harness import ExperimentConfig, export_sweep, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("param", choices=["bias", "kappa"])
    ap.add_argument("--values", type=float, nargs="+", required=True)
    ap.add_argument("--bias", type=float, default=0.85)
    ap.add_argument("--kappa", type=float, default=0.9)
    ap.add_argument("--episodes", type=int, default=1000)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results/fig5")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(task="mountaincar", episodes=args.episodes, seed=args.seed,
                           bias=args.bias, kappa=args.kappa)
    result = sweep(cfg, args.param, args.values, trials=args.trials, jobs=args.jobs)
    fixed = f"kappa{args.kappa:g}" if args.param == "bias" else f"b{args.bias:g}"
    export_sweep(result, out / f"sweep_{args.param}_{fixed}.csv")
    for value, mean, lo, hi in result.summary():
        print(f"{args.param}={value:g} mean={mean:.1f} min={lo:.1f} max={hi:.1f}")


if __name__ == "__main__":
    main()
