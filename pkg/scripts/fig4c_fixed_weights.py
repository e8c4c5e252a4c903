"""Greedy play with a frozen MountainCar readout (no updates).

The training seed must match the run that produced the weights, since it fixes the mask.

    python scripts/fig4c_fixed_weights.py results/fig4a/mountaincar_b0.85_k0.9_seed0_best_weights.txt \\
        --seed 0 --bias 0.85 --eval-seeds 0 1 2
"""

import argparse
from pathlib import Path

from photonic_rl.harness import ExperimentConfig, evaluate_fixed, export_csv, load_weights


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("weights")
    ap.add_argument("--seed", type=int, default=0, help="training seed (mask)")
    ap.add_argument("--bias", type=float, default=0.85)
    ap.add_argument("--kappa", type=float, default=0.9)
    ap.add_argument("--episodes", type=int, default=300)
    ap.add_argument("--eval-seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out-dir", default="results/fig4c")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    weights = load_weights(args.weights)
    cfg = ExperimentConfig(task="mountaincar", seed=args.seed, bias=args.bias, kappa=args.kappa)
    for e in args.eval_seeds:
        log = evaluate_fixed(weights, cfg, args.episodes, eval_seed=e)
        export_csv(log, out / f"eval_seed{e}.csv")
        print(f"eval seed {e}: mean={log.totals.mean():.1f} "
              f"max_avg100={log.max_moving_avg():.1f}", flush=True)


if __name__ == "__main__":
    main()
