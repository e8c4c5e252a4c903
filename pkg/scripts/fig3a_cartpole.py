"""CartPole learning curves with and without input bias.

    python scripts/fig3a_cartpole.py --seeds 0 1 2 --out-dir results/fig3a
"""

import argparse
from dataclasses import replace
from pathlib import Path

from photonic_rl.harness import ExperimentConfig, export_csv, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=500)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--biases", type=float, nargs="+", default=[0.8, 0.0])
    ap.add_argument("--out-dir", default="results/fig3a")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = ExperimentConfig(task="cartpole", episodes=args.episodes)
    for b in args.biases:
        for seed in args.seeds:
            log = train(replace(base, bias=b, seed=seed))
            export_csv(log, out / f"cartpole_b{b:g}_seed{seed}.csv")
            print(f"b={b:g} seed={seed} solved_at={log.solved_at} "
                  f"max_avg100={log.max_moving_avg():.1f}", flush=True)


if __name__ == "__main__":
    main()
