"""MountainCar learning curve; also saves the readout at the best 100-episode average.

    python scripts/fig4a_mountaincar.py --seed 0 --bias 0.85 --out-dir results/fig4a
"""

import argparse
from pathlib import Path

from photonic_rl.harness import ExperimentConfig, export_csv, save_weights, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bias", type=float, default=0.85)
    ap.add_argument("--kappa", type=float, default=0.9)
    ap.add_argument("--out-dir", default="results/fig4a")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(task="mountaincar", episodes=args.episodes, seed=args.seed,
                           bias=args.bias, kappa=args.kappa)

    def progress(rec):
        if rec.episode % 100 == 0:
            print(f"episode {rec.episode}: avg100={rec.moving_avg_100:.1f}", flush=True)

    log = train(cfg, progress)
    stem = f"mountaincar_b{args.bias:g}_k{args.kappa:g}_seed{args.seed}"
    export_csv(log, out / f"{stem}.csv")
    save_weights(log.best_weights, out / f"{stem}_best_weights.txt")
    print(f"solved_at={log.solved_at} max_avg100={log.max_moving_avg():.1f} "
          f"best weights from episode {log.best_episode}")


if __name__ == "__main__":
    main()
