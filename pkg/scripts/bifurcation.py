"""Free-running reservoir (u = 0, no noise): residual amplitude after a small kick vs kappa.

    python scripts/bifurcation.py --kappas 0.5 0.9 1.0 1.1 1.3 --periods 50
"""

import argparse
import math

import numpy as np

from photonic_rl.reservoir import Reservoir, ReservoirParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappas", type=float, nargs="+", default=[0.5, 0.9, 1.0, 1.1, 1.3, 1.5])
    ap.add_argument("--periods", type=int, default=50, help="duration in delay times")
    ap.add_argument("--kick", type=float, default=0.01)
    args = ap.parse_args()
    for kappa in args.kappas:
        p = ReservoirParams(noise_sigma=0.0, kappa=kappa)
        r = Reservoir(p)
        r.y = p.beta * math.cos(p.phi0) ** 2
        r.x = args.kick
        tail = r.free_run(args.periods * p.tau, p.dt)[-int(round(p.tau / p.dt)):]
        print(f"kappa={kappa:g} max|x|={np.abs(tail).max():.3e} "
              f"peak-to-peak={tail.max() - tail.min():.3e}")


if __name__ == "__main__":
    main()
