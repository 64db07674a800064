"""Median infidelity of the perturbed coherent protocol against the perturbation strength.

Each step's basis unitary is multiplied by exp(-i eps H) with H random of unit
norm.  Prints the median over seeds and the log-log slope per register size.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from splitpump import protocol, qmath


@dataclass(frozen=True)
class ScalingConfig:
    sizes: tuple[int, ...] = (2, 3, 4)
    epsilons: tuple[float, ...] = (1e-4, 1e-3, 1e-2)
    seeds: int = 50


def median_infidelity(n: int, eps: float, seeds: int) -> float:
    vals = []
    for s in range(seeds):
        psi = qmath.random_ket(n, [n, s, 0])
        rho = qmath.random_density(n, [n, s, 1])
        vals.append(1 - protocol.perturbed_stabilize(psi, rho, eps, seed=[n, s, 2]).final_fidelity)
    return float(np.median(vals))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--epsilons", type=float, nargs="+", default=[1e-4, 1e-3, 1e-2])
    ap.add_argument("--seeds", type=int, default=50)
    a = ap.parse_args()
    cfg = ScalingConfig(tuple(a.sizes), tuple(a.epsilons), a.seeds)
    for n in cfg.sizes:
        meds = [median_infidelity(n, eps, cfg.seeds) for eps in cfg.epsilons]
        slope = np.polyfit(np.log(cfg.epsilons), np.log(meds), 1)[0]
        cells = "  ".join(f"eps={e:.0e}: {m:.3e} (bound {10 * n * e:.0e})" for e, m in zip(cfg.epsilons, meds))
        print(f"N={n}  {cells}  slope={slope:.3f}")


if __name__ == "__main__":
    main()
