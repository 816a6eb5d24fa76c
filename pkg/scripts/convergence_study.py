"""Grid and cutoff convergence of the boundary solution.

For one coupling, solves on a ladder of node counts and cutoffs and reports
the sup-norm distance on [0, a_max] to the finest run.

    python scripts/convergence_study.py --lam 0.1 --out convergence.csv
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from ncphi4.boundary import ModelParams, SolverConfig, solve


@dataclass
class StudyConfig:
    lam: float = 0.1
    a_max: float = 100.0
    nodes: tuple = (500, 1000, 2000, 4000)
    cutoffs: tuple = (1e3, 1e4, 4e4, 1e5)
    base_cutoff: float = 1e4
    base_nodes: int = 2000
    probe: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 100.0, 2001))


def run_ladder(cfg):
    rows = []
    a = cfg.probe[cfg.probe <= cfg.a_max]
    runs = {}
    for n in cfg.nodes:
        t0 = time.perf_counter()
        sol = solve(ModelParams(cfg.lam, cfg.base_cutoff), SolverConfig(n_nodes=n))
        runs[("nodes", n)] = (sol(a), sol.iterations, time.perf_counter() - t0)
    for lam2 in cfg.cutoffs:
        t0 = time.perf_counter()
        sol = solve(ModelParams(cfg.lam, lam2), SolverConfig(n_nodes=cfg.base_nodes))
        runs[("cutoff", lam2)] = (sol(a), sol.iterations, time.perf_counter() - t0)
    ref_n = runs[("nodes", max(cfg.nodes))][0]
    ref_c = runs[("cutoff", max(cfg.cutoffs))][0]
    for (kind, value), (vals, its, secs) in runs.items():
        ref = ref_n if kind == "nodes" else ref_c
        rows.append((kind, value, float(np.max(np.abs(vals - ref))), its, round(secs, 3)))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=0.1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)
    rows = run_ladder(StudyConfig(lam=args.lam))
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["ladder", "value", "sup_diff_to_finest", "iterations", "seconds"])
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
