"""Finite-order Stieltjes and complete-monotonicity checks of the solved diagonal.

For each coupling the solved G(a, a) goes through widder_check and cm_check;
the pure power law (1 + 2x)^-(1 + lambda) is checked alongside, since a
diagonal with that asymptotics cannot be Stieltjes for lambda > 0.  Verdicts
are finite-order evidence only.

    python scripts/widder_probe.py --lams 0,0.05,0.1,0.3
"""

import argparse
import json
from dataclasses import dataclass

import numpy as np

from ncphi4.boundary import ModelParams, solve
from ncphi4.positivity import cm_check, widder_check
from ncphi4.two_point import TwoPointEvaluator, g_diag


@dataclass
class WidderProbeConfig:
    lam: float
    n_max: int = 4
    cm_order: int = 6
    x_max: float = 50.0
    degree: int = 64


def probe(cfg):
    ev = TwoPointEvaluator.from_solution(solve(ModelParams(cfg.lam)))
    solved = lambda x: g_diag(ev, np.asarray(x))  # noqa: E731
    power = lambda x: (1 + 2 * np.asarray(x)) ** -(1 + cfg.lam)  # noqa: E731
    out = {"lam": cfg.lam}
    for name, f in (("solved", solved), ("power_law", power)):
        w = widder_check(f, n_max=cfg.n_max, x_max=cfg.x_max, degree=cfg.degree)
        c = cm_check(f, n_max=cfg.cm_order, x_max=cfg.x_max, degree=cfg.degree)
        out[name] = {"widder": w.verdicts, "first_failure": w.first_failure, "cm": c.verdicts}
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lams", default="0,0.05,0.1,0.3")
    args = ap.parse_args(argv)
    print(json.dumps([probe(WidderProbeConfig(float(v))) for v in args.lams.split(",")], indent=2))


if __name__ == "__main__":
    main()
