"""Continuous-dependence ratios for several perturbation sizes and time steps."""
import argparse
import os
from dataclasses import replace

from fracch.cli import contdep_table
from fracch.config import load_config

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=os.path.join(HERE, "configs", "resolved.cfg"))
    p.add_argument("--levels", type=int, default=3)
    args = p.parse_args()
    base = load_config(args.config)
    print("tau,N,eps,lhs,rhs,ratio,self_lhs")
    for tau in (0.0, 1.0):
        cfg = replace(base, tau=tau, levels=args.levels, contdep_eps=(1e-2, 1e-3, 1e-4))
        for r in contdep_table(cfg):
            print(f"{tau!r},{r['N']},{r['eps']!r},{r['lhs']!r},{r['rhs']!r},{r['ratio']!r},{r['self_lhs']!r}")


if __name__ == "__main__":
    main()
