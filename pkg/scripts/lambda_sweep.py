"""Obstacle overshoot beyond [-1, 1] as lambda halves, at fixed h."""
import argparse
import os
from dataclasses import replace

import numpy as np

from fracch.cli import _scheme
from fracch.config import load_config
from fracch.diagnostics import overshoot

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=os.path.join(HERE, "configs", "phase_separation.cfg"))
    p.add_argument("--levels", type=int, default=5)
    args = p.parse_args()
    cfg = load_config(args.config)
    prev = None
    print("lambda,overshoot,overshoot/lambda")
    for k in range(args.levels):
        lam = 0.1 / 2 ** k
        sc = _scheme(replace(cfg, lam=lam))
        tr = sc.run(cfg.initial_values(sc.b))
        o = overshoot(tr)
        print(f"{lam!r},{o!r},{o / lam!r}")
        if prev is not None and not o < prev:
            print("# overshoot did not decrease")
        prev = o
    print(f"# final |y| range: {np.abs(tr.Y[-1]).min():.3f} .. {np.abs(tr.Y[-1]).max():.3f}")


if __name__ == "__main__":
    main()
