"""Self-Cauchy differences and ledger aggregates along h -> h/2 for every well and tau.

Writes one CSV row per (well, tau, level).
"""
import argparse
import csv
import os
from dataclasses import replace

from fracch.cli import boundedness, sweep_h
from fracch.config import load_config

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=os.path.join(HERE, "configs", "resolved.cfg"))
    p.add_argument("--out", default="h_sweep.csv")
    args = p.parse_args()
    base = load_config(args.config)
    rows = []
    for kind in ("regular", "logarithmic", "double_obstacle"):
        for tau in (0.0, 1.0):
            cfg = replace(base, potential_kind=kind, tau=tau)
            trajs, E, aggs = sweep_h(cfg)
            table, ok = boundedness(aggs, cfg.ledger_tol)
            worst = max(table, key=lambda k: table[k]["variation"])
            print(f"{kind:16s} tau={tau:g}  E_h={['%.3e' % e for e in E]}  "
                  f"worst {worst}={table[worst]['variation']:.3f}  bounded={ok}")
            for lvl, (tr, e, agg) in enumerate(zip(trajs, E, aggs)):
                rows.append({"well": kind, "tau": tau, "level": lvl, "N": tr.config.N, "E_h": e, **agg})
    keys = list(rows[0])
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, keys, lineterminator="\n")
        w.writeheader()
        w.writerows({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()} for r in rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
