"""Command-line driver: run, sweeps, continuous dependence and invariant checks.

Outputs are deterministic given the config and seed: CSV and JSON floats use
the shortest round-trip representation, JSON keys are sorted and no
timestamps are written.  Exit codes: 0 ok, 1 invariant failure, 2 config
error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import warnings
from dataclasses import replace

import numpy as np

from . import __version__
from .checks import run_all
from .config import ConfigError, RunConfig, emit_config, load_config, to_dict, validate
from .diagnostics import (
    apriori_ledger,
    cauchy_difference,
    continuous_dependence,
    overshoot,
    regularity_ledger,
)
from .potentials import ResolventError
from .stepper import DomainEscape, InnerNonconvergence, RegularityPreconditionError, Scheme

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

DIAG_COLUMNS = ("n", "t", "residual", "inner_iters", "mass_invariant", "energy",
                "norm_Ar_mu", "norm_Bs_y", "mean_mu", "beta_L1")
# aggregates that carry an implicit h factor and vanish as h -> 0
JUMP_TERMS = ("mu_jump_L2H", "B_jump_scaled_L2H", "y_jump_scaled_L2H")

log = logging.getLogger("fracch")


class CliError(Exception):
    def __init__(self, code, kind, message, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


# -- emission -------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -- building blocks ------------------------------------------------------------

def _scheme(cfg: RunConfig, **over) -> Scheme:
    if over:
        cfg = replace(cfg, **over)
    a, b = cfg.bases()
    return Scheme(cfg.scheme_config(), cfg.potential(), a, b)


def _trajectory(cfg: RunConfig, sc: Scheme, u=None):
    b = sc.b
    y0 = cfg.initial_values(b)
    if u is None:
        u = cfg.forcing_function(b)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DomainEscape)
            return sc.run(y0, u, regularity=cfg.regularity, M0=cfg.M0)
    except InnerNonconvergence as exc:
        raise CliError(EXIT_SOLVER, "InnerNonconvergence", str(exc), step=exc.step,
                       residual=exc.residual) from None
    except ResolventError as exc:
        raise CliError(EXIT_SOLVER, "ResolventError", str(exc)) from None
    except RegularityPreconditionError as exc:
        raise CliError(EXIT_CONFIG, "RegularityPreconditionError", str(exc)) from None
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "InvalidData", str(exc)) from None


def diagnostics_rows(traj, ledger):
    sc = traj.scheme
    ps = ledger.per_step
    a = sc.a
    r, sigma = traj.config.r, traj.config.sigma
    rows = []
    for n, st in enumerate(traj.states):
        mu_c = st.mu.in_basis(a).coefficients
        y_c = st.y.in_basis(sc.b).coefficients
        rows.append((n, n * traj.config.h, st.residual, st.iterations, ps["mass"][n],
                     ps["B_energy"][n] + ps["potential"][n],
                     float(np.linalg.norm(a.powers(r) * mu_c)),
                     float(np.linalg.norm(sc.b.powers(sigma) * y_c)),
                     ps["mean_mu"][n], ps["beta_L1"][n]))
    return rows


def snapshot_rows(traj, stride):
    if stride <= 0:
        return []
    mesh = traj.scheme.b.mesh
    rows = []
    for n in range(0, len(traj.states), stride):
        st = traj.states[n]
        y, mu = st.y.values.ravel(), st.mu.values.ravel()
        for i in range(y.size):
            rows.append((n, *[X.ravel()[i] for X in mesh], y[i], mu[i]))
    return rows


def _spread(vals):
    v = np.asarray(vals, dtype=float)
    top = float(np.max(np.abs(v)))
    return 0.0 if top == 0 else float((v.max() - v.min()) / top)


def _growth(vals):
    v = np.asarray(vals, dtype=float)
    return 0.0 if v[0] == 0 else float(v.max() / v[0] - 1.0)


def boundedness(level_aggs, tol):
    """Per-aggregate variation across sweep levels and the pass flag.

    O(1) aggregates use the relative spread (max - min) / max; the jump terms,
    which decay with h, use the growth max / first - 1.
    """
    keys = sorted(level_aggs[0])
    table = {}
    for k in keys:
        vals = [agg[k] for agg in level_aggs]
        stat = _growth(vals) if k in JUMP_TERMS else _spread(vals)
        table[k] = {"values": vals, "variation": stat, "ok": stat <= tol,
                    "measure": "growth" if k in JUMP_TERMS else "spread"}
    return table, all(t["ok"] for t in table.values())


# -- subcommands ------------------------------------------------------------------

def cmd_run(cfg: RunConfig, out: str) -> int:
    sc = _scheme(cfg)
    traj = _trajectory(cfg, sc)
    led = apriori_ledger(traj)
    summary = {"schema_version": SCHEMA_VERSION, "command": "run", "config": to_dict(cfg),
               "potential": sc.potential.describe(), "apriori": led.to_dict()["aggregates"],
               "checks": led.checks}
    ok = led.checks["energy_ok"]
    if sc.a.has_zero_mode:
        ok = ok and led.checks["mass_drift"] <= 1e-10 * (1 + abs(traj.m0))
    if traj.regularity:
        reg = regularity_ledger(traj)
        summary["regularity"] = reg.aggregates
        summary["regularity_data"] = reg.checks
    summary["overshoot"] = overshoot(traj)
    summary["pass"] = bool(ok)
    _atomic_write(os.path.join(out, "diagnostics.csv"), _csv(DIAG_COLUMNS, diagnostics_rows(traj, led)))
    if cfg.snapshot_stride > 0:
        axes = ["x"] if sc.b.dimension == 1 else ["x1", "x2"]
        _atomic_write(os.path.join(out, "snapshots.csv"),
                      _csv(["n", *axes, "y", "mu"], snapshot_rows(traj, cfg.snapshot_stride)))
    _atomic_write(os.path.join(out, "summary.json"), dumps(summary))
    return EXIT_OK if ok else EXIT_INVARIANT


def sweep_h(cfg: RunConfig):
    """Trajectories at N, 2N, ..., 2^levels N with self-Cauchy differences and ledgers."""
    trajs = []
    for k in range(cfg.levels + 1):
        sc = _scheme(cfg, N=cfg.N * 2 ** k)
        trajs.append(_trajectory(cfg, sc))
    E = [cauchy_difference(trajs[k], trajs[k + 1]) for k in range(cfg.levels)]
    aggs = []
    for tr in trajs[:-1]:
        agg = dict(apriori_ledger(tr).aggregates)
        if tr.regularity:
            agg.update({"reg." + k: v for k, v in regularity_ledger(tr).aggregates.items()})
        aggs.append(agg)
    return trajs, E, aggs


def cmd_sweep_h(cfg: RunConfig, out: str) -> int:
    trajs, E, aggs = sweep_h(cfg)
    table, bounded = boundedness(aggs, cfg.ledger_tol)
    monotone = all(E[k + 1] < E[k] for k in range(len(E) - 1))
    summary = {"schema_version": SCHEMA_VERSION, "command": "sweep-h", "config": to_dict(cfg),
               "N": [tr.config.N for tr in trajs[:-1]], "E_h": E,
               "E_h_strictly_decreasing": monotone, "ledger_variation": table,
               "ledger_bounded": bounded, "pass": bool(monotone and bounded)}
    _atomic_write(os.path.join(out, "sweep_h.json"), dumps(summary))
    return EXIT_OK if summary["pass"] else EXIT_INVARIANT


def lambda_levels(levels, start=0.1):
    return [start / 2 ** k for k in range(levels)]


def cmd_sweep_lambda(cfg: RunConfig, out: str) -> int:
    lams = lambda_levels(cfg.levels)
    rows, aggs = [], []
    for lam in lams:
        tr = _trajectory(cfg, _scheme(cfg, lam=lam))
        led = apriori_ledger(tr)
        aggs.append(led.aggregates)
        rows.append({"lambda": lam, "overshoot": overshoot(tr),
                     "energy_ok": led.checks["energy_ok"]})
    shoot = [r["overshoot"] for r in rows]
    summary = {"schema_version": SCHEMA_VERSION, "command": "sweep-lambda", "config": to_dict(cfg),
               "levels": rows}
    ok = all(r["energy_ok"] for r in rows)
    if cfg.potential_kind == "double_obstacle":
        mono = all(shoot[k + 1] < shoot[k] for k in range(len(shoot) - 1))
        summary["overshoot_strictly_decreasing"] = mono
        ok = ok and mono
    table, bounded = boundedness(aggs, cfg.ledger_tol)
    summary["ledger_variation"] = table
    summary["ledger_bounded"] = bounded
    summary["pass"] = bool(ok)
    _atomic_write(os.path.join(out, "sweep_lambda.json"), dumps(summary))
    return EXIT_OK if ok else EXIT_INVARIANT


def contdep_table(cfg: RunConfig):
    """Ratio lhs/rhs per (level, eps) and the self-comparison lhs per level."""
    rows = []
    for k in range(cfg.levels):
        sc = _scheme(cfg, N=cfg.N * 2 ** k)
        b = sc.b
        y0 = cfg.initial_values(b)
        u1 = cfg.forcing_function(b)
        e = np.zeros(b.size)
        e[cfg.contdep_mode - 1] = 1.0
        shape = b.to_values(e).ravel()
        base = (lambda t: np.zeros(b.size)) if u1 is None else u1
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DomainEscape)
                self_lhs, _, _ = continuous_dependence(sc, y0, base, base)
                for eps in cfg.contdep_eps:
                    u2 = (lambda t, eps=eps: base(t) + eps * shape)
                    lhs, rhs, ratio = continuous_dependence(sc, y0, base, u2)
                    rows.append({"N": sc.config.N, "eps": eps, "lhs": lhs, "rhs": rhs,
                                 "ratio": ratio, "self_lhs": self_lhs})
        except InnerNonconvergence as exc:
            raise CliError(EXIT_SOLVER, "InnerNonconvergence", str(exc), step=exc.step) from None
    return rows


def cmd_contdep(cfg: RunConfig, out: str) -> int:
    rows = contdep_table(cfg)
    per_eps = {}
    for eps in cfg.contdep_eps:
        ratios = [r["ratio"] for r in rows if r["eps"] == eps]
        per_eps[repr(eps)] = {"ratios": ratios, "spread": _spread(ratios),
                              "ok": _spread(ratios) <= cfg.contdep_tol}
    self_ok = all(r["self_lhs"] <= 1e-8 for r in rows)
    ok = self_ok and all(v["ok"] for v in per_eps.values())
    summary = {"schema_version": SCHEMA_VERSION, "command": "contdep", "config": to_dict(cfg),
               "table": rows, "ratio_stability": per_eps, "uniqueness_ok": self_ok, "pass": bool(ok)}
    _atomic_write(os.path.join(out, "contdep.json"), dumps(summary))
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_check(seed: int, out=None, stream=None) -> int:
    stream = stream or sys.stdout
    suites = run_all(seed)
    ok = all(s["failures"] == 0 for s in suites.values())
    summary = {"schema_version": SCHEMA_VERSION, "command": "check", "seed": seed,
               "version": __version__, "suites": suites, "pass": ok}
    text = dumps(summary)
    if out:
        _atomic_write(os.path.join(out, "check.json"), text)
    stream.write(text)
    if not ok:
        name, s = next((n, s) for n, s in suites.items() if s["failures"])
        sys.stderr.write(f"first counterexample in {name}: {json.dumps(_clean(s['first_counterexample']))}\n")
    return EXIT_OK if ok else EXIT_INVARIANT


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracch", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep-h", "sweep-lambda", "contdep", "check", "show-config"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file (defaults if omitted)")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--levels", type=int, help="sweep levels")
        sp.add_argument("--seed", type=int, help="seed for random profiles and check suites")
        sp.add_argument("--snapshot-stride", type=int, help="write field snapshots every N steps")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _error_record(code, kind, message, **extra) -> str:
    return json.dumps(_clean({"error": kind, "message": message, "exit_code": code, **extra}),
                      sort_keys=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        over = {k: v for k, v in (("levels", args.levels), ("seed", args.seed),
                                  ("snapshot_stride", args.snapshot_stride)) if v is not None}
        if args.out:
            over["output_dir"] = args.out
        if over:
            cfg = replace(cfg, **over)
            validate(cfg)
        out = cfg.output_dir
        if args.command == "check":
            return cmd_check(cfg.seed, args.out)
        if args.command == "show-config":
            sys.stdout.write(emit_config(cfg))
            return EXIT_OK
        cmd = {"run": cmd_run, "sweep-h": cmd_sweep_h, "sweep-lambda": cmd_sweep_lambda,
               "contdep": cmd_contdep}[args.command]
        return cmd(cfg, out)
    except ConfigError as exc:
        sys.stderr.write(_error_record(EXIT_CONFIG, "ConfigError", exc.detail, line=exc.line,
                                       key=exc.key) + "\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(_error_record(EXIT_CONFIG, "OSError", str(exc)) + "\n")
        return EXIT_CONFIG
    except CliError as exc:
        sys.stderr.write(_error_record(exc.code, exc.kind, str(exc), **exc.extra) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
