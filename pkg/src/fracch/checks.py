"""Seeded invariant suites behind ``fracch check``.

Each suite draws its cases from a generator seeded by the caller and yields
``(case, ok, detail)`` triples; :func:`run_all` collects counts and the first
counterexample per suite in a deterministic order.
"""
from __future__ import annotations

import numpy as np

from . import diagnostics as dg
from . import oracle
from .potentials import canonical, default_delta0, trick_constant
from .spectra import (
    analyze,
    build_laplacian_basis,
    embed,
    extend_power_to_dual,
    graph_norm,
    interpolation_gap,
    norm_dual,
    norm_primal,
    riesz_solve,
    synthesize,
    DualElement,
)
from .stepper import Scheme, SchemeConfig

WELLS = (("regular", {}), ("logarithmic", {"c1": 2.0}), ("double_obstacle", {"c2": 1.0}))


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _bases():
    return [
        build_laplacian_basis(np.pi, "neumann", 16),
        build_laplacian_basis(2.0, "dirichlet", 16),
        build_laplacian_basis((1.0, 2.0), "neumann", (4, 6)),
        build_laplacian_basis(np.pi, "neumann", 8, power_offset=2),
    ]


def spectra_suite(rng, n_cases=100):
    for bi, b in enumerate(_bases()):
        E = b.eigenvectors
        err = np.abs(b.cell_weight * E.T @ E - np.eye(b.size)).max()
        yield f"orthonormality[{bi}]", err <= 1e-12, {"err": err}
    for k in range(n_cases):
        b = _bases()[k % 4]
        c = rng.standard_normal(b.size) / (1 + np.arange(b.size))
        v = synthesize(b, c)
        w = synthesize(b, rng.standard_normal(b.size) / (1 + np.arange(b.size)))
        back = analyze(b, v.values).coefficients
        yield f"roundtrip[{k}]", np.abs(back - c).max() <= 1e-12 * (1 + np.abs(c).max()), {}
        r = float(rng.choice([0.25, 0.5, 1.0]))
        # adjoint identity
        p1, p2 = float(rng.choice([0.3, 0.5, 1.0])), float(rng.choice([0.3, 0.5, 1.0]))
        lhs = float(np.sum(b.powers(p1 + p2) * c * w.coefficients))
        rhs = float(np.sum(b.powers(p1) * c * b.powers(p2) * w.coefficients))
        yield f"adjoint[{k}]", abs(lhs - rhs) <= 1e-11 * (1 + v.norm() * w.norm()), {"lhs": lhs, "rhs": rhs}
        # norm equivalence
        np_, gn = norm_primal(b, r, v), graph_norm(b, r, v)
        lam = b.eigenvalues
        if lam[0] > 0:
            ok = np_ <= gn * (1 + 1e-12) and gn <= np.sqrt(lam[0] ** (-2 * r) + 1) * np_ * (1 + 1e-12)
        else:
            mean = v.mean()
            Arv = np.linalg.norm(b.powers(r) * c)
            dev = np.linalg.norm(c[1:])
            ok = (gn ** 2 <= (2 * b.volume * mean ** 2 + 2 * dev ** 2 + 2 * Arv ** 2) * (1 + 1e-12)
                  and dev <= lam[1] ** (-r) * Arv * (1 + 1e-12))
        yield f"equivnorms[{k}]", bool(ok), {"primal": np_, "graph": gn}
        # Riesz identity and dual-norm representations
        g = rng.standard_normal(b.size)
        if b.has_zero_mode:
            g[0] = 0.0
        f = DualElement(b, g)
        z = riesz_solve(b, r, f)
        ok_lhs = float(np.sum(b.powers(r) * z.coefficients * b.powers(r) * w.coefficients))
        yield f"riesz[{k}]", _rel(ok_lhs, f.pair(w)) <= 1e-11 or abs(ok_lhs - f.pair(w)) <= 1e-13, {}
        nd = norm_dual(b, r, f)
        yield f"normaVA[{k}]", _rel(nd, np.linalg.norm(b.powers(r) * z.coefficients)) <= 1e-11, {}
        yield f"normaVAbis[{k}]", _rel(nd ** 2, f.pair(z)) <= 1e-11, {}
        if b.size <= oracle.MAX_DENSE:
            ref = oracle.dual_norm_by_maximization(b, r, f)
            yield f"dual_oracle[{k}]", _rel(nd, ref) <= 1e-10, {"fast": nd, "oracle": ref}
        yield f"stimaAdr[{k}]", norm_dual(b, r, extend_power_to_dual(b, r, v)) <= np.linalg.norm(
            b.powers(r) * c) * (1 + 1e-12), {}
        yield f"identification[{k}]", _rel(embed(v).pair(w), v.inner(w)) <= 1e-12 or abs(
            embed(v).pair(w) - v.inner(w)) <= 1e-14, {}
        eta = float(rng.choice([0.25, 0.5, 1.0]))
        lhs, rhs, _ = interpolation_gap(b, r, eta, v)
        yield f"interpolation[{k}]", lhs <= rhs * (1 + 1e-12), {"lhs": lhs, "rhs": rhs}


def potentials_suite(rng, n_points=1000):
    lams = (0.1, 0.05, 0.025, 0.0125)
    for kind, prm in WELLS:
        pot = canonical(kind, **prm)
        s = np.concatenate([rng.uniform(-3, 3, n_points), [-1.0, 1.0, 0.0, -0.999999, 0.999999]])
        for lam in lams:
            v = pot.yosida(lam)
            res = v.resolvent_residual(s).max()
            yield f"{kind}.residual[{lam}]", res <= 1e-12 * (1 + 3), {"max": res}
            a, b = rng.uniform(-3, 3, (2, n_points))
            yield f"{kind}.nonexpansive[{lam}]", bool(np.all(
                np.abs(v.resolvent(a) - v.resolvent(b)) <= np.abs(a - b) * (1 + 1e-12) + 1e-15)), {}
            yield f"{kind}.lipschitz[{lam}]", bool(np.all(
                np.abs(v.beta(a) - v.beta(b)) <= np.abs(a - b) / lam * (1 + 1e-10) + 1e-12)), {}
            env = v.envelope(s)
            bh = pot.beta_hat(s)
            yield f"{kind}.envelope_bounds[{lam}]", bool(np.all(env >= -1e-14) and np.all(
                env <= bh * (1 + 1e-12) + 1e-14)), {}
            inside = pot.in_domain(s)
            bmin = pot.beta_min(s[inside])
            yield f"{kind}.min_section[{lam}]", bool(np.all(
                np.abs(v.beta(s[inside])) <= np.abs(bmin) * (1 + 1e-12) + 1e-14)), {}
        envs = np.array([pot.yosida(lam).envelope(s) for lam in lams])
        yield f"{kind}.lambda_monotone", bool(np.all(np.diff(envs, axis=0) >= -1e-13)), {}
    obst = canonical("double_obstacle", c2=1.0)
    for lam in (0.1, 0.01):
        c0 = trick_constant(obst.yosida(lam), 0.0, 0.5)
        yield f"trickMZ[{lam}]", np.isfinite(c0) and c0 >= 0, {"C0": c0}


def interp_suite(rng, n_cases=100):
    for k in range(n_cases):
        d = int(rng.integers(1, 6))
        N = int(rng.integers(1, 9))
        metric = rng.uniform(0.1, 10.0, d)
        tr = dg.InterpolantTriple(rng.standard_normal((N + 1, d)), float(rng.uniform(0.01, 1.0)), metric)
        for name, lhs, rhs, kind in dg.interpolant_norms(tr):
            if kind == "eq":
                ok = abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1e-300)
            else:
                ok = lhs <= rhs * (1 + 1e-12)
            yield f"{name}[{k}]", ok, {"lhs": lhs, "rhs": rhs}
    for k in range(1000):
        n = int(rng.integers(1, 21))
        a, b = rng.standard_normal(n), rng.standard_normal(n + 1)
        lhs, rhs = dg.summation_by_parts_check(a, b)
        scale = 1 + np.abs(a).sum() * np.abs(b).max() * 2
        yield f"byparts[{k}]", abs(lhs - rhs) <= 1e-13 * scale, {"lhs": lhs, "rhs": rhs}
    a, b = rng.standard_normal((2, 1000))
    lhs, rhs = dg.elementary_identity(a, b)
    yield "elementare", bool(np.all(np.abs(lhs - rhs) <= 1e-15 * (1 + a * a + b * b) * 4)), {}
    a, b, dl = rng.uniform(1e-3, 10, (3, 1000))
    yield "young", bool(np.all(dg.young_gap(a, b, dl) >= -1e-12 * (a * a + b * b))), {}
    for k in range(100):
        n = int(rng.integers(1, 15))
        M = float(rng.uniform(0, 3))
        bb = rng.uniform(0, 0.5, n)
        a = [M]
        for j in range(1, n + 1):
            a.append(M + float(np.dot(bb[:j], a[:j])))
        hyp, concl = dg.gronwall_check(M, a, bb)
        yield f"gronwall[{k}]", hyp and concl, {}


def stepper_suite(rng, n_oracle=20):
    b = build_laplacian_basis(1.0, "neumann", 64)
    x = b.nodes[0]
    for tau in (0.0, 1.0):
        cfg = SchemeConfig(tau=tau, r=0.5, sigma=0.5, T=0.02, N=200, lam=0.05)
        y0 = 0.1 + 0.4 * np.cos(np.pi * x) + 0.05 * rng.uniform(-1, 1, b.size)
        tr = Scheme(cfg, canonical("regular"), b).run(y0)
        drift = float(np.abs((tr.Y + cfg.h * tr.MU).mean(axis=1) - tr.m0).max())
        yield f"mass[tau={tau}]", drift <= 1e-10, {"drift": drift}
    bs = build_laplacian_basis(1.0, "neumann", 32)
    for kind, prm in WELLS[:2]:
        for tau in (0.0, 1.0):
            cfg = SchemeConfig(tau=tau, r=0.5, sigma=0.5, T=0.01, N=32, lam=0.05)
            y0 = 0.1 + 0.4 * np.cos(np.pi * bs.nodes[0])
            led = dg.apriori_ledger(Scheme(cfg, canonical(kind, **prm), bs).run(y0))
            slack = led.checks["energy_slack_min"]
            yield f"energy[{kind},tau={tau}]", slack >= -cfg.N * 1e-9, {"slack": slack}
    tiny = build_laplacian_basis(1.0, "neumann", 4)
    for k in range(n_oracle):
        kind, prm = WELLS[[0, 2][k % 2]]
        tau = float(k // 2 % 2)
        cfg = SchemeConfig(tau=tau, r=0.5, sigma=0.5, T=0.1, N=4, lam=0.05)
        pot = canonical(kind, **prm)
        sc = Scheme(cfg, pot, tiny)
        yn = analyze(tiny, rng.uniform(-0.6, 0.6, 4))
        mun = analyze(tiny, rng.uniform(-0.5, 0.5, 4))
        u = analyze(tiny, rng.uniform(-0.5, 0.5, 4))
        y, mu, *_ = sc.solve(yn.values.ravel(), mun.values.ravel(), u.values.ravel())
        yo, muo, _ = oracle.dense_step_solve(cfg, pot, tiny, tiny, yn, mun, u)
        dev = max(sc.hnorm(y - yo), sc.hnorm(mu - muo))
        yield f"oracle_step[{k}]", dev <= 1e-8, {"dev": dev}
    cfg = SchemeConfig(tau=1.0, r=0.5, sigma=0.5, T=0.01, N=16, lam=0.05)
    sc = Scheme(cfg, canonical("regular"), bs)
    y0 = 0.1 + 0.4 * np.cos(np.pi * bs.nodes[0])
    t1, t2 = sc.run(y0), sc.run(y0)
    yield "determinism", bool(np.array_equal(t1.Y, t2.Y) and np.array_equal(t1.MU, t2.MU)), {}


SUITES = (
    ("spectra", spectra_suite),
    ("potentials", potentials_suite),
    ("interpolants", interp_suite),
    ("stepper", stepper_suite),
)


def _jsonable(detail):
    return {k: float(v) for k, v in detail.items()}


def run_all(seed: int = 0) -> dict:
    """Run every suite; the summary is a pure function of ``seed``."""
    out = {}
    for i, (name, suite) in enumerate(SUITES):
        rng = np.random.default_rng([seed, i])
        n = n_fail = 0
        first = None
        for case, ok, detail in suite(rng):
            n += 1
            if not ok:
                n_fail += 1
                if first is None:
                    first = {"case": case, "detail": _jsonable(detail)}
        out[name] = {"cases": n, "failures": n_fail, "first_counterexample": first}
    return out
