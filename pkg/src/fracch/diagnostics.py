"""Interpolant algebra, discrete calculus lemmas and the a priori / regularity
estimate ledgers computed from trajectories.

Slots Z are finite-dimensional Hilbert spaces given by a diagonal metric on
coefficient vectors (``||z||_Z^2 = sum(metric * z**2)``), so every time
integral of a piecewise polynomial is evaluated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .potentials import trick_constant
from .stepper import Scheme, Trajectory

__all__ = [
    "InterpolantTriple",
    "EstimateLedger",
    "interpolant_norms",
    "interp_h1_check",
    "discrete_gronwall",
    "gronwall_check",
    "summation_by_parts_check",
    "elementary_identity",
    "young_gap",
    "apriori_ledger",
    "regularity_ledger",
    "continuous_dependence",
    "cauchy_difference",
    "overshoot",
]

_GAUSS_S, _GAUSS_W = np.polynomial.legendre.leggauss(3)
_GAUSS_S = 0.5 * (_GAUSS_S + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W


@dataclass(frozen=True, eq=False)
class InterpolantTriple:
    """Values z^0..z^N (rows) with the piecewise constant/linear interpolants."""

    values: np.ndarray
    h: float
    metric: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.values.shape[0] - 1

    def norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        m = 1.0 if self.metric is None else self.metric
        return float(np.sqrt(np.sum(m * v * v)))

    def on_interval(self, n: int, s: float):
        """(bar, under, hat, dhat) at t = (n - 1 + s) h inside I_n, 0 <= s <= 1."""
        a, b = self.values[n - 1], self.values[n]
        return b, a, a + s * (b - a), (b - a) / self.h


def _sup(triple, which, other=None):
    pts = np.linspace(0.0, 1.0, 5)
    best = 0.0
    for n in range(1, triple.N + 1):
        for s in pts:
            vals = triple.on_interval(n, s)
            v = vals[which] if other is None else vals[which] - vals[other]
            best = max(best, triple.norm(v))
    return best


def _l2sq(triple, which, other=None):
    total = 0.0
    for n in range(1, triple.N + 1):
        for s, wq in zip(_GAUSS_S, _GAUSS_W):
            vals = triple.on_interval(n, s)
            v = vals[which] if other is None else vals[which] - vals[other]
            total += triple.h * wq * triple.norm(v) ** 2
    return total


BAR, UNDER, HAT, DHAT = range(4)


def interpolant_norms(triple: InterpolantTriple) -> list:
    """Both sides of every interpolant identity and inequality.

    Left sides come from direct evaluation of the interpolants (sampling for
    sup norms, 3-point Gauss quadrature per interval for L2); right sides
    from the nodal formulas.  Returns records ``(name, lhs, rhs, kind)`` with
    kind 'eq' or 'le'.
    """
    z, h, N = triple.values, triple.h, triple.N
    nz = np.array([triple.norm(v) for v in z])
    nd = np.array([triple.norm(z[n + 1] - z[n]) for n in range(N)])
    sup_dt = _sup(triple, DHAT)
    l2_dt = _l2sq(triple, DHAT)
    rec = [
        ("ouLinftyZ.bar", _sup(triple, BAR), nz[1:].max(), "eq"),
        ("ouLinftyZ.under", _sup(triple, UNDER), nz[:-1].max(), "eq"),
        ("dtzLinftyZ", sup_dt, (nd / h).max(), "eq"),
        ("ouLdueZ.bar", _l2sq(triple, BAR), h * np.sum(nz[1:] ** 2), "eq"),
        ("ouLdueZ.under", _l2sq(triple, UNDER), h * np.sum(nz[:-1] ** 2), "eq"),
        ("dtzLdueZ", l2_dt, h * np.sum((nd / h) ** 2), "eq"),
        ("hzLinftyZ", _sup(triple, HAT), max(nz[0], nz[1:].max()), "eq"),
        ("diffLinfty.nodal", _sup(triple, BAR, HAT), nd.max(), "eq"),
        ("diffLinfty.dt", _sup(triple, BAR, HAT), h * sup_dt, "eq"),
        ("diffLinfty.under", _sup(triple, UNDER, HAT), nd.max(), "eq"),
        ("diffLdue.nodal", _l2sq(triple, BAR, HAT), h / 3.0 * np.sum(nd ** 2), "eq"),
        ("diffLdue.dt", _l2sq(triple, BAR, HAT), h * h / 3.0 * l2_dt, "eq"),
        ("diffLdue.under", _l2sq(triple, UNDER, HAT), h / 3.0 * np.sum(nd ** 2), "eq"),
        ("hzLdueZ.first", _l2sq(triple, HAT), h * np.sum(nz[:-1] ** 2 + nz[1:] ** 2), "le"),
        ("hzLdueZ.second", h * np.sum(nz[:-1] ** 2 + nz[1:] ** 2),
         h * nz[0] ** 2 + 2.0 * h * np.sum(nz[1:] ** 2), "le"),
        ("diffbisLinfty", _sup(triple, BAR, UNDER), 2.0 * h * sup_dt, "le"),
        ("diffbisLdue", _l2sq(triple, BAR, UNDER), 4.0 * h * h / 3.0 * l2_dt, "le"),
    ]
    return [(name, float(lhs), float(rhs), kind) for name, lhs, rhs, kind in rec]


def check_records(records, rtol: float = 1e-12) -> list:
    """Names of failing records."""
    bad = []
    for name, lhs, rhs, kind in records:
        scale = max(abs(lhs), abs(rhs), 1e-300)
        if kind == "eq" and abs(lhs - rhs) > rtol * scale:
            bad.append(name)
        if kind == "le" and lhs > rhs + rtol * scale:
            bad.append(name)
    return bad


def interp_h1_check(z, dz, T: float, N: int, metric=None, nq: int = 20):
    """Both sides of h sum ||(z^{n+1} - z^n)/h||^2 <= ||dz||^2_{L2(0,T; Z)} for z^n = z(nh).

    ``z`` and ``dz`` are callables t -> coefficient vector; the right side is
    Gauss-Legendre quadrature with ``nq`` points per step.
    """
    h = T / N
    m = 1.0 if metric is None else np.asarray(metric)
    vals = [np.asarray(z(n * h), dtype=float) for n in range(N + 1)]
    lhs = h * sum(float(np.sum(m * ((vals[n + 1] - vals[n]) / h) ** 2)) for n in range(N))
    s, wq = np.polynomial.legendre.leggauss(nq)
    s, wq = 0.5 * (s + 1), 0.5 * wq
    rhs = 0.0
    for n in range(N):
        for si, wi in zip(s, wq):
            d = np.asarray(dz((n + si) * h), dtype=float)
            rhs += h * wi * float(np.sum(m * d * d))
    return lhs, rhs


def discrete_gronwall(M: float, b) -> np.ndarray:
    """Bounds M exp(sum_{n<k} b_n), k = 0..len(b)."""
    b = np.asarray(b, dtype=float)
    if M < 0 or np.any(b < 0):
        raise ValueError("discrete Gronwall needs nonnegative M and b")
    return M * np.exp(np.concatenate([[0.0], np.cumsum(b)]))


def gronwall_check(M: float, a, b, rtol: float = 1e-12):
    """(hypothesis holds, conclusion holds) for a_k <= M + sum_{n<k} b_n a_n."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if M < 0 or np.any(a < 0) or np.any(b < 0):
        raise ValueError("discrete Gronwall needs nonnegative inputs")
    k = len(a)
    partial = np.concatenate([[0.0], np.cumsum(b[:k - 1] * a[:k - 1])])
    hyp = bool(np.all(a <= (M + partial) * (1 + rtol)))
    bound = M * np.exp(np.concatenate([[0.0], np.cumsum(b[:k - 1])]))
    concl = bool(np.all(a <= bound * (1 + rtol)))
    return hyp, concl


def summation_by_parts_check(a, b):
    """a = (a_1..a_k), b = (b_0..b_k); returns both sides of the summation-by-parts formula."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = len(a)
    if len(b) != k + 1:
        raise ValueError("need len(b) == len(a) + 1")
    lhs = float(np.sum(a * (b[1:] - b[:-1])))
    rhs = float(a[-1] * b[-1] - a[0] * b[0] - np.sum((a[1:] - a[:-1]) * b[1:-1]))
    return lhs, rhs


def elementary_identity(a, b):
    """a(a - b) and a^2/2 + (a - b)^2/2 - b^2/2."""
    return a * (a - b), 0.5 * a * a + 0.5 * (a - b) ** 2 - 0.5 * b * b


def young_gap(a, b, delta):
    """delta a^2 + b^2/(4 delta) - a b (nonnegative)."""
    return delta * a * a + b * b / (4.0 * delta) - a * b


# ---------------------------------------------------------------------------
# ledgers


@dataclass
class EstimateLedger:
    per_step: dict = field(default_factory=dict)
    aggregates: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_step": {k: [float(x) for x in v] for k, v in self.per_step.items()},
            "aggregates": {k: float(v) for k, v in self.aggregates.items()},
            "checks": dict(self.checks),
        }

    def all_finite(self) -> bool:
        return (all(np.all(np.isfinite(v)) for v in self.per_step.values())
                and all(np.isfinite(v) for v in self.aggregates.values()))


class _Coeffs:
    """Coefficient views of a trajectory in the A and B eigenbases."""

    def __init__(self, traj: Trajectory):
        sc: Scheme = traj.scheme
        self.sc = sc
        self.h = traj.config.h
        self.Y = traj.Y
        self.MU = traj.MU
        self.U = traj.U
        a, b = sc.a, sc.b
        self.yb = np.stack([b.to_coefficients(v) for v in self.Y])
        self.ya = np.stack([a.to_coefficients(v) for v in self.Y])
        self.mua = np.stack([a.to_coefficients(v) for v in self.MU])
        self.ub = np.stack([b.to_coefficients(v) for v in self.U])
        r, sigma = traj.config.r, traj.config.sigma
        self.bs = b.powers(sigma)
        self.ar = a.powers(r)
        self.m_pos = a.metric(r)
        self.m_neg = a.metric(-r)
        self.m_2r = a.metric(2 * r)


def _rows(x, m=1.0):
    return np.sqrt(np.sum(m * x * x, axis=1))


def apriori_ledger(traj: Trajectory, tol_accum: Optional[float] = None) -> EstimateLedger:
    """Per-step terms of the first a priori estimate and the derived aggregates.

    ``checks['energy_slack_min']`` is min_k (right side - left side) of the
    summed discrete energy inequality (forcing terms included, by parts);
    ``checks['energy_ok']`` compares it against ``-tol_accum``.
    """
    c = _Coeffs(traj)
    sc, cfg, h = c.sc, traj.config, c.h
    view, pot = sc.view, sc.potential
    w = sc.w
    N = cfg.N
    tau = cfg.tau
    dy = np.diff(c.yb, axis=0)
    dmu = np.diff(c.mua, axis=0)

    mu_sq = _rows(c.mua) ** 2
    Ar_mu_sq = _rows(c.mua * c.ar) ** 2
    Bs_y_sq = _rows(c.yb * c.bs) ** 2
    dy_sq = _rows(dy) ** 2
    Bs_dy_sq = _rows(dy * c.bs) ** 2
    dmu_sq = _rows(dmu) ** 2
    G = np.array([w * np.sum(view.G(v)) for v in c.Y])
    bh_lam = np.array([w * np.sum(view.envelope(v)) for v in c.Y])
    beta_l1 = np.array([w * np.sum(np.abs(view.beta(v))) for v in c.Y])

    cum = lambda x: np.concatenate([[0.0], np.cumsum(x)])  # noqa: E731
    ps = {
        "mu_term": 0.5 * h * mu_sq,
        "mu_jumps": cum(0.5 * h * dmu_sq),
        "Ar_mu_sum": cum(h * Ar_mu_sq[1:]),
        "viscous": cum(tau * h * dy_sq / h ** 2),
        "B_energy": 0.5 * Bs_y_sq,
        "potential": G,
        "B_jumps": cum(0.5 * Bs_dy_sq),
        "L_jumps": cum(0.5 * pot.L_pi_prime * dy_sq),
    }
    lhs = sum(ps.values())
    y0 = c.Y[0]
    initial = 0.5 * Bs_y_sq[0] + w * float(np.sum(pot.f(y0)))
    # (u^k, y^k) - (u^1, y_0) - sum_{n=1}^{k-1} (u^{n+1} - u^n, y^n)
    uy = np.sum(c.ub * c.yb, axis=1)
    forcing = np.zeros(N + 1)
    for k in range(1, N + 1):
        s = sum(float((c.ub[n + 1] - c.ub[n]) @ c.yb[n]) for n in range(1, k))
        forcing[k] = uy[k] - float(c.ub[1] @ c.yb[0]) - s
    rhs = initial + forcing
    ps["energy_lhs"] = lhs
    ps["energy_rhs"] = rhs
    ps["energy_slack"] = rhs - lhs
    ps["beta_L1"] = beta_l1
    ps["mean_mu"] = c.MU.mean(axis=1)
    ps["mass"] = (c.Y + h * c.MU).mean(axis=1)

    VB = lambda x: np.sqrt(_rows(x) ** 2 + _rows(x * c.bs) ** 2)  # noqa: E731
    y_VB = VB(c.yb)
    dt_dual_sq = _rows(np.diff(c.ya, axis=0) / h, c.m_neg) ** 2
    y_dual = _rows(c.ya, c.m_neg)
    yhat_L2_dual_sq = h / 3.0 * np.sum(
        y_dual[:-1] ** 2 + y_dual[1:] ** 2
        + np.sum(c.m_neg * c.ya[:-1] * c.ya[1:], axis=1))
    agg = {
        "mu_jump_L2H": np.sqrt(h * np.sum(dmu_sq)),
        "Ar_mubar_L2H": np.sqrt(h * np.sum(Ar_mu_sq[1:])),
        "Ar_muunder_L2H": np.sqrt(h * np.sum(Ar_mu_sq[:-1])),
        "yunder_Linf_VB": y_VB[:-1].max(),
        "ybar_Linf_VB": y_VB[1:].max(),
        "yhat_Linf_VB": y_VB.max(),
        "tau_dty_L2H": np.sqrt(tau * h * np.sum(dy_sq / h ** 2)),
        "G_ybar_Linf_L1": max(w * np.sum(np.abs(view.G(v))) for v in c.Y[1:]),
        "B_jump_scaled_L2H": np.sqrt(np.sum(Bs_dy_sq)),
        "y_jump_scaled_L2H": np.sqrt(np.sum(dy_sq)),
        "beta_hat_lambda_Linf_L1": bh_lam[1:].max(),
        "dty_L2_dual": np.sqrt(h * np.sum(dt_dual_sq)),
        "mubar_L2_VA": np.sqrt(h * np.sum(_rows(c.mua[1:], c.m_pos) ** 2)),
        "muunder_L2_VA": np.sqrt(h * np.sum(_rows(c.mua[:-1], c.m_pos) ** 2)),
    }
    if sc.a.has_zero_mode:
        agg["beta_ybar_L2_L1"] = np.sqrt(h * np.sum(beta_l1[1:] ** 2))
        agg["mean_mubar_L2"] = np.sqrt(h * np.sum(ps["mean_mu"][1:] ** 2))
        if traj.delta0 is not None:
            agg["trick_C0"] = trick_constant(view, traj.m0, traj.delta0)
    # aggregate of the well-posedness bound
    agg["K1_hat"] = (np.sqrt(yhat_L2_dual_sq + agg["dty_L2_dual"] ** 2) + agg["yhat_Linf_VB"]
                     + agg["mubar_L2_VA"] + h * np.sum(bh_lam[1:]) + agg["tau_dty_L2H"])
    du = np.diff(c.ub, axis=0) / h
    data = {
        "u_Linf_H": float(_rows(c.ub).max()),
        "dtu_L2H": float(np.sqrt(h * np.sum(_rows(du) ** 2))),
        "y0_VB": float(y_VB[0]),
        "beta_hat_y0_L1": float(w * np.sum(pot.beta_hat(y0))),
    }
    agg["data_scale"] = 1.0 + sum(data.values())
    agg["K1_ratio"] = agg["K1_hat"] / agg["data_scale"]
    agg.update(data)

    if tol_accum is None:
        tol_accum = N * cfg.inner_tol_abs * agg["data_scale"]
    slack_min = float(np.min(ps["energy_slack"]))
    checks = {
        "energy_slack_min": slack_min,
        "energy_tol": float(tol_accum),
        "energy_ok": bool(slack_min >= -tol_accum),
        "mass_drift": float(np.max(np.abs(ps["mass"] - traj.m0))) if sc.a.has_zero_mode else None,
    }
    led = EstimateLedger(ps, {k: float(v) for k, v in agg.items()}, checks)
    if not led.all_finite():
        raise FloatingPointError("non-finite ledger entry (solver breakdown?)")
    return led


def regularity_ledger(traj: Trajectory) -> EstimateLedger:
    """Terms of the two regularity estimates; the trajectory must carry a
    verified regularity initialization (``Scheme.run(..., regularity=True)``)."""
    if not traj.regularity:
        raise ValueError("trajectory was not run under a verified regularity initialization")
    c = _Coeffs(traj)
    sc, h, tau = c.sc, c.h, traj.config.tau
    w = sc.w
    dyb = np.diff(c.yb, axis=0) / h
    dya = np.diff(c.ya, axis=0) / h
    beta_l1 = np.array([w * np.sum(np.abs(sc.view.beta(v))) for v in c.Y])
    agg = {
        "Ar_mubar_Linf_H": _rows(c.mua[1:] * c.ar).max(),
        "B_dty_L2H": np.sqrt(h * np.sum(_rows(dyb * c.bs) ** 2)),
        "tau_dty_Linf_H": np.sqrt(tau) * _rows(dyb).max(),
        "mubar_Linf_H": _rows(c.mua[1:]).max(),
        "dty_Linf_dual": _rows(dya, c.m_neg).max(),
        "dty_L2_VB": np.sqrt(h * np.sum(_rows(dyb) ** 2 + _rows(dyb * c.bs) ** 2)),
        "mubar_Linf_VA": _rows(c.mua[1:], c.m_pos).max(),
        "tau_mubar_Linf_V2r": np.sqrt(tau) * _rows(c.mua[1:], c.m_2r).max(),
        "beta_ybar_Linf_L1": beta_l1[1:].max(),
    }
    agg["K3_hat"] = (agg["dty_Linf_dual"] + agg["dty_L2_VB"] + agg["mubar_Linf_VA"]
                     + agg["tau_dty_Linf_H"] + agg["tau_mubar_Linf_V2r"])
    ps = {"Ar_mu": _rows(c.mua * c.ar), "mean_mu": c.MU.mean(axis=1)}
    led = EstimateLedger(ps, {k: float(v) for k, v in agg.items()}, dict(traj.regularity))
    if not led.all_finite():
        raise FloatingPointError("non-finite ledger entry (solver breakdown?)")
    return led


def continuous_dependence(scheme: Scheme, y0, u1, u2):
    """Both sides of the continuous-dependence bound and their ratio.

    lhs = ||y1 - y2||_{Linf(V_A^-r)} + ||y1 - y2||_{L2(V_B^sigma)} + tau^1/2 ||y1 - y2||_{Linf(H)}
    rhs = ||u1 - u2||_{L2(H)} (piecewise-constant interpolant).  ratio is None if rhs == 0.
    """
    t1 = scheme.run(y0, u1)
    t2 = scheme.run(y0, u2)
    h, tau = scheme.config.h, scheme.config.tau
    a, b = scheme.a, scheme.b
    d = t1.Y - t2.Y
    da = np.stack([a.to_coefficients(v) for v in d])
    db = np.stack([b.to_coefficients(v) for v in d])
    bs = b.powers(scheme.config.sigma)
    m_neg = a.metric(-scheme.config.r)
    linf_dual = _rows(da, m_neg).max()
    ip = lambda x, y: np.sum(x * y, axis=1) + np.sum(bs * x * bs * y, axis=1)  # noqa: E731
    l2_vb = np.sqrt(h / 3.0 * np.sum(ip(db[:-1], db[:-1]) + ip(db[:-1], db[1:]) + ip(db[1:], db[1:])))
    linf_h = np.sqrt(tau) * _rows(db).max()
    lhs = float(linf_dual + l2_vb + linf_h)
    du = t1.U - t2.U
    dub = np.stack([b.to_coefficients(v) for v in du])
    rhs = float(np.sqrt(h * np.sum(_rows(dub[1:]) ** 2)))
    ratio = lhs / rhs if rhs > 0 else None
    return lhs, rhs, ratio


def cauchy_difference(coarse: Trajectory, fine: Trajectory) -> float:
    """||ybar_h - ybar_{h/2}||_{Linf(H)} for a fine run with exactly twice the steps."""
    if fine.config.N != 2 * coarse.config.N:
        raise ValueError("fine trajectory must use h/2")
    sc = coarse.scheme
    Yc, Yf = coarse.Y, fine.Y
    diffs = [sc.hnorm(Yf[m] - Yc[(m + 1) // 2]) for m in range(1, Yf.shape[0])]
    return float(max(diffs))


def overshoot(traj: Trajectory, bound: float = 1.0) -> float:
    """max over nodes and steps of (|y| - bound)^+."""
    return float(max(0.0, np.max(np.abs(traj.Y)) - bound))
