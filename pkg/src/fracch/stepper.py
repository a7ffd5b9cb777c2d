"""Implicit time discretization of the Yosida-regularized fractional
Cahn-Hilliard system.

One step solves, for (y, mu) = (y^{n+1}, mu^{n+1}),

    (y - y^n)/h + mu + A^{2r} mu = mu^n
    tau (y - y^n)/h + (L' I + B^{2 sigma} + beta_lambda + pi)(y) = L' y^n + mu + u^{n+1}

The first equation is linear in mu and is eliminated exactly through
S = (h (I + A^{2r}))^{-1}.  What remains is the gradient of a strongly convex
functional of y, solved by semismooth Newton with backtracking; a
preconditioned Richardson iteration is the fallback when Newton stalls.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .potentials import Potential, default_delta0
from .spectra import Field, SpectralBasis, analyze, norm_primal, synthesize

log = logging.getLogger(__name__)

__all__ = [
    "SchemeConfig",
    "State",
    "Trajectory",
    "Scheme",
    "InnerNonconvergence",
    "DomainEscape",
    "RegularityPreconditionError",
    "sample_forcing",
    "run",
    "stationarity_residual",
]

_EPS = np.finfo(float).eps


class InnerNonconvergence(RuntimeError):
    """The implicit solve hit its iteration cap above tolerance."""

    def __init__(self, msg, best=None, residual=np.inf, step=None):
        super().__init__(msg)
        self.best = best
        self.residual = residual
        self.step = step


class DomainEscape(RuntimeWarning):
    """Grid values of y left D(beta); legal for lambda > 0, reported as a diagnostic."""


class RegularityPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    tau: float
    r: float
    sigma: float
    T: float
    N: int
    lam: float
    inner_tol_abs: float = 1e-10
    inner_tol_rel: float = 1e-10
    inner_max_iter: int = 50
    fallback_max_iter: int = 500
    m0_guard: bool = True

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if not (self.r > 0 and self.sigma > 0):
            raise ValueError("r and sigma must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def h(self) -> float:
        return self.T / self.N

    def refined(self, factor: int = 2) -> "SchemeConfig":
        return replace(self, N=self.N * factor)


@dataclass(frozen=True, eq=False)
class State:
    n: int
    y: Field
    mu: Field
    iterations: int = 0
    residual: float = 0.0
    fallback: bool = False
    outside_domain: int = 0


@dataclass(eq=False)
class Trajectory:
    config: SchemeConfig
    scheme: "Scheme"
    states: list
    forcing: list
    m0: float
    delta0: Optional[float] = None
    regularity: dict = field(default_factory=dict)

    @property
    def Y(self) -> np.ndarray:
        """Grid values of y^0..y^N, shape (N+1, Q)."""
        return np.stack([s.y.values.ravel() for s in self.states])

    @property
    def MU(self) -> np.ndarray:
        return np.stack([s.mu.values.ravel() for s in self.states])

    @property
    def U(self) -> np.ndarray:
        return np.stack([u.values.ravel() for u in self.forcing])

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.states)) * self.config.h


def _as_values(basis: SpectralBasis, v) -> np.ndarray:
    if v is None:
        return np.zeros(basis.size)
    if isinstance(v, Field):
        return v.in_basis(basis).values.ravel()
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return np.full(basis.size, float(arr))
    if arr.size != basis.size:
        raise ValueError(f"expected {basis.size} grid values, got {arr.size}")
    return arr.ravel().copy()


def sample_forcing(u, N: int, h: float, basis: SpectralBasis) -> list:
    """u^n = u(n h), n = 0..N, as Fields on ``basis``.  ``u`` may be None (zero),
    a Field/array (constant in time) or a callable of t."""
    out = []
    for n in range(N + 1):
        val = u(n * h) if callable(u) else u
        out.append(analyze(basis, _as_values(basis, val)))
    return out


class Scheme:
    """Precomputed operators for one (config, potential, A, B) combination."""

    def __init__(self, config: SchemeConfig, potential: Potential,
                 basis_a: SpectralBasis, basis_b: Optional[SpectralBasis] = None):
        basis_b = basis_a if basis_b is None else basis_b
        if not basis_a.same_grid(basis_b):
            raise ValueError("A and B must share the collocation grid")
        self.config = config
        self.potential = potential
        self.view = potential.yosida(config.lam)
        self.a = basis_a
        self.b = basis_b
        self.w = basis_a.cell_weight
        h = config.h
        self.L = potential.L_pi_prime
        self.Lh = self.L + config.tau / h
        self.a2r = basis_a.powers(2.0 * config.r)
        self.b2s = basis_b.powers(2.0 * config.sigma)
        self.s_diag = 1.0 / (h * (1.0 + self.a2r))
        self._K = None

    # -- linear pieces in grid space --------------------------------------
    def A2r(self, v):
        return self.a.apply_diag(self.a2r, v)

    def B2s(self, v):
        return self.b.apply_diag(self.b2s, v)

    def S(self, v):
        return self.a.apply_diag(self.s_diag, v)

    @property
    def K(self) -> np.ndarray:
        """Dense matrix of Lh I + B^{2 sigma} + S."""
        if self._K is None:
            K = self.b.diag_matrix(self.b2s) + self.a.diag_matrix(self.s_diag)
            K[np.diag_indices_from(K)] += self.Lh
            self._K = 0.5 * (K + K.T)
        return self._K

    def hnorm(self, v) -> float:
        return float(np.sqrt(self.w * np.sum(np.asarray(v) ** 2)))

    # -- the step -----------------------------------------------------------
    def residuals(self, yn, mun, y, mu, u):
        """H-norm residuals of the two scheme equations."""
        h, tau = self.config.h, self.config.tau
        dy = (y - yn) / h
        r1 = dy + mu + self.A2r(mu) - mun
        r2 = tau * dy + self.L * y + self.B2s(y) + self.view.g(y) - self.L * yn - mu - u
        return self.hnorm(r1), self.hnorm(r2)

    def solve(self, yn, mun, u, step_index=None):
        """Return (y, mu, iterations, residual, used_fallback) for one step."""
        cfg = self.config
        h = cfg.h
        rhs = self.Lh * yn + u + self.S(yn + h * mun)
        tol = cfg.inner_tol_abs + cfg.inner_tol_rel * (
            self.hnorm(yn) + self.hnorm(mun) + self.hnorm(u))

        def F(y):
            Sy = self.S(y)
            By = self.B2s(y)
            gy = self.view.g(y)
            res = self.Lh * y + By + Sy + gy - rhs
            floor = 256 * _EPS * (self.hnorm(self.Lh * y) + self.hnorm(By) + self.hnorm(Sy)
                                  + self.hnorm(gy) + self.hnorm(rhs))
            return res, floor

        y = yn.copy()
        res, floor = F(y)
        rn = self.hnorm(res)
        it = 0
        fallback = False
        converged = rn <= max(tol, floor)
        while not converged and it < cfg.inner_max_iter:
            J = self.K.copy()
            J[np.diag_indices_from(J)] += self.view.g_slope(y)
            d = np.linalg.solve(J, -res)
            t = 1.0
            accepted = False
            while t > 1e-10:
                y_try = y + t * d
                res_try, floor_try = F(y_try)
                rn_try = self.hnorm(res_try)
                if rn_try < (1.0 - 1e-4 * t) * rn or rn_try <= max(tol, floor_try):
                    accepted = True
                    break
                t *= 0.5
            it += 1
            if not accepted:
                break
            y, res, floor, rn = y_try, res_try, floor_try, rn_try
            converged = rn <= max(tol, floor)

        if not converged:
            fallback = True
            log.debug("step %s: Newton stalled at residual %.3e, falling back", step_index, rn)
            P = self.K.copy()
            P[np.diag_indices_from(P)] += 1.0 / cfg.lam
            chol = np.linalg.cholesky(P)
            best_y, best_r = y, rn
            for _ in range(cfg.fallback_max_iter):
                z = np.linalg.solve(chol, res)
                y = y - np.linalg.solve(chol.T, z)
                res, floor = F(y)
                rn = self.hnorm(res)
                it += 1
                if rn < best_r:
                    best_y, best_r = y, rn
                if rn <= max(tol, floor):
                    converged = True
                    break
            if not converged:
                raise InnerNonconvergence(
                    f"step {step_index}: residual {best_r:.3e} above tolerance {tol:.3e}",
                    best=best_y, residual=best_r, step=step_index)

        mu = self.S(yn + h * mun - y)
        r1, r2 = self.residuals(yn, mun, y, mu, u)
        return y, mu, it, max(r1, r2), fallback

    def step(self, state: State, u_next) -> State:
        yn = state.y.values.ravel()
        mun = state.mu.in_basis(self.a).values.ravel()
        u = _as_values(self.b, u_next)
        y, mu, it, res, fb = self.solve(yn, mun, u, step_index=state.n + 1)
        outside = 0
        if self.potential.kind != "regular":
            outside = int(np.count_nonzero(~self.potential.in_domain(y)))
        return State(state.n + 1, analyze(self.b, y), analyze(self.a, mu), it, res, fb, outside)

    # -- preconditions ---------------------------------------------------------
    def check_regularity_data(self, y0: Field, forcing: list, M0: Optional[float] = None) -> dict:
        """Verify the extra initial-data assumptions of the regularity estimates.

        tau > 0: B^{2 sigma} y0 finite and beta°(y0) finite at every node.
        tau = 0: ||B^{2 sigma} y0 + (beta_lambda + pi)(y0) - u(t)||_{A,r} <= M0 at every
        sampled time; if M0 is None the observed maximum is certified and returned.
        """
        y = y0.in_basis(self.b).values.ravel()
        By = self.B2s(y)
        if not np.all(np.isfinite(By)):
            raise RegularityPreconditionError("B^{2 sigma} y0 is not finite")
        if self.config.tau > 0:
            bmin = self.potential.beta_min(y)
            if not np.all(np.isfinite(bmin)):
                raise RegularityPreconditionError("beta°(y0) is not finite on the grid")
            return {"mode": "viscous", "beta_min_norm": self.hnorm(bmin)}
        base = By + self.view.g(y)
        norms = [norm_primal(self.a, self.config.r, analyze(self.a, base - u.values.ravel()))
                 for u in forcing]
        observed = float(max(norms))
        if M0 is None:
            return {"mode": "nonviscous", "M0": observed, "certified": True, "observed": observed}
        if observed > M0:
            raise RegularityPreconditionError(
                f"||mu_0^lambda||_(A,r) = {observed:.6g} exceeds M0 = {M0:.6g}")
        return {"mode": "nonviscous", "M0": float(M0), "certified": False, "observed": observed}

    # -- trajectories -------------------------------------------------------------
    def run(self, y0, u=None, *, regularity: bool = False, M0: Optional[float] = None) -> Trajectory:
        cfg = self.config
        y0f = analyze(self.b, _as_values(self.b, y0))
        if self.potential.kind == "double_obstacle" and not np.all(
                np.isfinite(self.potential.beta_hat(y0f.values))):
            raise ValueError("beta_hat(y0) is not finite: y0 leaves [-1, 1]")
        if self.potential.kind == "logarithmic" and not np.all(
                np.isfinite(self.potential.beta_hat(y0f.values))):
            raise ValueError("beta_hat(y0) is not finite: y0 leaves [-1, 1]")
        m0 = y0f.mean()
        delta0 = None
        if self.a.has_zero_mode:
            if cfg.m0_guard and not self.potential.in_interior(m0):
                raise ValueError(f"mean of y0 ({m0}) must be interior to D(beta)")
            if self.potential.in_interior(m0):
                delta0 = default_delta0(self.potential, m0)
        forcing = sample_forcing(u, cfg.N, cfg.h, self.b)
        info = self.check_regularity_data(y0f, forcing, M0) if regularity else {}
        state = State(0, y0f, synthesize(self.a, np.zeros(self.a.size)))
        states = [state]
        escaped = 0
        for n in range(cfg.N):
            try:
                state = self.step(state, forcing[n + 1])
            except InnerNonconvergence as exc:
                exc.step = n + 1
                raise
            escaped += state.outside_domain
            states.append(state)
        if escaped and self.potential.kind == "logarithmic":
            warnings.warn(f"{escaped} node values left D(beta) over the run", DomainEscape, stacklevel=2)
        if escaped:
            log.info("%d node values left D(beta) over the run", escaped)
        return Trajectory(cfg, self, states, forcing, m0, delta0, info)


def run(config: SchemeConfig, potential: Potential, basis_a: SpectralBasis, y0, u=None,
        basis_b: Optional[SpectralBasis] = None, **kwargs) -> Trajectory:
    return Scheme(config, potential, basis_a, basis_b).run(y0, u, **kwargs)


def stationarity_residual(scheme: Scheme, y) -> float:
    """||y^1 - y|| + ||mu^1|| for one unforced step launched from (y, 0)."""
    yv = _as_values(scheme.b, y)
    zero = np.zeros_like(yv)
    y1, mu1, *_ = scheme.solve(yv, zero, zero)
    return scheme.hnorm(y1 - yv) + scheme.hnorm(mu1)
