"""Double-well potentials split as convex part + smooth perturbation, and their
Moreau-Yosida regularizations.

All scalar maps are vectorized over numpy arrays.  The logarithmic resolvent
is solved in the variable ``t = artanh(J)`` where ``beta(J) = 2 t``; that keeps
``beta_lambda`` and the envelope accurate even when ``J`` rounds to +-1.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "Potential",
    "YosidaView",
    "ResolventError",
    "CertificateError",
    "canonical",
    "coercivity_certificate",
    "trick_constant",
    "default_delta0",
]

KINDS = ("regular", "logarithmic", "double_obstacle")


class ResolventError(RuntimeError):
    pass


class CertificateError(RuntimeError):
    pass


@dataclass(frozen=True)
class Potential:
    """Convex part beta_hat (with subdifferential beta) plus Lipschitz pi."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "logarithmic" and not self.params.get("c1", 0) > 1:
            raise ValueError("logarithmic potential requires c1 > 1")
        if self.kind == "double_obstacle" and not self.params.get("c2", 0) > 0:
            raise ValueError("double obstacle potential requires c2 > 0")

    # -- structure --------------------------------------------------------
    @property
    def quad_coef(self) -> float:
        """pi(s) = -2 * quad_coef * s for every canonical well."""
        if self.kind == "regular":
            return 0.5
        if self.kind == "logarithmic":
            return float(self.params["c1"])
        return float(self.params["c2"])

    @property
    def L_pi(self) -> float:
        return 2.0 * self.quad_coef

    @property
    def L_pi_prime(self) -> float:
        return self.L_pi + 1.0

    @property
    def domain(self) -> tuple[float, float, bool]:
        """(inf, sup, closed) of D(beta)."""
        if self.kind == "regular":
            return -np.inf, np.inf, False
        if self.kind == "logarithmic":
            return -1.0, 1.0, False
        return -1.0, 1.0, True

    def in_domain(self, s) -> np.ndarray:
        lo, hi, closed = self.domain
        s = np.asarray(s, dtype=float)
        if closed:
            return (s >= lo) & (s <= hi)
        return (s > lo) & (s < hi)

    def in_interior(self, s) -> np.ndarray:
        lo, hi, _ = self.domain
        s = np.asarray(s, dtype=float)
        return (s > lo) & (s < hi)

    def describe(self) -> dict:
        """Splitting convention, recorded in run metadata."""
        splits = {
            "regular": "beta_hat=s^4/4, pi_hat=1/4-s^2/2",
            "logarithmic": "beta_hat=(1+s)ln(1+s)+(1-s)ln(1-s), pi_hat=-c1 s^2",
            "double_obstacle": "beta_hat=indicator[-1,1], pi_hat=-c2 s^2",
        }
        return {"kind": self.kind, "params": dict(self.params), "split": splits[self.kind]}

    # -- convex part ------------------------------------------------------
    def beta_hat(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "regular":
            return s ** 4 / 4.0
        if self.kind == "double_obstacle":
            return np.where(np.abs(s) <= 1.0, 0.0, np.inf)
        a = np.abs(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = (1 + a) * np.log1p(a) + np.where(a < 1, (1 - a) * np.log1p(-np.minimum(a, 1)), 0.0)
        return np.where(a < 1, inner, np.where(a == 1, 2.0 * np.log(2.0), np.inf))

    def beta_min(self, s):
        """Minimal section beta°(s); nan outside D(beta)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "regular":
            return s ** 3
        if self.kind == "double_obstacle":
            return np.where(np.abs(s) <= 1.0, 0.0, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(s) < 1.0, 2.0 * np.arctanh(np.clip(s, -1, 1)), np.nan)

    beta = beta_min

    # -- smooth part ------------------------------------------------------
    def pi(self, s):
        return -2.0 * self.quad_coef * np.asarray(s, dtype=float)

    def pi_hat(self, s):
        s = np.asarray(s, dtype=float)
        out = -self.quad_coef * s ** 2
        if self.kind == "regular":
            out = out + 0.25
        return out

    def f(self, s):
        return self.beta_hat(s) + self.pi_hat(s)

    def yosida(self, lam: float) -> "YosidaView":
        return YosidaView(self, lam)


def canonical(kind: str, **params) -> Potential:
    """One of the three classical wells: 'regular', 'logarithmic' (c1), 'double_obstacle' (c2)."""
    return Potential(kind, dict(params))


def _cardano(s: np.ndarray, lam: float) -> np.ndarray:
    # real root of lam*J^3 + J - s = 0 (hyperbolic Cardano form), then Newton polish
    J = 2.0 / np.sqrt(3.0 * lam) * np.sinh(np.arcsinh(1.5 * s * np.sqrt(3.0 * lam)) / 3.0)
    for _ in range(2):
        J = J - (J + lam * J ** 3 - s) / (1.0 + 3.0 * lam * J * J)
    return J


def _log_t(s: np.ndarray, lam: float, max_iter: int = 100) -> np.ndarray:
    """Solve tanh(t) + 2 lam t = s by safeguarded Newton on the bracket
    [(s-1)/(2 lam), (s+1)/(2 lam)]."""
    lo = (s - 1.0) / (2.0 * lam)
    hi = (s + 1.0) / (2.0 * lam)
    t = np.clip(s / (1.0 + 2.0 * lam), lo, hi)
    for _ in range(max_iter):
        g = np.tanh(t) + 2.0 * lam * t - s
        lo = np.where(g < 0, t, lo)
        hi = np.where(g > 0, t, hi)
        dg = 1.0 / np.cosh(np.minimum(np.abs(t), 350.0)) ** 2 + 2.0 * lam
        t_new = t - g / dg
        out = (t_new <= lo) | (t_new >= hi)
        t_new = np.where(out, 0.5 * (lo + hi), t_new)
        done = np.abs(t_new - t) <= 1e-15 * (1.0 + np.abs(t))
        t = t_new
        if np.all(done):
            return t
    g = np.tanh(t) + 2.0 * lam * t - s
    if np.any(np.abs(g) > 1e-10 * (1.0 + np.abs(s))):
        raise ResolventError("logarithmic resolvent did not converge")
    return t


def _log_cosh(t):
    a = np.abs(t)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


@dataclass(frozen=True)
class YosidaView:
    """Moreau-Yosida regularization of a potential's convex part at level ``lam``."""

    potential: Potential
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def resolvent(self, s):
        s = np.asarray(s, dtype=float)
        kind = self.potential.kind
        if kind == "double_obstacle":
            return np.clip(s, -1.0, 1.0)
        if kind == "regular":
            return _cardano(s, self.lam)
        return np.tanh(_log_t(s, self.lam))

    def resolvent_residual(self, s):
        """|J + lam beta(J) - s| evaluated in the solver's own variables."""
        s = np.asarray(s, dtype=float)
        kind = self.potential.kind
        if kind == "regular":
            J = _cardano(s, self.lam)
            return np.abs(J + self.lam * J ** 3 - s)
        if kind == "logarithmic":
            t = _log_t(s, self.lam)
            return np.abs(np.tanh(t) + 2.0 * self.lam * t - s)
        # obstacle: residual is the distance of (s - J)/lam to beta(J)
        J = np.clip(s, -1.0, 1.0)
        b = (s - J) / self.lam
        ok = np.where(np.abs(J) < 1.0, b == 0.0, np.sign(b) * np.sign(J) >= 0)
        return np.where(ok, 0.0, np.abs(b))

    def __call__(self, s):
        return self.beta(s)

    def beta(self, s):
        """beta_lambda(s) = (s - J_lambda(s)) / lambda."""
        s = np.asarray(s, dtype=float)
        kind = self.potential.kind
        if kind == "regular":
            return _cardano(s, self.lam) ** 3
        if kind == "logarithmic":
            return 2.0 * _log_t(s, self.lam)
        return (s - np.clip(s, -1.0, 1.0)) / self.lam

    def slope(self, s):
        """Derivative of beta_lambda (generalized at the obstacle kinks)."""
        s = np.asarray(s, dtype=float)
        kind = self.potential.kind
        if kind == "regular":
            J = _cardano(s, self.lam)
            return 3.0 * J * J / (1.0 + 3.0 * self.lam * J * J)
        if kind == "logarithmic":
            t = _log_t(s, self.lam)
            sech2 = 1.0 / np.cosh(np.minimum(np.abs(t), 350.0)) ** 2
            return 2.0 / (sech2 + 2.0 * self.lam)
        return np.where(np.abs(s) > 1.0, 1.0 / self.lam, 0.0)

    def envelope(self, s):
        """beta_hat_lambda(s) = lam/2 beta_lambda(s)^2 + beta_hat(J_lambda(s))."""
        s = np.asarray(s, dtype=float)
        kind = self.potential.kind
        if kind == "logarithmic":
            t = _log_t(s, self.lam)
            return 2.0 * self.lam * t * t + 2.0 * t * np.tanh(t) - 2.0 * _log_cosh(t)
        b = self.beta(s)
        return 0.5 * self.lam * b * b + self.potential.beta_hat(self.resolvent(s))

    yosida = beta
    yosida_envelope = envelope

    def g(self, s):
        """beta_lambda + pi, the full nonlinearity of the regularized scheme."""
        return self.beta(s) + self.potential.pi(s)

    def g_slope(self, s):
        return self.slope(s) - self.potential.L_pi

    def G(self, s):
        """beta_hat_lambda + pi_hat, the regularized potential density."""
        return self.envelope(s) + self.potential.pi_hat(s)


def coercivity_certificate(view: YosidaView, s_max: float = 1e3, n: int = 2001):
    """Find (alpha, C) with beta_hat_lambda(s) + pi_hat(s) >= alpha s^2 - C on a
    log-spaced grid of [-s_max, s_max].

    alpha is half the growth ratio at |s| = s_max; C is the worst grid gap,
    sharpened by a bounded scalar search around the grid maximizer.
    """
    pot = view.potential
    if view.lam > 1.0 / (4.0 * pot.L_pi):
        warnings.warn(f"lambda={view.lam} exceeds 1/(4 L_pi)={1 / (4 * pot.L_pi):.4g}; "
                      "coercivity may fail", stacklevel=2)
    pos = np.geomspace(1e-3, s_max, n // 2)
    s = np.concatenate([-pos[::-1], [0.0], pos])
    F = view.G(s)
    edge = F[[0, -1]] / s_max ** 2
    alpha = 0.5 * float(np.min(edge))
    if not alpha > 0:
        raise CertificateError(f"no positive quadratic growth at |s|={s_max} (lambda too large?)")
    gap = alpha * s * s - F
    i = int(np.argmax(gap))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]
    best = minimize_scalar(lambda t: float(view.G(t) - alpha * t * t), bounds=(lo, hi),
                           method="bounded", options={"xatol": 1e-12})
    C = max(float(gap[i]), -float(best.fun), 0.0)
    C = C + 1e-9 * (1.0 + C)
    if np.any(F < alpha * s * s - C):
        raise CertificateError("grid check failed")
    return alpha, C


def default_delta0(potential: Potential, m0: float) -> float:
    """Half the distance from m0 to the boundary of D(beta) (1 for an unbounded domain)."""
    lo, hi, _ = potential.domain
    dist = min(m0 - lo, hi - m0)
    if not np.isfinite(dist):
        return 1.0
    if dist <= 0:
        raise ValueError(f"m0={m0} is not interior to D(beta)")
    return 0.5 * dist


def trick_constant(view: YosidaView, m0: float, delta0: float, s=None) -> float:
    """Smallest C0 >= 0 with beta_lambda(s)(s - m0) >= delta0 |beta_lambda(s)| - C0 on a scan grid."""
    lo, hi, _ = view.potential.domain
    if not (lo < m0 - delta0 and m0 + delta0 < hi) and not (
            view.potential.domain[2] and lo <= m0 - delta0 and m0 + delta0 <= hi):
        raise ValueError("[m0 - delta0, m0 + delta0] must lie in D(beta)")
    if s is None:
        s = np.concatenate([np.linspace(-5, 5, 4001), np.geomspace(5, 1e3, 200), -np.geomspace(5, 1e3, 200)])
    b = view.beta(np.asarray(s, dtype=float))
    return float(max(0.0, np.max(delta0 * np.abs(b) - b * (s - m0))))
