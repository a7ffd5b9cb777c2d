"""Brute-force reference implementations used to certify the fast paths.

Nothing here calls the FFT transforms or the Newton solver of the stepper:
eigenvectors are sampled from the closed-form sines/cosines, operators are
dense matrices, dual norms come from a dense Gram system, resolvents from
bisection and the implicit step from a monolithic Newton iteration with a
finite-difference Jacobian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potentials import Potential
from .spectra import DualElement, Field, SpectralBasis

__all__ = [
    "DenseOperator",
    "OracleError",
    "eigenvector_samples",
    "dense_power_apply",
    "dual_norm_by_maximization",
    "resolvent_bisection",
    "dense_step_solve",
]

MAX_DENSE = 64


class OracleError(RuntimeError):
    pass


def _axis_modes(length, m, bc, x):
    cols, lams = [], []
    for j in range(m):
        k = j if bc == "neumann" else j + 1
        if bc == "neumann":
            col = np.cos(k * np.pi * x / length)
        else:
            col = np.sin(k * np.pi * x / length)
        cols.append(col)
        lams.append((k * np.pi / length) ** 2)
    return np.array(cols).T, np.array(lams)


def eigenvector_samples(basis: SpectralBasis):
    """(E, eigenvalues) from closed-form formulas, columns normalized in the
    discrete inner product and sorted by eigenvalue."""
    per_axis = []
    for length, m in zip(basis.lengths, basis.n_modes):
        x = (np.arange(m) + 0.5) * length / m
        per_axis.append(_axis_modes(length, m, basis.bc, x))
    E, lam = per_axis[0]
    if len(per_axis) == 2:
        E2, lam2 = per_axis[1]
        E = np.einsum("ia,jb->ijab", E, E2).reshape(E.shape[0] * E2.shape[0], -1)
        lam = np.add.outer(lam, lam2).ravel()
    order = np.argsort(lam, kind="stable")
    E = E[:, order]
    lam = lam[order] ** basis.power_offset
    w = basis.volume / E.shape[0]
    E = E / np.sqrt(w * np.sum(E * E, axis=0))
    return E, lam


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Grid-space matrix E diag(lambda^rho) E^T w."""

    matrix: np.ndarray
    rho: float

    @classmethod
    def build(cls, basis: SpectralBasis, rho: float) -> "DenseOperator":
        if basis.size > MAX_DENSE:
            raise OracleError(f"dense oracle limited to {MAX_DENSE} modes")
        E, lam = eigenvector_samples(basis)
        lam_rho = np.where(lam > 0, np.abs(lam) ** rho, 0.0)
        w = basis.volume / basis.size
        return cls((E * lam_rho) @ E.T * w, rho)


def dense_power_apply(op: DenseOperator, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size > MAX_DENSE:
        raise OracleError(f"dense oracle limited to {MAX_DENSE} modes")
    return op.matrix @ v


def dual_norm_by_maximization(basis: SpectralBasis, r: float, f: DualElement) -> float:
    """sup_w <f, w> / ||w||_{A,r} over the truncated space.

    The Gram matrix of the V_A^r inner product is assembled from dense
    operators on the grid; the maximizer solves G w = f and the supremum is
    sqrt(f^T G^{-1} f).
    """
    E, lam = eigenvector_samples(basis)
    w = basis.volume / basis.size
    Ar = DenseOperator.build(basis, r).matrix
    AE = Ar @ E
    G = w * AE.T @ AE
    if lam[0] == 0.0:
        mean_part = w * E.T @ E[:, 0]
        G = G + np.outer(mean_part, mean_part)
    g = np.asarray(f.pairings, dtype=float)
    if not np.any(g):
        return 0.0
    wstar = np.linalg.solve(G, g)
    return float(np.sqrt(g @ wstar))


def resolvent_bisection(potential: Potential, lam: float, s: float, width: float = 1e-13) -> float:
    """Solve J + lam beta(J) = s by bisection on the monotone scalar map."""
    if potential.kind == "double_obstacle":
        J = min(max(s, -1.0), 1.0)
        b = (s - J) / lam
        if abs(J) < 1.0 and b != 0.0 or abs(J) == 1.0 and b * J < 0:
            raise OracleError("clamp cross-check failed")
        return J
    if potential.kind == "regular":
        lo, hi = min(0.0, s), max(0.0, s)

        def phi(J):
            return J + lam * J ** 3 - s
    else:
        lo, hi = min(0.0, s), max(0.0, s)
        lo, hi = max(lo, -1.0), min(hi, 1.0)

        def phi(J):
            if J <= -1.0:
                return -np.inf
            if J >= 1.0:
                return np.inf
            return J + lam * np.log((1.0 + J) / (1.0 - J)) - s
    if phi(lo) > 0 or phi(hi) < 0:
        raise OracleError("bracketing failure")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width:
            break
    return 0.5 * (lo + hi)


def _g(potential: Potential, lam: float, s: np.ndarray) -> np.ndarray:
    # beta_lambda via bisection; pi closed form
    b = np.array([(si - resolvent_bisection(potential, lam, si, 1e-16)) / lam for si in s])
    return b + potential.pi(s)


def dense_step_solve(config, potential: Potential, basis_a: SpectralBasis, basis_b: SpectralBasis,
                     yn: Field, mun: Field, u: Field, max_iter: int = 200, tol: float = 1e-12):
    """Monolithic Newton on the coupled system in coefficient space.

    Unknowns are the B-coefficients of y and the A-coefficients of mu; the
    Jacobian is formed by central differences with step 1e-6 (1 + |x|).
    Returns (y_values, mu_values, residual).
    """
    if basis_a.size > 8 or config.N > 8:
        raise OracleError("dense_step_solve is limited to M <= 8 and N <= 8")
    Ea, la = eigenvector_samples(basis_a)
    Eb, lb = eigenvector_samples(basis_b)
    w = basis_a.volume / basis_a.size
    m = basis_a.size
    a2r = np.where(la > 0, np.abs(la) ** (2 * config.r), 0.0)
    b2s = np.where(lb > 0, np.abs(lb) ** (2 * config.sigma), 0.0)
    h, tau, L = config.h, config.tau, potential.L_pi_prime
    lam = config.lam
    to_b = lambda v: w * Eb.T @ v  # noqa: E731
    to_a = lambda v: w * Ea.T @ v  # noqa: E731
    cyn = to_b(yn.values.ravel())
    cmun = to_a(mun.values.ravel())
    cu = to_b(u.values.ravel())

    def R(x):
        cy, cmu = x[:m], x[m:]
        y = Eb @ cy
        mu = Ea @ cmu
        dy = (y - Eb @ cyn) / h
        r1 = to_a(dy) + cmu + a2r * cmu - cmun
        r2 = (tau * (cy - cyn) / h + L * cy + b2s * cy + to_b(_g(potential, lam, y))
              - L * cyn - to_b(mu) - cu)
        return np.concatenate([r1, r2])

    x = np.concatenate([cyn, cmun])
    scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(cu)
    for _ in range(max_iter):
        rx = R(x)
        if np.linalg.norm(rx) <= tol * scale:
            break
        J = np.empty((2 * m, 2 * m))
        for k in range(2 * m):
            d = 1e-6 * (1.0 + abs(x[k]))
            xp, xm = x.copy(), x.copy()
            xp[k] += d
            xm[k] -= d
            J[:, k] = (R(xp) - R(xm)) / (2 * d)
        x = x - np.linalg.solve(J, rx)
    else:
        raise OracleError("dense Newton did not converge")
    return Eb @ x[:m], Ea @ x[m:], float(np.linalg.norm(R(x)))
