import numpy as np
import pytest

from fracch import oracle
from fracch.potentials import canonical
from fracch.spectra import DualElement, analyze, apply_power, build_laplacian_basis, embed, norm_dual, synthesize
from fracch.stepper import Scheme, SchemeConfig


def test_dense_operator_properties():
    b = build_laplacian_basis(1.0, "neumann", 16)
    for rho in (0.3, 1.7):
        M = oracle.DenseOperator.build(b, rho).matrix
        assert np.abs(M - M.T).max() < 1e-12 * np.abs(M).max()
        assert np.linalg.eigvalsh(0.5 * (M + M.T)).min() > -1e-10 * np.abs(M).max()


def test_dense_identity_exponent_and_unit_vectors():
    b = build_laplacian_basis(np.pi, "dirichlet", 8)
    op = oracle.DenseOperator.build(b, 1.0)
    for j in range(8):
        e = synthesize(b, np.eye(8)[j])
        assert np.allclose(oracle.dense_power_apply(op, e.values), b.eigenvalues[j] * e.values.ravel(), atol=1e-10)


@pytest.mark.parametrize("rho", [0.3, 1.7])
def test_dense_apply_matches_fast_path(rng, rho):
    b = build_laplacian_basis(2.0, "neumann", 32)
    op = oracle.DenseOperator.build(b, rho)
    for _ in range(100):
        v = analyze(b, rng.standard_normal(32))
        fast = apply_power(b, rho, v).values.ravel()
        assert np.abs(fast - oracle.dense_power_apply(op, v.values)).max() <= 1e-11 * (1 + np.abs(fast).max())


def test_size_cap():
    b = build_laplacian_basis(1.0, "neumann", 65)
    with pytest.raises(oracle.OracleError):
        oracle.DenseOperator.build(b, 1.0)


def test_dual_norm_oracle_examples(rng):
    b = build_laplacian_basis(np.pi, "dirichlet", 6)
    assert oracle.dual_norm_by_maximization(b, 0.5, embed(synthesize(b, np.eye(6)[2]))) == pytest.approx(1 / 3)
    assert oracle.dual_norm_by_maximization(b, 0.5, DualElement(b, np.zeros(6))) == 0.0
    n = build_laplacian_basis(1.0, "neumann", 10)
    for _ in range(100):
        f = DualElement(n, rng.standard_normal(10))
        assert oracle.dual_norm_by_maximization(n, 0.7, f) == pytest.approx(norm_dual(n, 0.7, f), rel=1e-12)


def test_resolvent_bisection_examples():
    assert oracle.resolvent_bisection(canonical("regular"), 1.0, 2.0) == pytest.approx(1.0, abs=1e-13)
    assert oracle.resolvent_bisection(canonical("double_obstacle", c2=1.0), 0.3, 2.0) == 1.0
    J = oracle.resolvent_bisection(canonical("logarithmic", c1=2.0), 0.1, 0.9)
    assert abs(J + 0.1 * np.log((1 + J) / (1 - J)) - 0.9) < 1e-12


def test_dense_step_zero():
    b = build_laplacian_basis(1.0, "neumann", 4)
    c = SchemeConfig(tau=1.0, r=0.5, sigma=0.5, T=0.1, N=4, lam=0.05)
    z = analyze(b, np.zeros(4))
    y, mu, res = oracle.dense_step_solve(c, canonical("regular"), b, b, z, z, z)
    assert np.abs(y).max() < 1e-14 and np.abs(mu).max() < 1e-14


def test_dense_step_limits():
    b = build_laplacian_basis(1.0, "neumann", 9)
    c = SchemeConfig(tau=1.0, r=0.5, sigma=0.5, T=0.1, N=4, lam=0.05)
    z = analyze(b, np.zeros(9))
    with pytest.raises(oracle.OracleError):
        oracle.dense_step_solve(c, canonical("regular"), b, b, z, z, z)


@pytest.mark.parametrize("kind, params", [("regular", {}), ("double_obstacle", {"c2": 1.0})])
@pytest.mark.parametrize("tau", [0.0, 1.0])
def test_step_matches_dense_newton(rng, kind, params, tau):
    b = build_laplacian_basis(1.0, "neumann", 4)
    c = SchemeConfig(tau=tau, r=0.5, sigma=0.5, T=0.1, N=4, lam=0.05)
    pot = canonical(kind, **params)
    sc = Scheme(c, pot, b)
    for _ in range(25):
        yn, mun, u = (analyze(b, rng.uniform(-0.6, 0.6, 4)) for _ in range(3))
        y, mu, *_ = sc.solve(yn.values.ravel(), mun.values.ravel(), u.values.ravel())
        yo, muo, res = oracle.dense_step_solve(c, pot, b, b, yn, mun, u)
        assert res <= 1e-12 * 10
        assert sc.hnorm(y - yo) <= 1e-8 and sc.hnorm(mu - muo) <= 1e-8
