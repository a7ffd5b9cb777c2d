import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fracch.spectra import (
    BasisMismatch,
    DualElement,
    analyze,
    apply_power,
    build_laplacian_basis,
    compactness_split,
    embed,
    extend_power_to_dual,
    graph_norm,
    interpolation_gap,
    norm_dual,
    norm_primal,
    poincare_ratio,
    riesz_solve,
    synthesize,
)
from fracch import oracle


def unit(basis, j):
    e = np.zeros(basis.size)
    e[j] = 1.0
    return synthesize(basis, e)


@pytest.mark.parametrize("bc, M, p, expected", [
    ("neumann", 4, 1, [0, 1, 4, 9]),
    ("dirichlet", 4, 1, [1, 4, 9, 16]),
    ("neumann", 3, 2, [0, 1, 16]),
])
def test_closed_form_eigenvalues(bc, M, p, expected):
    b = build_laplacian_basis(np.pi, bc, M, p)
    assert np.allclose(b.eigenvalues, expected, atol=1e-12)


def test_2d_eigenvalues_sorted_tensor_sums():
    b = build_laplacian_basis((1.0, 2.0), "dirichlet", (3, 4))
    lam = b.eigenvalues
    assert np.all(np.diff(lam) >= 0)
    ref = sorted((i * np.pi) ** 2 + (j * np.pi / 2) ** 2 for i in range(1, 4) for j in range(1, 5))
    assert np.allclose(lam, ref)


@pytest.mark.parametrize("bc", ["neumann", "dirichlet"])
@pytest.mark.parametrize("lengths, M", [(np.pi, 16), ((1.0, 3.0), (5, 4))])
def test_orthonormal_on_grid(bc, lengths, M):
    b = build_laplacian_basis(lengths, bc, M)
    E = b.eigenvectors
    assert np.abs(b.cell_weight * E.T @ E - np.eye(b.size)).max() < 1e-12


def test_matches_closed_form_samples():
    for bc in ("neumann", "dirichlet"):
        b = build_laplacian_basis(2.0, bc, 12)
        E, lam = oracle.eigenvector_samples(b)
        assert np.allclose(lam, b.eigenvalues)
        assert np.abs(E - b.eigenvectors).max() < 1e-12


def test_first_neumann_mode_is_positive_constant():
    b = build_laplacian_basis(np.pi, "neumann", 8)
    e1 = b.eigenvectors[:, 0]
    assert np.allclose(e1, np.pi ** -0.5)


def test_constant_analysis():
    b = build_laplacian_basis(np.pi, "neumann", 8)
    v = analyze(b, np.full(8, 3.0))
    assert v.coefficients[0] == pytest.approx(3 * np.sqrt(np.pi), rel=1e-14)
    assert np.abs(v.coefficients[1:]).max() < 1e-13
    assert v.mean() == pytest.approx(3.0)


def test_unit_vector_analysis():
    b = build_laplacian_basis(np.pi, "neumann", 8)
    assert np.allclose(analyze(b, unit(b, 1).values).coefficients, np.eye(8)[1], atol=1e-14)


@given(arrays(np.float64, 10, elements=st.floats(-1e3, 1e3)))
def test_roundtrip_and_parseval(c):
    b = build_laplacian_basis(1.5, "dirichlet", 10)
    v = synthesize(b, c)
    back = analyze(b, v.values).coefficients
    assert np.abs(back - c).max() <= 1e-12 * (1 + np.abs(c).max())
    assert v.norm() ** 2 == pytest.approx(np.sum(c ** 2), rel=1e-10, abs=1e-10)


def test_size_mismatch():
    b = build_laplacian_basis(1.0, "neumann", 4)
    with pytest.raises(BasisMismatch):
        analyze(b, np.zeros(5))


def test_apply_power_examples():
    b = build_laplacian_basis(np.pi, "dirichlet", 6)
    out = apply_power(b, 0.5, unit(b, 1))
    assert np.allclose(out.coefficients, 2.0 * np.eye(6)[1])
    n = build_laplacian_basis(np.pi, "neumann", 6)
    const = analyze(n, np.ones(6))
    assert np.abs(apply_power(n, 0.7, const).values).max() < 1e-13
    with pytest.raises(ValueError):
        apply_power(b, 0.0, unit(b, 0))


def test_apply_power_matches_dense(rng):
    b = build_laplacian_basis(2.0, "neumann", 16)
    op = oracle.DenseOperator.build(b, 0.7)
    assert np.abs(op.matrix - op.matrix.T).max() < 1e-12
    for _ in range(20):
        v = analyze(b, rng.standard_normal(16))
        fast = apply_power(b, 0.7, v).values.ravel()
        assert np.abs(fast - oracle.dense_power_apply(op, v.values)).max() < 1e-11 * (1 + np.abs(fast).max())


def test_norm_examples():
    n = build_laplacian_basis(np.pi, "neumann", 6)
    d = build_laplacian_basis(np.pi, "dirichlet", 6)
    assert norm_primal(n, 0.5, unit(n, 0)) == pytest.approx(1.0)
    assert norm_primal(d, 0.3, unit(d, 3)) == pytest.approx(16 ** 0.3)
    assert norm_dual(d, 0.4, embed(unit(d, 2))) == pytest.approx(9 ** -0.4)
    assert norm_dual(n, 0.4, embed(unit(n, 0))) == pytest.approx(1.0)


@pytest.mark.parametrize("r", [0.25, 0.5, 1.0])
def test_norm_equivalence_positive_spectrum(rng, r):
    b = build_laplacian_basis(3.0, "dirichlet", 12)
    lam1 = b.eigenvalues[0]
    for _ in range(100):
        v = synthesize(b, rng.standard_normal(12))
        p, g = norm_primal(b, r, v), graph_norm(b, r, v)
        assert p <= g * (1 + 1e-12)
        assert g <= np.sqrt(lam1 ** (-2 * r) + 1) * p * (1 + 1e-12)


def test_dual_norm_matches_maximization(rng):
    for b in (build_laplacian_basis(1.0, "neumann", 12), build_laplacian_basis(2.0, "dirichlet", 12)):
        for r in (0.3, 1.0):
            f = DualElement(b, rng.standard_normal(12))
            assert norm_dual(b, r, f) == pytest.approx(oracle.dual_norm_by_maximization(b, r, f), rel=1e-10)
    b = build_laplacian_basis(1.0, "neumann", 4)
    assert oracle.dual_norm_by_maximization(b, 0.5, DualElement(b, np.zeros(4))) == 0.0


def test_riesz_identities(rng):
    b = build_laplacian_basis(1.0, "neumann", 16)
    r = 0.35
    for _ in range(10):
        g = rng.standard_normal(16)
        g[0] = 0.0
        f = DualElement(b, g)
        z = riesz_solve(b, r, f)
        for _ in range(50):
            w = synthesize(b, rng.standard_normal(16))
            lhs = np.sum(b.powers(r) * z.coefficients * b.powers(r) * w.coefficients)
            assert lhs == pytest.approx(f.pair(w), rel=1e-11, abs=1e-12)
        assert f.pair(z) == pytest.approx(norm_dual(b, r, f) ** 2, rel=1e-11)


def test_riesz_examples_and_mean_constraint():
    d = build_laplacian_basis(np.pi, "dirichlet", 5)
    z = riesz_solve(d, 0.5, embed(unit(d, 1)))
    assert np.allclose(z.coefficients, 0.25 * np.eye(5)[1])
    assert np.all(riesz_solve(d, 0.5, DualElement(d, np.zeros(5))).coefficients == 0)
    n = build_laplacian_basis(np.pi, "neumann", 5)
    with pytest.raises(ValueError):
        riesz_solve(n, 0.5, embed(unit(n, 0)))


def test_extension_to_dual(rng):
    b = build_laplacian_basis(1.0, "neumann", 8)
    f = extend_power_to_dual(b, 0.5, unit(b, 3))
    assert np.allclose(f.pairings, b.eigenvalues[3] * np.eye(8)[3])
    const = extend_power_to_dual(b, 0.5, analyze(b, np.ones(8)))
    assert np.abs(const.pairings).max() < 1e-13
    for _ in range(50):
        v = synthesize(b, rng.standard_normal(8))
        assert norm_dual(b, 0.5, extend_power_to_dual(b, 0.5, v)) <= np.linalg.norm(
            b.powers(0.5) * v.coefficients) * (1 + 1e-12)


def test_identification():
    b = build_laplacian_basis(1.0, "dirichlet", 6)
    rng = np.random.default_rng(3)
    v, w = (analyze(b, rng.standard_normal(6)) for _ in range(2))
    assert embed(v).pair(w) == pytest.approx(v.inner(w), rel=1e-12)


def test_interpolation_examples():
    d = build_laplacian_basis(np.pi, "dirichlet", 6)
    lhs, rhs, theta = interpolation_gap(d, 0.5, 1.0, unit(d, 4))
    assert theta == pytest.approx(1 / 3)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
    n = build_laplacian_basis(np.pi, "neumann", 6)
    v = analyze(n, np.full(6, 2.0))
    lhs, rhs, _ = interpolation_gap(n, 0.25, 0.5, v)
    assert lhs == pytest.approx(rhs)


@given(st.sampled_from([0.25, 0.5, 1.0]), st.sampled_from([0.25, 0.5, 1.0]),
       arrays(np.float64, 9, elements=st.floats(-10, 10)))
def test_interpolation_inequality(r, eta, c):
    b = build_laplacian_basis(2.0, "neumann", 9)
    lhs, rhs, _ = interpolation_gap(b, r, eta, synthesize(b, c))
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


def test_poincare_ratio():
    assert poincare_ratio(build_laplacian_basis(np.pi, "neumann", 8), 1.0) == pytest.approx(1.0)
    assert poincare_ratio(build_laplacian_basis(np.pi, "neumann", 8), 0.5) == pytest.approx(1.0)
    b = build_laplacian_basis(2 * np.pi, "neumann", 8)
    assert poincare_ratio(b, 1.0) == pytest.approx(4.0)
    # the ratio is attained by a basis direction and not exceeded by any of them
    ratios = [unit(b, j).norm() / np.linalg.norm(b.powers(1.0) * np.eye(8)[j]) for j in range(1, 8)]
    assert max(ratios) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        poincare_ratio(build_laplacian_basis(1.0, "dirichlet", 4), 1.0)


@pytest.mark.parametrize("delta", [1.0, 0.1, 0.01])
def test_compactness_split(rng, delta):
    a = build_laplacian_basis(1.0, "neumann", 10)
    b = build_laplacian_basis(1.0, "neumann", 10)
    assert compactness_split(a, b, 0.5, 0.5, delta, synthesize(a, np.zeros(10)))[:2] == (0.0, 0.0)
    for _ in range(50):
        lhs, rhs, c = compactness_split(a, b, 0.5, 0.5, delta, synthesize(a, rng.standard_normal(10)))
        assert lhs <= rhs * (1 + 1e-12)
    # sharp: some basis direction attains equality
    gaps = [np.subtract(*compactness_split(a, b, 0.5, 0.5, delta, unit(a, j))[:2]) for j in range(10)]
    assert max(gaps) == pytest.approx(0.0, abs=1e-12)


def test_compactness_needs_shared_basis():
    a = build_laplacian_basis(1.0, "neumann", 4)
    b = build_laplacian_basis(1.0, "dirichlet", 4)
    with pytest.raises(BasisMismatch):
        compactness_split(a, b, 0.5, 0.5, 1.0, unit(a, 0))
