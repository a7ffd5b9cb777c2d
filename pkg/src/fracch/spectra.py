"""Eigenbasis-backed calculus for fractional powers of Laplace-type operators.

A :class:`SpectralBasis` holds the closed-form eigenpairs of the (power of the)
Laplacian on an interval or rectangle with homogeneous Dirichlet or Neumann
conditions, truncated to ``M`` modes per axis.  Grid functions live on the
cell-centred grid with ``M`` nodes per axis; on that grid the sampled cosine
(DCT-II) and sine (DST-II) families are exactly orthonormal for the
midpoint-rule inner product, so the truncated space is a genuine
finite-dimensional Hilbert space in which every identity below holds up to
rounding.

Coefficients are stored flattened and sorted by eigenvalue (stable order).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft

__all__ = [
    "SpectralBasis",
    "Field",
    "DualElement",
    "BasisMismatch",
    "build_laplacian_basis",
    "analyze",
    "synthesize",
    "embed",
    "apply_power",
    "norm_primal",
    "norm_dual",
    "graph_norm",
    "riesz_solve",
    "extend_power_to_dual",
    "interpolation_gap",
    "poincare_ratio",
    "compactness_split",
]

BCS = ("dirichlet", "neumann")


class BasisMismatch(ValueError):
    """Raised when fields or operators from incompatible bases are combined."""


def _axis_eigenvalues(length: float, m: int, bc: str) -> np.ndarray:
    k = np.arange(m) if bc == "neumann" else np.arange(1, m + 1)
    return (k * np.pi / length) ** 2


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    lengths: tuple[float, ...]
    bc: str
    n_modes: tuple[int, ...]
    power_offset: int = 1

    def __post_init__(self):
        if self.bc not in BCS:
            raise ValueError(f"bc must be one of {BCS}, got {self.bc!r}")
        if len(self.lengths) not in (1, 2) or len(self.lengths) != len(self.n_modes):
            raise ValueError("lengths and n_modes must both have 1 or 2 entries")
        if any(length <= 0 for length in self.lengths):
            raise ValueError("domain lengths must be positive")
        if any(m < 2 for m in self.n_modes):
            raise ValueError("n_modes must be >= 2")
        if self.power_offset < 1:
            raise ValueError("power_offset must be a positive integer")

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.n_modes)

    @property
    def size(self) -> int:
        return int(np.prod(self.n_modes))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def cell_weight(self) -> float:
        """Quadrature weight of every grid node (uniform midpoint rule)."""
        return self.volume / self.size

    @cached_property
    def nodes(self) -> tuple[np.ndarray, ...]:
        return tuple((np.arange(m) + 0.5) * length / m
                     for length, m in zip(self.lengths, self.n_modes))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.nodes, indexing="ij"))

    @cached_property
    def _order(self) -> np.ndarray:
        base = _axis_eigenvalues(self.lengths[0], self.n_modes[0], self.bc)
        for length, m in zip(self.lengths[1:], self.n_modes[1:]):
            base = np.add.outer(base, _axis_eigenvalues(length, m, self.bc))
        return np.argsort(base.ravel(), kind="stable")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        base = _axis_eigenvalues(self.lengths[0], self.n_modes[0], self.bc)
        for length, m in zip(self.lengths[1:], self.n_modes[1:]):
            base = np.add.outer(base, _axis_eigenvalues(length, m, self.bc))
        lam = base.ravel()[self._order] ** self.power_offset
        lam.setflags(write=False)
        return lam

    @property
    def has_zero_mode(self) -> bool:
        return self.eigenvalues[0] == 0.0

    def same_grid(self, other: "SpectralBasis") -> bool:
        return (tuple(self.lengths) == tuple(other.lengths)
                and tuple(self.n_modes) == tuple(other.n_modes))

    def same_eigenbasis(self, other: "SpectralBasis") -> bool:
        return self.same_grid(other) and self.bc == other.bc

    # -- transforms -------------------------------------------------------
    def to_coefficients(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            if values.size != self.size:
                raise BasisMismatch(f"expected {self.size} grid values, got {values.size}")
            values = values.reshape(self.shape)
        tr = fft.dctn if self.bc == "neumann" else fft.dstn
        c = tr(values, type=2, norm="ortho") * np.sqrt(self.cell_weight)
        return c.ravel()[self._order]

    def to_values(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (self.size,):
            raise BasisMismatch(f"expected {self.size} coefficients, got shape {coefficients.shape}")
        flat = np.empty(self.size)
        flat[self._order] = coefficients
        tr = fft.idctn if self.bc == "neumann" else fft.idstn
        return tr(flat.reshape(self.shape), type=2, norm="ortho") / np.sqrt(self.cell_weight)

    def powers(self, rho: float) -> np.ndarray:
        """lambda_j**rho with the convention 0**rho = 0."""
        lam = self.eigenvalues
        out = np.zeros_like(lam)
        pos = lam > 0
        out[pos] = lam[pos] ** rho
        return out

    def metric(self, s: float) -> np.ndarray:
        """Diagonal weights of the squared ``V_A^s`` norm (``s`` may be negative).

        lambda_j**(2s) on positive eigenvalues; the zero mode, if present,
        carries weight 1 so that it contributes its plain squared coefficient.
        """
        lam = self.eigenvalues
        out = np.ones_like(lam)
        pos = lam > 0
        out[pos] = lam[pos] ** (2.0 * s)
        return out

    @cached_property
    def eigenvectors(self) -> np.ndarray:
        """Grid samples of the eigenfunctions as columns (flattened grid x modes)."""
        eye = np.eye(self.size)
        E = np.stack([self.to_values(col).ravel() for col in eye], axis=1)
        E.setflags(write=False)
        return E

    def diag_matrix(self, d: np.ndarray) -> np.ndarray:
        """Dense grid-space matrix of the operator acting as ``d`` on coefficients."""
        E = self.eigenvectors
        return (E * d) @ E.T * self.cell_weight

    def power_matrix(self, rho: float) -> np.ndarray:
        return self.diag_matrix(self.powers(rho))

    def apply_diag(self, d: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Apply the operator acting as ``d`` on coefficients to flat grid values."""
        return self.to_values(d * self.to_coefficients(values)).ravel()

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """Discrete L2 inner product of two grid arrays."""
        return float(np.sum(np.asarray(u) * np.asarray(v)) * self.cell_weight)


@dataclass(frozen=True, eq=False)
class Field:
    """An element of the truncated space, kept both as grid values and coefficients."""

    basis: SpectralBasis
    values: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def inner(self, other: "Field") -> float:
        self._check(other)
        return float(self.coefficients @ other.coefficients)

    def in_basis(self, basis: SpectralBasis) -> "Field":
        if basis is self.basis:
            return self
        if not basis.same_grid(self.basis):
            raise BasisMismatch("bases do not share a grid")
        return analyze(basis, self.values)

    def _check(self, other):
        if other.basis is not self.basis:
            raise BasisMismatch("fields belong to different bases")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return synthesize(self.basis, self.coefficients + other.coefficients)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return synthesize(self.basis, self.coefficients - other.coefficients)

    def __mul__(self, a: float) -> "Field":
        return synthesize(self.basis, a * self.coefficients)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self * -1.0


@dataclass(frozen=True, eq=False)
class DualElement:
    """Element of ``V_A^{-r}`` stored through its pairings ``<f, e_j>``."""

    basis: SpectralBasis
    pairings: np.ndarray = field(repr=False)

    def pair(self, w: Field) -> float:
        if w.basis is not self.basis:
            raise BasisMismatch("dual element and field belong to different bases")
        return float(self.pairings @ w.coefficients)


def build_laplacian_basis(lengths, bc: str, n_modes, power_offset: int = 1) -> SpectralBasis:
    """Closed-form eigenbasis of ``(-Laplacian)**power_offset`` on a box.

    ``lengths`` and ``n_modes`` are scalars (1D) or pairs (2D).

    >>> build_laplacian_basis(np.pi, "neumann", 4).eigenvalues
    array([0., 1., 4., 9.])
    """
    lengths = tuple(float(x) for x in np.atleast_1d(lengths))
    n_modes = tuple(int(m) for m in np.atleast_1d(n_modes))
    if len(n_modes) == 1 and len(lengths) == 2:
        n_modes = n_modes * 2
    return SpectralBasis(lengths, bc, n_modes, int(power_offset))


def analyze(basis: SpectralBasis, grid_values) -> Field:
    values = np.asarray(grid_values, dtype=float)
    if values.size != basis.size:
        raise BasisMismatch(f"expected {basis.size} grid values, got {values.size}")
    values = values.reshape(basis.shape)
    return Field(basis, values.copy(), basis.to_coefficients(values))


def synthesize(basis: SpectralBasis, coefficients) -> Field:
    c = np.array(coefficients, dtype=float)
    return Field(basis, basis.to_values(c), c)


def embed(v: Field) -> DualElement:
    """Identify an H element with a member of the dual space."""
    return DualElement(v.basis, v.coefficients.copy())


def apply_power(basis: SpectralBasis, rho: float, v: Field) -> Field:
    if rho <= 0:
        raise ValueError("rho must be positive")
    if v.basis is not basis:
        raise BasisMismatch("field does not belong to this basis")
    return synthesize(basis, basis.powers(rho) * v.coefficients)


def norm_primal(basis: SpectralBasis, r: float, v: Field) -> float:
    if v.basis is not basis:
        raise BasisMismatch("field does not belong to this basis")
    return float(np.sqrt(np.sum(basis.metric(r) * v.coefficients ** 2)))


def norm_dual(basis: SpectralBasis, r: float, f: DualElement) -> float:
    if f.basis is not basis:
        raise BasisMismatch("dual element does not belong to this basis")
    return float(np.sqrt(np.sum(basis.metric(-r) * f.pairings ** 2)))


def graph_norm(basis: SpectralBasis, r: float, v: Field) -> float:
    c = v.coefficients
    return float(np.sqrt(np.sum(c ** 2) + np.sum((basis.powers(r) * c) ** 2)))


def riesz_solve(basis: SpectralBasis, r: float, f: DualElement) -> Field:
    """Inverse of A^{2r} restricted to the zero-mean dual subspace.

    Raises ``ValueError`` if the basis has a zero mode and ``f`` does not
    annihilate constants.
    """
    g = f.pairings
    if basis.has_zero_mode and abs(g[0]) > 1e-12 * max(np.linalg.norm(g), 1e-300):
        raise ValueError("dual element has nonzero mean pairing; it is not in V_0^{-r}")
    c = np.zeros_like(g)
    pos = basis.eigenvalues > 0
    c[pos] = basis.eigenvalues[pos] ** (-2.0 * r) * g[pos]
    return synthesize(basis, c)


def extend_power_to_dual(basis: SpectralBasis, r: float, v: Field) -> DualElement:
    """A^{2r} v as a dual element: <A^{2r} v, w> = (A^r v, A^r w)."""
    if v.basis is not basis:
        raise BasisMismatch("field does not belong to this basis")
    return DualElement(basis, basis.powers(2.0 * r) * v.coefficients)


def interpolation_gap(basis: SpectralBasis, r: float, eta: float, v: Field):
    """Both sides of ||v|| <= ||v||_{A,eta}^theta ||v||_{A,-r}^(1-theta)."""
    theta = r / (r + eta)
    lhs = v.norm()
    rhs = norm_primal(basis, eta, v) ** theta * norm_dual(basis, r, embed(v)) ** (1.0 - theta)
    return lhs, rhs, theta


def poincare_ratio(basis: SpectralBasis, r: float) -> float:
    """Sharp constant of ||v|| <= c ||A^r v|| on zero-mean fields."""
    if not basis.has_zero_mode:
        raise ValueError("Poincare ratio is defined only when the first eigenvalue is 0")
    return float(basis.eigenvalues[1] ** (-r))


def compactness_split(basis_a: SpectralBasis, basis_b: SpectralBasis, r: float,
                      sigma: float, delta: float, v: Field):
    """Both sides of ||v||^2 <= delta ||B^sigma v||^2 + c_delta ||v||_{A,-r}^2.

    ``c_delta`` is the sharp constant over the truncated space; only bases
    sharing their eigenfunctions are supported.  Returns (lhs, rhs, c_delta).
    """
    if not basis_a.same_eigenbasis(basis_b):
        raise BasisMismatch("compactness_split needs A and B with a shared eigenbasis")
    if delta <= 0:
        raise ValueError("delta must be positive")
    b2 = basis_b.powers(2.0 * sigma)
    dual_w = basis_a.metric(-r)
    c_delta = max(0.0, float(np.max((1.0 - delta * b2) / dual_w)))
    c = v.in_basis(basis_a).coefficients
    lhs = float(np.sum(c ** 2))
    rhs = float(delta * np.sum(b2 * c ** 2) + c_delta * np.sum(dual_w * c ** 2))
    return lhs, rhs, c_delta
