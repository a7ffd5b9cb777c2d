"""Spectral-Galerkin simulator for the fractional Cahn-Hilliard system with
Yosida-regularized potentials and an implicit time scheme."""
from .spectra import (
    BasisMismatch,
    DualElement,
    Field,
    SpectralBasis,
    analyze,
    apply_power,
    build_laplacian_basis,
    embed,
    norm_dual,
    norm_primal,
    riesz_solve,
    synthesize,
)
from .potentials import Potential, YosidaView, canonical
from .stepper import Scheme, SchemeConfig, State, Trajectory, run
from .diagnostics import (
    EstimateLedger,
    InterpolantTriple,
    apriori_ledger,
    continuous_dependence,
    regularity_ledger,
)

__version__ = "0.1.0"

__all__ = [
    "BasisMismatch",
    "DualElement",
    "EstimateLedger",
    "Field",
    "InterpolantTriple",
    "Potential",
    "Scheme",
    "SchemeConfig",
    "SpectralBasis",
    "State",
    "Trajectory",
    "YosidaView",
    "analyze",
    "apply_power",
    "apriori_ledger",
    "build_laplacian_basis",
    "canonical",
    "continuous_dependence",
    "embed",
    "norm_dual",
    "norm_primal",
    "regularity_ledger",
    "riesz_solve",
    "run",
    "synthesize",
]
