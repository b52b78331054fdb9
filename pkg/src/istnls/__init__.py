"""Inverse scattering transform for the (2+1) NLS system with rank-1 data."""
from .core import (
    ComplexField1D,
    ComplexField2D,
    DimensionError,
    DomainError,
    EdgeDecayWarning,
    Grid1D,
    Grid2D,
    ISTError,
    KernelOperator,
    RealField1D,
    SingularityError,
    apply_kernel,
    cumulative_integral,
    operator_norm,
)
from .evolution import (
    Propagator1D,
    evolve_factors,
    evolve_rank1,
    propagate_free,
    propagate_kernel_2d,
    propagate_potential,
)
from .ist import (
    BoundaryData,
    SolutionSnapshot,
    forward_scattering,
    gaussian_data,
    gaussian_profile,
    gaussian_solution,
    nystrom_reconstruct,
    pseudopotentials,
    reconstruct_rank1,
    solve_cauchy,
)
from .rank1 import (
    Rank1Data,
    ScatteringMatrix,
    apply_Ak,
    apply_Ak_inv,
    factorize_rank1,
    resolvent_rank1,
    scattering_elements,
    volterra_inverse_rank1,
)
from .verify import ResidualReport, conserved_norm, pde_residual, rank1_time_identities

__version__ = "0.1.0"
