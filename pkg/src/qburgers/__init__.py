"""Desk-scale emulation of a Cole-Hopf based quantum algorithm for Burgers-turbulence statistics."""
from .correlators import (
    CorrelationResult,
    ReadoutNoise,
    SparseCorrelator,
    build_C2,
    build_Cn,
    build_Ctilde,
    ensemble_ratio,
    expectation,
    ratio_Pn_over_In,
    ratio_sweep,
)
from .fields import (
    GridSpec,
    PhysicsParams,
    PlaneWaveIC,
    PsiDerivField,
    PsiField,
    RandomIC,
    VelocityField,
    cole_hopf_forward,
    cole_hopf_inverse_approx,
    cole_hopf_inverse_exact,
    derivative,
    make_plane_wave_ic,
    make_random_ic,
    reynolds_diagnostic,
)
from .heat import (
    LaplacianMatrix,
    UnitaryDilation,
    block_encode,
    build_laplacian,
    cost_of_evolution,
    norm_ratio,
    propagate,
    propagate_psi,
)
from .qstate import (
    AmplitudeState,
    RegisterLayout,
    amplitude_encode,
    apply_propagator,
    build_U_n,
    coarse_grain,
    cyclic_shift,
    ensemble_superpose,
    negate_to_velocity,
)
from .reference import (
    FlatnessSeries,
    analytic_beta_plane_wave,
    analytic_psi_plane_wave,
    brute_force_Pn,
    flatness,
    run_figure2,
)
from .resources import CostBudget, cost_table, crossover_scan

__version__ = "0.1.0"
